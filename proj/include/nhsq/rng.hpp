#pragma once

// Seeded randomness. Every stochastic routine takes an explicit 64-bit
// seed; independent substreams are derived with SplitMix64 so Monte Carlo
// trials can run in any order with reproducible results.

#include <cmath>
#include <cstdint>
#include <random>

namespace nhsq {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    splitmix64(s);
    return splitmix64(s);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform(double a, double b) {
        std::uniform_real_distribution<double> d(a, b);
        return d(eng_);
    }
    double normal(double mean = 0.0, double sd = 1.0) {
        std::normal_distribution<double> d(mean, sd);
        return d(eng_);
    }
    std::uint64_t integer(std::uint64_t n) {  // in [0, n)
        std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
        return d(eng_);
    }
    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
};

struct WilsonInterval {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// 95% Wilson score interval by default.
inline WilsonInterval wilson_interval(long successes, long trials, double z = 1.959963984540054) {
    WilsonInterval w;
    if (trials <= 0) return w;
    double n = static_cast<double>(trials);
    double phat = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (phat + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    w.estimate = phat;
    w.lo = std::max(0.0, center - half);
    w.hi = std::min(1.0, center + half);
    return w;
}

}  // namespace nhsq
