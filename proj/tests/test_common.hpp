#pragma once

#include <catch2/catch_amalgamated.hpp>

#include "nhsq/measure.hpp"
#include "nhsq/rng.hpp"

namespace nhsqtest {

using namespace nhsq;

// K equally spaced atoms on [0,1), total mass `mass`.
inline AtomicMeasure uniform_measure_1d(int K, double mass = 1.0) {
    std::vector<Point> pts;
    std::vector<double> w;
    for (int i = 0; i < K; ++i) {
        pts.push_back({(i + 0.5) / K});
        w.push_back(mass / K);
    }
    return AtomicMeasure(1, std::move(pts), std::move(w));
}

inline AtomicMeasure jittered_measure_1d(int K, std::uint64_t seed, double jitter = 0.3) {
    Rng rng(seed);
    std::vector<Point> pts;
    std::vector<double> w;
    for (int i = 0; i < K; ++i) {
        pts.push_back({(i + 0.5 + rng.uniform(-jitter, jitter)) / K});
        w.push_back(rng.uniform(0.5, 1.5) / K);
    }
    return AtomicMeasure(1, std::move(pts), std::move(w));
}

inline AtomicMeasure uniform_measure_2d(int K_per_axis, double mass = 1.0) {
    std::vector<Point> pts;
    std::vector<double> w;
    int K = K_per_axis;
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            pts.push_back({(i + 0.5) / K, (j + 0.5) / K});
            w.push_back(mass / (K * K));
        }
    return AtomicMeasure(2, std::move(pts), std::move(w));
}

inline SampledFunction random_function(const AtomicMeasure& mu, std::uint64_t seed,
                                       double lo = -1.0, double hi = 1.0) {
    Rng rng(seed);
    std::vector<cplx> v(mu.size());
    for (auto& x : v) x = rng.uniform(lo, hi);
    return SampledFunction(std::move(v));
}

// Unimodular values with phases in (-spread, spread); every cube average
// then has modulus at least cos(spread).
inline SampledFunction accretive_function(const AtomicMeasure& mu, std::uint64_t seed,
                                          double spread = 1.2) {
    Rng rng(seed);
    std::vector<cplx> v(mu.size());
    for (auto& x : v) {
        double th = rng.uniform(-spread, spread);
        x = cplx(std::cos(th), std::sin(th));
    }
    return SampledFunction(std::move(v));
}

}  // namespace nhsqtest
