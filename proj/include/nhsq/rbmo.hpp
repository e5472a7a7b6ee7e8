#pragma once

// Regularized-BMO oscillation functionals for non-doubling measures:
// ball oscillation against a chosen constant (weighted median or the
// far-field square-function value), the nested-ball regularity quotient,
// the doubling chain of balls between nested balls, and the far-field
// stability check.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nhsq/geometry.hpp"
#include "nhsq/glstar.hpp"
#include "nhsq/measure.hpp"
#include "nhsq/rng.hpp"

namespace nhsq {

// Lower weighted median of the real values of g over the closed ball B;
// minimizes the weighted L1 deviation among constants.
inline double weighted_median(const SampledFunction& g, const AtomicMeasure& mu, const Cube& B) {
    check_bound(g, mu, "weighted_median");
    std::vector<std::pair<double, double>> vw;
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (B.contains_closed(mu.point(i)) && mu.weight(i) > 0.0) {
            vw.emplace_back(g[i].real(), mu.weight(i));
            total += mu.weight(i);
        }
    if (vw.empty()) throw std::invalid_argument("weighted_median: no atoms in B");
    std::sort(vw.begin(), vw.end());
    double acc = 0.0;
    for (const auto& [v, w] : vw) {
        acc += w;
        if (acc >= total / 2.0) return v;
    }
    return vw.back().first;
}

// mu(kB)^-1 int_B |g - c| dmu for a given constant c.
inline double rbmo_osc_with_constant(const SampledFunction& g, const AtomicMeasure& mu,
                                     const Cube& B, double kappa, cplx c) {
    check_bound(g, mu, "rbmo_osc_with_constant");
    double mk = 0.0;
    Cube kB = B.dilated(kappa);
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (kB.contains_closed(mu.point(i))) mk += mu.weight(i);
    if (!(mk > 0.0)) throw std::invalid_argument("rbmo_osc: mu(kappa B) = 0");
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (B.contains_closed(mu.point(i))) s += std::abs(g[i] - c) * mu.weight(i);
    return s / mk;
}

inline double rbmo_osc_median(const SampledFunction& g, const AtomicMeasure& mu, const Cube& B,
                              double kappa) {
    return rbmo_osc_with_constant(g, mu, B, kappa, weighted_median(g, mu, B));
}

// The far-field constant G_B = g*(f 1_{complement of kappa B})(center of B).
inline GValue farfield_constant(const SampledFunction& f, const AtomicMeasure& mu,
                                const KernelSpec& kern, const OperatorParams& params,
                                const Cube& B, double kappa) {
    check_bound(f, mu, "farfield_constant");
    Cube kB = B.dilated(kappa);
    SampledFunction fcut = f;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (kB.contains_closed(mu.point(i))) fcut[i] = 0.0;
    ComplexMeasure nu = density_measure(fcut, mu);
    return detail::gstar_core(nu, nullptr, mu, kern, params, B.center, 0.0, B.side);
}

// |f_B - f_B'| / (1 + sum_{z in kappa B' \ B} |z - c_B|^-m mu_z), B inside B'.
inline double rbmo_pair(const AtomicMeasure& mu, const Cube& B, const Cube& Bp, double kappa,
                        double m, cplx f_B, cplx f_Bp) {
    if (!Bp.contains_cube_closed(B)) throw std::invalid_argument("rbmo_pair: B must lie inside B'");
    Cube kBp = Bp.dilated(kappa);
    double denom = 1.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const Point& z = mu.point(i);
        if (!kBp.contains_closed(z) || B.contains_closed(z)) continue;
        double d = dist_linf(z, B.center);
        if (d > 0.0) denom += std::pow(d, -m) * mu.weight(i);
    }
    return std::abs(f_B - f_Bp) / denom;
}

// Increasing chain B = B_0, ..., B_K = B' with r(B_{j+1}) <= 2 r(B_j).
// Radii double around the center of B while the ball fits inside B', then
// the center slides toward B' and the last ball is B' itself.
inline std::vector<Cube> chain_balls(const Cube& B, const Cube& Bp) {
    if (!Bp.contains_cube_closed(B)) throw std::invalid_argument("chain_balls: B must lie in B'");
    std::vector<Cube> chain{B};
    if (B.side == Bp.side && dist_linf(B.center, Bp.center) == 0.0) return chain;
    double r = B.side / 2.0;
    double rp = Bp.side / 2.0;
    Point dir(B.dim());
    double off = dist_linf(B.center, Bp.center);
    for (int i = 0; i < B.dim(); ++i) dir[i] = B.center[i] - Bp.center[i];
    while (true) {
        double rn = std::min(2.0 * r, rp);
        double tn = (rn >= rp || off == 0.0) ? 0.0 : std::min(off, rp - rn);
        Point c(B.dim());
        double scale = off > 0.0 ? tn / off : 0.0;
        for (int i = 0; i < B.dim(); ++i) c[i] = Bp.center[i] + scale * dir[i];
        chain.emplace_back(c, 2.0 * rn);
        r = rn;
        if (rn >= rp && tn == 0.0) break;
    }
    return chain;
}

struct ChainReport {
    std::size_t length = 0;
    bool nested = true;          // B_j inside B_{j+1}
    bool radius_ok = true;       // r grows by at most 2 per step
    double shell_comparability = 0.0;  // max of |z-c_B|/r_j and its inverse over shells
    double far_comparability = 0.0;    // max of |y-z|/|z-c_B| and inverse, y in 3B_j, z off kB_j
};

inline ChainReport validate_chain(const std::vector<Cube>& chain, const AtomicMeasure& mu,
                                  double kappa, const Point& cB) {
    ChainReport rep;
    rep.length = chain.size();
    for (std::size_t j = 0; j + 1 < chain.size(); ++j) {
        if (!chain[j + 1].contains_cube_closed(chain[j])) rep.nested = false;
        if (chain[j + 1].side > 2.0 * chain[j].side * (1.0 + 1e-12)) rep.radius_ok = false;
        Cube kj = chain[j].dilated(kappa);
        Cube kj1 = chain[j + 1].dilated(kappa);
        double rj = chain[j].side / 2.0;
        for (std::size_t i = 0; i < mu.size(); ++i) {
            const Point& z = mu.point(i);
            if (!kj1.contains_closed(z) || kj.contains_closed(z)) continue;
            double d = dist_linf(z, cB);
            if (d > 0.0)
                rep.shell_comparability =
                    std::max({rep.shell_comparability, d / rj, rj / d});
            Cube b3 = chain[j].dilated(3.0);
            for (std::size_t y = 0; y < mu.size(); ++y) {
                if (!b3.contains_closed(mu.point(y))) continue;
                double dyz = dist_linf(mu.point(y), z);
                if (dyz > 0.0 && d > 0.0)
                    rep.far_comparability = std::max({rep.far_comparability, dyz / d, d / dyz});
            }
        }
    }
    return rep;
}

struct KeyLemmaResult {
    double max_deviation = 0.0;
    long probes = 0;
    long excluded_diverged = 0;
};

// max over probes x in B(x0,r) of |g*(f 1_{(kB)^c})(x) - g*(f 1_{(kB)^c})(x0)|.
inline KeyLemmaResult key_lemma_check(const SampledFunction& f, const AtomicMeasure& mu,
                                      const KernelSpec& kern, const OperatorParams& params,
                                      const Point& x0, double r, double kappa, long probes,
                                      std::uint64_t seed) {
    check_bound(f, mu, "key_lemma_check");
    if (lp_norm(f, mu, std::numeric_limits<double>::infinity()) > 1.0 + 1e-12)
        throw std::invalid_argument("key_lemma_check: requires ||f||_inf <= 1");
    Cube B = ball(x0, r);
    Cube kB = B.dilated(kappa);
    SampledFunction fcut = f;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (kB.contains_closed(mu.point(i))) fcut[i] = 0.0;
    ComplexMeasure nu = density_measure(fcut, mu);

    KeyLemmaResult res;
    GValue g0 = detail::gstar_core(nu, nullptr, mu, kern, params, x0, 0.0, r);
    if (g0.diverged) {
        ++res.excluded_diverged;
        return res;
    }
    Rng rng(seed);
    for (long p = 0; p < probes; ++p) {
        Point x(mu.dim());
        for (int i = 0; i < mu.dim(); ++i) x[i] = x0[i] + rng.uniform(-r, r);
        GValue g = detail::gstar_core(nu, nullptr, mu, kern, params, x, 0.0, r);
        if (g.diverged) {
            ++res.excluded_diverged;
            continue;
        }
        ++res.probes;
        res.max_deviation = std::max(res.max_deviation, std::fabs(g.value - g0.value));
    }
    return res;
}

}  // namespace nhsq
