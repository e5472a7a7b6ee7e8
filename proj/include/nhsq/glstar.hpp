#pragma once

// Evaluation of the cone-weighted square function
//
//   g*(nu)(x)^2 = int_0^inf sum_y (t/(t+|x-y|))^(m*lambda) |theta_t nu(y)|^2
//                 mu_y / t^m  dt/t
//
// for atomic mu: the y-sum is exact, the t-integral is a trapezoid rule in
// log t over a geometric grid. The untruncated operator is genuinely
// infinite at atoms carrying nu-mass; with t_lo = 0 the evaluator starts
// the grid below the resolution scale and flags divergence from the local
// power-law slope instead of returning a grid-dependent number.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nhsq/geometry.hpp"
#include "nhsq/kernel.hpp"
#include "nhsq/measure.hpp"

namespace nhsq {

struct OperatorParams {
    double lambda = 3.0;
    double t_lo = 0.0;   // truncation t0; 0 = untruncated (auto low end)
    double t_hi = 0.0;   // upper limit when t_hi_fixed
    bool t_hi_fixed = false;
    double t_ratio = std::pow(2.0, 1.0 / 8.0);  // geometric quadrature step
    bool analytic_tail = false;

    void validate() const {
        if (!(lambda > 2.0)) throw std::invalid_argument("OperatorParams: lambda must be > 2");
        if (!(t_ratio > 1.0)) throw std::invalid_argument("OperatorParams: t_ratio must be > 1");
        if (t_lo < 0.0) throw std::invalid_argument("OperatorParams: t_lo must be >= 0");
    }
};

// Stricter exponent range needed by the pointwise-control harnesses;
// the operator itself only needs lambda > 2.
inline bool lemma_exponent_ok(const KernelSpec& k, const OperatorParams& p) {
    return k.alpha <= k.m * (p.lambda - 2.0) / 2.0 + 1e-12;
}
inline bool theorem_exponent_ok(const KernelSpec& k, const OperatorParams& p) {
    return k.alpha <= k.m * (p.lambda - 2.0) + 1e-12;
}

struct GValue {
    double value = 0.0;
    bool diverged = false;
    double quadrature_error = 0.0;  // |value - coarse-grid value|
    double tail_bound = 0.0;        // bound on the value increase from t > t_hi
};

// V_t(f)(x) = sum_z t^alpha/(t+|x-z|)^(m+alpha) |f(z)| mu_z.
inline double v_t(const SampledFunction& f, const AtomicMeasure& mu, const KernelSpec& k,
                  const Point& x, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("v_t: t must be positive");
    check_bound(f, mu, "v_t");
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double d = dist_linf(x, mu.point(i));
        s += std::pow(t, k.alpha) / std::pow(t + d, k.m + k.alpha) * std::abs(f[i]) * mu.weight(i);
    }
    return s;
}

namespace detail {

// One t-slice of the square-function integrand (before the dt/t factor).
inline double cone_slice(const ComplexMeasure& nu, const SampledFunction* f,
                         const AtomicMeasure& mu, const KernelSpec& k, double mlambda,
                         const Point& x, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu.weight(i) == 0.0) continue;
        cplx th = theta(k, nu, f, t, mu.point(i));
        double a = std::abs(th);
        if (a == 0.0) continue;
        double cone = t / (t + dist_linf(x, mu.point(i)));
        s += std::pow(cone, mlambda) * a * a * mu.weight(i);
    }
    return s / std::pow(t, k.m);
}

inline double trapezoid_log(const std::vector<double>& t, const std::vector<double>& I,
                            std::size_t stride = 1) {
    double q = 0.0;
    std::size_t prev = 0;
    for (std::size_t i = stride; i < t.size(); i += stride) {
        double du = std::log(t[i] / t[prev]);
        q += 0.5 * du * (I[prev] + I[i]);
        prev = i;
    }
    if (prev + 1 < t.size()) {  // close the last partial panel
        std::size_t last = t.size() - 1;
        double du = std::log(t[last] / t[prev]);
        q += 0.5 * du * (I[prev] + I[last]);
    }
    return q;
}

}  // namespace detail

// U_t(f)(x) = ( sum_y cone^(m*lambda) |theta_t^mu f(y)|^2 mu_y / t^m )^(1/2).
inline double u_t(const SampledFunction& f, const AtomicMeasure& mu, const KernelSpec& k,
                  const OperatorParams& p, const Point& x, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("u_t: t must be positive");
    check_bound(f, mu, "u_t");
    ComplexMeasure nu = density_measure(f, mu);
    return std::sqrt(detail::cone_slice(nu, nullptr, mu, k, k.m * p.lambda, x, t));
}

namespace detail {

struct TRange {
    double lo = 0.0;
    double hi = 0.0;
    bool auto_low = false;
};

inline TRange t_range(const ComplexMeasure& nu, const AtomicMeasure& mu,
                      const OperatorParams& p, const Point& x, double extra_scale) {
    TRange r;
    r.auto_low = !(p.t_lo > 0.0);
    r.lo = r.auto_low ? mu.resolution() * std::pow(2.0, -6) : p.t_lo;
    if (p.t_hi_fixed) {
        r.hi = p.t_hi;
        return r;
    }
    double diam = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        diam = std::max(diam, dist_linf(x, mu.point(i)));
        for (std::size_t j = 0; j < nu.size(); ++j)
            diam = std::max(diam, dist_linf(mu.point(i), nu.point(j)));
    }
    for (std::size_t j = 0; j < nu.size(); ++j)
        diam = std::max(diam, dist_linf(x, nu.point(j)));
    r.hi = std::max(8.0 * (diam + extra_scale), r.lo * 1024.0);
    return r;
}

inline GValue gstar_core(const ComplexMeasure& nu, const SampledFunction* f,
                         const AtomicMeasure& mu, const KernelSpec& k, const OperatorParams& p,
                         const Point& x, double t_upper_cap, double extra_scale) {
    p.validate();
    GValue g;
    if (mu.size() == 0 || nu.size() == 0) return g;

    TRange tr = t_range(nu, mu, p, x, extra_scale);
    if (t_upper_cap > 0.0) tr.hi = std::min(tr.hi, t_upper_cap);
    if (!(tr.hi > tr.lo)) return g;  // empty t-range

    std::vector<double> ts, Is;
    double t = tr.lo;
    while (t < tr.hi) {
        ts.push_back(t);
        t *= p.t_ratio;
    }
    ts.push_back(tr.hi);
    Is.reserve(ts.size());
    for (double tk : ts)
        Is.push_back(cone_slice(nu, f, mu, k, k.m * p.lambda, x, tk));

    // Divergence at the low end: the dt-integrand I(t)/t behaves like a
    // power law there; log-log slope <= -1 means a non-integrable tail.
    if (tr.auto_low && ts.size() >= 3 && Is[0] > 0.0 && Is[1] > 0.0 && Is[2] > 0.0) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int i = 0; i < 3; ++i) {
            double lx = std::log(ts[i]);
            double ly = std::log(Is[i] / ts[i]);
            sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        }
        double slope = (3.0 * sxy - sx * sy) / (3.0 * sxx - sx * sx);
        if (slope <= -1.0 + 1e-9) {
            g.diverged = true;
            g.value = std::numeric_limits<double>::infinity();
            return g;
        }
    }

    double q_fine = trapezoid_log(ts, Is, 1);
    double q_coarse = trapezoid_log(ts, Is, 2);
    g.value = std::sqrt(std::max(0.0, q_fine));
    g.quadrature_error = std::fabs(g.value - std::sqrt(std::max(0.0, q_coarse)));

    if (p.analytic_tail && t_upper_cap <= 0.0 && !p.t_hi_fixed) {
        // Beyond t_hi: |theta_t nu| <= C ||nu|| t^-m, and the cone sum is at
        // most mass(mu) <= mass(mu) (t/t_hi)^m, so the remaining integral is
        // bounded by C^2 ||nu||^2 mass(mu) t_hi^-m * t_hi^-2m / (2m).
        double tv = nu.total_variation();
        double tail2 = k.size_const * k.size_const * tv * tv * mu.mass() *
                       std::pow(tr.hi, -3.0 * k.m) / (2.0 * k.m);
        g.tail_bound = std::sqrt(q_fine + tail2) - g.value;
    }
    return g;
}

}  // namespace detail

// g*(nu)(x) for a complex measure nu against mu.
inline GValue gstar(const ComplexMeasure& nu, const AtomicMeasure& mu, const KernelSpec& k,
                    const OperatorParams& p, const Point& x) {
    return detail::gstar_core(nu, nullptr, mu, k, p, x, 0.0, 0.0);
}

// Localized variant: t restricted to (t_lo, l(Q)). No tail.
inline GValue gstar_localized(const ComplexMeasure& nu, const AtomicMeasure& mu,
                              const KernelSpec& k, const OperatorParams& p, const Cube& Q,
                              const Point& x) {
    if (!(Q.side > 0.0)) throw std::invalid_argument("gstar_localized: l(Q) must be positive");
    return detail::gstar_core(nu, nullptr, mu, k, p, x, Q.side, Q.side);
}

// t0-truncated operator applied to a density f in L^p(mu).
inline GValue gstar_truncated(const SampledFunction& f, const AtomicMeasure& mu,
                              const KernelSpec& k, const OperatorParams& p, const Point& x) {
    if (!(p.t_lo > 0.0)) throw std::invalid_argument("gstar_truncated: t0 must be positive");
    check_bound(f, mu, "gstar_truncated");
    ComplexMeasure nu = density_measure(f, mu);
    return detail::gstar_core(nu, nullptr, mu, k, p, x, 0.0, 0.0);
}

// Difference functional of Lemma-2.3 type: the L^2(d mu dt/t^(m+1)) norm of
//   [cone(x,y,t)^(m*lambda/2) - cone(x',y,t)^(m*lambda/2)] theta_t(f 1_{(2B)^c} mu)(y)
// for x, x' in B.
inline double t_compare(const SampledFunction& f, const AtomicMeasure& mu, const KernelSpec& k,
                        const OperatorParams& p, const Cube& B, const Point& x, const Point& xp) {
    p.validate();
    check_bound(f, mu, "t_compare");
    if (!B.contains_closed(x) || !B.contains_closed(xp))
        throw std::invalid_argument("t_compare: x and x' must lie in B");

    Cube B2 = B.dilated(2.0);
    SampledFunction fcut = f;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (B2.contains_halfopen(mu.point(i))) fcut[i] = 0.0;
    ComplexMeasure nu = density_measure(fcut, mu);
    if (nu.total_variation() == 0.0) return 0.0;

    detail::TRange tr = detail::t_range(nu, mu, p, x, B.side);
    std::vector<double> ts, Is;
    double t = tr.lo;
    while (t < tr.hi) { ts.push_back(t); t *= p.t_ratio; }
    ts.push_back(tr.hi);
    double half = k.m * p.lambda / 2.0;
    for (double tk : ts) {
        double s = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i) {
            if (mu.weight(i) == 0.0) continue;
            cplx th = theta(k, nu, nullptr, tk, mu.point(i));
            double a = std::abs(th);
            if (a == 0.0) continue;
            double c1 = std::pow(tk / (tk + dist_linf(x, mu.point(i))), half);
            double c2 = std::pow(tk / (tk + dist_linf(xp, mu.point(i))), half);
            double diff = c1 - c2;
            s += diff * diff * a * a * mu.weight(i);
        }
        Is.push_back(s / std::pow(tk, k.m));
    }
    return std::sqrt(std::max(0.0, detail::trapezoid_log(ts, Is, 1)));
}

}  // namespace nhsq
