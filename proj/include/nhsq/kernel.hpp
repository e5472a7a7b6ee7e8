#pragma once

// Kernels s_t(x,y) with declared growth order m, smoothness exponent
// alpha, and size/smoothness constants. The toolkit treats user kernels as
// claims to be verified: verify_size / verify_holder sample the declared
// bounds and report the worst ratio.

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

#include "nhsq/geometry.hpp"
#include "nhsq/measure.hpp"
#include "nhsq/rng.hpp"

namespace nhsq {

struct KernelSpec {
    std::string name;
    double m = 1.0;
    double alpha = 1.0;
    double size_const = 1.0;
    double holder_const = 1.0;
    std::function<cplx(double t, const Point& x, const Point& y)> eval;
};

// s_t(x,y) = t^alpha / (t + |x-y|)^(m+alpha). Size ratio is exactly 1.
inline KernelSpec model_kernel(double m, double alpha) {
    KernelSpec k;
    k.name = "model";
    k.m = m;
    k.alpha = alpha;
    k.size_const = 1.0;
    // |s_t(x,y)-s_t(x,y')| <= (m+alpha) * |y-y'| * (t+d)^-(m+alpha+1) * t^alpha
    // on the segment, and |y-y'| < t/2 keeps the denominators comparable
    // within (2/3)^-(m+a+1); declared with that cushion.
    k.holder_const = (m + alpha) * std::pow(1.5, m + alpha + 1.0);
    k.eval = [m, alpha](double t, const Point& x, const Point& y) -> cplx {
        double d = dist_linf(x, y);
        return std::pow(t, alpha) / std::pow(t + d, m + alpha);
    };
    return k;
}

// Poisson-type kernel t / (t^2 + |x-y|^2)^((m+1)/2), the classical Poisson
// kernel when m = n. On-diagonal value t^-m; satisfies the size condition
// with alpha = 1 and constant 2^((m+1)/2).
inline KernelSpec poisson_kernel(double m) {
    KernelSpec k;
    k.name = "poisson";
    k.m = m;
    k.alpha = 1.0;
    k.size_const = std::pow(2.0, (m + 1.0) / 2.0);
    k.holder_const = 4.0 * (m + 1.0) * std::pow(2.0, (m + 1.0) / 2.0);
    k.eval = [m](double t, const Point& x, const Point& y) -> cplx {
        double d = dist_linf(x, y);
        return t / std::pow(t * t + d * d, (m + 1.0) / 2.0);
    };
    return k;
}

inline KernelSpec kernel_by_name(const std::string& name, double m, double alpha) {
    if (name == "model") return model_kernel(m, alpha);
    if (name == "poisson") return poisson_kernel(m);
    throw std::invalid_argument("unknown kernel: " + name);
}

inline cplx eval_kernel(const KernelSpec& k, double t, const Point& x, const Point& y) {
    if (!(t > 0.0)) throw std::invalid_argument("eval_kernel: t must be positive");
    return k.eval(t, x, y);
}

struct KernelVerifyResult {
    double max_ratio = 0.0;
    bool pass = false;
    long samples = 0;
    long rejected = 0;
};

// Default sample domain for the verifiers: x,y in [-span,span]^dim,
// t log-uniform in [t_span_lo, t_span_hi].
struct KernelSampleBox {
    int dim = 1;
    double span = 4.0;
    double t_lo = 1e-2;
    double t_hi = 1e2;
};

inline KernelVerifyResult verify_size(const KernelSpec& k, const KernelSampleBox& box, long count,
                                      std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("verify_size: count must be >= 1");
    Rng rng(seed);
    KernelVerifyResult r;
    for (long i = 0; i < count; ++i) {
        double t = box.t_lo * std::pow(box.t_hi / box.t_lo, rng.uniform(0.0, 1.0));
        Point x(box.dim), y(box.dim);
        for (int d = 0; d < box.dim; ++d) {
            x[d] = rng.uniform(-box.span, box.span);
            y[d] = rng.uniform(-box.span, box.span);
        }
        double dxy = dist_linf(x, y);
        double bound = std::pow(t, k.alpha) / std::pow(t + dxy, k.m + k.alpha);
        double ratio = std::abs(k.eval(t, x, y)) / bound;
        r.max_ratio = std::max(r.max_ratio, ratio);
        ++r.samples;
    }
    r.pass = r.max_ratio <= k.size_const * (1.0 + 1e-9);
    return r;
}

inline KernelVerifyResult verify_holder(const KernelSpec& k, const KernelSampleBox& box, long count,
                                        std::uint64_t seed) {
    Rng rng(seed);
    KernelVerifyResult r;
    for (long i = 0; i < count; ++i) {
        double t = box.t_lo * std::pow(box.t_hi / box.t_lo, rng.uniform(0.0, 1.0));
        Point x(box.dim), y(box.dim), yp(box.dim);
        for (int d = 0; d < box.dim; ++d) {
            x[d] = rng.uniform(-box.span, box.span);
            y[d] = rng.uniform(-box.span, box.span);
            yp[d] = y[d] + rng.uniform(-0.24, 0.24) * t;  // |y-y'| < t/2
        }
        double dyy = dist_linf(y, yp);
        if (!(dyy < t / 2.0)) { ++r.rejected; continue; }
        if (dyy == 0.0) { ++r.samples; continue; }
        double dxy = dist_linf(x, y);
        double bound = std::pow(dyy, k.alpha) / std::pow(t + dxy, k.m + k.alpha);
        double ratio = std::abs(k.eval(t, x, y) - k.eval(t, x, yp)) / bound;
        r.max_ratio = std::max(r.max_ratio, ratio);
        ++r.samples;
    }
    r.pass = r.max_ratio <= k.holder_const * (1.0 + 1e-9);
    return r;
}

// theta_t nu(y) = sum_z s_t(y,z) nu_z, optionally with a density f on the
// atoms of nu (pass nullptr for f == 1).
inline cplx theta(const KernelSpec& k, const ComplexMeasure& nu, const SampledFunction* f,
                  double t, const Point& y) {
    if (!(t > 0.0)) throw std::invalid_argument("theta: t must be positive");
    if (f && f->size() != nu.size())
        throw std::invalid_argument("theta: f not bound to nu's atoms");
    cplx s = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        cplx val = k.eval(t, y, nu.point(i)) * nu.weight(i);
        if (f) val *= (*f)[i];
        s += val;
    }
    return s;
}

}  // namespace nhsq
