#include "test_common.hpp"

#include "nhsq/kernel.hpp"

using namespace nhsq;
using namespace nhsqtest;
using Catch::Approx;

TEST_CASE("model kernel values") {
    KernelSpec k = model_kernel(1.0, 0.5);
    CHECK(std::abs(eval_kernel(k, 1.0, {0.3}, {0.3})) == Approx(1.0));
    CHECK(std::abs(eval_kernel(k, 1.0, {0.0}, {1.0})) == Approx(std::pow(2.0, -1.5)));
    CHECK_THROWS(eval_kernel(k, 0.0, {0.0}, {0.0}));
}

TEST_CASE("poisson kernel on-diagonal value") {
    KernelSpec k = poisson_kernel(2.0);
    double t = 0.7;
    CHECK(std::abs(eval_kernel(k, t, {0.1, 0.2}, {0.1, 0.2})) == Approx(std::pow(t, -2.0)));
}

TEST_CASE("verify_size") {
    KernelSampleBox box;
    KernelSpec model = model_kernel(1.0, 0.5);
    auto r = verify_size(model, box, 2000, 42);
    CHECK(r.pass);
    CHECK(r.max_ratio == Approx(1.0).epsilon(1e-12));

    KernelSpec scaled = model;
    scaled.eval = [base = model.eval](double t, const Point& x, const Point& y) {
        return 3.0 * base(t, x, y);
    };
    auto r3 = verify_size(scaled, box, 2000, 42);
    CHECK_FALSE(r3.pass);
    CHECK(r3.max_ratio == Approx(3.0).epsilon(1e-12));

    // adversarial: missing the alpha-decay in |x - y|
    KernelSpec bad = model;
    bad.eval = [](double t, const Point& x, const Point& y) -> cplx {
        double d = dist_linf(x, y);
        return std::pow(t, 0.5) / std::pow(t + d, 1.0);
    };
    auto rb = verify_size(bad, box, 2000, 42);
    CHECK_FALSE(rb.pass);
    CHECK(rb.max_ratio > 10.0);
}

TEST_CASE("verify_holder") {
    KernelSampleBox box;
    KernelSpec model = model_kernel(1.0, 1.0);
    auto r = verify_holder(model, box, 5000, 7);
    CHECK(r.pass);
    CHECK(r.max_ratio > 0.0);
    // stability under reseeding, within 10%
    auto r2 = verify_holder(model, box, 5000, 8);
    CHECK(r.max_ratio == Approx(r2.max_ratio).epsilon(0.35));

    // a jump in y defeats any declared constant: the ratio on straddling
    // pairs is 0.5 t / |y-y'|, unbounded as the pair shrinks
    KernelSpec step = model;
    step.holder_const = 5.0;
    step.eval = [](double t, const Point& x, const Point& y) -> cplx {
        double d = dist_linf(x, y);
        double base = t / std::pow(t + d, 2.0);
        return y[0] >= 0.0 ? base : 0.5 * base;
    };
    for (double epsv : {1e-2, 1e-4, 1e-6}) {
        Point x{2.0}, y{-epsv}, yp{epsv};
        double ratio = std::abs(step.eval(1.0, x, y) - step.eval(1.0, x, yp)) *
                       std::pow(1.0 + dist_linf(x, y), 2.0) / (2.0 * epsv);
        CHECK(ratio > 0.1 / epsv);
    }
    auto rs = verify_holder(step, box, 20000, 9);
    CHECK_FALSE(rs.pass);
}

TEST_CASE("theta single atom and cancellation") {
    KernelSpec k = model_kernel(1.0, 0.5);
    ComplexMeasure nu(1, {{0.25}}, {cplx(2.0, 1.0)});
    SampledFunction f({cplx(0.5, 0.0)});
    cplx expected = eval_kernel(k, 0.3, {0.8}, {0.25}) * cplx(0.5) * cplx(2.0, 1.0);
    CHECK(std::abs(theta(k, nu, &f, 0.3, {0.8}) - expected) < 1e-15);

    // weights summing to zero at a shared location cancel exactly
    ComplexMeasure zero(1, {{0.1}, {0.1}}, {cplx(1.0), cplx(-1.0)});
    CHECK(std::abs(theta(k, zero, nullptr, 1.0, {0.9})) == 0.0);

    // two-atom hand sum
    ComplexMeasure two(1, {{0.0}, {1.0}}, {cplx(1.0), cplx(2.0)});
    cplx hand = eval_kernel(k, 0.5, {0.4}, {0.0}) * 1.0 + eval_kernel(k, 0.5, {0.4}, {1.0}) * 2.0;
    CHECK(std::abs(theta(k, two, nullptr, 0.5, {0.4}) - hand) < 1e-15);
}

TEST_CASE("theta is linear in f and nu") {
    KernelSpec k = model_kernel(1.0, 1.0);
    Rng rng(100);
    AtomicMeasure mu = jittered_measure_1d(12, 101);
    for (int trial = 0; trial < 20; ++trial) {
        SampledFunction f = random_function(mu, 200 + trial);
        SampledFunction g = random_function(mu, 300 + trial);
        cplx a(rng.uniform(-2, 2), rng.uniform(-2, 2));
        SampledFunction af_g(f.values);
        for (std::size_t i = 0; i < mu.size(); ++i) af_g[i] = a * f[i] + g[i];
        ComplexMeasure nu = density_measure(SampledFunction::constant(mu.size(), 1.0), mu);
        Point y{rng.uniform(-1, 2)};
        double t = std::exp(rng.uniform(-3, 1));
        cplx lhs = theta(k, nu, &af_g, t, y);
        cplx rhs = a * theta(k, nu, &f, t, y) + theta(k, nu, &g, t, y);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + std::abs(rhs) + 1.0));
    }
}

TEST_CASE("theta obeys the size majorization") {
    KernelSpec k = poisson_kernel(1.0);
    AtomicMeasure mu = jittered_measure_1d(16, 55);
    SampledFunction ones = SampledFunction::constant(mu.size(), 1.0);
    ComplexMeasure nu = density_measure(ones, mu);
    Rng rng(56);
    for (int trial = 0; trial < 50; ++trial) {
        Point y{rng.uniform(-1, 2)};
        double t = std::exp(rng.uniform(-4, 2));
        double bound = 0.0;
        for (std::size_t i = 0; i < nu.size(); ++i) {
            double d = dist_linf(y, nu.point(i));
            bound += std::pow(t, k.alpha) / std::pow(t + d, k.m + k.alpha) *
                     std::abs(nu.weight(i));
        }
        CHECK(std::abs(theta(k, nu, nullptr, t, y)) <= k.size_const * bound * (1.0 + 1e-12));
    }
}
