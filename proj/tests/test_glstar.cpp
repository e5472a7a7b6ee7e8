#include "test_common.hpp"

#include "nhsq/glstar.hpp"

using namespace nhsq;
using namespace nhsqtest;
using Catch::Approx;

namespace {

OperatorParams params_t0(double lambda, double t0, double ratio = std::pow(2.0, 1.0 / 64.0)) {
    OperatorParams p;
    p.lambda = lambda;
    p.t_lo = t0;
    p.t_ratio = ratio;
    return p;
}

}  // namespace

TEST_CASE("v_t and u_t single-atom closed forms") {
    KernelSpec k = model_kernel(1.0, 0.5);
    AtomicMeasure mu(1, {{0.2}}, {1.5});
    SampledFunction f({cplx(2.0)});
    double t = 0.7;
    double d = std::fabs(0.9 - 0.2);
    CHECK(v_t(f, mu, k, {0.9}, t) ==
          Approx(std::pow(t, 0.5) / std::pow(t + d, 1.5) * 2.0 * 1.5));
    CHECK(v_t(SampledFunction({cplx(0.0)}), mu, k, {0.9}, t) == 0.0);

    // u_t at the atom itself, f = 1: w^(3/2) t^(-3m/2)
    OperatorParams p = params_t0(3.0, 1.0);
    SampledFunction one({cplx(1.0)});
    double w = 1.5;
    CHECK(u_t(one, mu, k, p, {0.2}, t) == Approx(std::pow(w, 1.5) * std::pow(t, -1.5)));
}

TEST_CASE("v_t two-atom hand sum") {
    KernelSpec k = model_kernel(1.0, 1.0);
    AtomicMeasure mu(1, {{0.0}, {1.0}}, {0.5, 0.25});
    SampledFunction f({cplx(2.0), cplx(-4.0)});
    double t = 0.3;
    double hand = t / std::pow(t + 0.4, 2.0) * 2.0 * 0.5 + t / std::pow(t + 0.6, 2.0) * 4.0 * 0.25;
    CHECK(v_t(f, mu, k, {0.4}, t) == Approx(hand));
}

TEST_CASE("one-atom truncated closed form 1/sqrt(3)") {
    KernelSpec k = model_kernel(1.0, 1.0);
    AtomicMeasure mu(1, {{0.0}}, {1.0});
    SampledFunction one({cplx(1.0)});
    OperatorParams p = params_t0(3.0, 1.0);
    GValue g = gstar_truncated(one, mu, k, p, {0.0});
    CHECK_FALSE(g.diverged);
    CHECK(g.value == Approx(1.0 / std::sqrt(3.0)).margin(1e-4));
}

TEST_CASE("one-atom localized closed form") {
    KernelSpec k = model_kernel(1.0, 1.0);
    AtomicMeasure mu(1, {{0.0}}, {2.0});
    ComplexMeasure nu(1, {{0.0}}, {cplx(2.0)});
    OperatorParams p = params_t0(3.0, 1.0);
    double L = 4.0;
    GValue g = gstar_localized(nu, mu, k, p, Cube({0.0}, L), {0.0});
    double w = 2.0;
    double expect = std::pow(w, 1.5) * std::sqrt((1.0 - std::pow(L, -3.0)) / 3.0);
    CHECK(g.value == Approx(expect).epsilon(1e-4));

    // empty t-range
    OperatorParams pbig = params_t0(3.0, 10.0);
    GValue z = gstar_localized(nu, mu, k, pbig, Cube({0.0}, 4.0), {0.0});
    CHECK(z.value == 0.0);
}

TEST_CASE("gstar zero measure and parameter validation") {
    KernelSpec k = model_kernel(1.0, 1.0);
    AtomicMeasure mu = uniform_measure_1d(8);
    ComplexMeasure zero(1, {}, {});
    OperatorParams p = params_t0(3.0, 0.5);
    CHECK(gstar(zero, mu, k, p, {0.5}).value == 0.0);

    OperatorParams bad = p;
    bad.lambda = 2.0;
    CHECK_THROWS(gstar(zero, mu, k, bad, {0.5}));
    OperatorParams badt = p;
    badt.t_lo = -1.0;
    CHECK_THROWS(gstar_truncated(SampledFunction::constant(8, 1.0), mu, k, badt, {0.5}));
}

TEST_CASE("lambda monotonicity") {
    KernelSpec k = model_kernel(1.0, 0.5);
    AtomicMeasure mu = jittered_measure_1d(12, 21);
    SampledFunction f = random_function(mu, 22, 0.2, 1.0);
    ComplexMeasure nu = density_measure(f, mu);
    OperatorParams p3 = params_t0(3.0, 0.05);
    OperatorParams p4 = params_t0(4.0, 0.05);
    for (int i = 0; i < 12; i += 3) {
        double v3 = gstar(nu, mu, k, p3, mu.point(i)).value;
        double v4 = gstar(nu, mu, k, p4, mu.point(i)).value;
        CHECK(v4 <= v3 * (1.0 + 1e-12));
    }
}

TEST_CASE("monotone in the t-domain and in t0") {
    KernelSpec k = model_kernel(1.0, 1.0);
    AtomicMeasure mu = jittered_measure_1d(10, 31);
    SampledFunction f = random_function(mu, 32, 0.1, 1.0);
    Point x = mu.point(4);
    double prev = std::numeric_limits<double>::infinity();
    for (double t0 : {0.02, 0.05, 0.1, 0.3, 1.0, 4.0}) {
        double v = gstar_truncated(f, mu, k, params_t0(3.0, t0), x).value;
        CHECK(v <= prev * (1.0 + 1e-10));
        prev = v;
    }
}

TEST_CASE("refinement convergence within reported error") {
    KernelSpec k = model_kernel(1.0, 1.0);
    AtomicMeasure mu = jittered_measure_1d(8, 41);
    SampledFunction f = random_function(mu, 42, 0.3, 1.0);
    OperatorParams coarse = params_t0(3.0, 0.1, std::pow(2.0, 1.0 / 8.0));
    OperatorParams fine = params_t0(3.0, 0.1, std::pow(2.0, 1.0 / 16.0));
    for (int i = 0; i < 8; i += 2) {
        GValue gc = gstar_truncated(f, mu, k, coarse, mu.point(i));
        GValue gf = gstar_truncated(f, mu, k, fine, mu.point(i));
        CHECK(std::fabs(gf.value - gc.value) <= gc.quadrature_error + 1e-12);
    }
}

TEST_CASE("divergence detection at atoms") {
    KernelSpec k = model_kernel(1.0, 1.0);
    AtomicMeasure mu = uniform_measure_1d(16);
    ComplexMeasure spike(1, {mu.point(7)}, {cplx(1.0)});
    OperatorParams p;  // t_lo = 0: auto low end
    p.lambda = 4.0;
    GValue g = gstar(spike, mu, k, p, mu.point(7));
    CHECK(g.diverged);
    CHECK(std::isinf(g.value));

    // away from the spike the untruncated value is finite once
    // m*lambda > 3m, which kills the small-t contribution of the atom
    GValue far = gstar(spike, mu, k, p, {3.0});
    CHECK_FALSE(far.diverged);
    CHECK(std::isfinite(far.value));

    // at lambda = 3, m = 1 the same point mass diverges everywhere
    OperatorParams p3 = p;
    p3.lambda = 3.0;
    CHECK(gstar(spike, mu, k, p3, {3.0}).diverged);
}

TEST_CASE("gstar is 1-homogeneous in the measure") {
    KernelSpec k = model_kernel(1.0, 1.0);
    AtomicMeasure mu = jittered_measure_1d(10, 51);
    SampledFunction f = random_function(mu, 52, 0.2, 1.0);
    ComplexMeasure nu = density_measure(f, mu);
    std::vector<cplx> w5;
    for (const cplx& z : nu.weights()) w5.push_back(5.0 * z);
    ComplexMeasure nu5(1, nu.points(), w5);
    OperatorParams p = params_t0(3.0, 0.05);
    Point x = mu.point(3);
    CHECK(gstar(nu5, mu, k, p, x).value == Approx(5.0 * gstar(nu, mu, k, p, x).value));
}

TEST_CASE("analytic tail bound dominates the missing mass") {
    KernelSpec k = model_kernel(1.0, 1.0);
    AtomicMeasure mu(1, {{0.0}}, {1.0});
    SampledFunction one({cplx(1.0)});
    // exact remainder of the 1-atom integral beyond t_hi is
    // (t_hi^-3)/3; the reported bound must be at least that
    OperatorParams p = params_t0(3.0, 1.0);
    p.analytic_tail = true;
    GValue g = gstar_truncated(one, mu, k, p, {0.0});
    double t_hi = 1024.0;  // auto floor for this configuration
    double exact_total = 1.0 / std::sqrt(3.0);
    double missing = exact_total - std::sqrt(1.0 / 3.0 - std::pow(t_hi, -3.0) / 3.0);
    CHECK(g.tail_bound >= missing);
    CHECK(g.tail_bound < 1e-6);
}

TEST_CASE("t_compare basics") {
    KernelSpec k = model_kernel(1.0, 1.0);
    AtomicMeasure mu = jittered_measure_1d(12, 61);
    SampledFunction f = random_function(mu, 62, 0.1, 1.0);
    OperatorParams p;
    p.lambda = 4.0;
    Cube B({0.5}, 0.25);
    Point x{0.45}, xp{0.55};
    CHECK(t_compare(f, mu, k, p, B, x, x) == 0.0);
    CHECK_THROWS(t_compare(f, mu, k, p, B, {0.9}, xp));

    // f supported inside 2B contributes nothing
    SampledFunction fin = SampledFunction::constant(mu.size(), 0.0);
    Cube B2 = B.dilated(2.0);
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (B2.contains_halfopen(mu.point(i))) fin[i] = 1.0;
    CHECK(t_compare(fin, mu, k, p, B, x, xp) == 0.0);

    CHECK(t_compare(f, mu, k, p, B, x, xp) > 0.0);
}

TEST_CASE("pointwise domination u_t by v_t, sampled") {
    KernelSpec k = model_kernel(1.0, 1.0);
    OperatorParams p;
    p.lambda = 4.0;
    REQUIRE(lemma_exponent_ok(k, p));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        AtomicMeasure mu = jittered_measure_1d(10, 700 + trial);
        SampledFunction f = random_function(mu, 800 + trial, 0.0, 1.0);
        Rng rng(900 + trial);
        Point x{rng.uniform(-0.5, 1.5)};
        double t = std::exp(rng.uniform(-3.0, 1.0));
        double u = u_t(f, mu, k, p, x, t);
        double v = v_t(f, mu, k, x, t);
        if (v > 0.0) worst = std::max(worst, u / v);
    }
    CHECK(worst > 0.0);
    CHECK(worst < 50.0);
}

TEST_CASE("truncated map is Lipschitz on a segment") {
    KernelSpec k = model_kernel(1.0, 1.0);
    AtomicMeasure mu = jittered_measure_1d(12, 71);
    SampledFunction f = random_function(mu, 72, 0.2, 1.0);
    OperatorParams p = params_t0(3.0, 0.2);
    double fp = lp_norm(f, mu, 2.0);
    double worst = 0.0;
    Point prev{0.0};
    double prev_v = gstar_truncated(f, mu, k, p, prev).value;
    for (int s = 1; s <= 24; ++s) {
        Point x{s / 24.0};
        double v = gstar_truncated(f, mu, k, p, x).value;
        worst = std::max(worst, std::fabs(v - prev_v) / dist_linf(x, prev));
        prev = x;
        prev_v = v;
    }
    CHECK(worst < 1e3 * fp);  // finite Lipschitz ratio at this truncation
}
