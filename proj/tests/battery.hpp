#pragma once

// Shared instance builders for the martingale / testing-condition
// batteries: seeded measures on [0,1), accretive phase functions, and the
// admissible complex measures used by the exceptional-set audits.

#include "nhsq/dyadic.hpp"
#include "nhsq/measure.hpp"
#include "nhsq/rng.hpp"
#include "nhsq/tbmart.hpp"

namespace nhsqtest {

using namespace nhsq;

struct MartingaleInstance {
    AtomicMeasure sigma;
    SampledFunction b;
    SampledFunction f;
    Cube seed{Point{0.5}, 1.0};
    int depth = 0;
};

// sigma: K jittered atoms on [0,1); b: unimodular with phases in
// (-spread, spread), so every cube average has modulus >= cos(spread);
// f: complex with entries in the unit box.
inline MartingaleInstance martingale_instance(std::uint64_t seed, int K, double spread = 1.2) {
    Rng rng(seed);
    std::vector<Point> pts;
    std::vector<double> w;
    for (int i = 0; i < K; ++i) {
        pts.push_back({(i + 0.5 + rng.uniform(-0.35, 0.35)) / K});
        w.push_back(rng.uniform(0.3, 1.7) / K);
    }
    MartingaleInstance inst;
    inst.sigma = AtomicMeasure(1, std::move(pts), std::move(w));
    std::vector<cplx> bv(K), fv(K);
    for (int i = 0; i < K; ++i) {
        double th = spread > 0.0 ? rng.uniform(-spread, spread) : 0.0;
        bv[i] = cplx(std::cos(th), std::sin(th));
        fv[i] = cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    }
    inst.b = SampledFunction(std::move(bv));
    inst.f = SampledFunction(std::move(fv));
    // depth that puts each atom in its own deepest cell of the w = 0 grid;
    // jittered atoms keep a positive gap, 5 extra levels cover the shifts
    double gap = inst.sigma.resolution();
    int d = 1;
    ShiftedGrid probe = reference_grid(inst.seed, 1);
    while (probe.side(d) >= gap && d < 24) ++d;
    inst.depth = d + 1;
    return inst;
}

inline TransitForest full_forest(const MartingaleInstance& inst, const ShiftedGrid& grid) {
    return transit_cubes(grid, inst.sigma, {}, StoppingFamily{});
}

// An admissible (nu, mu) pair on Q = [0,1): mu uniform-ish, sigma a mild
// reweighting with an optional heavy spike and a sparse stretch, b with
// tight phases, rescaled so nu(Q) = mu(Q) exactly.
struct TbInstance {
    AtomicMeasure mu;
    ComplexMeasure nu;
    AtomicMeasure sigma;
    SampledFunction b;  // on sigma's atoms
    Cube Q{Point{0.5}, 1.0};
    double B1 = 2.0;
    double eps0 = 1.0 / 512.0;
};

inline TbInstance tb_instance(std::uint64_t seed, int K = 64, bool spike = true) {
    Rng rng(seed);
    std::vector<Point> pts;
    std::vector<double> muw, sgw;
    for (int i = 0; i < K; ++i) {
        pts.push_back({(i + 0.5 + rng.uniform(-0.2, 0.2)) / K});
        double m = rng.uniform(0.8, 1.2) / K;
        muw.push_back(m);
        double factor = rng.uniform(0.7, 1.3);
        if (i >= K / 2 && i < K / 2 + K / 16) factor = 0.005;  // sparse stretch for F2
        sgw.push_back(m * factor);
    }
    if (spike) {
        std::size_t j = K / 4;
        sgw[j] += 0.08;  // heavy atom: large normalized density, lands in H1
    }
    TbInstance inst;
    inst.mu = AtomicMeasure(1, pts, muw);
    std::vector<cplx> bw(K), nw(K);
    for (int i = 0; i < K; ++i) {
        double th = rng.uniform(-0.4, 0.4);
        bw[i] = cplx(std::cos(th), std::sin(th));
        nw[i] = bw[i] * sgw[i];
    }
    // rescale so nu(Q) = mu(Q): a complex factor c, |c| into sigma, the
    // phase into b
    cplx total = 0.0;
    for (const cplx& z : nw) total += z;
    cplx c = inst.mu.mass() / total;
    for (int i = 0; i < K; ++i) {
        nw[i] *= c;
        sgw[i] *= std::abs(c);
        bw[i] *= c / std::abs(c);
    }
    inst.nu = ComplexMeasure(1, pts, nw);
    inst.sigma = AtomicMeasure(1, pts, sgw);
    inst.b = SampledFunction(std::move(bw));
    return inst;
}

}  // namespace nhsqtest
