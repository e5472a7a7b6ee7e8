#pragma once

// Local random dyadic grids. A grid is generated by the square
// Q*_w = c + w + [-2^N, 2^N)^n with w uniform on [-2^(N-1), 2^(N-1))^n,
// where c is the seed cube's center and N satisfies
// 2^(N-3) <= l(seed) < 2^(N-2). Level-j cubes have side 2^(N+1-j) and
// are addressed by integer index vectors; the 2^n children of a cube
// partition it exactly.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nhsq/geometry.hpp"
#include "nhsq/measure.hpp"
#include "nhsq/rng.hpp"

namespace nhsq {

class ShiftedGrid;

struct DyadicCube {
    const ShiftedGrid* grid = nullptr;
    int level = 0;
    std::vector<std::int64_t> idx;

    Cube box() const;
    double side() const;
    DyadicCube parent() const;
    DyadicCube child(int combo) const;  // combo bit d selects the upper half on axis d
    DyadicCube ancestor(int k) const;

    bool operator==(const DyadicCube& o) const { return level == o.level && idx == o.idx; }
    bool operator<(const DyadicCube& o) const {
        if (level != o.level) return level < o.level;
        return idx < o.idx;
    }
};

class ShiftedGrid {
  public:
    ShiftedGrid(const Cube& seed, const Point& w, int max_depth)
        : dim_(seed.dim()), w_(w), max_depth_(max_depth) {
        if (static_cast<int>(w.size()) != dim_)
            throw std::invalid_argument("ShiftedGrid: shift dimension mismatch");
        if (max_depth < 0) throw std::invalid_argument("ShiftedGrid: max_depth must be >= 0");
        N_ = static_cast<int>(std::floor(std::log2(seed.side))) + 3;
        double half_omega = std::pow(2.0, N_ - 1);
        for (double wi : w)
            if (wi < -half_omega || wi >= half_omega)
                throw std::invalid_argument("ShiftedGrid: shift outside Omega_N");
        origin_.resize(dim_);
        double top_half = std::pow(2.0, N_);
        for (int i = 0; i < dim_; ++i) origin_[i] = seed.center[i] + w[i] - top_half;
        // seed is contained well inside the top cube for any admissible w
        top_side_ = 2.0 * top_half;
    }

    int dim() const { return dim_; }
    int N() const { return N_; }
    int max_depth() const { return max_depth_; }
    const Point& shift() const { return w_; }
    const Point& origin() const { return origin_; }
    double side(int level) const { return top_side_ / std::pow(2.0, level); }

    DyadicCube root() const {
        DyadicCube c;
        c.grid = this;
        c.level = 0;
        c.idx.assign(dim_, 0);
        return c;
    }

    Cube box(int level, const std::vector<std::int64_t>& idx) const {
        double s = side(level);
        Point c(dim_);
        for (int i = 0; i < dim_; ++i) c[i] = origin_[i] + (idx[i] + 0.5) * s;
        return Cube(c, s);
    }

    // Leaf-level cell containing p at the given level; false if outside.
    bool locate(const Point& p, int level, std::vector<std::int64_t>& idx) const {
        double s = side(level);
        std::int64_t cells = std::int64_t(1) << level;
        idx.resize(dim_);
        for (int i = 0; i < dim_; ++i) {
            double rel = (p[i] - origin_[i]) / s;
            std::int64_t k = static_cast<std::int64_t>(std::floor(rel));
            if (k < 0 || k >= cells) return false;
            idx[i] = k;
        }
        return true;
    }

  private:
    int dim_;
    int N_ = 0;
    Point w_;
    Point origin_;
    double top_side_ = 0.0;
    int max_depth_ = 0;
};

inline Cube DyadicCube::box() const { return grid->box(level, idx); }
inline double DyadicCube::side() const { return grid->side(level); }

inline DyadicCube DyadicCube::parent() const {
    if (level == 0) throw std::invalid_argument("DyadicCube: root has no parent");
    DyadicCube p;
    p.grid = grid;
    p.level = level - 1;
    p.idx.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) p.idx[i] = idx[i] >> 1;
    return p;
}

inline DyadicCube DyadicCube::child(int combo) const {
    DyadicCube c;
    c.grid = grid;
    c.level = level + 1;
    c.idx.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        c.idx[i] = 2 * idx[i] + ((combo >> i) & 1);
    return c;
}

inline DyadicCube DyadicCube::ancestor(int k) const {
    if (k < 0 || k > level)
        throw std::invalid_argument("DyadicCube::ancestor: k must lie in [0, level]");
    DyadicCube a;
    a.grid = grid;
    a.level = level - k;
    a.idx.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) a.idx[i] = idx[i] >> k;
    return a;
}

inline Point sample_shift(Rng& rng, int N, int dim) {
    double half = std::pow(2.0, N - 1);
    Point w(dim);
    for (int i = 0; i < dim; ++i) w[i] = rng.uniform(-half, half);
    return w;
}

// The reference lattice D_0 for a seed cube: the same construction with
// zero shift, so all cube coordinates are dyadic offsets from the seed
// center.
inline ShiftedGrid reference_grid(const Cube& seed, int max_depth) {
    return ShiftedGrid(seed, Point(seed.dim(), 0.0), max_depth);
}

struct GoodCubeResult {
    bool good = false;
    bool vacuous = false;  // no admissible J existed in the finite grid
    double min_margin = std::numeric_limits<double>::infinity();  // min of dist - threshold
};

// I is good for the grid when, for every grid cube J with
// l(J) >= 2^r l(I), dist(closure(I), boundary(J)) > l(I)^g l(J)^(1-g).
// Minimizing over the cubes of one level reduces to the distance from I
// to that level's lattice skeleton. Floating-point comparisons get a
// 1e-12 relative slack toward "bad".
inline GoodCubeResult is_good(const Cube& I, const ShiftedGrid& g, int r, double gamma) {
    if (!(gamma > 0.0 && gamma <= 0.5))
        throw std::invalid_argument("is_good: gamma must lie in (0, 1/2]");
    if (r < 1) throw std::invalid_argument("is_good: r must be a positive integer");
    if (I.side > g.side(0)) throw std::invalid_argument("is_good: I larger than the top cube");

    GoodCubeResult res;
    res.good = true;
    double need = std::pow(2.0, r) * I.side;
    for (int level = 0; level <= g.max_depth(); ++level) {
        double s = g.side(level);
        if (s < need) break;
        // distance from I to the level's skeleton, per axis
        double cells = std::pow(2.0, level);
        double dist = std::numeric_limits<double>::infinity();
        for (int i = 0; i < g.dim(); ++i) {
            double a = I.lo(i) - g.origin()[i];
            double b = I.hi(i) - g.origin()[i];
            double ka = std::floor(a / s);
            double kb = std::floor(b / s);
            double axis_dist;
            if (ka != kb || a < 0.0 || kb >= cells) {
                axis_dist = 0.0;  // straddles (or touches) a lattice plane
            } else {
                axis_dist = std::min(a - ka * s, (ka + 1.0) * s - b);
            }
            dist = std::min(dist, axis_dist);
        }
        double thr = std::pow(I.side, gamma) * std::pow(s, 1.0 - gamma);
        res.min_margin = std::min(res.min_margin, dist - thr);
        if (!(dist > thr + 1e-12 * std::max(thr, I.side))) {
            res.good = false;
            return res;
        }
    }
    if (res.min_margin == std::numeric_limits<double>::infinity()) {
        res.vacuous = true;  // no level was admissible
    }
    return res;
}

struct BadProbability {
    double estimate = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 1.0;
    long trials = 0;
    long vacuous = 0;
};

inline BadProbability bad_probability(const Cube& I, const Cube& seed_cube, int r, double gamma,
                                      long trials, std::uint64_t seed) {
    if (trials < 100) throw std::invalid_argument("bad_probability: need at least 100 trials");
    // depth just deep enough that every admissible scale exists in the grid
    ShiftedGrid probe = reference_grid(seed_cube, 0);
    double top = probe.side(0);
    int depth = 0;
    while (probe.side(depth) / 2.0 >= std::pow(2.0, r) * I.side && depth < 62) ++depth;
    (void)top;

    long bad = 0, vac = 0;
    for (long tix = 0; tix < trials; ++tix) {
        Rng rng(substream_seed(seed, static_cast<std::uint64_t>(tix)));
        Point w = sample_shift(rng, probe.N(), seed_cube.dim());
        ShiftedGrid g(seed_cube, w, depth);
        GoodCubeResult gr = is_good(I, g, r, gamma);
        if (gr.vacuous) ++vac;
        if (!gr.good) ++bad;
    }
    WilsonInterval wi = wilson_interval(bad, trials);
    BadProbability bp;
    bp.estimate = wi.estimate;
    bp.ci_lo = wi.lo;
    bp.ci_hi = wi.hi;
    bp.trials = trials;
    bp.vacuous = vac;
    return bp;
}

// Smallest k in [1, k_max] such that a^k Q carries mass and is
// (a,b)-doubling. Vacuously empty dilates do not count as doubling; the
// search walks outward until the support is reached.
inline int find_doubling_ancestor(const AtomicMeasure& mu, const Cube& Q, double a, double b,
                                  int k_max) {
    if (!(a > 1.0 && b > 1.0))
        throw std::invalid_argument("find_doubling_ancestor: need a, b > 1");
    double scale = a;
    for (int k = 1; k <= k_max; ++k) {
        Cube qk = Q.dilated(scale);
        double mk = mu.cube_mass(qk);
        if (mk > 0.0 && mu.cube_mass(qk.dilated(a)) <= b * mk) return k;
        scale *= a;
    }
    throw std::runtime_error("find_doubling_ancestor: no doubling dilate within k_max");
}

struct SmallBoundaryPick {
    Cube cube{Point{0.0}, 1.0};
    double constant = std::numeric_limits<double>::infinity();
    double scale = 1.0;
    bool pass = false;
};

// Among lambda*Q for lambda on a uniform grid in [lo, hi], the dilate with
// the smallest measured small-boundary constant; PASS when it meets the
// target.
inline SmallBoundaryPick small_boundary_search(const AtomicMeasure& mu, const Cube& Q,
                                               double C_target, int candidates, double lo = 1.0,
                                               double hi = 1.1) {
    if (candidates < 2) throw std::invalid_argument("small_boundary_search: candidates >= 2");
    SmallBoundaryPick best;
    for (int i = 0; i < candidates; ++i) {
        double lam = lo + (hi - lo) * i / (candidates - 1);
        Cube cand = Q.dilated(lam);
        if (!(mu.cube_mass(cand.dilated(2.0)) > 0.0)) continue;
        double c = small_boundary_constant(mu, cand);
        if (c < best.constant) {
            best.constant = c;
            best.cube = cand;
            best.scale = lam;
        }
    }
    best.pass = best.constant <= C_target;
    return best;
}

}  // namespace nhsq
