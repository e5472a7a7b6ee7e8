#pragma once

// Atomic measures and functions sampled on their atoms. A measure is a
// finite list of weighted point atoms; every integral in the toolkit is an
// exact finite sum over atoms. The resolution h (minimum pairwise atom
// distance) is the scale below which an atomic measure stops obeying a
// power bound; callers that need scale-restricted semantics clamp at h.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "nhsq/geometry.hpp"

namespace nhsq {

using cplx = std::complex<double>;

class AtomicMeasure {
  public:
    AtomicMeasure() = default;
    AtomicMeasure(int dim, std::vector<Point> pts, std::vector<double> weights)
        : dim_(dim), pts_(std::move(pts)), w_(std::move(weights)) {
        if (pts_.size() != w_.size())
            throw std::invalid_argument("AtomicMeasure: atom/weight count mismatch");
        for (const Point& p : pts_)
            if (static_cast<int>(p.size()) != dim_)
                throw std::invalid_argument("AtomicMeasure: atom dimension mismatch");
        for (double x : w_)
            if (!(x >= 0.0)) throw std::invalid_argument("AtomicMeasure: negative weight");
        recompute_resolution();
    }

    int dim() const { return dim_; }
    std::size_t size() const { return pts_.size(); }
    const std::vector<Point>& points() const { return pts_; }
    const std::vector<double>& weights() const { return w_; }
    const Point& point(std::size_t i) const { return pts_[i]; }
    double weight(std::size_t i) const { return w_[i]; }

    // Minimum pairwise atom distance; 1 by convention when < 2 atoms.
    double resolution() const { return res_; }

    double mass() const {
        double s = 0.0;
        for (double x : w_) s += x;
        return s;
    }

    // Closed-ball mass: atoms z with |z - x|_inf <= r.
    double ball_mass(const Point& x, double r) const {
        if (!(r > 0.0)) throw std::invalid_argument("ball_mass: r must be positive");
        double s = 0.0;
        for (std::size_t i = 0; i < pts_.size(); ++i)
            if (dist_linf(pts_[i], x) <= r) s += w_[i];
        return s;
    }

    // Half-open cube mass.
    double cube_mass(const Cube& q) const {
        double s = 0.0;
        for (std::size_t i = 0; i < pts_.size(); ++i)
            if (q.contains_halfopen(pts_[i])) s += w_[i];
        return s;
    }

    double region_mass(const std::vector<Cube>& open_union) const {
        double s = 0.0;
        for (std::size_t i = 0; i < pts_.size(); ++i)
            for (const Cube& u : open_union)
                if (u.contains_open(pts_[i])) { s += w_[i]; break; }
        return s;
    }

    double diameter() const {
        double d = 0.0;
        for (std::size_t i = 0; i < pts_.size(); ++i)
            for (std::size_t j = i + 1; j < pts_.size(); ++j)
                d = std::max(d, dist_linf(pts_[i], pts_[j]));
        return d;
    }

    // Smallest closed bounding cube of the support (side >= minside).
    Cube bounding_cube(double minside = 1.0) const {
        if (pts_.empty()) return Cube(Point(dim_, 0.0), minside);
        Point lo = pts_[0], hi = pts_[0];
        for (const Point& p : pts_)
            for (int i = 0; i < dim_; ++i) {
                lo[i] = std::min(lo[i], p[i]);
                hi[i] = std::max(hi[i], p[i]);
            }
        Point c(dim_);
        double side = minside;
        for (int i = 0; i < dim_; ++i) {
            c[i] = 0.5 * (lo[i] + hi[i]);
            side = std::max(side, hi[i] - lo[i]);
        }
        return Cube(c, side);
    }

  private:
    void recompute_resolution() {
        res_ = 1.0;
        if (pts_.size() >= 2) {
            res_ = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < pts_.size(); ++i)
                for (std::size_t j = i + 1; j < pts_.size(); ++j)
                    res_ = std::min(res_, dist_linf(pts_[i], pts_[j]));
            if (!(res_ > 0.0))
                throw std::invalid_argument("AtomicMeasure: coincident atoms (resolution 0)");
        }
    }

    int dim_ = 1;
    std::vector<Point> pts_;
    std::vector<double> w_;
    double res_ = 1.0;
};

class ComplexMeasure {
  public:
    ComplexMeasure() = default;
    ComplexMeasure(int dim, std::vector<Point> pts, std::vector<cplx> weights)
        : dim_(dim), pts_(std::move(pts)), w_(std::move(weights)) {
        if (pts_.size() != w_.size())
            throw std::invalid_argument("ComplexMeasure: atom/weight count mismatch");
        for (const Point& p : pts_)
            if (static_cast<int>(p.size()) != dim_)
                throw std::invalid_argument("ComplexMeasure: atom dimension mismatch");
    }

    int dim() const { return dim_; }
    std::size_t size() const { return pts_.size(); }
    const std::vector<Point>& points() const { return pts_; }
    const std::vector<cplx>& weights() const { return w_; }
    const Point& point(std::size_t i) const { return pts_[i]; }
    cplx weight(std::size_t i) const { return w_[i]; }

    double total_variation() const {
        double s = 0.0;
        for (const cplx& z : w_) s += std::abs(z);
        return s;
    }

    cplx total() const {
        cplx s = 0.0;
        for (const cplx& z : w_) s += z;
        return s;
    }

    // |nu|: the variation measure (weights |w_i|).
    AtomicMeasure variation() const {
        std::vector<double> aw(w_.size());
        for (std::size_t i = 0; i < w_.size(); ++i) aw[i] = std::abs(w_[i]);
        return AtomicMeasure(dim_, pts_, aw);
    }

    double variation_on_cube(const Cube& q) const {
        double s = 0.0;
        for (std::size_t i = 0; i < pts_.size(); ++i)
            if (q.contains_halfopen(pts_[i])) s += std::abs(w_[i]);
        return s;
    }

    cplx integral_on_cube(const Cube& q) const {
        cplx s = 0.0;
        for (std::size_t i = 0; i < pts_.size(); ++i)
            if (q.contains_halfopen(pts_[i])) s += w_[i];
        return s;
    }

  private:
    int dim_ = 1;
    std::vector<Point> pts_;
    std::vector<cplx> w_;
};

// f*mu as a complex measure (atoms of mu weighted by f(z)*mu_z).
struct SampledFunction {
    std::vector<cplx> values;

    SampledFunction() = default;
    explicit SampledFunction(std::vector<cplx> v) : values(std::move(v)) {}
    static SampledFunction constant(std::size_t n, cplx c) {
        return SampledFunction(std::vector<cplx>(n, c));
    }
    std::size_t size() const { return values.size(); }
    cplx operator[](std::size_t i) const { return values[i]; }
    cplx& operator[](std::size_t i) { return values[i]; }
};

inline void check_bound(const SampledFunction& f, const AtomicMeasure& mu, const char* where) {
    if (f.size() != mu.size())
        throw std::invalid_argument(std::string(where) + ": function not bound to this measure");
}

inline ComplexMeasure density_measure(const SampledFunction& f, const AtomicMeasure& mu) {
    check_bound(f, mu, "density_measure");
    std::vector<cplx> w(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) w[i] = f[i] * mu.weight(i);
    return ComplexMeasure(mu.dim(), mu.points(), w);
}

inline double lp_norm(const SampledFunction& f, const AtomicMeasure& mu, double p) {
    check_bound(f, mu, "lp_norm");
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1 (or infinity)");
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i)
            if (mu.weight(i) > 0.0) m = std::max(m, std::abs(f[i]));
        return m;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        s += std::pow(std::abs(f[i]), p) * mu.weight(i);
    return std::pow(s, 1.0 / p);
}

// Exact superlevel masses mu{|f| > xi} on a strictly increasing grid.
inline std::vector<std::pair<double, double>> distribution(const SampledFunction& f,
                                                           const AtomicMeasure& mu,
                                                           const std::vector<double>& xi_grid) {
    check_bound(f, mu, "distribution");
    for (std::size_t k = 1; k < xi_grid.size(); ++k)
        if (!(xi_grid[k] > xi_grid[k - 1]))
            throw std::invalid_argument("distribution: xi grid must be strictly increasing");
    std::vector<std::pair<double, double>> out;
    out.reserve(xi_grid.size());
    for (double xi : xi_grid) {
        double m = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i)
            if (std::abs(f[i]) > xi) m += mu.weight(i);
        out.emplace_back(xi, m);
    }
    return out;
}

// Centered cube maximal function: sup over the finite radius set
// {|x - z| : z atom} u {h} of the closed-ball averages of |f|.
// Radius 0 (x at an atom) means the one-point average at x.
inline double maximal_function(const SampledFunction& f, const AtomicMeasure& mu, const Point& x) {
    check_bound(f, mu, "maximal_function");
    if (mu.size() == 0) return 0.0;
    std::vector<double> radii;
    radii.reserve(mu.size() + 1);
    for (std::size_t i = 0; i < mu.size(); ++i) radii.push_back(dist_linf(mu.point(i), x));
    radii.push_back(mu.resolution());
    double best = 0.0;
    for (double r : radii) {
        double m = 0.0, num = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i)
            if (dist_linf(mu.point(i), x) <= r) {
                m += mu.weight(i);
                num += std::abs(f[i]) * mu.weight(i);
            }
        if (m > 0.0) best = std::max(best, num / m);
    }
    return best;
}

inline bool doubling_check(const AtomicMeasure& mu, const Cube& q, double a, double b) {
    return mu.cube_mass(q.dilated(a)) <= b * mu.cube_mass(q);
}

// max over xi in the grid of mu{x in 2Q : dist(x, dQ) <= xi*l(Q)} / (xi * mu(2Q)).
// An empty grid defaults to dyadic {2^-j} down to the resolution scale.
inline double small_boundary_constant(const AtomicMeasure& mu, const Cube& q,
                                      std::vector<double> xi_grid = {}) {
    double m2q = mu.cube_mass(q.dilated(2.0));
    if (!(m2q > 0.0)) throw std::invalid_argument("small_boundary_constant: mu(2Q) = 0");
    if (xi_grid.empty()) {
        double xi = 1.0;
        double floor_xi = std::min(1.0, mu.resolution() / q.side);
        while (xi >= floor_xi) {
            xi_grid.push_back(xi);
            xi *= 0.5;
        }
    }
    double best = 0.0;
    Cube q2 = q.dilated(2.0);
    for (double xi : xi_grid) {
        if (!(xi > 0.0 && xi <= 1.0))
            throw std::invalid_argument("small_boundary_constant: xi must lie in (0,1]");
        double shell = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i)
            if (q2.contains_halfopen(mu.point(i)) &&
                dist_to_boundary(mu.point(i), q) <= xi * q.side)
                shell += mu.weight(i);
        best = std::max(best, shell / (xi * m2q));
    }
    return best;
}

// sup over sampled (x over atoms, r geometric in [r_lo, r_hi]) of
// mu(B(x,r)) / r^m. Errors out below the resolution scale, where point
// atoms break any power bound.
inline double power_bound_constant(const AtomicMeasure& mu, double m, double r_lo, double r_hi,
                                   int sample_count) {
    if (r_lo < mu.resolution())
        throw std::invalid_argument(
            "power_bound_constant: r_lo below resolution; atoms break the power bound there");
    if (!(r_hi > r_lo)) throw std::invalid_argument("power_bound_constant: need r_hi > r_lo");
    if (sample_count < 2) sample_count = 2;
    double best = 0.0;
    double ratio = std::pow(r_hi / r_lo, 1.0 / (sample_count - 1));
    for (const Point& x : mu.points()) {
        double r = r_lo;
        for (int k = 0; k < sample_count; ++k) {
            best = std::max(best, mu.ball_mass(x, r) / std::pow(r, m));
            r *= ratio;
        }
    }
    return best;
}

}  // namespace nhsq
