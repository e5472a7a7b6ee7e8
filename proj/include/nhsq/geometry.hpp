#pragma once

// Axis-aligned geometry under the l-infinity metric. Balls are cubes:
// B(x,r) is the closed cube of side 2r centered at x. Cubes used as point
// sets are half-open products [c_i - l/2, c_i + l/2) unless a closed
// variant is requested explicitly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace nhsq {

using Point = std::vector<double>;

inline double dist_linf(const Point& a, const Point& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dist_linf: dimension mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
    return d;
}

struct Cube {
    Point center;
    double side = 0.0;

    Cube() = default;
    Cube(Point c, double s) : center(std::move(c)), side(s) {
        if (side <= 0.0) throw std::invalid_argument("Cube: side must be positive");
    }

    int dim() const { return static_cast<int>(center.size()); }
    double lo(int i) const { return center[i] - side / 2.0; }
    double hi(int i) const { return center[i] + side / 2.0; }

    // aQ: same center, side scaled by a.
    Cube dilated(double a) const { return Cube(center, a * side); }

    bool contains_halfopen(const Point& p) const {
        for (int i = 0; i < dim(); ++i)
            if (p[i] < lo(i) || p[i] >= hi(i)) return false;
        return true;
    }
    bool contains_closed(const Point& p) const {
        for (int i = 0; i < dim(); ++i)
            if (p[i] < lo(i) || p[i] > hi(i)) return false;
        return true;
    }
    bool contains_open(const Point& p) const {
        for (int i = 0; i < dim(); ++i)
            if (p[i] <= lo(i) || p[i] >= hi(i)) return false;
        return true;
    }
    // closure(other) inside the closure of *this
    bool contains_cube_closed(const Cube& o) const {
        for (int i = 0; i < dim(); ++i)
            if (o.lo(i) < lo(i) || o.hi(i) > hi(i)) return false;
        return true;
    }
};

// The closed ball B(x,r) in l-infinity as a cube.
inline Cube ball(const Point& x, double r) { return Cube(x, 2.0 * r); }

// l-infinity distance between the closures of two boxes.
inline double cube_dist(const Cube& a, const Cube& b) {
    double d = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        double g = std::max({0.0, a.lo(i) - b.hi(i), b.lo(i) - a.hi(i)});
        d = std::max(d, g);
    }
    return d;
}

inline bool cubes_intersect_closed(const Cube& a, const Cube& b) {
    for (int i = 0; i < a.dim(); ++i)
        if (a.hi(i) < b.lo(i) || b.hi(i) < a.lo(i)) return false;
    return true;
}

inline bool cubes_disjoint_halfopen(const Cube& a, const Cube& b) {
    for (int i = 0; i < a.dim(); ++i)
        if (a.hi(i) <= b.lo(i) || b.hi(i) <= a.lo(i)) return true;
    return false;
}

// Distance from a point to the topological boundary of a cube.
inline double dist_to_boundary(const Point& p, const Cube& q) {
    bool inside = true;
    for (int i = 0; i < q.dim(); ++i)
        if (p[i] < q.lo(i) || p[i] > q.hi(i)) { inside = false; break; }
    if (inside) {
        double d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < q.dim(); ++i)
            d = std::min({d, p[i] - q.lo(i), q.hi(i) - p[i]});
        return d;
    }
    double d = 0.0;
    for (int i = 0; i < q.dim(); ++i)
        d = std::max({d, q.lo(i) - p[i], p[i] - q.hi(i)});
    return d;
}

// dist(closure(I), boundary(J)) in l-infinity.
// Cases: I crosses or touches the boundary -> 0; I strictly inside J ->
// the inner margin; I outside -> box-to-box distance.
inline double dist_cube_to_boundary(const Cube& I, const Cube& J) {
    bool inside = true;
    for (int i = 0; i < I.dim(); ++i)
        if (I.lo(i) < J.lo(i) || I.hi(i) > J.hi(i)) { inside = false; break; }
    if (inside) {
        double d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < I.dim(); ++i)
            d = std::min({d, I.lo(i) - J.lo(i), J.hi(i) - I.hi(i)});
        return d;
    }
    if (cubes_intersect_closed(I, J)) return 0.0;  // touches or crosses the boundary
    return cube_dist(I, J);
}

namespace detail {
// Per-axis sample coordinates of the arrangement induced by the union
// boxes, restricted to [lo, hi]: the breakpoints themselves plus the
// midpoint of every consecutive pair. Membership in an axis-aligned box
// is constant on each arrangement cell, so testing these points decides
// coverage exactly.
inline std::vector<double> arrangement_samples(double lo, double hi,
                                               const std::vector<double>& breaks) {
    std::vector<double> bp{lo, hi};
    for (double b : breaks)
        if (b > lo && b < hi) bp.push_back(b);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    std::vector<double> out;
    for (std::size_t i = 0; i < bp.size(); ++i) {
        out.push_back(bp[i]);
        if (i + 1 < bp.size()) out.push_back(0.5 * (bp[i] + bp[i + 1]));
    }
    return out;
}
}  // namespace detail

// Is the closed box K covered by the union of the open interiors of `cover`?
inline bool covered_by_open_union(const Cube& K, const std::vector<Cube>& cover) {
    const int n = K.dim();
    std::vector<std::vector<double>> axes(n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> breaks;
        for (const Cube& u : cover) { breaks.push_back(u.lo(i)); breaks.push_back(u.hi(i)); }
        axes[i] = detail::arrangement_samples(K.lo(i), K.hi(i), breaks);
    }
    std::vector<std::size_t> ix(n, 0);
    Point p(n);
    while (true) {
        for (int i = 0; i < n; ++i) p[i] = axes[i][ix[i]];
        bool in = false;
        for (const Cube& u : cover)
            if (u.contains_open(p)) { in = true; break; }
        if (!in) return false;
        int a = 0;
        while (a < n && ++ix[a] == axes[a].size()) { ix[a] = 0; ++a; }
        if (a == n) break;
    }
    return true;
}

// Same test with closed cover elements (p on a face of a cover box counts
// as covered). Used for containment in unions of closed sets.
inline bool covered_by_closed_union(const Cube& K, const std::vector<Cube>& cover) {
    const int n = K.dim();
    std::vector<std::vector<double>> axes(n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> breaks;
        for (const Cube& u : cover) { breaks.push_back(u.lo(i)); breaks.push_back(u.hi(i)); }
        axes[i] = detail::arrangement_samples(K.lo(i), K.hi(i), breaks);
    }
    std::vector<std::size_t> ix(n, 0);
    Point p(n);
    while (true) {
        for (int i = 0; i < n; ++i) p[i] = axes[i][ix[i]];
        bool in = false;
        for (const Cube& u : cover)
            if (u.contains_closed(p)) { in = true; break; }
        if (!in) return false;
        int a = 0;
        while (a < n && ++ix[a] == axes[a].size()) { ix[a] = 0; ++a; }
        if (a == n) break;
    }
    return true;
}

}  // namespace nhsq
