#pragma once

// Whitney decomposition of a bounded open set against the standard dyadic
// lattice: the maximal dyadic cubes Q with closure(10Q) inside the set,
// plus the doubling / small-boundary subfamily selection used by the
// good-lambda argument. All validation is by measurement: the family
// constants (rho, rho0, side ratios, coverage) are computed, not assumed.

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "nhsq/dyadic.hpp"
#include "nhsq/geometry.hpp"
#include "nhsq/measure.hpp"

namespace nhsq {

// An open region given as a finite union of open cubes.
struct Region {
    std::vector<Cube> cubes;
    Cube bounding_box{Point{0.0}, 1.0};

    bool contains(const Point& p) const {
        for (const Cube& u : cubes)
            if (u.contains_open(p)) return true;
        return false;
    }

    // Lower bound for dist(p, complement): the deepest inner margin over
    // the covering cubes (exact for a single cube, conservative for
    // overlapping unions).
    double inner_dist(const Point& p) const {
        double d = 0.0;
        for (const Cube& u : cubes) {
            bool in = u.contains_open(p);
            if (!in) continue;
            double m = std::numeric_limits<double>::infinity();
            for (int i = 0; i < u.dim(); ++i)
                m = std::min({m, p[i] - u.lo(i), u.hi(i) - p[i]});
            d = std::max(d, m);
        }
        return d;
    }

    // Exact dist(p, complement): the smallest face-realized radius at
    // which the closed ball stops being covered (the closed ball touches
    // the complement exactly at the distance).
    double dist_to_complement(const Point& p) const {
        if (!contains(p)) return 0.0;
        std::vector<double> cand;
        for (const Cube& u : cubes)
            for (int i = 0; i < u.dim(); ++i) {
                cand.push_back(std::fabs(p[i] - u.lo(i)));
                cand.push_back(std::fabs(p[i] - u.hi(i)));
            }
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        for (double r : cand) {
            if (r <= 0.0) continue;
            if (!covered_by_open_union(ball(p, r), cubes)) return r;
        }
        return cand.empty() ? 0.0 : cand.back();
    }
};

inline Region region_from_cubes(std::vector<Cube> cubes) {
    if (cubes.empty()) throw std::invalid_argument("Region: empty cube union");
    Region r;
    int n = cubes[0].dim();
    Point lo(n, std::numeric_limits<double>::infinity());
    Point hi(n, -std::numeric_limits<double>::infinity());
    for (const Cube& c : cubes)
        for (int i = 0; i < n; ++i) {
            lo[i] = std::min(lo[i], c.lo(i));
            hi[i] = std::max(hi[i], c.hi(i));
        }
    Point ctr(n);
    double side = 0.0;
    for (int i = 0; i < n; ++i) {
        ctr[i] = 0.5 * (lo[i] + hi[i]);
        side = std::max(side, hi[i] - lo[i]);
    }
    r.cubes = std::move(cubes);
    r.bounding_box = Cube(ctr, side);
    return r;
}

// Superlevel region: each probe point with value > xi is dilated to its
// containing lattice cell of side 2^cell_exp, slightly expanded so that
// adjacent cells overlap and the union is a genuinely open cover.
inline Region region_superlevel(const std::vector<Point>& probes, const std::vector<double>& values,
                                double xi, int cell_exp) {
    if (probes.size() != values.size())
        throw std::invalid_argument("region_superlevel: probe/value count mismatch");
    double s = std::ldexp(1.0, cell_exp);
    std::map<std::vector<std::int64_t>, bool> cells;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        if (!(values[i] > xi)) continue;
        std::vector<std::int64_t> k(probes[i].size());
        for (std::size_t d = 0; d < probes[i].size(); ++d)
            k[d] = static_cast<std::int64_t>(std::floor(probes[i][d] / s));
        cells[k] = true;
    }
    if (cells.empty()) throw std::invalid_argument("region_superlevel: empty superlevel set");
    std::vector<Cube> out;
    for (const auto& [k, _] : cells) {
        Point c(k.size());
        for (std::size_t d = 0; d < k.size(); ++d) c[d] = (k[d] + 0.5) * s;
        out.emplace_back(c, s * (1.0 + std::ldexp(1.0, -10)));
    }
    return region_from_cubes(std::move(out));
}

struct WhitneyCube {
    int e = 0;                       // side = 2^e
    std::vector<std::int64_t> k;     // lower corner at k * 2^e
    Cube box() const {
        double s = std::ldexp(1.0, e);
        Point c(k.size());
        for (std::size_t i = 0; i < k.size(); ++i) c[i] = (static_cast<double>(k[i]) + 0.5) * s;
        return Cube(c, s);
    }
};

struct WhitneyFamily {
    std::vector<WhitneyCube> addr;
    std::vector<Cube> cubes;
    int depth = 0;  // smallest side in the lattice is 2^-depth
};

namespace detail {

inline bool overlaps_open(const Cube& closed_box, const Cube& open_box) {
    for (int i = 0; i < closed_box.dim(); ++i)
        if (closed_box.hi(i) <= open_box.lo(i) || closed_box.lo(i) >= open_box.hi(i)) return false;
    return true;
}

inline bool meets_region(const Cube& closed_box, const Region& region) {
    for (const Cube& u : region.cubes)
        if (overlaps_open(closed_box, u)) return true;
    return false;
}

inline void whitney_recurse(const Region& region, const WhitneyCube& q, int depth,
                            WhitneyFamily& fam, std::vector<Point>& uncovered) {
    Cube box = q.box();
    if (!meets_region(box, region)) return;
    if (covered_by_open_union(box.dilated(10.0), region.cubes)) {
        fam.addr.push_back(q);
        fam.cubes.push_back(box);
        return;
    }
    if (q.e <= -depth) {
        double dlow = region.inner_dist(box.center);
        if (dlow > 11.0 * box.side) uncovered.push_back(box.center);
        return;
    }
    const int n = static_cast<int>(q.k.size());
    for (int combo = 0; combo < (1 << n); ++combo) {
        WhitneyCube c;
        c.e = q.e - 1;
        c.k.resize(n);
        for (int i = 0; i < n; ++i) c.k[i] = 2 * q.k[i] + ((combo >> i) & 1);
        whitney_recurse(region, c, depth, fam, uncovered);
    }
}

}  // namespace detail

// Maximal lattice cubes Q with closure(10Q) inside the region, enumerated
// down to side 2^-depth. Points deeper than 11 * 2^-depth inside the
// region must end up covered; otherwise the depth cannot resolve the
// boundary distance and the call fails.
inline WhitneyFamily whitney_decompose(const Region& region, int depth) {
    if (region.cubes.empty()) throw std::invalid_argument("whitney_decompose: empty region");
    const int n = region.bounding_box.dim();
    double extent = region.bounding_box.side;
    int e0 = static_cast<int>(std::ceil(std::log2(extent))) + 1;
    if (e0 < -depth) e0 = -depth;

    WhitneyFamily fam;
    fam.depth = depth;
    std::vector<Point> uncovered;
    double s0 = std::ldexp(1.0, e0);
    std::vector<std::int64_t> klo(n), khi(n);
    for (int i = 0; i < n; ++i) {
        klo[i] = static_cast<std::int64_t>(std::floor(region.bounding_box.lo(i) / s0));
        khi[i] = static_cast<std::int64_t>(std::floor(region.bounding_box.hi(i) / s0));
    }
    std::vector<std::int64_t> k = klo;
    while (true) {
        WhitneyCube root;
        root.e = e0;
        root.k = k;
        detail::whitney_recurse(region, root, depth, fam, uncovered);
        int a = 0;
        while (a < n && ++k[a] > khi[a]) { k[a] = klo[a]; ++a; }
        if (a == n) break;
    }
    if (!uncovered.empty()) {
        std::ostringstream os;
        os << "whitney_decompose: depth " << depth << " insufficient; " << uncovered.size()
           << " interior points uncovered, first at (";
        for (std::size_t i = 0; i < uncovered[0].size(); ++i)
            os << (i ? "," : "") << uncovered[0][i];
        os << ")";
        throw std::runtime_error(os.str());
    }
    if (fam.cubes.empty())
        throw std::runtime_error(
            "whitney_decompose: depth insufficient, no admissible cube at any level");
    // deterministic order
    std::vector<std::size_t> ord(fam.cubes.size());
    for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
        if (fam.addr[a].e != fam.addr[b].e) return fam.addr[a].e > fam.addr[b].e;
        return fam.addr[a].k < fam.addr[b].k;
    });
    WhitneyFamily out;
    out.depth = depth;
    for (std::size_t i : ord) {
        out.addr.push_back(fam.addr[i]);
        out.cubes.push_back(fam.cubes[i]);
    }
    return out;
}

struct WhitneyReport {
    bool p1_dilates_inside = true;   // closure(10Q) in the region, exact
    double rho_measured = 0.0;       // max over i of 2 dist(c_i, complement)/l_i
    int rho0_measured = 0;           // max number of j with 10Qi meeting 10Qj
    double max_side_ratio = 1.0;     // over meeting pairs
    bool disjoint = true;
    bool maximal = true;             // every parent violates p1
    std::size_t count = 0;
};

inline WhitneyReport validate_whitney(const WhitneyFamily& fam, const Region& region) {
    WhitneyReport rep;
    rep.count = fam.cubes.size();
    for (std::size_t i = 0; i < fam.cubes.size(); ++i) {
        const Cube& q = fam.cubes[i];
        if (!covered_by_open_union(q.dilated(10.0), region.cubes)) rep.p1_dilates_inside = false;
        double dc = region.dist_to_complement(q.center);
        rep.rho_measured = std::max(rep.rho_measured, 2.0 * dc / q.side);
        WhitneyCube parent;
        parent.e = fam.addr[i].e + 1;
        parent.k.resize(fam.addr[i].k.size());
        for (std::size_t d = 0; d < parent.k.size(); ++d)
            parent.k[d] = fam.addr[i].k[d] >> 1;
        if (covered_by_open_union(parent.box().dilated(10.0), region.cubes)) rep.maximal = false;
    }
    for (std::size_t i = 0; i < fam.cubes.size(); ++i) {
        int overlap = 0;
        for (std::size_t j = 0; j < fam.cubes.size(); ++j) {
            if (i == j) continue;
            if (!cubes_disjoint_halfopen(fam.cubes[i], fam.cubes[j])) rep.disjoint = false;
            if (cubes_intersect_closed(fam.cubes[i].dilated(10.0), fam.cubes[j].dilated(10.0))) {
                ++overlap;
                double ratio = fam.cubes[i].side / fam.cubes[j].side;
                if (ratio < 1.0) ratio = 1.0 / ratio;
                rep.max_side_ratio = std::max(rep.max_side_ratio, ratio);
            }
        }
        rep.rho0_measured = std::max(rep.rho0_measured, overlap);
    }
    return rep;
}

struct SubfamilyResult {
    std::vector<Cube> cubes;
    std::vector<std::size_t> source;  // indices into the Whitney family
    double coverage_ratio = 0.0;      // mu(union) / mu(region)
    double coverage_target = 0.0;     // 1/(8 rho0)
    bool coverage_pass = false;
    int skipped = 0;                  // cubes with no admissible dilate
};

// Pairwise disjoint dilates Q_j in [Q_j, 1.1 Q_j], each (a,b)-doubling with
// small boundary constant <= C_small, selected greedily by descending
// mu(1.1 Q_j) with lexicographic tie-break.
inline SubfamilyResult select_doubling_subfamily(const AtomicMeasure& mu, const WhitneyFamily& fam,
                                                 const Region& region, double a, double b,
                                                 double C_small, int rho0, int candidates = 11) {
    std::vector<std::size_t> ord(fam.cubes.size());
    for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
    std::vector<double> key(fam.cubes.size());
    for (std::size_t i = 0; i < fam.cubes.size(); ++i)
        key[i] = mu.cube_mass(fam.cubes[i].dilated(1.1));
    std::sort(ord.begin(), ord.end(), [&](std::size_t x, std::size_t y) {
        if (key[x] != key[y]) return key[x] > key[y];
        if (fam.addr[x].e != fam.addr[y].e) return fam.addr[x].e > fam.addr[y].e;
        return fam.addr[x].k < fam.addr[y].k;
    });

    SubfamilyResult res;
    for (std::size_t i : ord) {
        if (key[i] <= 0.0) continue;
        const Cube& q = fam.cubes[i];
        bool found = false;
        Cube best = q;
        double best_const = std::numeric_limits<double>::infinity();
        for (int c = 0; c < candidates; ++c) {
            double lam = 1.0 + 0.1 * c / (candidates - 1);
            Cube cand = q.dilated(lam);
            bool clear = true;
            for (const Cube& sel : res.cubes)
                if (!cubes_disjoint_halfopen(cand, sel)) { clear = false; break; }
            if (!clear) continue;
            if (!(mu.cube_mass(cand.dilated(2.0)) > 0.0)) continue;
            if (!doubling_check(mu, cand, a, b)) continue;
            double sb = small_boundary_constant(mu, cand);
            if (sb > C_small) continue;
            if (sb < best_const) {
                best_const = sb;
                best = cand;
                found = true;
            }
        }
        if (found) {
            res.cubes.push_back(best);
            res.source.push_back(i);
        } else {
            ++res.skipped;
        }
    }
    double momega = mu.region_mass(region.cubes);
    double msel = 0.0;
    for (const Cube& c : res.cubes) msel += mu.cube_mass(c);
    res.coverage_ratio = momega > 0.0 ? msel / momega : 1.0;
    res.coverage_target = 1.0 / (8.0 * std::max(1, rho0));
    res.coverage_pass = res.coverage_ratio >= res.coverage_target;
    return res;
}

}  // namespace nhsq
