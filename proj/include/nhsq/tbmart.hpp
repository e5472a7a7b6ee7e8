#pragma once

// Testing-condition machinery: stopping cubes, transit forests, b-adapted
// martingale differences, the A_QR Schur matrix, Carleson ledgers,
// exceptional sets, the big-piece set G_Q, and the good-lambda table.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "nhsq/dyadic.hpp"
#include "nhsq/geometry.hpp"
#include "nhsq/glstar.hpp"
#include "nhsq/measure.hpp"

namespace nhsq {

namespace detail {

struct CubeKey {
    int level;
    std::vector<std::int64_t> idx;
    bool operator<(const CubeKey& o) const {
        if (level != o.level) return level < o.level;
        return idx < o.idx;
    }
    bool operator==(const CubeKey& o) const { return level == o.level && idx == o.idx; }
};

inline CubeKey key_of(const DyadicCube& c) { return CubeKey{c.level, c.idx}; }

inline bool is_ancestor(const CubeKey& anc, const CubeKey& des) {
    if (anc.level > des.level) return false;
    int shift = des.level - anc.level;
    for (std::size_t i = 0; i < anc.idx.size(); ++i)
        if ((des.idx[i] >> shift) != anc.idx[i]) return false;
    return true;
}

}  // namespace detail

// sigma-average of a sampled function over a cube; count/weight via the
// half-open cell membership.
inline cplx cube_average(const SampledFunction& g, const AtomicMeasure& sigma, const Cube& q) {
    check_bound(g, sigma, "cube_average");
    cplx num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i)
        if (q.contains_halfopen(sigma.point(i))) {
            num += g[i] * sigma.weight(i);
            den += sigma.weight(i);
        }
    if (!(den > 0.0)) throw std::invalid_argument("cube_average: sigma(E) = 0");
    return num / den;
}

struct StoppingFamily {
    std::vector<DyadicCube> cubes;
    double threshold = 0.0;
    std::vector<Cube> boxes() const {
        std::vector<Cube> out;
        out.reserve(cubes.size());
        for (const DyadicCube& c : cubes) out.push_back(c.box());
        return out;
    }
};

// Maximal grid cubes R with sigma(R) > 0 and |<b>_R| < eta; the scan does
// not descend into emitted cubes.
inline StoppingFamily stopping_cubes(const SampledFunction& b, const AtomicMeasure& sigma,
                                     const ShiftedGrid& grid, double eta) {
    check_bound(b, sigma, "stopping_cubes");
    StoppingFamily fam;
    fam.threshold = eta;
    std::vector<DyadicCube> stack{grid.root()};
    while (!stack.empty()) {
        DyadicCube c = stack.back();
        stack.pop_back();
        Cube box = c.box();
        cplx num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < sigma.size(); ++i)
            if (box.contains_halfopen(sigma.point(i))) {
                num += b[i] * sigma.weight(i);
                den += sigma.weight(i);
            }
        if (!(den > 0.0)) continue;
        if (std::abs(num / den) < eta) {
            fam.cubes.push_back(c);
            continue;
        }
        if (c.level < grid.max_depth())
            for (int combo = 0; combo < (1 << grid.dim()); ++combo)
                stack.push_back(c.child(combo));
    }
    std::sort(fam.cubes.begin(), fam.cubes.end());
    return fam;
}

struct TransitForest {
    const ShiftedGrid* grid = nullptr;
    std::vector<DyadicCube> cubes;                 // parent-closed, sorted top-down
    std::set<detail::CubeKey> members;

    bool contains(const DyadicCube& c) const { return members.count(detail::key_of(c)) > 0; }
    bool empty() const { return cubes.empty(); }
};

// D^tr: grid cubes P with sigma(P) != 0 that are not contained in the
// union of the exceptional set and the stopping cubes.
inline TransitForest transit_cubes(const ShiftedGrid& grid, const AtomicMeasure& sigma,
                                   const std::vector<Cube>& exceptional,
                                   const StoppingFamily& stopping) {
    // each deepest-level cell may hold at most one atom
    {
        std::set<std::vector<std::int64_t>> seen;
        std::vector<std::int64_t> idx;
        for (std::size_t i = 0; i < sigma.size(); ++i) {
            if (sigma.weight(i) == 0.0) continue;
            if (!grid.locate(sigma.point(i), grid.max_depth(), idx)) continue;
            if (!seen.insert(idx).second)
                throw std::runtime_error("transit_cubes: grid depth does not resolve the atoms");
        }
    }
    std::vector<Cube> cover = exceptional;
    for (const DyadicCube& t : stopping.cubes) cover.push_back(t.box());

    TransitForest f;
    f.grid = &grid;
    std::vector<DyadicCube> stack{grid.root()};
    while (!stack.empty()) {
        DyadicCube c = stack.back();
        stack.pop_back();
        Cube box = c.box();
        if (!(sigma.cube_mass(box) > 0.0)) continue;
        if (!cover.empty() && covered_by_closed_union(box, cover)) continue;
        f.members.insert(detail::key_of(c));
        f.cubes.push_back(c);
        if (c.level < grid.max_depth())
            for (int combo = 0; combo < (1 << grid.dim()); ++combo)
                stack.push_back(c.child(combo));
    }
    std::sort(f.cubes.begin(), f.cubes.end());
    return f;
}

// Delta_P f, as a function on all sigma-atoms (zero outside P). At the
// root the projection onto b is included, so summing over the forest
// reconstructs f on every atom whose cell chain stays transit.
inline SampledFunction martingale_difference(const SampledFunction& f, const SampledFunction& b,
                                             const AtomicMeasure& sigma, const DyadicCube& P,
                                             const TransitForest& forest) {
    check_bound(f, sigma, "martingale_difference");
    check_bound(b, sigma, "martingale_difference");
    if (!forest.contains(P))
        throw std::invalid_argument("martingale_difference: P is not a transit cube");

    auto ratio_on = [&](const Cube& box) -> cplx {
        cplx fa = 0.0, ba = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < sigma.size(); ++i)
            if (box.contains_halfopen(sigma.point(i))) {
                fa += f[i] * sigma.weight(i);
                ba += b[i] * sigma.weight(i);
                den += sigma.weight(i);
            }
        if (!(den > 0.0)) throw std::invalid_argument("martingale_difference: sigma(P) = 0");
        if (std::abs(ba / den) < 1e-14) {
            std::ostringstream os;
            os << "martingale_difference: <b> = 0 on transit cube (level " << P.level << ")";
            throw std::runtime_error(os.str());
        }
        return fa / ba;  // <f>_E / <b>_E after cancelling sigma(E)
    };

    Cube pbox = P.box();
    cplx rp = ratio_on(pbox);
    SampledFunction out = SampledFunction::constant(sigma.size(), 0.0);

    const int nchild = 1 << sigma.dim();
    bool at_leaf_level = P.level >= P.grid->max_depth();
    for (int combo = 0; combo < (at_leaf_level ? 1 : nchild); ++combo) {
        Cube cbox = at_leaf_level ? pbox : P.child(combo).box();
        bool child_transit = !at_leaf_level && forest.contains(P.child(combo));
        if (child_transit) {
            cplx rc = ratio_on(P.child(combo).box());
            for (std::size_t i = 0; i < sigma.size(); ++i)
                if (cbox.contains_halfopen(sigma.point(i))) out[i] = (rc - rp) * b[i];
        } else {
            for (std::size_t i = 0; i < sigma.size(); ++i)
                if (cbox.contains_halfopen(sigma.point(i))) out[i] = f[i] - rp * b[i];
        }
    }
    if (P.level == 0) {  // root carries the projection term
        for (std::size_t i = 0; i < sigma.size(); ++i)
            if (pbox.contains_halfopen(sigma.point(i))) out[i] += rp * b[i];
    }
    return out;
}

struct ExpandResult {
    std::vector<DyadicCube> cubes;
    std::vector<SampledFunction> diffs;
    double reconstruction_error = 0.0;  // ||f - sum Delta_P f||_2 / ||f||_2
    double bessel_ratio = 0.0;          // sum ||Delta_P f||_2^2 / ||f||_2^2
};

inline ExpandResult expand(const SampledFunction& f, const SampledFunction& b,
                           const AtomicMeasure& sigma, const TransitForest& forest) {
    ExpandResult res;
    SampledFunction total = SampledFunction::constant(sigma.size(), 0.0);
    double bessel = 0.0;
    for (const DyadicCube& P : forest.cubes) {
        SampledFunction d = martingale_difference(f, b, sigma, P, forest);
        double n2 = 0.0;
        for (std::size_t i = 0; i < sigma.size(); ++i) {
            total[i] += d[i];
            n2 += std::norm(d[i]) * sigma.weight(i);
        }
        bessel += n2;
        res.cubes.push_back(P);
        res.diffs.push_back(std::move(d));
    }
    double fn2 = 0.0, err2 = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        fn2 += std::norm(f[i]) * sigma.weight(i);
        err2 += std::norm(f[i] - total[i]) * sigma.weight(i);
    }
    if (fn2 > 0.0) {
        res.reconstruction_error = std::sqrt(err2 / fn2);
        res.bessel_ratio = bessel / fn2;
    }
    return res;
}

// A_QR = l(Q)^(a/2) l(R)^(a/2) D(Q,R)^-(m+a) sigma(Q)^(1/2) sigma(R)^(1/2),
// D(Q,R) = l(Q) + l(R) + d(Q,R).
inline double aqr(const Cube& Q, const Cube& R, double sigmaQ, double sigmaR, double m,
                  double alpha) {
    if (sigmaQ < 0.0 || sigmaR < 0.0) throw std::invalid_argument("aqr: negative masses");
    double D = Q.side + R.side + cube_dist(Q, R);
    return std::pow(Q.side, alpha / 2.0) * std::pow(R.side, alpha / 2.0) *
           std::pow(D, -(m + alpha)) * std::sqrt(sigmaQ) * std::sqrt(sigmaR);
}

struct SchurResult {
    double norm = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Power-iteration estimate of the l2 operator norm of [A_QR] over the
// given cube family. A is symmetric with nonnegative entries, so the
// iteration from the all-ones vector converges to the top eigenvalue.
inline SchurResult schur_norm(const std::vector<std::pair<Cube, double>>& cubes, double m,
                              double alpha, int max_iterations = 200) {
    const std::size_t n = cubes.size();
    if (n == 0) throw std::invalid_argument("schur_norm: need at least one cube");
    std::vector<double> A(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            A[i * n + j] = aqr(cubes[i].first, cubes[j].first, cubes[i].second, cubes[j].second,
                               m, alpha);
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), av(n);
    SchurResult res;
    double prev = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += A[i * n + j] * v[j];
            av[i] = s;
        }
        double nrm = 0.0;
        for (double x : av) nrm += x * x;
        nrm = std::sqrt(nrm);
        res.norm = nrm;  // Rayleigh for the unit vector v
        res.iterations = it + 1;
        if (nrm == 0.0) { res.converged = true; break; }
        for (std::size_t i = 0; i < n; ++i) v[i] = av[i] / nrm;
        if (it > 0 && std::fabs(nrm - prev) <= 1e-6 * std::max(1e-300, nrm)) {
            res.converged = true;
            break;
        }
        prev = nrm;
    }
    return res;
}

struct CarlesonLedger {
    std::vector<std::pair<DyadicCube, double>> entries;  // (transit P in D_w, a_P)
    double carleson_constant = 0.0;
    long good_cubes = 0;
    long straddled = 0;  // good R without an in-grid r-ancestor (should be none)
    long s0_atoms = 0;
};

namespace detail {

// Whitney-region integral over W_R = R x (l(R)/2, min(l(R), l(Q))) of the
// cone-weighted |theta(b sigma)|^2 against d sigma(x) dt/t, with x
// restricted to the complement of S0.
inline double whitney_region_integral(const Cube& R, const std::vector<char>& s0_mask,
                                      const ComplexMeasure& bsigma, const AtomicMeasure& sigma,
                                      const AtomicMeasure& mu, const KernelSpec& kern,
                                      const OperatorParams& params, double lQ) {
    double t_lo = R.side / 2.0;
    double t_hi = std::min(R.side, lQ);
    if (!(t_hi > t_lo)) return 0.0;
    std::vector<double> ts;
    double t = t_lo;
    while (t < t_hi) { ts.push_back(t); t *= params.t_ratio; }
    ts.push_back(t_hi);

    double total = 0.0;
    double mlambda = kern.m * params.lambda;
    for (std::size_t a = 0; a < sigma.size(); ++a) {
        if (!(sigma.weight(a) > 0.0) || s0_mask[a]) continue;
        if (!R.contains_halfopen(sigma.point(a))) continue;
        std::vector<double> Is;
        Is.reserve(ts.size());
        for (double tk : ts)
            Is.push_back(cone_slice(bsigma, nullptr, mu, kern, mlambda, sigma.point(a), tk));
        total += sigma.weight(a) * trapezoid_log(ts, Is, 1);
    }
    return total;
}

}  // namespace detail

// The sequence a_P: for each transit cube P of the shifted grid, the sum
// of Whitney-region integrals over the good reference cubes R whose
// r-generation shifted ancestor is P. Carleson constant measured over all
// grid cubes S with sigma(S) > 0.
inline CarlesonLedger carleson_ledger(const SampledFunction& b, const AtomicMeasure& sigma,
                                      const AtomicMeasure& mu, const ShiftedGrid& grid_w,
                                      const ShiftedGrid& grid0, const Cube& Q,
                                      const KernelSpec& kern, const OperatorParams& params, int r,
                                      double gamma, double xi0) {
    check_bound(b, sigma, "carleson_ledger");
    ComplexMeasure bsigma = density_measure(b, sigma);

    // S0 cutoff from the localized square function of b
    std::vector<char> s0(sigma.size(), 0);
    CarlesonLedger led;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        GValue g = gstar_localized(bsigma, mu, kern, params, Q, sigma.point(i));
        if (!g.diverged && g.value > xi0) {
            s0[i] = 1;
            ++led.s0_atoms;
        }
    }

    std::map<detail::CubeKey, double> acc;
    double lP0 = grid_w.side(0);
    std::vector<DyadicCube> stack{grid0.root()};
    while (!stack.empty()) {
        DyadicCube c = stack.back();
        stack.pop_back();
        Cube box = c.box();
        if (!(sigma.cube_mass(box) > 0.0)) continue;
        if (c.level < grid0.max_depth())
            for (int combo = 0; combo < (1 << grid0.dim()); ++combo)
                stack.push_back(c.child(combo));
        if (!(box.side < std::pow(2.0, -r) * lP0)) continue;
        GoodCubeResult good = is_good(box, grid_w, r, gamma);
        if (!good.good || good.vacuous) continue;
        ++led.good_cubes;
        // shifted ancestor with side 2^r l(R)
        double target = std::pow(2.0, r) * box.side;
        int lvl = static_cast<int>(std::llround(std::log2(grid_w.side(0) / target)));
        std::vector<std::int64_t> idx;
        if (lvl < 0 || !grid_w.locate(box.center, lvl, idx)) { ++led.straddled; continue; }
        Cube anc = grid_w.box(lvl, idx);
        if (!anc.contains_cube_closed(box)) { ++led.straddled; continue; }
        double contrib = detail::whitney_region_integral(box, s0, bsigma, sigma, mu, kern, params,
                                                         Q.side);
        acc[detail::CubeKey{lvl, idx}] += contrib;
    }

    for (const auto& [key, val] : acc) {
        DyadicCube P;
        P.grid = &grid_w;
        P.level = key.level;
        P.idx = key.idx;
        led.entries.emplace_back(P, val);
    }

    // sup_S sum_{P inside S} a_P / sigma(S) over shifted-grid cubes
    std::vector<DyadicCube> sstack{grid_w.root()};
    while (!sstack.empty()) {
        DyadicCube S = sstack.back();
        sstack.pop_back();
        double ms = sigma.cube_mass(S.box());
        if (!(ms > 0.0)) continue;
        detail::CubeKey skey = detail::key_of(S);
        double sum = 0.0;
        for (const auto& [P, aP] : led.entries)
            if (detail::is_ancestor(skey, detail::key_of(P))) sum += aP;
        led.carleson_constant = std::max(led.carleson_constant, sum / ms);
        if (S.level < grid_w.max_depth())
            for (int combo = 0; combo < (1 << grid_w.dim()); ++combo)
                sstack.push_back(S.child(combo));
    }
    return led;
}

// Carleson-embedding probe: sum_P |<f>_P|^2 a_P / ||f||_2^2.
inline double carleson_embedding_ratio(const CarlesonLedger& led, const SampledFunction& f,
                                       const AtomicMeasure& sigma) {
    double num = 0.0;
    for (const auto& [P, aP] : led.entries) {
        Cube box = P.box();
        cplx fa = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < sigma.size(); ++i)
            if (box.contains_halfopen(sigma.point(i))) {
                fa += f[i] * sigma.weight(i);
                den += sigma.weight(i);
            }
        if (den > 0.0) num += std::norm(fa / den) * aP;
    }
    double fn = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) fn += std::norm(f[i]) * sigma.weight(i);
    return fn > 0.0 ? num / fn : 0.0;
}

struct TbAssumptions {
    bool supp_ok = true;
    bool mean_ok = true;     // nu(Q) = mu(Q)
    bool tv_ok = true;       // ||nu|| <= B1 mu(Q)
    bool small_sets_ok = true;
    double worst_small_set = 0.0;  // fractional-knapsack bound on |nu|(A)
    bool pass() const { return supp_ok && mean_ok && tv_ok && small_sets_ok; }
};

// The four admissibility conditions on nu against mu on Q. The small-set
// condition is checked with the exact fractional relaxation: atoms sorted
// by |nu|-to-mu density, filled against the mu-budget eps0 mu(Q).
inline TbAssumptions validate_tb_assumptions(const ComplexMeasure& nu, const AtomicMeasure& mu,
                                             const Cube& Q, double B1, double eps0) {
    TbAssumptions rep;
    double mQ = mu.cube_mass(Q);
    double tv = nu.total_variation();
    for (const Point& p : nu.points())
        if (!Q.contains_halfopen(p)) rep.supp_ok = false;
    if (std::abs(nu.integral_on_cube(Q) - mQ) > 1e-9 * std::max(1.0, mQ)) rep.mean_ok = false;
    if (tv > B1 * mQ * (1.0 + 1e-12)) rep.tv_ok = false;

    std::map<std::vector<double>, std::size_t> mu_index;
    for (std::size_t j = 0; j < mu.size(); ++j)
        mu_index[std::vector<double>(mu.point(j).begin(), mu.point(j).end())] = j;
    struct Item { double nu_w, mu_w; };
    std::vector<Item> items;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        auto it = mu_index.find(std::vector<double>(nu.point(i).begin(), nu.point(i).end()));
        double mw = (it == mu_index.end()) ? 0.0 : mu.weight(it->second);
        items.push_back({std::abs(nu.weight(i)), mw});
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        double ra = a.mu_w > 0.0 ? a.nu_w / a.mu_w : std::numeric_limits<double>::infinity();
        double rb = b.mu_w > 0.0 ? b.nu_w / b.mu_w : std::numeric_limits<double>::infinity();
        return ra > rb;
    });
    double budget = eps0 * mQ, got = 0.0;
    for (const Item& it : items) {
        if (it.mu_w == 0.0) { got += it.nu_w; continue; }
        if (budget <= 0.0) break;
        double take = std::min(1.0, budget / it.mu_w);
        got += take * it.nu_w;
        budget -= take * it.mu_w;
    }
    rep.worst_small_set = got;
    if (got > tv / (32.0 * B1) * (1.0 + 1e-12)) rep.small_sets_ok = false;
    return rep;
}

struct ExceptionalSet {
    std::vector<Cube> h1;        // balls around atoms with large normalized density
    std::vector<Cube> f1;        // maximal reference cubes with sigma > eps0^-1 B1 mu
    std::vector<Cube> f2;        // maximal reference cubes with sigma < delta mu
    std::vector<Cube> uq;
    double p0 = 0.0;
    double eps0 = 0.0;
    double B1 = 1.0;
    double delta = 0.0;  // 1/(32 B1)
    std::vector<double> p_values;  // p(x) per sigma-atom

    std::vector<Cube> all() const {
        std::vector<Cube> out = h1;
        out.insert(out.end(), f1.begin(), f1.end());
        out.insert(out.end(), f2.begin(), f2.end());
        out.insert(out.end(), uq.begin(), uq.end());
        return out;
    }
};

// p(x) = sup over r >= resolution of sigma(B(x,r)) / r^m, evaluated on the
// finite radius set where the ball mass changes.
inline double density_sup(const AtomicMeasure& sigma, const Point& x, double m) {
    double h = sigma.resolution();
    double best = 0.0;
    std::vector<double> radii{h};
    for (const Point& z : sigma.points()) {
        double d = dist_linf(z, x);
        if (d >= h) radii.push_back(d);
    }
    for (double r : radii) best = std::max(best, sigma.ball_mass(x, r) / std::pow(r, m));
    return best;
}

inline ExceptionalSet exceptional_set(const ComplexMeasure& nu, const AtomicMeasure& mu,
                                      const ShiftedGrid& grid0, double m, double B1, double eps0,
                                      double p0, std::vector<Cube> U_Q = {}) {
    AtomicMeasure sigma = nu.variation();
    ExceptionalSet H;
    H.p0 = p0;
    H.eps0 = eps0;
    H.B1 = B1;
    H.delta = 1.0 / (32.0 * B1);
    H.uq = std::move(U_Q);

    double h = sigma.resolution();
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        const Point& x = sigma.point(i);
        double p = density_sup(sigma, x, m);
        H.p_values.push_back(p);
        if (p > p0) {
            // largest radius still violating the density bound
            double rx = 0.0;
            std::vector<double> radii{h};
            for (const Point& z : sigma.points()) {
                double d = dist_linf(z, x);
                if (d >= h) radii.push_back(d);
            }
            for (double r : radii)
                if (sigma.ball_mass(x, r) > p0 * std::pow(r, m)) rx = std::max(rx, r);
            if (rx > 0.0) H.h1.push_back(ball(x, rx));
        }
    }

    auto maximal_scan = [&](auto pred, std::vector<Cube>& out) {
        std::vector<DyadicCube> stack{grid0.root()};
        while (!stack.empty()) {
            DyadicCube c = stack.back();
            stack.pop_back();
            Cube box = c.box();
            double sg = sigma.cube_mass(box), mm = mu.cube_mass(box);
            if (sg == 0.0 && mm == 0.0) continue;
            if (pred(sg, mm)) {
                out.push_back(box);
                continue;
            }
            if (c.level < grid0.max_depth())
                for (int combo = 0; combo < (1 << grid0.dim()); ++combo)
                    stack.push_back(c.child(combo));
        }
    };
    maximal_scan([&](double sg, double mm) { return sg > B1 / eps0 * mm; }, H.f1);
    maximal_scan([&](double sg, double mm) { return sg < H.delta * mm; }, H.f2);
    return H;
}

// Thm-style ball audit: every probed ball with sigma(B_r) > 2^m p0 r^m
// must lie inside the H1 union.
inline bool exceptional_ball_audit(const ExceptionalSet& H, const AtomicMeasure& sigma, double m) {
    double h = sigma.resolution();
    double diam = std::max(sigma.diameter(), h);
    for (const Point& x : sigma.points()) {
        double r = h;
        while (r <= diam * 1.01) {
            if (sigma.ball_mass(x, r) > std::pow(2.0, m) * H.p0 * std::pow(r, m)) {
                if (H.h1.empty() || !covered_by_closed_union(ball(x, r), H.h1)) return false;
            }
            r *= std::pow(2.0, 0.5);
        }
    }
    return true;
}

// set-union sigma-mass of boxes (closed membership for balls is the
// conservative choice here; exceptional mass is an upper bound)
inline double union_mass(const AtomicMeasure& sigma, const std::vector<Cube>& boxes) {
    double s = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i)
        for (const Cube& c : boxes)
            if (c.contains_closed(sigma.point(i))) { s += sigma.weight(i); break; }
    return s;
}

struct BigPieceResult {
    std::vector<double> membership_probability;  // P(x) per sigma-atom
    std::vector<char> in_gq;
    double tau = 0.0;
    double ratio = 0.0;  // sigma(G_Q) / sigma(Q)
    bool bound_ok = false;  // sigma(Q) <= (2-tau)/(1-tau) sigma(G_Q)
    long s0_atoms = 0;
};

inline BigPieceResult big_piece_gq(const AtomicMeasure& sigma, const SampledFunction& b,
                                   const AtomicMeasure& mu, const KernelSpec& kern,
                                   const OperatorParams& params, const Cube& Q,
                                   const std::vector<Cube>& H, double eta, double xi0,
                                   double delta0, long trials, std::uint64_t seed, int depth) {
    if (trials < 100) throw std::invalid_argument("big_piece_gq: need at least 100 trials");
    if (!(delta0 > 0.0 && delta0 < 1.0))
        throw std::invalid_argument("big_piece_gq: delta0 outside (0,1) is degenerate");
    double delta1 = (1.0 + delta0) / 2.0;
    double tau = (1.0 - delta1) / 2.0;

    BigPieceResult res;
    res.tau = tau;
    ComplexMeasure bsigma = density_measure(b, sigma);
    std::vector<char> s0(sigma.size(), 0);
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        GValue g = gstar_localized(bsigma, mu, kern, params, Q, sigma.point(i));
        if (!g.diverged && g.value > xi0) {
            s0[i] = 1;
            ++res.s0_atoms;
        }
    }

    std::vector<long> hits(sigma.size(), 0);
    ShiftedGrid probe = reference_grid(Q, depth);
    for (long t = 0; t < trials; ++t) {
        Rng rng(substream_seed(seed, static_cast<std::uint64_t>(t)));
        Point w = sample_shift(rng, probe.N(), sigma.dim());
        ShiftedGrid gw(Q, w, depth);
        StoppingFamily Tw = stopping_cubes(b, sigma, gw, eta);
        std::vector<Cube> tboxes = Tw.boxes();
        for (std::size_t i = 0; i < sigma.size(); ++i) {
            const Point& x = sigma.point(i);
            if (!Q.contains_halfopen(x) || s0[i]) continue;
            bool excluded = false;
            for (const Cube& c : H)
                if (c.contains_closed(x)) { excluded = true; break; }
            if (!excluded)
                for (const Cube& c : tboxes)
                    if (c.contains_halfopen(x)) { excluded = true; break; }
            if (!excluded) ++hits[i];
        }
    }

    double sQ = sigma.cube_mass(Q), sG = 0.0;
    res.in_gq.assign(sigma.size(), 0);
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        double p = static_cast<double>(hits[i]) / static_cast<double>(trials);
        res.membership_probability.push_back(p);
        if (p > tau) {
            res.in_gq[i] = 1;
            sG += sigma.weight(i);
        }
    }
    res.ratio = sQ > 0.0 ? sG / sQ : 0.0;
    res.bound_ok = sQ <= (2.0 - tau) / (1.0 - tau) * sG * (1.0 + 1e-12);
    return res;
}

struct TestingConditionResult {
    double sup = 0.0;
    double sup_zeta = 0.0;
    long excluded_diverged = 0;
    std::vector<std::array<double, 2>> curve;  // (zeta, zeta^s mu{...}/||nu||)
};

// sup over zeta of zeta^s mu{x in Q \ U_Q : g*_Q(nu_Q)(x) > zeta} / ||nu_Q||.
inline TestingConditionResult testing_condition(const ComplexMeasure& nu_Q,
                                                const AtomicMeasure& mu, const Cube& Q,
                                                const std::vector<Cube>& U_Q, double s, double B1,
                                                const KernelSpec& kern,
                                                const OperatorParams& params,
                                                std::vector<double> zeta_grid = {}) {
    double tv = nu_Q.total_variation();
    if (!(tv > 0.0)) return {};
    double uq_mass = 0.0;
    AtomicMeasure var = nu_Q.variation();
    for (std::size_t i = 0; i < var.size(); ++i)
        for (const Cube& c : U_Q)
            if (c.contains_closed(var.point(i))) { uq_mass += var.weight(i); break; }
    if (uq_mass > tv / (16.0 * B1) * (1.0 + 1e-12))
        throw std::invalid_argument("testing_condition: |nu_Q|(U_Q) exceeds ||nu_Q||/(16 B1)");

    TestingConditionResult out;
    std::vector<double> vals(mu.size(), -1.0);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const Point& x = mu.point(i);
        if (!Q.contains_halfopen(x)) continue;
        bool inU = false;
        for (const Cube& c : U_Q)
            if (c.contains_closed(x)) { inU = true; break; }
        if (inU) continue;
        GValue g = gstar_localized(nu_Q, mu, kern, params, Q, x);
        if (g.diverged) {
            ++out.excluded_diverged;
            continue;
        }
        vals[i] = g.value;
    }
    if (zeta_grid.empty()) {
        double vmax = 0.0, vmin = std::numeric_limits<double>::infinity();
        for (double v : vals)
            if (v > 0.0) { vmax = std::max(vmax, v); vmin = std::min(vmin, v); }
        if (!(vmax > 0.0)) return out;
        vmin = std::max(vmin * 0.5, vmax * 1e-6);
        for (int k = 0; k < 48; ++k)
            zeta_grid.push_back(vmin * std::pow(2.0 * vmax / vmin, k / 47.0));
    }
    for (double z : zeta_grid) {
        double mass = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i)
            if (vals[i] > z) mass += mu.weight(i);
        double q = std::pow(z, s) * mass / tv;
        out.curve.push_back({z, q});
        if (q > out.sup) {
            out.sup = q;
            out.sup_zeta = z;
        }
    }
    return out;
}

struct GoodLambdaRow {
    double eps = 0.0;
    double delta = 0.0;
    double worst_fraction = 0.0;
    bool na = true;
};

// For each (eps, delta): the worst over xi of
// mu{g* > (1+eps) xi, M f <= delta xi} / mu{g* > xi}.
inline std::vector<GoodLambdaRow> good_lambda_harness(const SampledFunction& f,
                                                      const AtomicMeasure& mu,
                                                      const KernelSpec& kern,
                                                      const OperatorParams& params,
                                                      const std::vector<double>& eps_grid,
                                                      const std::vector<double>& delta_grid,
                                                      std::vector<double> xi_grid = {}) {
    if (!(params.t_lo > 0.0))
        throw std::invalid_argument("good_lambda_harness: requires a positive truncation t0");
    std::vector<double> g(mu.size()), M(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        g[i] = gstar_truncated(f, mu, kern, params, mu.point(i)).value;
        M[i] = maximal_function(f, mu, mu.point(i));
    }
    if (xi_grid.empty()) {
        double vmax = 0.0, vmin = std::numeric_limits<double>::infinity();
        for (double v : g)
            if (v > 0.0) { vmax = std::max(vmax, v); vmin = std::min(vmin, v); }
        if (vmax > 0.0) {
            vmin = std::max(vmin * 0.5, vmax * 1e-4);
            for (int k = 0; k < 24; ++k)
                xi_grid.push_back(vmin * std::pow(0.999 * vmax / vmin, k / 23.0));
        }
    }
    std::vector<GoodLambdaRow> table;
    for (double eps : eps_grid)
        for (double delta : delta_grid) {
            GoodLambdaRow row;
            row.eps = eps;
            row.delta = delta;
            for (double xi : xi_grid) {
                double denom = 0.0, numer = 0.0;
                for (std::size_t i = 0; i < mu.size(); ++i) {
                    if (g[i] > xi) denom += mu.weight(i);
                    if (g[i] > (1.0 + eps) * xi && M[i] <= delta * xi) numer += mu.weight(i);
                }
                if (denom > 0.0) {
                    row.na = false;
                    row.worst_fraction = std::max(row.worst_fraction, numer / denom);
                }
            }
            table.push_back(row);
        }
    return table;
}

}  // namespace nhsq
