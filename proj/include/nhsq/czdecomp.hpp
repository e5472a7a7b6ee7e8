#pragma once

// Calderon-Zygmund decomposition of a complex measure nu against a
// (possibly non-doubling) positive measure mu at level xi, plus the
// weak-(1,1) harness for the square function. Cube selection works on the
// exact breakpoint set of the two step functions s -> |nu|(sQ_z) and
// s -> mu(2sQ_z), so the selected side s satisfies: every concentric cube
// with side > 2s fails the density test. That yields the eta > 2 balance
// inequality for all eta, not just ladder points.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "nhsq/dyadic.hpp"
#include "nhsq/geometry.hpp"
#include "nhsq/glstar.hpp"
#include "nhsq/measure.hpp"

namespace nhsq {

struct CZResult {
    double xi = 0.0;
    double density_threshold = 0.0;          // xi / 2^(n+1)
    std::vector<Cube> cubes;                 // Q_i
    std::vector<Cube> doubling_cubes;        // R_i, concentric (6, 6^(m+1))-doubling
    std::vector<cplx> phi;                   // phi_i = c_i 1_{R_i}
    std::vector<double> nu_mass_q;           // |nu|(Q_i)
    std::vector<double> beta_norm;           // ||beta_i||
    std::vector<cplx> beta_total;            // beta_i(R^n), zero by construction
    std::vector<int> atom_cube_count;        // per nu-atom: number of Q_i containing it
    // good density nu = f mu off the cubes: value per mu-atom, NaN inside cubes
    std::vector<cplx> density;
};

namespace detail {

// Candidate sides where the predicate |nu|(sQ) > c mu(2sQ) can change,
// plus midpoints and a geometric ladder; exact evaluation at each.
inline std::vector<double> side_candidates(const Point& z, const ComplexMeasure& nu,
                                           const AtomicMeasure& mu, double s_min, double s_max) {
    std::vector<double> cand;
    for (const Point& p : nu.points()) {
        double d = dist_linf(p, z);
        if (d > 0.0) cand.push_back(2.0 * d);
    }
    for (const Point& p : mu.points()) {
        double d = dist_linf(p, z);
        if (d > 0.0) cand.push_back(d);
    }
    double lad = s_min;
    const double ratio = std::pow(2.0, 0.25);
    while (lad <= s_max * ratio) {
        cand.push_back(lad);
        lad *= ratio;
    }
    std::vector<double> out;
    for (double s : cand)
        if (s >= s_min && s <= s_max) out.push_back(s);
    out.push_back(s_min);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    std::vector<double> with_mid;
    for (std::size_t i = 0; i < out.size(); ++i) {
        with_mid.push_back(out[i]);
        if (i + 1 < out.size()) with_mid.push_back(0.5 * (out[i] + out[i + 1]));
    }
    return with_mid;
}

inline double merged_resolution(const ComplexMeasure& nu, const AtomicMeasure& mu, const Point& z) {
    double h = std::numeric_limits<double>::infinity();
    for (const Point& p : nu.points()) {
        double d = dist_linf(p, z);
        if (d > 0.0) h = std::min(h, d);
    }
    for (const Point& p : mu.points()) {
        double d = dist_linf(p, z);
        if (d > 0.0) h = std::min(h, d);
    }
    if (!std::isfinite(h)) h = 1.0;
    return h;
}

}  // namespace detail

inline CZResult cz_decompose(const ComplexMeasure& nu, const AtomicMeasure& mu, double xi,
                             double m, int doubling_kmax = 64) {
    const int n = mu.dim();
    if (nu.dim() != n) throw std::invalid_argument("cz_decompose: dimension mismatch");
    double tv = nu.total_variation();
    double mass = mu.mass();
    if (!(mass > 0.0)) throw std::invalid_argument("cz_decompose: mu has no mass");
    double threshold = std::pow(2.0, n + 1) * tv / mass;
    if (!(xi > threshold))
        throw std::invalid_argument("cz_decompose: xi below the admissible threshold");
    const double c = xi / std::pow(2.0, n + 1);

    CZResult res;
    res.xi = xi;
    res.density_threshold = c;

    // widest scale: beyond it the density test fails by the xi threshold
    double diam = 0.0;
    for (const Point& p : nu.points())
        for (const Point& q : mu.points()) diam = std::max(diam, dist_linf(p, q));
    double s_max = 4.0 * std::max(diam, 1.0);

    struct Candidate {
        std::size_t atom;
        double side;
    };
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        if (std::abs(nu.weight(i)) == 0.0) continue;
        const Point& z = nu.point(i);
        double s_min = 0.25 * detail::merged_resolution(nu, mu, z);
        auto sides = detail::side_candidates(z, nu, mu, s_min, s_max);
        double sel = 0.0;
        for (double s : sides) {
            Cube q(z, s);
            if (nu.variation_on_cube(q) > c * mu.cube_mass(q.dilated(2.0))) sel = s;
        }
        if (sel > 0.0) cands.push_back({i, sel});
    }

    // Besicovitch-style pruning: descending side, keep a cube when its
    // center is not yet covered.
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.side != b.side) return a.side > b.side;
        return a.atom < b.atom;
    });
    for (const Candidate& cd : cands) {
        const Point& z = nu.point(cd.atom);
        bool covered = false;
        for (const Cube& q : res.cubes)
            if (q.contains_halfopen(z)) { covered = true; break; }
        if (!covered) {
            res.cubes.emplace_back(z, cd.side);
            res.nu_mass_q.push_back(nu.variation_on_cube(Cube(z, cd.side)));
        }
    }

    // membership weights w_i at nu-atoms
    res.atom_cube_count.assign(nu.size(), 0);
    for (std::size_t i = 0; i < nu.size(); ++i)
        for (const Cube& q : res.cubes)
            if (q.contains_halfopen(nu.point(i))) ++res.atom_cube_count[i];

    // nu-atoms outside every cube must be absolutely continuous against mu
    std::map<std::vector<double>, std::size_t> mu_index;
    for (std::size_t j = 0; j < mu.size(); ++j)
        mu_index[std::vector<double>(mu.point(j).begin(), mu.point(j).end())] = j;
    res.density.assign(mu.size(), cplx(0.0, 0.0));
    for (std::size_t i = 0; i < nu.size(); ++i) {
        if (res.atom_cube_count[i] > 0) continue;
        if (std::abs(nu.weight(i)) == 0.0) continue;
        auto it = mu_index.find(std::vector<double>(nu.point(i).begin(), nu.point(i).end()));
        if (it == mu_index.end() || mu.weight(it->second) == 0.0) {
            std::ostringstream os;
            os << "cz_decompose: nu not decomposable at scale (atom " << i
               << " carries nu-mass, no mu-mass, and no cube captured it)";
            throw std::runtime_error(os.str());
        }
        res.density[it->second] += nu.weight(i) / mu.weight(it->second);
    }
    for (std::size_t j = 0; j < mu.size(); ++j)
        for (const Cube& q : res.cubes)
            if (q.contains_halfopen(mu.point(j))) {
                res.density[j] = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
                break;
            }

    // R_i and phi_i
    for (std::size_t i = 0; i < res.cubes.size(); ++i) {
        int k = find_doubling_ancestor(mu, res.cubes[i], 6.0, std::pow(6.0, m + 1.0),
                                       doubling_kmax);
        Cube R = res.cubes[i].dilated(std::pow(6.0, k));
        res.doubling_cubes.push_back(R);
        cplx wint = 0.0;
        for (std::size_t a = 0; a < nu.size(); ++a)
            if (res.cubes[i].contains_halfopen(nu.point(a)))
                wint += nu.weight(a) / static_cast<double>(res.atom_cube_count[a]);
        double mR = mu.cube_mass(R);
        res.phi.push_back(wint / mR);
        // beta_i = w_i nu - phi_i mu, merged over atom positions
        cplx total = 0.0;
        double norm = 0.0;
        std::map<std::vector<double>, cplx> net;
        for (std::size_t a = 0; a < nu.size(); ++a)
            if (res.cubes[i].contains_halfopen(nu.point(a)))
                net[std::vector<double>(nu.point(a).begin(), nu.point(a).end())] +=
                    nu.weight(a) / static_cast<double>(res.atom_cube_count[a]);
        for (std::size_t j = 0; j < mu.size(); ++j)
            if (R.contains_halfopen(mu.point(j)))
                net[std::vector<double>(mu.point(j).begin(), mu.point(j).end())] -=
                    res.phi.back() * mu.weight(j);
        for (const auto& [pos, wgt] : net) {
            total += wgt;
            norm += std::abs(wgt);
        }
        res.beta_total.push_back(total);
        res.beta_norm.push_back(norm);
    }
    return res;
}

struct CZValidation {
    bool cz1 = true;   // |nu|(Q_i) > c mu(2Q_i)
    bool cz2 = true;   // |nu|(eta Q_i) <= c mu(2 eta Q_i) for eta > 2
    double cz2_witness_eta = 0.0;
    bool cz3 = true;   // |f| <= xi off the cubes
    double cz3_max_density = 0.0;
    bool cz4 = true;   // beta_i(R^n) = 0 within 1e-12 |nu|(Q_i)
    double cz5_constant = 0.0;  // sup_x sum_i |phi_i(x)| / xi
    double cz6_constant = 0.0;  // max_i mu(R_i) ||phi_i|| / |nu|(Q_i)
    double beta_ratio_max = 0.0;  // max ||beta_i|| / |nu|(Q_i)
    int overlap_max = 0;
    bool pass() const { return cz1 && cz2 && cz3 && cz4; }
};

inline CZValidation validate_cz(const CZResult& r, const ComplexMeasure& nu,
                                const AtomicMeasure& mu) {
    CZValidation v;
    const double c = r.density_threshold;
    double diam = 0.0;
    for (const Point& p : nu.points())
        for (const Point& q : mu.points()) diam = std::max(diam, dist_linf(p, q));

    for (std::size_t i = 0; i < r.cubes.size(); ++i) {
        const Cube& Q = r.cubes[i];
        if (!(nu.variation_on_cube(Q) > c * mu.cube_mass(Q.dilated(2.0)))) v.cz1 = false;

        // eta-breakpoints: the side of eta*Q is eta*l(Q); both step
        // functions change only where an atom crosses a face.
        std::vector<double> etas;
        double eta_cover = 2.0 * (2.0 * diam / Q.side + 1.0);
        for (const Point& p : nu.points()) {
            double e = 2.0 * dist_linf(p, Q.center) / Q.side;
            if (e > 2.0 && e < eta_cover) etas.push_back(e);
        }
        for (const Point& p : mu.points()) {
            double e = dist_linf(p, Q.center) / Q.side;
            if (e > 2.0 && e < eta_cover) etas.push_back(e);
        }
        etas.push_back(eta_cover);
        std::sort(etas.begin(), etas.end());
        std::vector<double> checks;
        double prev = 2.0;
        for (double e : etas) {
            checks.push_back(0.5 * (prev + e));  // interior of each constancy interval
            checks.push_back(e);
            prev = e;
        }
        for (double e : checks) {
            if (!(e > 2.0)) continue;
            Cube qe = Q.dilated(e);
            if (nu.variation_on_cube(qe) > c * mu.cube_mass(qe.dilated(2.0))) {
                v.cz2 = false;
                v.cz2_witness_eta = e;
            }
        }
        if (std::abs(r.beta_total[i]) > 1e-12 * std::max(r.nu_mass_q[i], 1e-300)) v.cz4 = false;
        v.beta_ratio_max = std::max(v.beta_ratio_max, r.beta_norm[i] / r.nu_mass_q[i]);
        double cz6 = mu.cube_mass(r.doubling_cubes[i]) * std::abs(r.phi[i]) / r.nu_mass_q[i];
        v.cz6_constant = std::max(v.cz6_constant, cz6);
    }

    for (std::size_t j = 0; j < mu.size(); ++j) {
        cplx f = r.density[j];
        if (std::isnan(f.real())) continue;
        v.cz3_max_density = std::max(v.cz3_max_density, std::abs(f));
    }
    if (v.cz3_max_density > r.xi) v.cz3 = false;

    // sum_i |phi_i| sampled at every atom position
    auto probe = [&](const Point& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < r.cubes.size(); ++i)
            if (r.doubling_cubes[i].contains_halfopen(x)) s += std::abs(r.phi[i]);
        return s;
    };
    double phisum = 0.0;
    for (const Point& p : mu.points()) phisum = std::max(phisum, probe(p));
    for (const Point& p : nu.points()) phisum = std::max(phisum, probe(p));
    v.cz5_constant = phisum / r.xi;

    for (std::size_t i = 0; i < nu.size(); ++i)
        v.overlap_max = std::max(v.overlap_max, r.atom_cube_count[i]);
    return v;
}

struct Weak11Result {
    double sup_quotient = 0.0;
    double sup_xi = 0.0;
    long excluded_diverged = 0;
    std::vector<std::array<double, 2>> curve;  // (xi, quotient)
};

// sup over xi of xi * mu{ g*(nu) > xi } / ||nu||, with g* evaluated at the
// atoms of mu under the given truncation policy.
inline Weak11Result weak11_harness(const ComplexMeasure& nu, const AtomicMeasure& mu,
                                   const KernelSpec& kern, const OperatorParams& params,
                                   std::vector<double> xi_grid = {}) {
    double tv = nu.total_variation();
    Weak11Result out;
    if (tv == 0.0) return out;

    std::vector<double> vals;
    vals.reserve(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        GValue g = gstar(nu, mu, kern, params, mu.point(i));
        if (g.diverged) {
            ++out.excluded_diverged;
            vals.push_back(-1.0);  // excluded
        } else {
            vals.push_back(g.value);
        }
    }
    if (xi_grid.empty()) {
        double vmax = 0.0, vmin = std::numeric_limits<double>::infinity();
        for (double v : vals)
            if (v > 0.0) {
                vmax = std::max(vmax, v);
                vmin = std::min(vmin, v);
            }
        if (!(vmax > 0.0)) return out;
        vmin = std::max(vmin * 0.5, vmax * 1e-6);
        for (int k = 0; k < 48; ++k)
            xi_grid.push_back(vmin * std::pow(2.0 * vmax / vmin, k / 47.0));
    }
    for (double xi : xi_grid) {
        double mass = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i)
            if (vals[i] > xi) mass += mu.weight(i);
        double q = xi * mass / tv;
        out.curve.push_back({xi, q});
        if (q > out.sup_quotient) {
            out.sup_quotient = q;
            out.sup_xi = xi;
        }
    }
    return out;
}

}  // namespace nhsq
