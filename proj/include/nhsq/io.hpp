#pragma once

// File formats. Measures are JSON documents
//   {"dim": n, "atoms": [{"x": [...], "w": real or [re, im]}, ...]}
// and functions {"values": [...]} aligned by atom index. Complex numbers
// serialize as [re, im]. Round-trip is within 1e-15 per coordinate.

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nhsq/geometry.hpp"
#include "nhsq/measure.hpp"

namespace nhsq {

using json = nlohmann::json;

inline cplx parse_complex(const json& j) {
    if (j.is_number()) return cplx(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2) return cplx(j[0].get<double>(), j[1].get<double>());
    throw std::invalid_argument("expected a number or [re, im] pair");
}

inline json dump_complex(const cplx& z) {
    if (z.imag() == 0.0) return json(z.real());
    return json::array({z.real(), z.imag()});
}

inline ComplexMeasure complex_measure_from_json(const json& j) {
    int dim = j.at("dim").get<int>();
    std::vector<Point> pts;
    std::vector<cplx> w;
    for (const json& a : j.at("atoms")) {
        Point p = a.at("x").get<std::vector<double>>();
        if (static_cast<int>(p.size()) != dim)
            throw std::invalid_argument("measure file: atom dimension mismatch");
        pts.push_back(std::move(p));
        w.push_back(parse_complex(a.at("w")));
    }
    return ComplexMeasure(dim, std::move(pts), std::move(w));
}

inline AtomicMeasure measure_from_json(const json& j) {
    ComplexMeasure c = complex_measure_from_json(j);
    std::vector<double> w(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.weight(i).imag() != 0.0 || c.weight(i).real() < 0.0)
            throw std::invalid_argument("measure file: positive measure expected");
        w[i] = c.weight(i).real();
    }
    return AtomicMeasure(c.dim(), c.points(), std::move(w));
}

inline json measure_to_json(const ComplexMeasure& nu) {
    json atoms = json::array();
    for (std::size_t i = 0; i < nu.size(); ++i)
        atoms.push_back({{"x", nu.point(i)}, {"w", dump_complex(nu.weight(i))}});
    return json{{"dim", nu.dim()}, {"atoms", atoms}};
}

inline json measure_to_json(const AtomicMeasure& mu) {
    json atoms = json::array();
    for (std::size_t i = 0; i < mu.size(); ++i)
        atoms.push_back({{"x", mu.point(i)}, {"w", mu.weight(i)}});
    return json{{"dim", mu.dim()}, {"atoms", atoms}};
}

inline SampledFunction function_from_json(const json& j) {
    std::vector<cplx> v;
    for (const json& x : j.at("values")) v.push_back(parse_complex(x));
    return SampledFunction(std::move(v));
}

inline json function_to_json(const SampledFunction& f) {
    json vals = json::array();
    for (const cplx& z : f.values) vals.push_back(dump_complex(z));
    return json{{"values", vals}};
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

inline void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

inline Cube cube_from_json(const json& j) {
    return Cube(j.at("center").get<std::vector<double>>(), j.at("side").get<double>());
}

inline json cube_to_json(const Cube& c) {
    return json{{"center", c.center}, {"side", c.side}};
}

}  // namespace nhsq
