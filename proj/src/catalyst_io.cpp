#include "catbranch/catalyst_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace catbranch {

using nlohmann::json;

std::string hex_float(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}

double parse_float(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        char* end = nullptr;
        const double x = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0') throw std::invalid_argument("not a float: " + s);
        return x;
    }
    throw std::invalid_argument("expected a number or hex-float string");
}

namespace {

struct Writer {
    bool hex;
    json num(double x) const { return hex ? json(hex_float(x)) : json(x); }
    json interval(const Interval& w) const { return json::array({num(w.lo), num(w.hi)}); }
};

Interval read_interval(const json& j) { return {parse_float(j.at(0)), parse_float(j.at(1))}; }

std::optional<double> read_period(const json& params) {
    if (params.contains("period") && !params.at("period").is_null()) return parse_float(params.at("period"));
    return std::nullopt;
}

}  // namespace

json to_json(const AnyCatalyst& cat, const JsonOptions& opts) {
    const Writer w{opts.hex_floats};
    return std::visit(
        [&](const auto& c) -> json {
            using T = std::decay_t<decltype(c)>;
            json doc;
            if constexpr (std::is_same_v<T, AtomicCatalyst>) {
                doc["kind"] = "atomic";
                doc["params"] = {{"window", w.interval(c.window())},
                                 {"period", c.period() ? w.num(*c.period()) : json(nullptr)}};
                json atoms = json::array();
                for (const Atom& a : c.atoms()) atoms.push_back(json::array({w.num(a.location), w.num(a.weight)}));
                doc["atoms"] = std::move(atoms);
            } else if constexpr (std::is_same_v<T, LayeredCatalyst>) {
                doc["kind"] = "layered";
                doc["params"] = {{"window", w.interval(c.window)},
                                 {"n_min", c.n_min},
                                 {"period", c.period ? w.num(*c.period) : json(nullptr)}};
                json layers = json::object();
                for (const auto& [n, pts] : c.layers) {
                    json arr = json::array();
                    for (double x : pts) arr.push_back(w.num(x));
                    layers[std::to_string(n)] = std::move(arr);
                }
                doc["layers"] = std::move(layers);
            } else if constexpr (std::is_same_v<T, DensityCatalyst>) {
                doc["kind"] = "density";
                switch (c.kind) {
                    case DensityCatalyst::Kind::parabolic:
                        doc["params"] = {{"type", "parabolic"}, {"q", w.num(c.q)}};
                        break;
                    case DensityCatalyst::Kind::constant:
                        doc["params"] = {{"type", "constant"}, {"level", w.num(c.level)}};
                        break;
                    case DensityCatalyst::Kind::gap:
                        doc["params"] = {{"type", "gap"}, {"gap", w.interval(c.gap_interval)}, {"level", w.num(c.level)}};
                        break;
                }
            } else {
                doc["kind"] = "lattice";
                doc["params"] = {{"dim", c.dim()},
                                 {"radius_exponent", c.radius_exponent()},
                                 {"outside_default", w.num(c.outside_default())}};
                json vals = json::array();
                for (double v : c.values()) vals.push_back(w.num(v));
                doc["values"] = std::move(vals);
            }
            return doc;
        },
        cat);
}

AnyCatalyst catalyst_from_json(const json& doc) {
    const std::string kind = doc.at("kind").get<std::string>();
    const json& params = doc.at("params");
    if (kind == "atomic") {
        std::vector<Atom> atoms;
        for (const json& a : doc.at("atoms")) atoms.push_back({parse_float(a.at(0)), parse_float(a.at(1))});
        return AtomicCatalyst(std::move(atoms), read_interval(params.at("window")), read_period(params));
    }
    if (kind == "layered") {
        LayeredCatalyst c;
        c.window = read_interval(params.at("window"));
        c.n_min = params.at("n_min").get<int>();
        c.period = read_period(params);
        for (const auto& [key, arr] : doc.at("layers").items()) {
            const int n = std::stoi(key);
            if (n < c.n_min) throw std::invalid_argument("layer below n_min");
            auto& pts = c.layers[n];
            for (const json& x : arr) pts.push_back(parse_float(x));
        }
        return c;
    }
    if (kind == "density") {
        const std::string type = params.at("type").get<std::string>();
        if (type == "parabolic") return DensityCatalyst::parabolic(parse_float(params.at("q")));
        if (type == "constant") return DensityCatalyst::constant(parse_float(params.at("level")));
        if (type == "gap") {
            const Interval g = read_interval(params.at("gap"));
            return DensityCatalyst::gap(g.lo, g.hi, parse_float(params.at("level")));
        }
        throw std::invalid_argument("unknown density catalyst type: " + type);
    }
    if (kind == "lattice") {
        std::vector<double> vals;
        for (const json& v : doc.at("values")) vals.push_back(parse_float(v));
        return LatticeCatalyst(params.at("dim").get<int>(), params.at("radius_exponent").get<int>(), std::move(vals),
                               parse_float(params.at("outside_default")));
    }
    throw std::invalid_argument("unknown catalyst kind: " + kind);
}

}  // namespace catbranch
