#include "catbranch/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

namespace catbranch {

namespace {

nlohmann::json to_json_node(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = to_json_node(v);
        return out;
    }
    if (const auto* a = node.as_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : *a) out.push_back(to_json_node(v));
        return out;
    }
    if (const auto* v = node.as_string()) return v->get();
    if (const auto* v = node.as_integer()) return v->get();
    if (const auto* v = node.as_floating_point()) return v->get();
    if (const auto* v = node.as_boolean()) return v->get();
    throw std::invalid_argument("config: dates and times are not supported");
}

}  // namespace

nlohmann::json parse_toml(const std::string& text, const std::string& source) {
    try {
        return to_json_node(toml::parse(text, source));
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << source << ":" << e.source().begin.line << ": " << e.description();
        throw std::invalid_argument(os.str());
    }
}

nlohmann::json load_toml(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open config " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_toml(ss.str(), file.string());
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j{{"kind", kind},
                     {"seed", seed},
                     {"replicates", replicates},
                     {"N", N},
                     {"dt", dt},
                     {"threads", threads},
                     {"out", out_dir.string()},
                     {"budget_seconds", budget_seconds},
                     {"params", params}};
    if (calibration) j["calibration"] = calibration->string();
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    static const char* known[] = {"kind", "seed", "replicates", "N", "dt", "threads", "out", "calibration",
                                  "budget_seconds", "params"};
    ExperimentConfig c;
    for (const auto& [key, value] : j.items()) {
        if (std::find(std::begin(known), std::end(known), key) != std::end(known)) continue;
        if (value.is_object()) continue;  // extra tables, e.g. per-experiment overrides
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    c.kind = param_or<std::string>(j, "kind", "");
    if (j.contains("seed")) {
        const auto& s = j["seed"];
        if (s.is_number_integer() && s.get<std::int64_t>() < 0) throw std::invalid_argument("config: seed must be >= 0");
        c.seed = s.get<std::uint64_t>();
    }
    if (j.contains("replicates")) {
        if (j["replicates"].get<std::int64_t>() < 2) throw std::invalid_argument("config: replicates must be >= 2");
        c.replicates = j["replicates"].get<std::size_t>();
    }
    c.N = param_or<int>(j, "N", c.N);
    if (c.N < 1) throw std::invalid_argument("config: N must be >= 1");
    c.dt = param_or<double>(j, "dt", c.dt);
    if (!(c.dt > 0.0)) throw std::invalid_argument("config: dt must be positive");
    c.threads = param_or<unsigned>(j, "threads", c.threads);
    c.out_dir = param_or<std::string>(j, "out", c.out_dir.string());
    if (j.contains("calibration")) c.calibration = j["calibration"].get<std::string>();
    c.budget_seconds = param_or<double>(j, "budget_seconds", 0.0);
    if (j.contains("params")) c.params = j["params"];
    for (const auto& [key, value] : j.items())
        if (value.is_object() && key != "params" && !c.params.contains(key)) c.params[key] = value;
    return c;
}

ExperimentConfig config_from_toml(const std::string& text) { return ExperimentConfig::from_json(parse_toml(text)); }

ExperimentConfig load_config(const std::filesystem::path& file) { return ExperimentConfig::from_json(load_toml(file)); }

double require_number(const nlohmann::json& params, const std::string& key) {
    auto it = params.find(key);
    if (it == params.end() || !it->is_number())
        throw std::invalid_argument("missing required numeric parameter '" + key + "'");
    return it->get<double>();
}

}  // namespace catbranch
