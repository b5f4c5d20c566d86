#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

namespace catbranch {

/// One experiment run. Everything model-specific lives in `params`.
struct ExperimentConfig {
    std::string kind;
    std::uint64_t seed = 1;
    std::size_t replicates = 2000;
    int N = 500;
    double dt = 0.01;
    unsigned threads = 0;  // 0: hardware concurrency
    std::filesystem::path out_dir = "out";
    std::optional<std::filesystem::path> calibration;  // calibration manifest
    double budget_seconds = 0.0;                        // 0: unlimited
    nlohmann::json params = nlohmann::json::object();

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Parses TOML text. Top-level keys fill the fields above; the [params]
/// table, and any other table, is carried as JSON.
nlohmann::json parse_toml(const std::string& text, const std::string& source = "config");
nlohmann::json load_toml(const std::filesystem::path& file);
ExperimentConfig config_from_toml(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& file);

/// Required parameter lookup: throws naming the key when it is absent.
double require_number(const nlohmann::json& params, const std::string& key);

template <class T>
T param_or(const nlohmann::json& params, const std::string& key, T fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->template get<T>();
}

}  // namespace catbranch
