#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "catbranch/config.hpp"
#include "catbranch/rng.hpp"
#include "catbranch/stats.hpp"

namespace catbranch {

std::string version_string();

/// Fitted constants a, c0, c1 and alpha_hat with their fit diagnostics.
struct Calibration {
    std::optional<double> a;
    std::optional<double> c0;
    std::optional<double> c1;
    std::optional<double> alpha_hat;
    nlohmann::json diagnostics = nlohmann::json::object();

    nlohmann::json to_json() const;
    /// Reads either a calibration manifest (constants under "calibration") or
    /// a bare {a, c0, c1, alpha_hat} object.
    static Calibration from_json(const nlohmann::json& j);
    static Calibration load(const std::filesystem::path& file);
};

/// Explicit params win over the calibration manifest; throws when neither has
/// the constant.
double resolve_constant(const nlohmann::json& params, const Calibration& cal, const std::string& name);

struct RunManifest {
    std::string kind;
    nlohmann::json config = nlohmann::json::object();
    std::string version;
    nlohmann::json calibration = nlohmann::json::object();
    double wall_seconds = 0.0;
    bool complete = true;
    std::vector<stats::Check> checks;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<std::string> artifacts;

    /// Complete and every check passed.
    bool passed() const;
    nlohmann::json to_json() const;
};

nlohmann::json to_json(const stats::Check& c);

/// Seed of an independent sub-experiment.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag);

/// Runs body(i, rng) for i = 0..n-1 with rng = Rng::stream(seed, i) on
/// `threads` workers (0: hardware concurrency). Indices are claimed in order,
/// so a run cut short by the deadline has completed exactly [0, returned).
std::size_t run_replicates(std::size_t n, unsigned threads, std::uint64_t seed,
                           const std::function<void(std::size_t, Rng&)>& body, double budget_seconds = 0.0);

/// Experiment kinds accepted by run_experiment.
const std::vector<std::string>& experiment_kinds();

/// Dispatches on config.kind, writes CSVs and manifest.json into config.out_dir.
RunManifest run_experiment(const ExperimentConfig& config);

/// Fits a, c0, c1 and alpha_hat; writes calibration.csv and manifest.json.
RunManifest run_calibration(const ExperimentConfig& config);
/// Builds schedules over params.epsilons, checks the closed-form identities
/// and hypothesis (b1)/(b2); writes schedule_<model>_<i>.csv.
RunManifest run_schedule(const ExperimentConfig& config);
/// PDE solve and extinction sweep; writes field.csv and pde_summary.json.
RunManifest run_pde(const ExperimentConfig& config);
/// Every experiment kind at desk scale; per-kind overrides come from the
/// config table named after the kind. Each kind writes into out_dir/<kind>.
RunManifest run_validation(const ExperimentConfig& config);

void write_manifest(const RunManifest& m, const std::filesystem::path& dir);
/// name,estimate,se,target,z,exact,pass,note
void write_checks_csv(const std::vector<stats::Check>& checks, const std::filesystem::path& file);

}  // namespace catbranch
