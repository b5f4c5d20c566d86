#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "catbranch/catalyst.hpp"
#include "catbranch/config.hpp"
#include "catbranch/harness.hpp"

namespace catbranch::detail {

class Stopwatch {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Opens out_dir/name for writing, creating the directory, and records it.
std::ofstream open_artifact(const ExperimentConfig& cfg, RunManifest& m, const std::string& name);

RunManifest start_manifest(const ExperimentConfig& cfg);
/// Writes checks.csv and manifest.json.
void finish_manifest(const ExperimentConfig& cfg, RunManifest& m, const Stopwatch& clock);

std::vector<double> number_list(const nlohmann::json& p, const std::string& key, std::vector<double> fallback);
DensityCatalyst density_from_params(const nlohmann::json& p);
nlohmann::json estimate_json(const stats::Estimate& e);

/// Experiment kinds implemented in experiments.cpp.
RunManifest extinction_curve(const ExperimentConfig& cfg);
RunManifest feller_check(const ExperimentConfig& cfg);
RunManifest localtime_ld(const ExperimentConfig& cfg);
RunManifest gap_stats(const ExperimentConfig& cfg);
RunManifest cluster_stats(const ExperimentConfig& cfg);
RunManifest moment_check(const ExperimentConfig& cfg);
RunManifest good_bad_stage_check(const ExperimentConfig& cfg);
RunManifest nonextinction_control(const ExperimentConfig& cfg);
RunManifest pde_cross_check(const ExperimentConfig& cfg);

}  // namespace catbranch::detail
