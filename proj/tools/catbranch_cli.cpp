#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "catbranch/config.hpp"
#include "catbranch/harness.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> replicates;
    std::optional<unsigned> threads;
    std::optional<int> N;
    std::optional<double> dt;
    std::optional<double> budget;
    std::optional<std::string> calibration;
    std::vector<std::string> params;
};

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("-c,--config", o.config, "TOML config file")->check(CLI::ExistingFile);
    app->add_option("--seed", o.seed, "master seed");
    app->add_option("-o,--out", o.out, "output directory");
    app->add_option("--replicates", o.replicates, "number of replicates");
    app->add_option("--threads", o.threads, "worker threads (0: all cores)");
    app->add_option("-N,--resolution", o.N, "particles per unit mass");
    app->add_option("--dt", o.dt, "motion time step");
    app->add_option("--budget", o.budget, "wall-clock budget in seconds");
    app->add_option("--calibration", o.calibration, "calibration manifest.json");
    app->add_option("-p,--param", o.params, "params override key=value (value parsed as JSON when possible)");
}

catbranch::ExperimentConfig build_config(const Overrides& o, const std::string& forced_kind) {
    catbranch::ExperimentConfig cfg;
    if (!o.config.empty()) cfg = catbranch::load_config(o.config);
    if (!forced_kind.empty()) cfg.kind = forced_kind;
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.out_dir = *o.out;
    if (o.replicates) cfg.replicates = *o.replicates;
    if (o.threads) cfg.threads = *o.threads;
    if (o.N) cfg.N = *o.N;
    if (o.dt) cfg.dt = *o.dt;
    if (o.budget) cfg.budget_seconds = *o.budget;
    if (o.calibration) cfg.calibration = *o.calibration;
    for (const std::string& kv : o.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--param expects key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        auto parsed = nlohmann::json::parse(value, nullptr, false);
        cfg.params[key] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
    }
    // round-trip through the validating reader
    return catbranch::ExperimentConfig::from_json(cfg.to_json());
}

int report(const catbranch::RunManifest& m, const catbranch::ExperimentConfig& cfg) {
    for (const auto& c : m.checks)
        std::printf("%s  %s  estimate=%.6g se=%.3g target=%.6g%s%s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    c.estimate, c.se, c.target, c.note.empty() ? "" : "  ", c.note.c_str());
    std::printf("%s: %s (%zu checks, %.1f s%s) -> %s\n", m.kind.c_str(), m.passed() ? "PASSED" : "FAILED",
                m.checks.size(), m.wall_seconds, m.complete ? "" : ", incomplete", cfg.out_dir.string().c_str());
    return m.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Catalytic branching simulation harness"};
    app.set_version_flag("--version", catbranch::version_string());
    app.require_subcommand(1);

    Overrides o;
    std::string kind;
    auto* run = app.add_subcommand("run", "run one experiment kind");
    run->add_option("-k,--kind", kind, "experiment kind (overrides the config)");
    add_common(run, o);
    auto* calibrate = app.add_subcommand("calibrate", "fit the constants a, c0, c1 and alpha_hat");
    add_common(calibrate, o);
    auto* validate = app.add_subcommand("validate", "run every experiment kind at desk scale");
    add_common(validate, o);
    auto* schedule = app.add_subcommand("schedule", "build and check stage schedules");
    add_common(schedule, o);
    auto* pde = app.add_subcommand("pde", "solve the log-Laplace equation");
    add_common(pde, o);
    auto* list = app.add_subcommand("list", "list experiment kinds");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        for (const auto& k : catbranch::experiment_kinds()) std::cout << k << '\n';
        return 0;
    }
    try {
        catbranch::ExperimentConfig cfg;
        catbranch::RunManifest m;
        if (run->parsed()) {
            cfg = build_config(o, kind);
            if (cfg.kind.empty()) throw std::invalid_argument("run: no experiment kind (use --kind or set kind in the config)");
            m = catbranch::run_experiment(cfg);
        } else if (calibrate->parsed()) {
            cfg = build_config(o, "calibrate");
            m = catbranch::run_calibration(cfg);
        } else if (validate->parsed()) {
            cfg = build_config(o, "validate");
            m = catbranch::run_validation(cfg);
        } else if (schedule->parsed()) {
            cfg = build_config(o, "schedule");
            m = catbranch::run_schedule(cfg);
        } else {
            cfg = build_config(o, "pde");
            m = catbranch::run_pde(cfg);
        }
        return report(m, cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
