#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "catbranch/config.hpp"
#include "catbranch/harness.hpp"

using namespace catbranch;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("catbranch_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("harness_cli") {

TEST_CASE("toml config") {
    const auto cfg = config_from_toml(R"(
kind = "moment_check"
seed = 42
replicates = 300
N = 50
dt = 0.05
out = "somewhere"

[params]
level = 2.0
t_grid = [1.0, 2.0]

[experiments.gap_stats]
samples = 10
)");
    CHECK(cfg.kind == "moment_check");
    CHECK(cfg.seed == 42);
    CHECK(cfg.replicates == 300);
    CHECK(cfg.N == 50);
    CHECK(cfg.dt == 0.05);
    CHECK(cfg.out_dir == fs::path("somewhere"));
    CHECK(cfg.params["level"].get<double>() == 2.0);
    CHECK(cfg.params["t_grid"].size() == 2);
    CHECK(cfg.params["experiments"]["gap_stats"]["samples"].get<int>() == 10);

    const auto back = ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
}

TEST_CASE("toml errors") {
    CHECK_THROWS(config_from_toml("seed = \n"));
    CHECK_THROWS(config_from_toml("sede = 3\n"));
    CHECK_THROWS(config_from_toml("seed = -1\n"));
    CHECK_THROWS(config_from_toml("replicates = 1\n"));
    CHECK_THROWS(config_from_toml("dt = 0.0\n"));
    CHECK_THROWS(config_from_toml("N = 0\n"));
    try {
        parse_toml("a = 1\nb = [1, \n", "cfg.toml");
        FAIL("expected a parse error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("cfg.toml") != std::string::npos);
    }
    CHECK_THROWS(load_config("/nonexistent/config.toml"));
}

TEST_CASE("parameter lookup") {
    const nlohmann::json p{{"x", 1.5}, {"s", "text"}};
    CHECK(require_number(p, "x") == 1.5);
    CHECK_THROWS(require_number(p, "y"));
    CHECK_THROWS(require_number(p, "s"));
    CHECK(param_or(p, "y", 3.0) == 3.0);
    CHECK(param_or<std::string>(p, "s", "") == "text");
}

TEST_CASE("calibration constants") {
    Calibration cal;
    CHECK_THROWS(resolve_constant(nlohmann::json::object(), cal, "c0"));
    cal.c0 = 0.25;
    CHECK(resolve_constant(nlohmann::json::object(), cal, "c0") == 0.25);
    CHECK(resolve_constant({{"c0", 0.5}}, cal, "c0") == 0.5);
    CHECK_THROWS(resolve_constant(nlohmann::json::object(), cal, "c1"));

    const auto round = Calibration::from_json({{"calibration", cal.to_json()}});
    REQUIRE(round.c0);
    CHECK(*round.c0 == 0.25);
    CHECK_FALSE(round.a);
    const auto bare = Calibration::from_json({{"a", 0.4}, {"alpha_hat", 0.1}});
    CHECK(*bare.a == 0.4);
    CHECK(*bare.alpha_hat == 0.1);

    // schedules need the calibrated constants
    ExperimentConfig cfg;
    cfg.out_dir = scratch("nocal");
    cfg.params = {{"model", "parabolic"}, {"alpha", 0.4}, {"beta", 0.5}};
    CHECK_THROWS(run_schedule(cfg));
    cfg.params["c0"] = 1.0;
    CHECK(run_schedule(cfg).passed());
}

TEST_CASE("sub seeds") {
    CHECK(sub_seed(1, 1) != sub_seed(1, 2));
    CHECK(sub_seed(1, 1) != sub_seed(2, 1));
    CHECK(sub_seed(5, 9) == sub_seed(5, 9));
}

TEST_CASE("replicate runner") {
    auto collect = [](unsigned threads) {
        std::vector<double> out(200);
        const auto done = run_replicates(200, threads, 99, [&](std::size_t i, Rng& rng) { out[i] = rng.uniform(); });
        CHECK(done == 200);
        return out;
    };
    const auto one = collect(1);
    CHECK(collect(4) == one);
    CHECK(collect(1) == one);
    CHECK(one[0] != one[1]);

    // a deadline leaves a completed prefix
    std::atomic<std::size_t> calls{0};
    const auto done = run_replicates(
        1000000, 2, 1, [&](std::size_t, Rng&) { ++calls; }, 1e-3);
    CHECK(done <= 1000000);
    CHECK(calls.load() >= done);

    CHECK_THROWS(run_replicates(10, 2, 1, [](std::size_t i, Rng&) {
        if (i == 3) throw std::runtime_error("boom");
    }));
}

TEST_CASE("unknown kind") {
    ExperimentConfig cfg;
    cfg.kind = "no_such_kind";
    cfg.out_dir = scratch("unknown");
    CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
    cfg.kind = "extinction_curve";
    cfg.params = {{"model", "nope"}};
    CHECK_THROWS(run_experiment(cfg));
    CHECK(experiment_kinds().size() == 9);
}

TEST_CASE("byte-identical artifacts") {
    ExperimentConfig cfg;
    cfg.kind = "moment_check";
    cfg.seed = 77;
    cfg.replicates = 60;
    cfg.N = 40;
    cfg.dt = 0.05;
    const fs::path da = scratch("det_a"), db = scratch("det_b"), dc = scratch("det_c");
    cfg.threads = 3;
    cfg.out_dir = da;
    const auto a = run_experiment(cfg);
    cfg.threads = 1;
    cfg.out_dir = db;
    const auto b = run_experiment(cfg);
    for (const char* name : {"moment_check.csv", "checks.csv"}) CHECK(slurp(da / name) == slurp(db / name));
    CHECK(a.to_json()["summary"] == b.to_json()["summary"]);
    CHECK(fs::exists(db / "manifest.json"));

    cfg.seed = 78;
    cfg.out_dir = dc;
    run_experiment(cfg);
    CHECK(slurp(dc / "moment_check.csv") != slurp(db / "moment_check.csv"));
}

TEST_CASE("manifest contents") {
    ExperimentConfig cfg;
    cfg.kind = "cluster_stats";
    cfg.seed = 3;
    cfg.out_dir = scratch("manifest");
    cfg.params = {{"trials", 2000}, {"ns", {1}}, {"ms", {1}}, {"zetas", {0.5}}};
    const auto m = run_experiment(cfg);
    CHECK(m.passed());
    const auto j = nlohmann::json::parse(slurp(cfg.out_dir / "manifest.json"));
    CHECK(j["kind"] == "cluster_stats");
    CHECK(j["version"] == version_string());
    CHECK(j["config"]["seed"] == 3);
    CHECK(j.contains("wall_clock_seconds"));
    CHECK(j["checks"].size() == m.checks.size());
    const auto checks = slurp(cfg.out_dir / "checks.csv");
    CHECK(checks.rfind("name,estimate,se,target,z,exact,pass,note\n", 0) == 0);
    CHECK(slurp(cfg.out_dir / "cluster_stats.csv").rfind("d,n,m,zeta,p_complement,se,bound,c_hat,exact\n", 0) == 0);
}

}
