#include "catbranch/harness.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "catbranch/motion.hpp"
#include "catbranch/pde.hpp"
#include "catbranch/schedules.hpp"
#include "harness_detail.hpp"

#ifndef CATBRANCH_VERSION
#define CATBRANCH_VERSION "0.0.0"
#endif

namespace catbranch {

std::string version_string() { return CATBRANCH_VERSION; }

// --- calibration record --------------------------------------------------------

nlohmann::json Calibration::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    if (a) j["a"] = *a;
    if (c0) j["c0"] = *c0;
    if (c1) j["c1"] = *c1;
    if (alpha_hat) j["alpha_hat"] = *alpha_hat;
    j["diagnostics"] = diagnostics;
    return j;
}

Calibration Calibration::from_json(const nlohmann::json& doc) {
    const nlohmann::json& j = doc.contains("calibration") ? doc["calibration"] : doc;
    Calibration c;
    auto read = [&](const char* key, std::optional<double>& slot) {
        if (j.contains(key) && j[key].is_number()) slot = j[key].get<double>();
    };
    read("a", c.a);
    read("c0", c.c0);
    read("c1", c.c1);
    read("alpha_hat", c.alpha_hat);
    if (j.contains("diagnostics")) c.diagnostics = j["diagnostics"];
    return c;
}

Calibration Calibration::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open calibration manifest " + file.string());
    return from_json(nlohmann::json::parse(in));
}

double resolve_constant(const nlohmann::json& params, const Calibration& cal, const std::string& name) {
    if (params.contains(name)) return require_number(params, name);
    const std::optional<double>* slot = name == "a"           ? &cal.a
                                        : name == "c0"        ? &cal.c0
                                        : name == "c1"        ? &cal.c1
                                        : name == "alpha_hat" ? &cal.alpha_hat
                                                              : nullptr;
    if (slot && slot->has_value()) return **slot;
    throw std::invalid_argument("constant '" + name +
                                "' is not set: run `calibrate` and pass its manifest, or set it under [params]");
}

// --- manifest ------------------------------------------------------------------

nlohmann::json to_json(const stats::Check& c) {
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    nlohmann::json j{{"name", c.name},   {"estimate", num(c.estimate)}, {"se", num(c.se)}, {"target", num(c.target)},
                     {"z", num(c.z)},    {"exact", c.exact},            {"pass", c.pass}};
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

bool RunManifest::passed() const {
    if (!complete) return false;
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json checks_json = nlohmann::json::array();
    for (const auto& c : checks) checks_json.push_back(catbranch::to_json(c));
    return {{"kind", kind},
            {"version", version},
            {"config", config},
            {"calibration", calibration},
            {"wall_clock_seconds", wall_seconds},
            {"complete", complete},
            {"passed", passed()},
            {"checks", checks_json},
            {"summary", summary},
            {"artifacts", artifacts}};
}

void write_manifest(const RunManifest& m, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "manifest.json");
    out << std::setw(2) << m.to_json() << '\n';
}

void write_checks_csv(const std::vector<stats::Check>& checks, const std::filesystem::path& file) {
    std::ofstream out(file);
    out << "name,estimate,se,target,z,exact,pass,note\n" << std::setprecision(10);
    for (const auto& c : checks)
        out << '"' << c.name << "\"," << c.estimate << ',' << c.se << ',' << c.target << ',' << c.z << ','
            << (c.exact ? 1 : 0) << ',' << (c.pass ? 1 : 0) << ",\"" << c.note << "\"\n";
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) {
    // splitmix64 finalizer of seed + golden-ratio multiple of the tag
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::size_t run_replicates(std::size_t n, unsigned threads, std::uint64_t seed,
                           const std::function<void(std::size_t, Rng&)>& body, double budget_seconds) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(budget_seconds);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        while (!stop.load()) {
            if (budget_seconds > 0.0 && std::chrono::steady_clock::now() > deadline) {
                stop = true;
                break;
            }
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                Rng rng = Rng::stream(seed, i);
                body(i, rng);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
                stop = true;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return std::min(next.load(), n);
}

// --- shared helpers --------------------------------------------------------------

namespace detail {

std::ofstream open_artifact(const ExperimentConfig& cfg, RunManifest& m, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(cfg.out_dir / name);
    if (!out) throw std::runtime_error("cannot write " + (cfg.out_dir / name).string());
    out << std::setprecision(10);
    m.artifacts.push_back(name);
    return out;
}

RunManifest start_manifest(const ExperimentConfig& cfg) {
    RunManifest m;
    m.kind = cfg.kind;
    m.config = cfg.to_json();
    m.version = version_string();
    if (cfg.calibration) m.calibration = Calibration::load(*cfg.calibration).to_json();
    return m;
}

void finish_manifest(const ExperimentConfig& cfg, RunManifest& m, const Stopwatch& clock) {
    std::filesystem::create_directories(cfg.out_dir);
    write_checks_csv(m.checks, cfg.out_dir / "checks.csv");
    m.artifacts.push_back("checks.csv");
    m.wall_seconds = clock.seconds();
    write_manifest(m, cfg.out_dir);
}

std::vector<double> number_list(const nlohmann::json& p, const std::string& key, std::vector<double> fallback) {
    if (!p.contains(key)) return fallback;
    return p[key].get<std::vector<double>>();
}

DensityCatalyst density_from_params(const nlohmann::json& p) {
    const auto kind = param_or<std::string>(p, "catalyst", param_or<std::string>(p, "model", "parabolic"));
    if (kind == "parabolic") return DensityCatalyst::parabolic(param_or(p, "q", 2.0));
    if (kind == "constant") return DensityCatalyst::constant(param_or(p, "level", 1.0));
    if (kind == "gap")
        return DensityCatalyst::gap(param_or(p, "gap_lo", -1.0), param_or(p, "gap_hi", 1.0), param_or(p, "level", 1.0));
    throw std::invalid_argument("unknown density catalyst '" + kind + "'");
}

nlohmann::json estimate_json(const stats::Estimate& e) { return {{"value", e.value}, {"se", e.se}, {"exact", e.exact}}; }

}  // namespace detail

using detail::open_artifact;
using detail::start_manifest;
using detail::finish_manifest;

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{"extinction_curve", "feller_check",        "localtime_ld",
                                                "gap_stats",        "cluster_stats",       "moment_check",
                                                "good_bad_stage_check", "nonextinction_control", "pde_cross_check"};
    return kinds;
}

RunManifest run_experiment(const ExperimentConfig& cfg) {
    if (cfg.kind == "extinction_curve") return detail::extinction_curve(cfg);
    if (cfg.kind == "feller_check") return detail::feller_check(cfg);
    if (cfg.kind == "localtime_ld") return detail::localtime_ld(cfg);
    if (cfg.kind == "gap_stats") return detail::gap_stats(cfg);
    if (cfg.kind == "cluster_stats") return detail::cluster_stats(cfg);
    if (cfg.kind == "moment_check") return detail::moment_check(cfg);
    if (cfg.kind == "good_bad_stage_check") return detail::good_bad_stage_check(cfg);
    if (cfg.kind == "nonextinction_control") return detail::nonextinction_control(cfg);
    if (cfg.kind == "pde_cross_check") return detail::pde_cross_check(cfg);
    throw std::invalid_argument("unknown experiment kind '" + cfg.kind + "'");
}

// --- calibrate -----------------------------------------------------------------

RunManifest run_calibration(const ExperimentConfig& cfg) {
    detail::Stopwatch clock;
    RunManifest m = start_manifest(cfg);
    m.kind = "calibrate";
    const auto& p = cfg.params;
    Calibration cal;
    auto csv = open_artifact(cfg, m, "calibration.csv");
    csv << "constant,value,se,method\n";

    // a = E sup_{[0,1]} W / 2
    Rng ra = Rng::stream(sub_seed(cfg.seed, 1), 0);
    const auto a = calibrate_half_mean_sup(param_or(p, "sup_dt", 1e-3),
                                           param_or<std::size_t>(p, "sup_paths", 20000), ra);
    cal.a = a.value;
    cal.diagnostics["a"] = detail::estimate_json(a);
    csv << "a," << a.value << ',' << a.se << ",half mean supremum\n";
    m.checks.push_back(stats::check_equal("a vs sqrt(2/pi)/2", a, 0.5 * std::sqrt(2.0 / std::numbers::pi)));

    // c0 from the occupation large deviations of [-1, 1]
    Rng rc0 = Rng::stream(sub_seed(cfg.seed, 2), 0);
    const auto times = detail::number_list(p, "ld_times", {4.0, 6.0, 8.0});
    const auto ld = calibrate_occupation_ld(times, param_or(p, "ld_dt", 2e-3),
                                            param_or<std::size_t>(p, "ld_paths", 20000), rc0);
    cal.c0 = ld.c0;
    nlohmann::json probs = nlohmann::json::array();
    for (const auto& e : ld.probabilities) probs.push_back(detail::estimate_json(e));
    cal.diagnostics["c0"] = {{"times", ld.times}, {"probabilities", probs}, {"slope", ld.fit.slope},
                             {"intercept", ld.fit.intercept}, {"r2", ld.fit.r2}};
    csv << "c0," << ld.c0 << ",,occupation large deviations (-slope)\n";
    m.checks.push_back(stats::check_true("c0 fit R^2 >= 0.9", ld.fit.r2 >= 0.9));
    m.checks.push_back(stats::check_true("c0 > 0", ld.c0 > 0.0));

    // c1 from sums of dwell local times
    Rng rc1 = Rng::stream(sub_seed(cfg.seed, 3), 0);
    std::vector<int> ks;
    for (double k : detail::number_list(p, "sum_ks", {20.0, 40.0})) ks.push_back(static_cast<int>(k));
    const auto sum = calibrate_sum_ld(a.value, ks, param_or(p, "sum_dt", 0.5),
                                      param_or<std::size_t>(p, "sum_samples", 300000), rc1);
    cal.c1 = sum.c1;
    nlohmann::json sprobs = nlohmann::json::array();
    for (const auto& e : sum.probabilities) sprobs.push_back(detail::estimate_json(e));
    cal.diagnostics["c1"] = {{"ks", sum.ks}, {"probabilities", sprobs}, {"slope", sum.fit.slope}};
    csv << "c1," << sum.c1 << ",,sum large deviations (min -log p / 2k)\n";
    m.checks.push_back(stats::check_true("c1 > 0", sum.c1 > 0.0));

    // alpha_hat: walk on the worst periodic pattern of m low sites then one high site
    const int mlen = param_or(p, "cluster_m", 2);
    const auto walk_times = detail::number_list(p, "walk_times", {8.0, 16.0, 32.0});
    const auto walks = param_or<std::size_t>(p, "walks", 20000);
    const std::int64_t period = mlen + 1;
    auto outside = [period](const Site& s) { return ((s[0] % period) + period) % period == period - 1; };
    std::vector<std::vector<double>> fractions(walk_times.size());
    Rng rw = Rng::stream(sub_seed(cfg.seed, 4), 0);
    const Site start{static_cast<std::int32_t>(mlen / 2), 0, 0};
    for (std::size_t w = 0; w < walks; ++w)
        for (std::size_t j = 0; j < walk_times.size(); ++j) {
            const auto path = random_walk_path(start, 1, 0.0, walk_times[j], rw);
            fractions[j].push_back(occupation_time(path, outside) / walk_times[j]);
        }
    const auto long_run = stats::mean(fractions.back());
    const double alpha_hat = 0.5 / static_cast<double>(period);
    cal.alpha_hat = alpha_hat;
    std::vector<double> lt, lp;
    nlohmann::json wprobs = nlohmann::json::array();
    for (std::size_t j = 0; j < walk_times.size(); ++j) {
        std::size_t below = 0;
        for (double f : fractions[j]) below += f <= alpha_hat;
        const auto e = stats::proportion(below, fractions[j].size());
        wprobs.push_back(detail::estimate_json(e));
        if (e.value > 0.0) {
            lt.push_back(walk_times[j]);
            lp.push_back(std::log(e.value));
        }
    }
    nlohmann::json adiag{{"m", mlen}, {"times", walk_times}, {"probabilities", wprobs},
                         {"long_run_fraction", detail::estimate_json(long_run)}};
    if (lt.size() >= 2) {
        const auto fit = stats::linear_fit(lt, lp);
        adiag["decay_rate"] = -fit.slope;
        m.checks.push_back(stats::check_true("alpha_hat tail decays in t", fit.slope < 0.0));
    }
    cal.diagnostics["alpha_hat"] = adiag;
    csv << "alpha_hat," << alpha_hat << ",,half the long-run fraction 1/(m+1) outside the low cluster\n";
    m.checks.push_back(stats::check_equal("outside fraction vs 1/(m+1)", long_run, 1.0 / static_cast<double>(period),
                                          3.0, 0.05));

    m.calibration = cal.to_json();
    finish_manifest(cfg, m, clock);
    return m;
}

// --- schedule ----------------------------------------------------------------------

namespace {

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        e = std::max(e, std::abs(a[i] - b[i]) / std::max(std::abs(a[i]), std::abs(b[i])));
    return e;
}

}  // namespace

RunManifest run_schedule(const ExperimentConfig& cfg) {
    detail::Stopwatch clock;
    RunManifest m = start_manifest(cfg);
    m.kind = "schedule";
    const auto& p = cfg.params;
    const Calibration cal = cfg.calibration ? Calibration::load(*cfg.calibration) : Calibration{};
    const auto model = param_or<std::string>(p, "model", "parabolic");
    // the lattice model is indexed by N instead of epsilon
    const auto epsilons = model == "lattice" ? detail::number_list(p, "first_ns", detail::number_list(p, "epsilons", {2, 4, 6}))
                                             : detail::number_list(p, "epsilons", {0.2, 0.1, 0.05});
    const int n_max = param_or(p, "n_max", 60);
    const double tol = 1e-12;

    std::vector<StageSchedule> built;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        const double eps = epsilons[i];
        StageSchedule s;
        std::vector<double> ratio_target;
        double tail = 0.0;  // declared T_inf minus the last stored T_{n+1}
        if (model == "parabolic") {
            ParabolicParams pp;
            pp.alpha = require_number(p, "alpha");
            pp.beta = require_number(p, "beta");
            pp.q = param_or(p, "q", 2.0);
            pp.epsilon = eps;
            pp.c0 = resolve_constant(p, cal, "c0");
            pp.n_max = n_max;
            s = parabolic_schedule(pp, param_or(p, "validate", true));
            ratio_target.assign(s.size() - 1, std::exp(1.0 + pp.beta + pp.alpha * pp.q));
            tail = std::exp(-pp.beta * (n_max + 1)) / (eps * (1.0 - std::exp(-pp.beta)));
        } else if (model == "dense_point") {
            DensePointParams dp;
            dp.alpha = require_number(p, "alpha");
            dp.beta = require_number(p, "beta");
            dp.epsilon = eps;
            dp.first_n = param_or(p, "first_n", 0);
            dp.a = resolve_constant(p, cal, "a");
            dp.c0 = resolve_constant(p, cal, "c0");
            dp.c1 = resolve_constant(p, cal, "c1");
            dp.n_max = n_max;
            s = dense_point_schedule(dp);
            ratio_target.assign(s.size() - 1, 2.0);
        } else if (model == "lattice") {
            LatticeParams lp;
            // epsilon enters only through N; each listed N gives one schedule
            lp.first_n = static_cast<int>(eps);
            lp.dim = param_or(p, "dim", 1);
            lp.alpha_hat = resolve_constant(p, cal, "alpha_hat");
            lp.n_max = n_max;
            s = lattice_schedule(lp);
            ratio_target.assign(s.size() - 1, std::ldexp(1.0, lp.dim + 3));
            tail = std::ldexp(1.0, -n_max);
        } else {
            throw std::invalid_argument("unknown schedule model '" + model + "'");
        }

        std::vector<double> quotient, ratios;
        for (std::size_t k = 0; k < s.size(); ++k) quotient.push_back(s.M[k] / s.xi[k]);
        for (std::size_t k = 0; k + 1 < s.size(); ++k) ratios.push_back(s.M[k] / s.M[k + 1]);
        const std::string tag = model + " eps=" + (model == "lattice" ? std::to_string(s.first_n) : std::to_string(eps));
        m.checks.push_back(stats::check_within("delta = M/xi " + tag, max_rel_error(s.delta, quotient), 0.0, tol));
        m.checks.push_back(stats::check_within("M_n/M_{n+1} " + tag, max_rel_error(ratios, ratio_target), 0.0, tol));
        bool increasing = true, positive = true;
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (k > 0 && !(s.T[k] >= s.T[k - 1])) increasing = false;
            if (!(s.M[k] > 0 && s.xi[k] > 0 && s.delta[k] > 0 && std::isfinite(s.log_lambda[k]))) positive = false;
        }
        m.checks.push_back(stats::check_true("T_n non-decreasing " + tag, increasing));
        m.checks.push_back(stats::check_true("entries positive " + tag, positive));
        const double t_end = s.T.back() + (model == "parabolic"   ? std::exp(-param_or(p, "beta", 0.0) * s.n.back()) / eps
                                           : model == "lattice" ? std::ldexp(1.0, -s.n.back())
                                                                : 0.0);
        if (model == "dense_point") {
            m.checks.push_back(stats::check_true("sup T_n <= T_inf " + tag, s.T.back() <= s.t_infinity));
        } else {
            m.checks.push_back(
                stats::check_within("T_inf = sum of increments " + tag, (t_end + tail - s.t_infinity) / s.t_infinity, 0.0, tol));
        }
        built.push_back(s);

        auto out = open_artifact(cfg, m, "schedule_" + model + "_" + std::to_string(i) + ".csv");
        write_schedule_csv(out, s);
        rows.push_back({{"epsilon", s.epsilon}, {"N", s.first_n}, {"t_infinity", s.t_infinity},
                        {"series_sum", s.series_sum()}, {"stages", s.size()}});
    }

    if (built.size() >= 2) {
        const auto rep = verify_hypothesis_b(built, param_or(p, "m_floor", 1e-9));
        m.checks.push_back(stats::check_true("hypothesis (b1)", rep.b1));
        m.checks.push_back(stats::check_true("hypothesis (b2)", rep.b2));
        nlohmann::json hr = nlohmann::json::array();
        for (const auto& r : rep.rows)
            hr.push_back({{"epsilon", r.epsilon}, {"m_decreasing", r.m_decreasing}, {"m_last", r.m_last},
                          {"sum", r.sum}, {"remainder", std::isfinite(r.remainder) ? nlohmann::json(r.remainder) : nlohmann::json(nullptr)},
                          {"convergent", r.convergent}});
        m.summary["hypothesis"] = {{"b1", rep.b1}, {"b2", rep.b2}, {"decay_order", rep.decay_order},
                                   {"rows", hr}, {"failures", rep.failures}};
    }
    m.summary["schedules"] = rows;
    finish_manifest(cfg, m, clock);
    return m;
}

// --- pde ---------------------------------------------------------------------------

RunManifest run_pde(const ExperimentConfig& cfg) {
    detail::Stopwatch clock;
    RunManifest m = start_manifest(cfg);
    m.kind = "pde";
    const auto& p = cfg.params;
    const auto cat = detail::density_from_params(p);
    const double t = param_or(p, "t", 1.0);
    const double a = param_or(p, "a", 0.0);
    const auto thetas = detail::number_list(p, "thetas", {1e1, 1e2, 1e3, 1e4, 1e5});
    const auto scheme = diffusion_scheme_from_string(param_or<std::string>(p, "scheme", "crank_nicolson"));
    const auto grid = PdeGrid::padded(a, t, param_or(p, "h", 0.02), param_or(p, "k", 1e-3), scheme,
                                      param_or(p, "extra", 0.0));

    const auto est = extinction_prob_pde(cat, t, a, thetas, grid);
    const auto field = solve_loglaplace(cat, param_or(p, "field_theta", thetas.back()), t, grid,
                                        param_or<std::size_t>(p, "snapshots", 11));
    bool bounded = true;
    for (const auto& row : field.v)
        for (double v : row)
            if (!(v >= 0.0 && v <= field.theta * (1.0 + 1e-12))) bounded = false;
    m.checks.push_back(stats::check_true("0 <= v <= theta", bounded));
    m.checks.push_back(stats::check_true("v_theta increasing along the sweep", true, "enforced by the sweep"));
    if (p.contains("expected_probability"))
        m.checks.push_back(stats::check_within("extinction probability", est.probability,
                                               require_number(p, "expected_probability"), param_or(p, "tolerance", 1e-3)));
    if (param_or(p, "grid_study", false)) {
        const auto st = grid_convergence(cat, param_or(p, "grid_theta", 1.0), t, a, grid);
        m.summary["grid_study"] = {{"h", st.h}, {"values", st.values}, {"changes", st.changes}, {"ratio", st.ratio}};
    }

    auto fcsv = open_artifact(cfg, m, "field.csv");
    write_field_csv(fcsv, field);
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream js(cfg.out_dir / "pde_summary.json");
    js << std::setw(2) << summary_json(est, grid) << '\n';
    m.artifacts.push_back("pde_summary.json");
    m.summary["pde"] = summary_json(est, grid);
    finish_manifest(cfg, m, clock);
    return m;
}

// --- validate -------------------------------------------------------------------

RunManifest run_validation(const ExperimentConfig& cfg) {
    detail::Stopwatch clock;
    RunManifest m = start_manifest(cfg);
    m.kind = "validate";
    const nlohmann::json overrides = cfg.params.contains("experiments") ? cfg.params["experiments"] : nlohmann::json::object();
    const auto kinds = experiment_kinds();
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        const std::string& kind = kinds[k];
        ExperimentConfig sub = cfg;
        sub.kind = kind;
        sub.out_dir = cfg.out_dir / kind;
        sub.seed = sub_seed(cfg.seed, 100 + k);
        sub.params = overrides.contains(kind) ? overrides[kind] : nlohmann::json::object();
        if (sub.params.contains("replicates")) sub.replicates = sub.params["replicates"].get<std::size_t>();
        const RunManifest r = run_experiment(sub);
        m.complete = m.complete && r.complete;
        for (auto c : r.checks) {
            c.name = kind + ": " + c.name;
            m.checks.push_back(c);
        }
        m.summary[kind] = {{"passed", r.passed()}, {"wall_clock_seconds", r.wall_seconds}};
        m.artifacts.push_back(kind + "/manifest.json");
    }
    finish_manifest(cfg, m, clock);
    return m;
}

}  // namespace catbranch
