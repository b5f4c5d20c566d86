#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "catbranch/feller.hpp"
#include "catbranch/particle.hpp"
#include "catbranch/stats.hpp"

using namespace catbranch;

namespace {

const ContinuumRate kOne{DensityCatalyst::constant(1.0)};
const ContinuumRate kZero{DensityCatalyst::constant(0.0)};

EvolveOptions options(double dt, BranchingEngine engine = BranchingEngine::family) {
    EvolveOptions o;
    o.dt = dt;
    o.engine = engine;
    return o;
}

double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace

TEST_SUITE("particle_sbm") {

TEST_CASE("initial populations") {
    Rng rng(1);
    const auto pop = init_population(InitialMeasure::point(1.0, 0.0), 100, rng);
    CHECK(pop.particles.size() == 100);
    CHECK(pop.total_mass() == doctest::Approx(1.0));
    CHECK(total_mass(pop) == doctest::Approx(1.0));
    for (const auto& p : pop.particles) CHECK(p.x == 0.0);

    const auto u = init_population(InitialMeasure::uniform(1.0, 0.0, 1.0), 10000, rng);
    std::vector<double> xs;
    for (const auto& p : u.particles) xs.push_back(p.x);
    CHECK(stats::check_equal("mean position", stats::mean(xs), 0.5).pass);

    // Bernoulli rounding: 5 or 6 particles with mean 5.5.
    std::vector<double> counts;
    for (int s = 0; s < 20000; ++s) {
        Rng r = Rng::stream(7, s);
        const auto c = init_population(InitialMeasure::point(0.55, 0.0), 10, r).particles.size();
        CHECK((c == 5 || c == 6));
        counts.push_back(static_cast<double>(c));
    }
    CHECK(stats::check_equal("rounding mean", stats::mean(counts), 5.5).pass);

    CHECK_THROWS(init_population(InitialMeasure::point(0.0, 0.0), 10, rng));
    CHECK_THROWS(init_population(InitialMeasure::point(1.0, 0.0), 0, rng));
    Population empty;
    CHECK(empty.total_mass() == 0.0);
    CHECK(empty.extinct());
}

TEST_CASE("family size law") {
    Rng rng(2);
    const int N = 10;
    const double s = 0.3;
    const double ns = N * s;
    std::map<std::uint64_t, int> hist;
    const int n = 200000;
    for (int i = 0; i < n; ++i) ++hist[sample_family_size(N, s, rng)];
    // Critical linear birth-death: P(0) = ns/(1+ns), P(k) = ns^{k-1}/(1+ns)^{k+1}.
    CHECK(stats::check_equal("P0", stats::proportion(hist[0], n), ns / (1 + ns)).pass);
    for (std::uint64_t k = 1; k <= 4; ++k)
        CHECK(stats::check_equal("Pk", stats::proportion(hist[k], n), std::pow(ns, k - 1) / std::pow(1 + ns, k + 1)).pass);
    CHECK(sample_family_size(N, 0.0, rng) == 1);
}

TEST_CASE("zero catalyst: no branching, free diffusion") {
    Rng rng(3);
    auto pop = init_population(InitialMeasure::point(1.0, 0.0), 2000, rng);
    const auto st = evolve(pop, kZero, StoppingRule::fixed_time(2.0), options(0.1), rng);
    CHECK(pop.particles.size() == 2000);
    CHECK(st.splits == 0);
    CHECK(st.deaths == 0);
    std::vector<double> xs;
    for (const auto& p : pop.particles) xs.push_back(p.x);
    CHECK(stats::check_equal("variance", stats::variance(xs), 2.0).pass);
}

TEST_CASE("finite-N extinction matches the birth-death oracle") {
    // N particles, each a critical birth-death process of rate N: P(all dead by t) = (Nt/(1+Nt))^N.
    const int N = 50, reps = 4000;
    for (auto engine : {BranchingEngine::family, BranchingEngine::events}) {
        std::size_t dead = 0;
        for (int r = 0; r < reps; ++r) {
            Rng rng = Rng::stream(11, r);
            auto pop = init_population(InitialMeasure::point(1.0, 0.0), N, rng);
            evolve(pop, kOne, StoppingRule::fixed_time(1.0), options(0.1, engine), rng);
            if (pop.extinct()) ++dead;
        }
        const double oracle = std::pow(N / (1.0 + N), N);
        CHECK(stats::check_equal("extinct", stats::proportion(dead, reps), oracle).pass);
    }
}

TEST_CASE("engines agree in law") {
    std::vector<double> fam, ev;
    for (int r = 0; r < 3000; ++r) {
        Rng a = Rng::stream(21, r), b = Rng::stream(22, r);
        auto p1 = init_population(InitialMeasure::point(1.0, 0.0), 20, a);
        auto p2 = init_population(InitialMeasure::point(1.0, 0.0), 20, b);
        const ContinuumRate rate(DensityCatalyst::parabolic(2.0));
        evolve(p1, rate, StoppingRule::fixed_time(1.5), options(0.01), a);
        evolve(p2, rate, StoppingRule::fixed_time(1.5), options(0.01, BranchingEngine::events), b);
        fam.push_back(p1.total_mass());
        ev.push_back(p2.total_mass());
    }
    const auto ks = stats::ks_two_sample(fam, ev);
    INFO("D " << ks.statistic << " p " << ks.p_value);
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("event engine bookkeeping and genealogy") {
    Rng rng(4);
    auto pop = init_population(InitialMeasure::point(1.0, 0.0), 40, rng, true);
    const std::size_t start = pop.particles.size();
    const auto st = evolve(pop, kOne, StoppingRule::fixed_time(0.5), options(0.05, BranchingEngine::events), rng);
    CHECK(pop.particles.size() == start + st.splits - st.deaths);
    CHECK(st.splits + st.deaths > 0);

    std::map<std::uint64_t, double> birth;
    for (const auto& g : pop.genealogy) birth[g.id] = g.birth_time;
    for (const auto& g : pop.genealogy) {
        if (g.parent == 0) continue;
        REQUIRE(birth.count(g.parent) == 1);
        CHECK(birth[g.parent] <= g.birth_time);
    }
    for (const auto& p : pop.particles) CHECK(birth.count(p.id) == 1);
}

TEST_CASE("expectation formula across catalyst models") {
    const int reps = 2000;
    Rng crng(5);
    const auto atoms = sample_stable_catalyst(0.5, {-4.0, 4.0}, 1e-4, 1.0, crng);
    const ContinuumRate atomic(atoms, 0.05);
    const ContinuumRate parabolic(DensityCatalyst::parabolic(2.0));
    const auto medium = sample_lattice_catalyst(1, 4, crng);

    std::vector<double> m_atomic, m_par, m_lat, half_par, half_free;
    for (int r = 0; r < reps; ++r) {
        Rng rng = Rng::stream(31, r);
        auto p = init_population(InitialMeasure::point(1.0, 0.0), 30, rng);
        evolve(p, atomic, StoppingRule::fixed_time(1.0), options(0.005), rng);
        m_atomic.push_back(p.total_mass());

        auto q = init_population(InitialMeasure::point(1.0, 0.0), 30, rng);
        evolve(q, parabolic, StoppingRule::fixed_time(1.0), options(0.005), rng);
        m_par.push_back(q.total_mass());
        half_par.push_back(q.pairing([](double x) { return x > 0.3 ? 1.0 : 0.0; }));

        auto l = init_population(InitialMeasure::lattice_point(1.0, Site{}, 1), 30, rng);
        evolve(l, medium, StoppingRule::fixed_time(1.0), options(0.1), rng);
        m_lat.push_back(l.total_mass());
    }
    CHECK(stats::check_equal("atomic", stats::mean(m_atomic), 1.0).pass);
    CHECK(stats::check_equal("parabolic", stats::mean(m_par), 1.0).pass);
    CHECK(stats::check_equal("lattice", stats::mean(m_lat), 1.0).pass);
    // Half-line: Pi_0(W_1 > 0.3).
    CHECK(stats::check_equal("half-line", stats::mean(half_par), normal_sf(0.3)).pass);
}

TEST_CASE("monotone in the catalyst") {
    const int reps = 3000;
    std::size_t d1 = 0, d2 = 0;
    const ContinuumRate psi(DensityCatalyst::constant(0.5));
    const ContinuumRate psi2(DensityCatalyst::constant(1.0));
    for (int r = 0; r < reps; ++r) {
        Rng a = Rng::stream(41, r), b = Rng::stream(41, r);
        auto p1 = init_population(InitialMeasure::point(1.0, 0.0), 20, a);
        auto p2 = init_population(InitialMeasure::point(1.0, 0.0), 20, b);
        evolve(p1, psi, StoppingRule::fixed_time(1.0), options(0.1), a);
        evolve(p2, psi2, StoppingRule::fixed_time(1.0), options(0.1), b);
        d1 += p1.extinct();
        d2 += p2.extinct();
    }
    const auto e1 = stats::proportion(d1, reps), e2 = stats::proportion(d2, reps);
    CHECK(e1.value <= e2.value + 3.0 * std::hypot(e1.se, e2.se));
}

TEST_CASE("moments") {
    const int reps = 4000;
    std::vector<double> mass;
    for (int r = 0; r < reps; ++r) {
        Rng rng = Rng::stream(51, r);
        auto p = init_population(InitialMeasure::point(1.0, 0.0), 50, rng);
        evolve(p, kOne, StoppingRule::fixed_time(0.8), options(0.2), rng);
        mass.push_back(p.total_mass());
    }
    const auto m = estimate_moments(mass);
    CHECK(stats::check_equal("mean", m.mean, 1.0).pass);
    CHECK(stats::check_equal("variance", m.variance, 2.0 * 0.8).pass);

    std::vector<double> t0;
    for (int r = 0; r < 10; ++r) {
        Rng rng = Rng::stream(52, r);
        auto p = init_population(InitialMeasure::point(1.0, 0.0), 50, rng);
        evolve(p, kOne, StoppingRule::fixed_time(0.0), options(0.2), rng);
        t0.push_back(p.total_mass());
    }
    CHECK(estimate_moments(t0).variance.value == 0.0);
    CHECK_THROWS(estimate_moments(std::vector<double>{1.0}));
}

TEST_CASE("stopping rules") {
    Rng rng(6);
    auto pop = init_population(InitialMeasure::point(1.0, 0.0), 200, rng);
    evolve(pop, kZero, StoppingRule::exit_interval(-0.5, 0.5), options(1e-3), rng);
    CHECK(pop.particles.size() == 200);
    for (const auto& p : pop.particles) {
        CHECK(p.frozen);
        CHECK(std::abs(p.x) >= 0.5);
    }

    auto lev = init_population(InitialMeasure::point(1.0, 0.0), 200, rng);
    const auto rule = StoppingRule::min_of({StoppingRule::k_level(0.3), StoppingRule::fixed_time(10.0)});
    evolve(lev, kOne, rule, options(0.05), rng);
    for (const auto& p : lev.particles) {
        CHECK(p.clock == doctest::Approx(0.3));
        CHECK(p.freeze_time == doctest::Approx(0.3));
    }

    auto lat = init_population(InitialMeasure::lattice_point(1.0, Site{}, 2), 100, rng);
    LatticeCatalyst zero(2, 2, std::vector<double>(81, 1e-12), 1e-12);
    evolve(lat, zero, StoppingRule::exit_cube(2), options(0.5), rng);
    CHECK(lat.particles.size() == 100);
    for (const auto& p : lat.particles) {
        CHECK(p.frozen);
        CHECK(std::max(std::abs(p.site[0]), std::abs(p.site[1])) == 3);
    }

    CHECK_THROWS(evolve(pop, kOne, StoppingRule::exit_cube(3), options(0.1), rng));
    auto fresh = init_population(InitialMeasure::point(1.0, 0.0), 10, rng);
    CHECK_THROWS(evolve(fresh, kZero, StoppingRule::k_level(1.0), options(0.1), rng));
}

TEST_CASE("explosion guard") {
    Rng rng(7);
    auto pop = init_population(InitialMeasure::point(1.0, 0.0), 100, rng);
    EvolveOptions o = options(1e-3);
    o.max_particle_steps = 5000;
    CHECK_THROWS_AS(evolve(pop, kOne, StoppingRule::fixed_time(5.0), o, rng), ExplosionError);
}

TEST_CASE("good and bad mass") {
    Rng rng(8);
    Population never;
    CHECK_THROWS(classify_good_bad(never, 1.0));

    auto pop = init_population(InitialMeasure::point(1.0, 0.0), 100, rng);
    reset_stage_clocks(pop);
    evolve(pop, ContinuumRate(DensityCatalyst::parabolic(2.0)), StoppingRule::fixed_time(1.0), options(0.01), rng);
    const auto all_good = classify_good_bad(pop, 0.0);
    CHECK(all_good.good == doctest::Approx(pop.total_mass()));
    CHECK(all_good.bad == 0.0);
    const auto all_bad = classify_good_bad(pop, std::numeric_limits<double>::infinity());
    CHECK(all_bad.good == 0.0);
    const auto split = classify_good_bad(pop, 0.2);
    CHECK(split.good + split.bad == doctest::Approx(pop.total_mass()));

    // P(good mass survives) <= m / xi.
    const double m = 0.1, xi = 0.5;
    std::size_t good = 0;
    const int reps = 3000;
    for (int r = 0; r < reps; ++r) {
        Rng s = Rng::stream(61, r);
        auto p = init_population(InitialMeasure::point(m, 0.0), 100, s);
        reset_stage_clocks(p);
        evolve(p, ContinuumRate(DensityCatalyst::parabolic(2.0)), StoppingRule::fixed_time(2.0), options(0.01), s);
        if (classify_good_bad(p, xi).good > 0.0) ++good;
    }
    CHECK(stats::check_at_most("good survives", stats::proportion(good, reps), m / xi).pass);
}

TEST_CASE("time-changed mass is Feller") {
    const int reps = 2000;
    const std::vector<double> r_grid{0.0, 0.5, 1.0};
    std::vector<std::vector<double>> z(r_grid.size());
    std::vector<double> feller;
    Rng frng(9);
    for (int r = 0; r < reps; ++r) {
        Rng rng = Rng::stream(71, r);
        auto pop = init_population(InitialMeasure::point(1.0, 0.0), 100, rng);
        const auto tc = time_changed_mass(pop, ContinuumRate(DensityCatalyst::parabolic(2.0)), r_grid, 50.0,
                                          options(0.02), rng);
        CHECK(tc.complete);
        for (std::size_t j = 0; j < r_grid.size(); ++j) z[j].push_back(tc.mass[j]);
        feller.push_back(feller_step_exact(1.0, 1.0, frng));
    }
    for (double x : z[0]) CHECK(x == doctest::Approx(1.0));
    for (std::size_t j = 0; j < r_grid.size(); ++j) CHECK(stats::check_equal("martingale", stats::mean(z[j]), 1.0).pass);
    const auto ks = stats::ks_one_sample(
        z.back(), [](double x) { return feller_cdf(1.0, 1.0, x); },
        [](double x) { return x <= 0.0 ? 0.0 : feller_cdf(1.0, 1.0, x); });
    INFO("p " << ks.p_value);
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("observations and trace export") {
    Rng rng(10);
    auto pop = init_population(InitialMeasure::point(1.0, 0.0), 50, rng);
    EvolveOptions o = options(0.1);
    o.observe_times = {0.0, 0.25, 1.0, 2.0};
    const auto st = evolve(pop, kOne, StoppingRule::fixed_time(1.0), o, rng);
    REQUIRE(st.observed_mass.size() == 4);
    CHECK(st.observed_mass[0] == 1.0);
    CHECK(st.observed_mass[2] == doctest::Approx(pop.total_mass()));
    CHECK(st.observed_mass[3] == doctest::Approx(pop.total_mass()));

    std::ostringstream os;
    std::vector<TraceRow> rows{{0, 1.0, 0.5, 0.25, 0.25, 25}};
    write_trace_csv(os, rows);
    CHECK(os.str() == "replicate,t,total_mass,good_mass,bad_mass,particle_count\n0,1,0.5,0.25,0.25,25\n");
}

}
