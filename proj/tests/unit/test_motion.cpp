#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "catbranch/motion.hpp"
#include "catbranch/stats.hpp"

using namespace catbranch;

TEST_SUITE("motion") {

TEST_CASE("Gaussian increments") {
    Rng rng(1);
    std::vector<double> d(100000);
    for (auto& x : d) {
        const auto p = brownian_path(0.0, 0.0, 1.0, 5.0, rng);
        REQUIRE(p.positions.size() == 2);
        x = p.positions[1] - p.positions[0];
    }
    CHECK(stats::check_equal("Var", stats::variance(d), 1.0).pass);
    CHECK_THROWS(brownian_path(0.0, 0.0, 1.0, 0.0, rng));

    const auto p = brownian_path(0.0, 0.0, 1.0, 0.3, rng);
    CHECK(p.t_end() == doctest::Approx(1.0));
    CHECK(p.steps() == 4);

    Rng a(5), b(5);
    CHECK(brownian_path(0.2, 0.0, 1.0, 0.01, a).positions == brownian_path(0.2, 0.0, 1.0, 0.01, b).positions);
}

TEST_CASE("expected supremum") {
    Rng rng(2);
    std::vector<double> s(20000);
    for (auto& x : s) x = path_supremum(brownian_path(0.0, 0.0, 1.0, 0.01, rng), &rng);
    const auto c = stats::check_equal("E sup", stats::mean(s), std::sqrt(2.0 / M_PI));
    INFO(c.estimate << " se " << c.se);
    CHECK(c.pass);
    const auto a = calibrate_half_mean_sup(0.01, 20000, rng);
    CHECK(stats::check_equal("a", a, 0.5 * std::sqrt(2.0 / M_PI)).pass);
}

TEST_CASE("local time") {
    Path far{0.0, 0.1, {5.0, 5.1, 5.2}};
    CHECK(local_time(far, 0.0, 0.01) == 0.0);

    Rng rng(3);
    std::vector<double> lt(2000);
    for (auto& x : lt) x = local_time(brownian_path(0.0, 0.0, 1.0, 1e-4, rng), 0.0, 1e-2);
    const double m = stats::mean(lt).value;
    CHECK(std::abs(m / std::sqrt(2.0 / M_PI) - 1.0) < 0.05);

    // Bins [b - eps, b + eps) tile the line.
    const auto p = brownian_path(0.0, 0.0, 2.0, 1e-3, rng);
    const double eps = 0.05;
    double total = 0.0;
    for (int i = -200; i <= 200; ++i) total += 2.0 * eps * local_time(p, 2.0 * eps * i, eps);
    CHECK(total == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("occupation time") {
    Rng rng(4);
    const auto p = brownian_path(0.0, 0.0, 3.0, 1e-2, rng);
    CHECK(occupation_time(p, -1e9, 1e9) == doctest::Approx(3.0).epsilon(1e-12));

    JumpPath j;
    j.dim = 1;
    j.t0 = 0.0;
    j.t_end = 3.0;
    j.start = Site{4, 0, 0};
    j.events.push_back({2.0, Site{5, 0, 0}});
    CHECK(occupation_time(j, [](const Site& s) { return s[0] == 4; }) == doctest::Approx(2.0));

    // E int_0^4 1{|W_s| <= 1} ds = int_0^4 erf(1/sqrt(2s)) ds.
    const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [](double s) { return s <= 0.0 ? 1.0 : std::erf(1.0 / std::sqrt(2.0 * s)); }, 0.0, 4.0, 15, 1e-12);
    std::vector<double> occ(4000);
    for (auto& x : occ) x = occupation_time(brownian_path(0.0, 0.0, 4.0, 1e-3, rng), -1.0, 1.0);
    const auto c = stats::check_equal("occupation", stats::mean(occ), oracle);
    INFO(c.estimate << " vs " << oracle);
    CHECK(c.pass);
}

TEST_CASE("first hit") {
    Path p{0.0, 0.1, {0.5, 0.7, 0.2}};
    const std::vector<double> targets{0.5};
    REQUIRE(first_hit(p, targets, 0.0).has_value());
    CHECK(*first_hit(p, targets, 0.0) == 0.0);

    Path mono{0.0, 0.1, {0.0, 0.25, 0.6, 1.0}};
    const std::vector<double> half{0.5};
    CHECK(*first_hit(mono, half, 0.0) == doctest::Approx(0.2));
    const std::vector<double> none{3.0};
    CHECK_FALSE(first_hit(mono, none, 0.0).has_value());
}

TEST_CASE("hitting tail scales with spacing squared") {
    Rng rng(5);
    const std::vector<double> l1{0.002, 0.004, 0.006};
    const std::vector<double> l2{0.008, 0.016, 0.024};
    const auto f1 = hitting_tail(0.1, l1, 1e-6, 4000, rng);
    const auto f2 = hitting_tail(0.2, l2, 4e-6, 4000, rng);
    const double ratio = f1.fit.slope / f2.fit.slope;
    INFO("slopes " << f1.fit.slope << " " << f2.fit.slope);
    CHECK(std::abs(ratio / 4.0 - 1.0) < 0.2);
    // Leading Dirichlet eigenvalue pi^2 / (2 spacing^2).
    CHECK(std::abs(-f1.fit.slope / (M_PI * M_PI / 0.02) - 1.0) < 0.2);
}

TEST_CASE("random walk") {
    Rng rng(6);
    const int paths = 1000000;
    std::size_t four = 0;
    for (int i = 0; i < paths; ++i)
        if (random_walk_path(Site{}, 1, 0.0, 1.0, rng).jump_count() >= 4) ++four;
    const double exact = 1.0 - std::exp(-1.0) * (1.0 + 1.0 + 0.5 + 1.0 / 6.0);
    CHECK(exact == doctest::Approx(0.01899).epsilon(1e-3));
    const auto est = stats::proportion(four, paths);
    CHECK(stats::check_equal("P(J>=4)", est, exact).pass);
    const double bound = std::pow(std::exp(1.0) / 4.0, 4) / std::sqrt(2.0 * M_PI * 4.0);
    CHECK(bound == doctest::Approx(0.04254).epsilon(1e-3));
    CHECK(est.value <= bound);

    CHECK(random_walk_path(Site{}, 2, 1.0, 1.0, rng).jump_count() == 0);

    std::vector<double> holds;
    std::size_t bad_steps = 0;
    while (holds.size() < 100000) {
        const auto p = random_walk_path(Site{}, 3, 0.0, 50.0, rng);
        Site prev = p.start;
        double t = p.t0;
        if (!p.events.empty()) holds.push_back(p.events.front().time - p.t0);
        for (const auto& e : p.events) {
            if (l1_distance(prev, e.site) != 1 || !(e.time > t)) ++bad_steps;
            prev = e.site;
            t = e.time;
        }
    }
    CHECK(bad_steps == 0);
    CHECK(stats::check_equal("holding mean", stats::mean(holds), 1.0).pass);
}

TEST_CASE("exit times") {
    Rng rng(7);
    const auto p = brownian_path(0.0, 0.0, 1.0, 1e-2, rng);
    CHECK_FALSE(exit_time(p, -1e9, 1e9).has_value());
    CHECK_THROWS(exit_time(p, 1.0, 2.0));

    JumpPath j;
    j.dim = 1;
    j.t_end = 10.0;
    j.events = {{1.0, Site{1, 0, 0}}, {2.0, Site{0, 0, 0}}, {3.0, Site{-1, 0, 0}}, {4.5, Site{-2, 0, 0}}};
    REQUIRE(exit_time(j, 1).has_value());
    CHECK(*exit_time(j, 1) == 4.5);
    CHECK(*exit_time(j, 0) == 1.0);

    std::vector<double> taus;
    for (int i = 0; i < 2000; ++i) {
        double x = 0.0, t = 0.0;
        const double sd = std::sqrt(1e-5);
        while (x > -1.0 && x < 1.0) {
            x += sd * rng.normal();
            t += 1e-5;
        }
        taus.push_back(t);
    }
    CHECK(stats::check_equal("E tau", stats::mean(taus), 1.0).pass);

    // The grid exit time of a sampled path agrees with direct stepping.
    const auto q = brownian_path(0.0, 0.0, 20.0, 1e-3, rng);
    const auto e = exit_time(q, -1.0, 1.0);
    REQUIRE(e.has_value());
    const auto k = static_cast<std::size_t>(std::llround(*e / q.dt));
    CHECK(std::abs(q.positions[k]) >= 1.0);
    for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(q.positions[i]) < 1.0);
}

TEST_CASE("hitting cycle") {
    Rng rng(8);
    const std::vector<double> targets{0.0};
    const auto p = brownian_path(0.0, 0.0, 3.0, 1e-3, rng);
    const auto cyc = hitting_cycle(p, targets, 0.5, 1, 0.05);
    REQUIRE(cyc.hitting_delays.size() == 1);
    CHECK(cyc.hitting_delays[0] == 0.0);

    const auto trunc = hitting_cycle(p, targets, 0.5, 100, 0.05);
    CHECK(trunc.truncated);
    CHECK(trunc.local_times.size() < 100);

    // s^{-1/2} L_m has the law of sup_{[0,1]} W: P(sup <= x) = erf(x / sqrt 2).
    const double s = 1.0;
    std::vector<double> scaled;
    for (int i = 0; i < 10000; ++i) {
        const auto path = brownian_path(0.0, 0.0, s, 1e-4, rng);
        const auto c = hitting_cycle(path, targets, s, 1, 0.02);
        REQUIRE(c.local_times.size() == 1);
        scaled.push_back(c.local_times[0] / std::sqrt(s));
    }
    const auto ks = stats::ks_one_sample(scaled, [](double x) { return x <= 0 ? 0.0 : std::erf(x / std::sqrt(2.0)); });
    INFO("D " << ks.statistic << " p " << ks.p_value);
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("sum large deviations") {
    Rng rng(9);
    const double a = 0.5 * std::sqrt(2.0 / M_PI);
    const std::vector<int> ks{20, 40};
    const auto fit = calibrate_sum_ld(a, ks, 0.5, 300000, rng);
    CHECK(fit.c1 > 0.0);
    for (std::size_t i = 0; i < ks.size(); ++i)
        CHECK(fit.probabilities[i].value <= std::exp(-2.0 * fit.c1 * ks[i]) + 3.0 * fit.probabilities[i].se + 1e-15);
}

TEST_CASE("occupation large deviations and scaling") {
    Rng rng(10);
    const std::vector<double> times{4.0, 6.0, 8.0};
    const auto fit = calibrate_occupation_ld(times, 2e-3, 20000, rng);
    INFO("slope " << fit.fit.slope << " r2 " << fit.fit.r2);
    CHECK(fit.fit.slope < 0.0);
    CHECK(fit.fit.r2 >= 0.9);
    CHECK(fit.c0 == doctest::Approx(-fit.fit.slope));

    // (theta, t, a) = (0.5, 2, 0) against (1, 8, 0).
    const auto p1 = occupation_tail_probability(0.5, 2.0, 0.0, 5e-4, 20000, rng);
    const auto p2 = occupation_tail_probability(1.0, 8.0, 0.0, 2e-3, 20000, rng);
    const double se = std::hypot(p1.se, p2.se);
    INFO(p1.value << " " << p2.value);
    CHECK(std::abs(p1.value - p2.value) <= 3.0 * se);
}

}
