#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "catbranch/schedules.hpp"
#include "catbranch/stats.hpp"

using namespace catbranch;

namespace {

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

ParabolicParams parabolic(double eps) {
    ParabolicParams p;
    p.alpha = 1.0;
    p.beta = 1.0;
    p.q = 2.0;
    p.epsilon = eps;
    p.c0 = 1.0;
    return p;
}

DensePointParams dense(double eps) {
    DensePointParams p;
    p.alpha = 0.4;
    p.beta = 0.5;
    p.epsilon = eps;
    p.first_n = 0;
    p.a = 1.0;
    p.c0 = 1.0;
    p.c1 = 1.0;
    p.n_max = 30;
    return p;
}

}  // namespace

TEST_SUITE("schedules") {

TEST_CASE("parabolic first stage") {
    const auto s = parabolic_schedule(parabolic(0.5));
    CHECK(s.M[0] == 1.0);
    CHECK(s.xi[0] == doctest::Approx(1.0));
    CHECK(s.delta[0] == doctest::Approx(1.0));
    CHECK(s.T[0] == 0.0);
    CHECK(s.T[1] == doctest::Approx(2.0));
    CHECK(s.delta_before == 0.5);
    CHECK(s.t_infinity == doctest::Approx(2.0 / (1.0 - std::exp(-1.0))));
    CHECK(close(s.t_infinity, 3.1639, 1e-4));
}

TEST_CASE("parabolic identities") {
    const auto p = parabolic(0.2);
    const auto s = parabolic_schedule(p);
    REQUIRE(s.size() == 61);
    double t_sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(close(s.delta[i], s.M[i] / s.xi[i], 1e-14));
        const double theta = std::exp(-p.alpha * s.n[i]);
        const double t = std::exp(-p.beta * s.n[i]) / p.epsilon;
        const double m_next = std::exp(-(1 + p.beta + p.alpha * p.q) * (s.n[i] + 1));
        CHECK(close(s.log_lambda[i], std::log(s.M[i] / m_next) - p.c0 * t / (theta * theta), 1e-12));
        CHECK(close(s.T[i], t_sum, 1e-13));
        t_sum += t;
        if (i > 0) CHECK(s.T[i] >= s.T[i - 1]);
        if (i > 0 && t > 1e-15 * s.T[i - 1]) CHECK(s.T[i] > s.T[i - 1]);
    }
    CHECK(s.t_infinity >= s.T.back());
    CHECK(close(s.t_infinity, t_sum, 1e-12));
    CHECK_THROWS(parabolic_schedule([] {
        auto q = parabolic(0.2);
        q.beta = 2.5;
        return q;
    }()));
}

TEST_CASE("parabolic series is of order epsilon") {
    const double s1 = parabolic_schedule(parabolic(0.1)).series_sum();
    const double s2 = parabolic_schedule(parabolic(0.05)).series_sum();
    // Oracle: delta_n = 2 eps e^{-n}; lambda_n summed directly.
    auto oracle = [](double eps) {
        double s = eps;
        for (int n = 0; n <= 60; ++n) s += 2 * eps * std::exp(-n) + std::exp(4.0 - std::exp(n) / eps);
        return s;
    };
    CHECK(close(s1, oracle(0.1), 1e-12));
    CHECK(close(s2, oracle(0.05), 1e-12));
    CHECK(close(s1 / s2, 2.0, 0.2));
}

TEST_CASE("dense point identities") {
    const auto p = dense(0.5);
    const auto s = dense_point_schedule(p);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) CHECK(s.M[i] / s.M[i + 1] == 2.0);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(close(s.delta[i], s.M[i] / s.xi[i], 1e-14));
    CHECK(s.T[0] == 0.0);
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double m = std::floor(std::exp(p.alpha * s.n[i - 1]) / p.epsilon);
        const double sn = std::exp(-p.beta * s.n[i - 1]) / (p.epsilon * p.epsilon);
        CHECK(close(s.T[i] - s.T[i - 1], 2 * m * sn, 1e-12));
    }
    CHECK(s.t_infinity >= s.T.back());
    CHECK_THROWS(dense_point_schedule([&] {
        auto q = p;
        q.alpha = 0.2;
        return q;
    }()));
}

TEST_CASE("dense point zeta_2") {
    const auto p = dense(0.5);
    // m_2 = floor(e^0.8 / 0.5) = 4, s_2 = 4 e^-1, Delta_2 = e^-1, s_2/Delta_2^2 = 4e.
    const double expected = 4.0 * std::exp(-4.0 * std::exp(1.0));
    CHECK(dense_point_m(0.4, 0.5, 2) == 4.0);
    CHECK(close(dense_point_zeta(p, 2), expected, 1e-13));
    CHECK(close(dense_point_zeta(p, 2), 7.5825e-5, 1e-3));
    const auto s = dense_point_schedule(p);
    CHECK(close(s.lambda[2], 2.0 * (expected + std::exp(-2.0 * 4.0)), 1e-13));
}

TEST_CASE("dense point delta decay exponent") {
    const auto p = dense(0.001);
    const auto s = dense_point_schedule(p);
    std::vector<double> n, ld;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s.n[i] >= 5 && s.n[i] <= 15) {
            n.push_back(s.n[i]);
            ld.push_back(std::log(s.delta[i]));
        }
    const auto fit = stats::linear_fit(n, ld);
    CHECK(close(-fit.slope, p.alpha - p.beta / 2, 0.05));
}

TEST_CASE("lattice identities") {
    LatticeParams p;
    p.first_n = 4;
    p.dim = 1;
    p.alpha_hat = 1.0;
    p.n_max = 40;
    const auto s = lattice_schedule(p);
    CHECK(s.M[0] == std::ldexp(1.0, -16));
    CHECK(s.xi[0] == std::ldexp(1.0, -12));
    CHECK(s.delta_before == std::ldexp(1.0, -1));
    CHECK(s.xi_before == doctest::Approx(4.0 / 6.0));
    CHECK(s.T[0] == doctest::Approx(16.0 / 6.0));
    CHECK(s.exit_radius[0] == 32);
    for (int d = 1; d <= 3; ++d) {
        p.dim = d;
        const auto t = lattice_schedule(p);
        for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.delta[i] == std::ldexp(1.0, -t.n[i]));
        for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.M[i] / t.xi[i] == t.delta[i]);
    }
    CHECK(s.lambda[0] == std::ldexp(1.0, -16));
    CHECK(s.t_infinity >= s.T.back());
}

TEST_CASE("lattice series tail bound") {
    for (int N = 2; N <= 12; ++N) {
        LatticeParams p;
        p.first_n = N;
        p.alpha_hat = 1.0;
        p.n_max = 200;
        const auto s = lattice_schedule(p);
        double oracle = 0.0;
        for (int n = N; n <= 200; ++n) oracle += std::ldexp(1.0, -n) + std::exp2(-std::exp2(n));
        double sum = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) sum += s.delta[i] + s.lambda[i];
        CHECK(close(s.series_sum(), s.delta_before + sum, 1e-14));
        CHECK(close(sum, oracle, 1e-14));
        CHECK(sum <= std::ldexp(1.0, -N + 2));
    }
}

TEST_CASE("hypothesis b checks") {
    std::vector<StageSchedule> family;
    for (double eps : {0.2, 0.1, 0.05}) family.push_back(parabolic_schedule(parabolic(eps)));
    const auto rep = verify_hypothesis_b(family);
    CHECK(rep.b1);
    CHECK(rep.b2);
    CHECK(rep.failures.empty());
    for (const auto& r : rep.rows) {
        CHECK(r.m_decreasing);
        CHECK(r.m_last < 1e-9);
        CHECK(r.remainder >= 0.0);
    }
    CHECK(rep.rows[0].sum > rep.rows[1].sum);
    CHECK(rep.rows[1].sum > rep.rows[2].sum);
    MESSAGE("decay order " << rep.decay_order);
    CHECK(rep.decay_order > 0.8);

    std::vector<StageSchedule> broken;
    for (double eps : {0.2, 0.1}) {
        auto q = parabolic(eps);
        q.beta = 3.0;
        broken.push_back(parabolic_schedule(q, false));
    }
    const auto bad = verify_hypothesis_b(broken);
    CHECK_FALSE(bad.b2);
    CHECK_FALSE(bad.failures.empty());
    CHECK_THROWS(verify_hypothesis_b(std::span<const StageSchedule>(family.data(), 1)));
}

TEST_CASE("schedule csv") {
    auto p = parabolic(0.5);
    p.n_max = 1;
    std::ostringstream os;
    write_schedule_csv(os, parabolic_schedule(p));
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "n,T_n,M_n,xi_n,delta_n,lambda_n");
    std::getline(is, line);
    CHECK(line.rfind("0,0,1,1,1,", 0) == 0);
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 1);
}

}
