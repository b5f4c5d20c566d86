#include "catbranch/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "catbranch/stats.hpp"

namespace catbranch {

std::string to_string(ScheduleModel m) {
    switch (m) {
        case ScheduleModel::parabolic:
            return "parabolic";
        case ScheduleModel::dense_point:
            return "dense_point";
        case ScheduleModel::lattice:
            return "lattice";
    }
    return "unknown";
}

double StageSchedule::series_sum() const {
    double s = delta_before;
    for (std::size_t i = 0; i < n.size(); ++i) s += delta[i] + lambda[i];
    return s;
}

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void push(StageSchedule& s, int n, double T, double M, double xi, double delta, double log_lambda) {
    s.n.push_back(n);
    s.T.push_back(T);
    s.M.push_back(M);
    s.xi.push_back(xi);
    s.delta.push_back(delta);
    s.log_lambda.push_back(log_lambda);
    s.lambda.push_back(std::exp(log_lambda));
}

}  // namespace

StageSchedule parabolic_schedule(const ParabolicParams& p, bool validate) {
    require(p.alpha > 0.0 && p.q > 0.0 && p.c0 > 0.0, "parabolic schedule: alpha, q, c0 must be positive");
    require(p.epsilon > 0.0 && p.epsilon < 1.0, "parabolic schedule: epsilon must lie in (0,1)");
    require(p.n_max >= 0, "parabolic schedule: n_max must be >= 0");
    if (validate) require(p.beta > 0.0 && p.beta < 2.0 * p.alpha, "parabolic schedule: beta must lie in (0, 2 alpha)");

    StageSchedule s;
    s.model = ScheduleModel::parabolic;
    s.epsilon = p.epsilon;
    s.first_n = 0;
    s.delta_before = p.epsilon;
    s.t_infinity = 1.0 / (p.epsilon * (1.0 - std::exp(-p.beta)));
    const double m_rate = 1.0 + p.beta + p.alpha * p.q;
    double T = 0.0;
    for (int n = 0; n <= p.n_max; ++n) {
        const double theta = std::exp(-p.alpha * n);
        const double M = std::exp(-m_rate * n);
        const double t = std::exp(-p.beta * n) / p.epsilon;
        const double xi = 0.5 * t * std::pow(theta, p.q);
        // log(M_n / M_{n+1}) = 1 + beta + alpha q
        const double log_lambda = m_rate - p.c0 * t / (theta * theta);
        push(s, n, T, M, xi, M / xi, log_lambda);
        T += t;
    }
    return s;
}

double dense_point_m(double alpha, double epsilon, int n) { return std::floor(std::exp(alpha * n) / epsilon); }

double dense_point_s(double beta, double epsilon, int n) { return std::exp(-beta * n) / (epsilon * epsilon); }

double dense_point_zeta(const DensePointParams& p, int n) {
    const double m = dense_point_m(p.alpha, p.epsilon, n);
    const double s = dense_point_s(p.beta, p.epsilon, n);
    const double Delta = std::exp(-p.beta * n);
    return m * std::exp(-p.c0 * s / (Delta * Delta)) / p.c0;
}

StageSchedule dense_point_schedule(const DensePointParams& p) {
    require(p.beta > 0.0 && p.beta < 1.0, "dense point schedule: beta must lie in (0,1)");
    require(p.alpha > 0.5 * p.beta && p.alpha < p.beta, "dense point schedule: alpha must lie in (beta/2, beta)");
    require(p.epsilon > 0.0 && p.epsilon < 1.0, "dense point schedule: epsilon must lie in (0,1)");
    require(p.a > 0.0 && p.c0 > 0.0 && p.c1 > 0.0, "dense point schedule: a, c0, c1 must be positive");
    require(p.first_n >= 0 && p.n_max >= p.first_n, "dense point schedule: need 0 <= N <= n_max");

    StageSchedule s;
    s.model = ScheduleModel::dense_point;
    s.epsilon = p.epsilon;
    s.first_n = p.first_n;
    s.delta_before = p.epsilon;
    const double r = std::exp(p.alpha - p.beta);
    s.t_infinity = 2.0 * std::exp((p.alpha - p.beta) * p.first_n) / (std::pow(p.epsilon, 3) * (1.0 - r));
    double T = 0.0;
    for (int n = p.first_n; n <= p.n_max; ++n) {
        const double m = dense_point_m(p.alpha, p.epsilon, n);
        require(m >= 1.0, "dense point schedule: m_n = 0, epsilon too large for this N");
        const double sn = dense_point_s(p.beta, p.epsilon, n);
        const double M = std::ldexp(1.0, -n);
        const double xi = p.a * m * std::sqrt(sn) * M;
        const double Delta = std::exp(-p.beta * n);
        const double log_zeta = std::log(m) - p.c0 * sn / (Delta * Delta) - std::log(p.c0);
        const double log_other = -2.0 * p.c1 * m;
        const double hi = std::max(log_zeta, log_other);
        const double log_lambda = std::log(2.0) + hi + std::log1p(std::exp(std::min(log_zeta, log_other) - hi));
        push(s, n, T, M, xi, M / xi, log_lambda);
        T += 2.0 * m * sn;
    }
    return s;
}

StageSchedule lattice_schedule(const LatticeParams& p) {
    require(p.first_n >= 1, "lattice schedule: N must be >= 1");
    require(p.dim >= 1, "lattice schedule: d must be >= 1");
    require(p.alpha_hat > 0.0, "lattice schedule: alpha_hat must be positive");
    require(p.n_max >= p.first_n && p.n_max < 1000, "lattice schedule: need N <= n_max < 1000");

    const int N = p.first_n;
    const int d = p.dim;
    StageSchedule s;
    s.model = ScheduleModel::lattice;
    s.first_n = N;
    s.delta_before = std::exp2(-N / 4.0);
    s.xi_before = p.alpha_hat * std::exp2(N / 2.0) / 6.0;
    s.t_infinity = std::ldexp(1.0, N) / 6.0 + std::ldexp(1.0, -N + 1);
    // epsilon enters only through N; delta_{N-1} serves as its proxy.
    s.epsilon = s.delta_before;
    double T = std::ldexp(1.0, N) / 6.0;
    for (int n = N; n <= p.n_max; ++n) {
        const double M = std::ldexp(1.0, -n * (d + 3));
        const double xi = std::ldexp(1.0, -n * (d + 2));
        const double log_lambda = -std::ldexp(1.0, n) * std::log(2.0);
        push(s, n, T, M, xi, M / xi, log_lambda);
        s.lambda.back() = std::exp2(-std::ldexp(1.0, n));
        s.increment.push_back(std::ldexp(1.0, -n));
        s.exit_radius.push_back(n + 1 < 62 ? (std::int64_t{1} << (n + 1)) : std::numeric_limits<std::int64_t>::max());
        T += std::ldexp(1.0, -n);
    }
    return s;
}

HypothesisReport verify_hypothesis_b(std::span<const StageSchedule> schedules, double m_floor) {
    if (schedules.size() < 2) throw std::invalid_argument("verify_hypothesis_b needs at least two epsilon values");
    HypothesisReport rep;
    rep.b1 = true;
    bool convergent = true;
    for (const StageSchedule& s : schedules) {
        HypothesisRow row;
        row.epsilon = s.epsilon;
        row.m_decreasing = !s.M.empty();
        for (std::size_t i = 1; i < s.M.size(); ++i)
            if (!(s.M[i] < s.M[i - 1])) row.m_decreasing = false;
        row.m_last = s.M.empty() ? 0.0 : s.M.back();
        row.sum = s.series_sum();
        row.convergent = std::isfinite(row.sum) && s.size() >= 2;
        if (row.convergent) {
            const std::size_t k = s.size() - 1;
            const double last = s.delta[k] + s.lambda[k];
            const double prev = s.delta[k - 1] + s.lambda[k - 1];
            const double ratio = prev > 0.0 ? last / prev : 0.0;
            if (ratio < 1.0 - 1e-9) {
                row.remainder = last * ratio / (1.0 - ratio);
            } else {
                row.convergent = false;
                row.remainder = std::numeric_limits<double>::infinity();
            }
        }
        if (!row.m_decreasing || !(row.m_last < m_floor)) {
            rep.b1 = false;
            rep.failures.push_back("M_n not strictly decreasing below floor at epsilon=" + std::to_string(s.epsilon));
        }
        if (!row.convergent) {
            convergent = false;
            rep.failures.push_back("divergent series at epsilon=" + std::to_string(s.epsilon));
        }
        rep.rows.push_back(row);
    }

    std::vector<HypothesisRow> sorted = rep.rows;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.epsilon > b.epsilon; });
    bool decreasing = true;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (!(sorted[i].sum < sorted[i - 1].sum)) decreasing = false;
    if (!decreasing) rep.failures.push_back("series sums do not decrease with epsilon");
    rep.b2 = convergent && decreasing;

    std::vector<double> le, ls;
    for (const auto& r : rep.rows)
        if (r.sum > 0.0 && std::isfinite(r.sum)) {
            le.push_back(std::log(r.epsilon));
            ls.push_back(std::log(r.sum));
        }
    if (le.size() >= 2) rep.decay_order = stats::linear_fit(le, ls).slope;
    return rep;
}

void write_schedule_csv(std::ostream& os, const StageSchedule& s) {
    os << "n,T_n,M_n,xi_n,delta_n,lambda_n\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < s.size(); ++i)
        os << s.n[i] << ',' << s.T[i] << ',' << s.M[i] << ',' << s.xi[i] << ',' << s.delta[i] << ',' << s.lambda[i]
           << '\n';
}

}  // namespace catbranch
