#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace catbranch {

enum class ScheduleModel { parabolic, dense_point, lattice };

std::string to_string(ScheduleModel m);

/// Stage quantities indexed by n = first_n, ..., n_max.
struct StageSchedule {
    ScheduleModel model = ScheduleModel::parabolic;
    double epsilon = 0.0;
    int first_n = 0;  // N (0 for the parabolic model)
    std::vector<int> n;
    std::vector<double> T;  // stage start times (upper values for the lattice model)
    std::vector<double> M;
    std::vector<double> xi;
    std::vector<double> delta;
    std::vector<double> lambda;
    /// Natural logs of lambda; lambda itself underflows to 0 below 2^-1074.
    std::vector<double> log_lambda;
    double delta_before = 0.0;  // delta_{N-1}
    double xi_before = 0.0;     // xi_{N-1}, lattice model only
    double t_infinity = 0.0;    // declared bound on sup T_n
    /// Lattice model: stage n ends at (T_n + increment[n]) or on leaving the
    /// cube of radius exit_radius[n], whichever comes first.
    std::vector<double> increment;
    std::vector<std::int64_t> exit_radius;

    std::size_t size() const { return n.size(); }
    /// delta_{N-1} + sum over stored n of (delta_n + lambda_n).
    double series_sum() const;
};

struct ParabolicParams {
    double alpha = 0.0;
    double beta = 0.0;
    double q = 0.0;
    double epsilon = 0.0;
    double c0 = 0.0;
    int n_max = 60;
};

/// theta_n = e^{-alpha n}, M_n = e^{-(1+beta+alpha q) n}, t_n = e^{-beta n}/eps,
/// xi_n = t_n theta_n^q / 2, delta_n = M_n / xi_n, delta_{-1} = eps,
/// lambda_n = (M_n/M_{n+1}) exp(-c0 t_n / theta_n^2). Throws unless
/// beta is in (0, 2 alpha); `validate = false` builds it anyway.
StageSchedule parabolic_schedule(const ParabolicParams& p, bool validate = true);

struct DensePointParams {
    double alpha = 0.0;
    double beta = 0.0;
    double epsilon = 0.0;
    int first_n = 0;
    double a = 0.0;
    double c0 = 0.0;
    double c1 = 0.0;
    int n_max = 60;
};

/// m_n = floor(e^{alpha n}/eps), s_n = e^{-beta n}/eps^2, t_n = 2 m_n s_n,
/// M_n = 2^-n, Delta_n = e^{-beta n}, zeta_n = m_n exp(-c0 s_n/Delta_n^2)/c0,
/// xi_n = a m_n sqrt(s_n) 2^-n, lambda_n = (M_n/M_{n+1})(zeta_n + e^{-2 c1 m_n}).
StageSchedule dense_point_schedule(const DensePointParams& p);

/// The m_n, s_n and zeta_n sequences of the dense point model.
double dense_point_m(double alpha, double epsilon, int n);
double dense_point_s(double beta, double epsilon, int n);
double dense_point_zeta(const DensePointParams& p, int n);

struct LatticeParams {
    int first_n = 1;  // N
    int dim = 1;
    double alpha_hat = 0.0;
    int n_max = 60;
};

/// M_n = 2^{-n(d+3)}, lambda_n = 2^{-2^n}, delta_n = 2^-n, xi_n = 2^{-n(d+2)},
/// delta_{N-1} = 2^{-N/4}, xi_{N-1} = alpha_hat 2^{N/2}/6,
/// T_N = 2^N/6 ^ tau_N, T_{n+1} = (T_n + 2^-n) ^ tau_{n+1}.
StageSchedule lattice_schedule(const LatticeParams& p);

struct HypothesisRow {
    double epsilon = 0.0;
    bool m_decreasing = false;  // M_n strictly decreasing
    double m_last = 0.0;
    double sum = 0.0;           // delta_{N-1} + sum (delta_n + lambda_n)
    double remainder = 0.0;     // ratio-test estimate of the truncated tail
    bool convergent = false;
};

struct HypothesisReport {
    std::vector<HypothesisRow> rows;  // in the given epsilon order
    bool b1 = false;                  // every M_n array decreases to below m_floor
    bool b2 = false;                  // sums convergent and decreasing with epsilon
    double decay_order = 0.0;         // slope of log sum against log epsilon
    std::vector<std::string> failures;
};

HypothesisReport verify_hypothesis_b(std::span<const StageSchedule> schedules, double m_floor = 1e-9);

/// CSV with header n,T_n,M_n,xi_n,delta_n,lambda_n.
void write_schedule_csv(std::ostream& os, const StageSchedule& s);

}  // namespace catbranch
