#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "catbranch/catalyst.hpp"
#include "catbranch/rng.hpp"
#include "catbranch/stats.hpp"

namespace catbranch {

/// Brownian trajectory sampled on a uniform grid: positions[k] = W(t0 + k dt).
struct Path {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> positions;

    double time_at(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    double t_end() const { return time_at(positions.size() - 1); }
    std::size_t steps() const { return positions.empty() ? 0 : positions.size() - 1; }
};

struct JumpEvent {
    double time = 0.0;
    Site site{};
};

/// Continuous-time simple random walk on Z^d with exact jump records.
struct JumpPath {
    int dim = 1;
    double t0 = 0.0;
    double t_end = 0.0;
    Site start{};
    std::vector<JumpEvent> events;

    std::size_t jump_count() const { return events.size(); }
    Site site_at(double t) const;
};

/// Exact Gaussian increments on [t0, t1]. The step is shrunk to
/// (t1 - t0) / ceil((t1 - t0) / dt) so the grid ends exactly at t1.
Path brownian_path(double a, double t0, double t1, double dt, Rng& rng);

/// Rate-1 exponential holding times, uniform nearest-neighbour moves.
JumpPath random_walk_path(const Site& a, int dim, double t0, double t1, Rng& rng);

/// (1 / 2eps) times the trapezoidal occupation time of [b - eps, b + eps).
double local_time(const Path& path, double b, double eps);
/// Same estimator restricted to the grid window [from_time, to_time].
double local_time(const Path& path, double b, double eps, double from_time, double to_time);

/// Trapezoidal time spent in the closed interval [lo, hi].
double occupation_time(const Path& path, double lo, double hi);
/// Exact time spent at sites satisfying `in_region`.
double occupation_time(const JumpPath& path, const std::function<bool(const Site&)>& in_region);

struct HitOptions {
    /// Also count crossings inside a step using the Brownian-bridge crossing
    /// probability exp(-2 (x_k - y)(x_{k+1} - y) / dt). Needs `rng`.
    bool bridge_correction = false;
    Rng* rng = nullptr;
};

struct Hit {
    double time = 0.0;
    double target = 0.0;
};

/// First grid time >= from_time whose preceding segment brackets a target
/// (returns from_time itself when the path sits on a target there).
std::optional<Hit> first_hit_detail(const Path& path, std::span<const double> sorted_targets, double from_time,
                                    const HitOptions& opts = {});
std::optional<double> first_hit(const Path& path, std::span<const double> sorted_targets, double from_time,
                                const HitOptions& opts = {});

/// First grid time at which the path lies outside the open interval (lo, hi).
std::optional<double> exit_time(const Path& path, double lo, double hi);
/// First jump time at which the walk leaves the cube max|b_i| <= radius.
std::optional<double> exit_time(const JumpPath& path, std::int64_t radius);

/// Supremum of the path over its time range. With `rng` the maximum of the
/// Brownian bridge between grid points is sampled exactly.
double path_supremum(const Path& path, Rng* rng = nullptr);

struct HittingCycle {
    std::vector<double> hitting_delays;  // H_m
    std::vector<double> local_times;     // L_m
    bool truncated = false;
};

/// Alternating hit / dwell cycle: from kappa_{m-1} wait for the first hit of a
/// target (H_m), then record the local time at the hit target over the next
/// `dwell` time units (L_m); kappa_m = hit time + dwell.
HittingCycle hitting_cycle(const Path& path, std::span<const double> sorted_targets, double dwell, int cycles,
                           double eps);

// --- calibration -------------------------------------------------------------

/// Probability that Brownian motion from `a` spends at least half of [0, t]
/// in [-theta, theta], estimated on `paths` grid paths.
stats::Estimate occupation_tail_probability(double theta, double t, double a, double dt, std::size_t paths, Rng& rng);

struct OccupationLdFit {
    std::vector<double> times;
    std::vector<stats::Estimate> probabilities;
    stats::LinearFit fit;  // log p against t
    double c0 = 0.0;       // -slope (theta = 1)
};

/// Fits log P(occupation of [-1,1] by t >= t/2) affinely in t; reuses one set
/// of paths for all horizons.
OccupationLdFit calibrate_occupation_ld(std::span<const double> times, double dt, std::size_t paths, Rng& rng);

/// a := E[sup_{[0,1]} W] / 2, using exact bridge maxima on a grid of step dt.
stats::Estimate calibrate_half_mean_sup(double dt, std::size_t paths, Rng& rng);

struct SumLdFit {
    std::vector<int> ks;
    std::vector<stats::Estimate> probabilities;  // P(sum_{m<=k} S_m < a k)
    double c1 = 0.0;                            // min_k -log p_k / (2k)
    stats::LinearFit fit;                       // log p_k against k
};

/// Calibrates c1 from sums of i.i.d. copies of sup_{[0,1]} W (the law of the
/// rescaled dwell local times) falling below a k.
SumLdFit calibrate_sum_ld(double a, std::span<const int> ks, double dt, std::size_t samples, Rng& rng);

struct HittingTailFit {
    double spacing = 0.0;
    std::vector<double> levels;
    std::vector<stats::Estimate> tail;  // P(H >= s)
    stats::LinearFit fit;               // log tail against s
};

/// Hitting time of an evenly spaced target grid started midway between two
/// targets; fits the exponential tail rate.
HittingTailFit hitting_tail(double spacing, std::span<const double> levels, double dt, std::size_t paths, Rng& rng);

}  // namespace catbranch
