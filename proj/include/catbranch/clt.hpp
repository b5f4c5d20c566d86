#pragma once

#include <optional>
#include <vector>

#include "catbranch/catalyst.hpp"
#include "catbranch/motion.hpp"

namespace catbranch {

/// Non-decreasing accumulated branching clock t -> K([t0, t]) with K(t0) = 0,
/// linearly interpolated between knots.
class CumulativeFunctional {
public:
    CumulativeFunctional() = default;
    CumulativeFunctional(std::vector<double> times, std::vector<double> values);

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }
    double final_value() const { return values_.empty() ? 0.0 : values_.back(); }

    /// K(t); clamps to the end values outside [times.front(), times.back()].
    double value_at(double t) const;
    /// inf{t : K(t) >= r}; none when r exceeds K at the final knot.
    std::optional<double> inverse(double r) const;

private:
    std::vector<double> times_;
    std::vector<double> values_;
};

/// Position-dependent branching rate of a continuum catalyst: the density
/// itself, or for atomic catalysts the smoothed density
/// sum_i w_i 1{|x - b_i| <= eps} / (2 eps) (atoms in (x - eps, x + eps]).
class ContinuumRate {
public:
    explicit ContinuumRate(DensityCatalyst density);
    ContinuumRate(AtomicCatalyst atoms, double eps);

    double operator()(double x) const {
        if (!atomic_) return density_(x);
        return atoms_.mass_between(x - eps_, x + eps_) * inv_width_;
    }
    bool is_zero() const;

private:
    bool atomic_ = false;
    DensityCatalyst density_{};
    AtomicCatalyst atoms_{};
    double eps_ = 0.0;
    double inv_width_ = 0.0;
};

/// Trapezoidal integral of a rate along the path.
CumulativeFunctional integrate_rate(const Path& path, const ContinuumRate& rate);

/// K(t) = sum_i w_i L_t(b_i) with eps-neighbourhood local times; periodic
/// catalysts are unrolled over the path's range.
CumulativeFunctional clt_atomic(const Path& path, const AtomicCatalyst& cat, double eps);
CumulativeFunctional clt_atomic(const Path& path, const LayeredCatalyst& cat, double eps);

/// K(t) = int chi(W_r) dr by the trapezoidal rule.
CumulativeFunctional clt_density(const Path& path, const DensityCatalyst& cat);

/// K(t) = int rho(W_s) ds, exact from the holding intervals.
CumulativeFunctional clt_lattice(const JumpPath& path, const LatticeCatalyst& cat);

std::optional<double> inverse_time_change(const CumulativeFunctional& k, double r);

}  // namespace catbranch
