#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "catbranch/catalyst.hpp"

namespace catbranch {

enum class DiffusionScheme { explicit_euler, implicit_euler, crank_nicolson };

std::string to_string(DiffusionScheme s);
DiffusionScheme diffusion_scheme_from_string(const std::string& name);

/// Uniform grid on [-A, A] with reflecting (Neumann) ends.
struct PdeGrid {
    double half_width = 1.0;  // A
    double h = 0.01;
    double k = 1e-4;
    DiffusionScheme scheme = DiffusionScheme::explicit_euler;

    /// A = |a| + extra + 6 sqrt(t), rounded up to a multiple of h.
    static PdeGrid padded(double a, double t, double h, double k, DiffusionScheme scheme, double extra = 0.0);

    std::size_t points() const;
    double x(std::size_t i) const { return -half_width + static_cast<double>(i) * h; }
    /// Explicit diffusion of (1/2) Laplacian is stable iff k <= h^2.
    bool stable() const { return scheme != DiffusionScheme::explicit_euler || k <= h * h * (1.0 + 1e-12); }
};

/// v(s, b) at stored time levels s_0 = 0 < ... < s_m = t.
struct VField {
    PdeGrid grid;
    double theta = 0.0;
    double t = 0.0;
    std::size_t steps = 0;
    double k_used = 0.0;
    std::vector<double> s;
    std::vector<std::vector<double>> v;  // v[j][i] = v(s[j], x_i)

    /// v(s_j, b) by linear interpolation in b.
    double at(std::size_t j, double b) const;
    /// v(0, b).
    double initial(double b) const { return at(0, b); }
};

/// Backward solve of -dv/ds = (1/2) v'' - chi v^2 on [0, t] with v(t, .) = theta.
/// Strang splitting: diffusion half-step, exact reaction v <- v / (1 + chi v k),
/// diffusion half-step. Stores `snapshots` >= 2 evenly spaced time levels.
/// Throws when the explicit scheme violates k <= h^2.
VField solve_loglaplace(const DensityCatalyst& cat, double theta, double t, const PdeGrid& grid,
                        std::size_t snapshots = 2);

struct ExtinctionEstimate {
    std::vector<double> thetas;
    std::vector<double> values;  // v_theta(0, a)
    double v_last = 0.0;         // v at the largest theta
    double v_infinity = 0.0;     // extrapolated along the sweep
    double probability = 0.0;    // exp(-v_infinity)
    double probability_last = 0.0;
};

/// Sweeps theta (increasing, >= 3 decades), checks v_theta(0, a) increases,
/// extrapolates v to theta = infinity (Aitken) and returns exp(-v_infinity)
/// for an initial unit point mass at a. Throws on a non-monotone sweep.
ExtinctionEstimate extinction_prob_pde(const DensityCatalyst& cat, double t, double a, std::span<const double> thetas,
                                       const PdeGrid& grid);

struct GridStudy {
    std::vector<double> h;
    std::vector<double> values;
    std::vector<double> changes;  // |v(h/2) - v(h)| per halving
    double ratio = 0.0;           // first change over second change
};

/// v(0, a) for (h, k), (h/2, k/2), (h/4, k/4).
GridStudy grid_convergence(const DensityCatalyst& cat, double theta, double t, double a, const PdeGrid& grid);

/// CSV with header s,b,v over every stored level.
void write_field_csv(std::ostream& os, const VField& field);

nlohmann::json summary_json(const ExtinctionEstimate& est, const PdeGrid& grid);

}  // namespace catbranch
