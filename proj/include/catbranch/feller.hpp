#pragma once

#include <span>
#include <vector>

#include "catbranch/rng.hpp"

namespace catbranch {

/// Feller branching diffusion dZ = sqrt(2Z) dB, absorbed at 0.
struct FellerState {
    double z = 0.0;
    double r = 0.0;
};

/// Exact transition: Laplace transform exp(-z theta / (1 + theta dr)).
/// k ~ Poisson(z / dr); the result is 0 if k = 0, else Gamma(k, scale dr).
double feller_step_exact(double z, double dr, Rng& rng);

/// Euler-Maruyama step with truncation at 0, kept for cross-checks.
double feller_step_euler(double z, double dr, Rng& rng);

/// P(Z_xi > 0 | Z_0 = z0) = 1 - exp(-z0 / xi).
double survival_probability(double z0, double xi);
/// The linear relaxation z0 / xi >= survival_probability(z0, xi).
double survival_bound(double z0, double xi);

/// P(Z_r <= x | Z_0 = z0), from the Poisson mixture of Gamma laws.
double feller_cdf(double z0, double r, double x);

enum class FellerScheme { exact, euler };

/// States at each r in r_grid (increasing, starting at 0). Absorption at 0 is
/// permanent. The Euler scheme substeps with at most `euler_dr`.
std::vector<FellerState> simulate_feller_path(double z0, std::span<const double> r_grid, Rng& rng,
                                              FellerScheme scheme = FellerScheme::exact, double euler_dr = 1e-3);

}  // namespace catbranch
