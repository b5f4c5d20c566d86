#include "catbranch/feller.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <stdexcept>

namespace catbranch {

double feller_step_exact(double z, double dr, Rng& rng) {
    if (!(dr > 0.0)) throw std::invalid_argument("feller_step_exact: dr must be positive");
    if (z <= 0.0) return 0.0;
    const auto k = rng.poisson(z / dr);
    if (k == 0) return 0.0;
    return rng.gamma(static_cast<double>(k), dr);
}

double feller_step_euler(double z, double dr, Rng& rng) {
    if (!(dr > 0.0)) throw std::invalid_argument("feller_step_euler: dr must be positive");
    if (z <= 0.0) return 0.0;
    return std::max(0.0, z + std::sqrt(2.0 * z * dr) * rng.normal());
}

double survival_probability(double z0, double xi) {
    if (!(xi > 0.0)) throw std::invalid_argument("survival_probability: xi must be positive");
    if (z0 < 0.0) throw std::invalid_argument("survival_probability: negative mass");
    return -std::expm1(-z0 / xi);
}

double survival_bound(double z0, double xi) {
    if (!(xi > 0.0)) throw std::invalid_argument("survival_bound: xi must be positive");
    return z0 / xi;
}

double feller_cdf(double z0, double r, double x) {
    if (x < 0.0) return 0.0;
    if (z0 <= 0.0) return 1.0;
    if (!(r > 0.0)) return x >= z0 ? 1.0 : 0.0;
    const double mu = z0 / r;
    double term = std::exp(-mu);  // Poisson weight of k = 0
    double cdf = term;
    if (x == 0.0) return cdf;
    const int kmax = static_cast<int>(mu + 12.0 * std::sqrt(mu) + 40.0);
    for (int k = 1; k <= kmax; ++k) {
        term *= mu / k;
        cdf += term * boost::math::gamma_p(static_cast<double>(k), x / r);
    }
    return std::min(cdf, 1.0);
}

std::vector<FellerState> simulate_feller_path(double z0, std::span<const double> r_grid, Rng& rng,
                                              FellerScheme scheme, double euler_dr) {
    if (r_grid.empty() || r_grid.front() != 0.0) throw std::invalid_argument("r_grid must start at 0");
    std::vector<FellerState> out;
    out.reserve(r_grid.size());
    double z = z0;
    out.push_back({z, 0.0});
    for (std::size_t i = 1; i < r_grid.size(); ++i) {
        const double dr = r_grid[i] - r_grid[i - 1];
        if (!(dr > 0.0)) throw std::invalid_argument("r_grid must be increasing");
        if (z > 0.0) {
            if (scheme == FellerScheme::exact) {
                z = feller_step_exact(z, dr, rng);
            } else {
                const auto n = static_cast<int>(std::ceil(dr / euler_dr));
                for (int j = 0; j < n && z > 0.0; ++j) z = feller_step_euler(z, dr / n, rng);
            }
        }
        out.push_back({z, r_grid[i]});
    }
    return out;
}

}  // namespace catbranch
