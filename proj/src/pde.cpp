#include "catbranch/pde.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace catbranch {

std::string to_string(DiffusionScheme s) {
    switch (s) {
        case DiffusionScheme::explicit_euler:
            return "explicit";
        case DiffusionScheme::implicit_euler:
            return "implicit";
        case DiffusionScheme::crank_nicolson:
            return "crank_nicolson";
    }
    return "unknown";
}

DiffusionScheme diffusion_scheme_from_string(const std::string& name) {
    if (name == "explicit") return DiffusionScheme::explicit_euler;
    if (name == "implicit") return DiffusionScheme::implicit_euler;
    if (name == "crank_nicolson") return DiffusionScheme::crank_nicolson;
    throw std::invalid_argument("unknown diffusion scheme: " + name);
}

PdeGrid PdeGrid::padded(double a, double t, double h, double k, DiffusionScheme scheme, double extra) {
    if (!(h > 0.0) || !(k > 0.0) || !(t >= 0.0)) throw std::invalid_argument("PdeGrid: h, k, t must be positive");
    PdeGrid g;
    g.h = h;
    g.k = k;
    g.scheme = scheme;
    const double A = std::abs(a) + extra + 6.0 * std::sqrt(t);
    g.half_width = std::ceil(A / h - 1e-9) * h;
    return g;
}

std::size_t PdeGrid::points() const { return 2 * static_cast<std::size_t>(std::llround(half_width / h)) + 1; }

double VField::at(std::size_t j, double b) const {
    const auto& row = v.at(j);
    const double pos = (b + grid.half_width) / grid.h;
    if (pos <= 0.0) return row.front();
    if (pos >= static_cast<double>(row.size() - 1)) return row.back();
    const auto i = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(i);
    return (1.0 - w) * row[i] + w * row[i + 1];
}

namespace {

// Tridiagonal solver for (1 + 2r) u_i - r u_{i-1} - r u_{i+1} = rhs_i with
// reflecting ends; the factorization depends only on r and n.
class NeumannSolver {
public:
    NeumannSolver(std::size_t n, double r) : r_(r), cp_(n), inv_(n) {
        // Row 0: (1+2r) u_0 - 2r u_1; row n-1: -2r u_{n-2} + (1+2r) u_{n-1}.
        const double diag = 1.0 + 2.0 * r;
        inv_[0] = 1.0 / diag;
        cp_[0] = -2.0 * r * inv_[0];
        for (std::size_t i = 1; i < n; ++i) {
            const double lower = (i == n - 1) ? -2.0 * r : -r;
            const double upper = -r;
            const double denom = diag - lower * cp_[i - 1];
            inv_[i] = 1.0 / denom;
            cp_[i] = upper * inv_[i];
        }
    }

    void solve(std::vector<double>& u) const {
        const std::size_t n = u.size();
        u[0] *= inv_[0];
        for (std::size_t i = 1; i < n; ++i) {
            const double lower = (i == n - 1) ? -2.0 * r_ : -r_;
            u[i] = (u[i] - lower * u[i - 1]) * inv_[i];
        }
        for (std::size_t i = n - 1; i-- > 0;) u[i] -= cp_[i] * u[i + 1];
    }

private:
    double r_;
    std::vector<double> cp_;
    std::vector<double> inv_;
};

// u += r (u_{i+1} - 2 u_i + u_{i-1}) with reflecting ends, into `out`.
void apply_laplacian_step(const std::vector<double>& u, double r, std::vector<double>& out) {
    const std::size_t n = u.size();
    out[0] = u[0] + 2.0 * r * (u[1] - u[0]);
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = u[i] + r * (u[i + 1] - 2.0 * u[i] + u[i - 1]);
    out[n - 1] = u[n - 1] + 2.0 * r * (u[n - 2] - u[n - 1]);
}

class Diffusion {
public:
    Diffusion(const PdeGrid& g, std::size_t n, double dt) : scheme_(g.scheme), scratch_(n) {
        // Half of the Laplacian over time dt: r = (dt / 2) / h^2.
        const double r = 0.5 * dt / (g.h * g.h);
        switch (scheme_) {
            case DiffusionScheme::explicit_euler:
                r_ = r;
                break;
            case DiffusionScheme::implicit_euler:
                solver_.emplace_back(n, r);
                break;
            case DiffusionScheme::crank_nicolson:
                r_ = 0.5 * r;
                solver_.emplace_back(n, 0.5 * r);
                break;
        }
    }

    void step(std::vector<double>& u) {
        switch (scheme_) {
            case DiffusionScheme::explicit_euler:
                apply_laplacian_step(u, r_, scratch_);
                u.swap(scratch_);
                break;
            case DiffusionScheme::implicit_euler:
                solver_.front().solve(u);
                break;
            case DiffusionScheme::crank_nicolson:
                apply_laplacian_step(u, r_, scratch_);
                u.swap(scratch_);
                solver_.front().solve(u);
                break;
        }
    }

private:
    DiffusionScheme scheme_;
    double r_ = 0.0;
    std::vector<NeumannSolver> solver_;
    std::vector<double> scratch_;
};

}  // namespace

VField solve_loglaplace(const DensityCatalyst& cat, double theta, double t, const PdeGrid& grid,
                        std::size_t snapshots) {
    if (!(theta >= 0.0) || !std::isfinite(theta)) throw std::invalid_argument("solve_loglaplace: theta must be finite, >= 0");
    if (!(t > 0.0)) throw std::invalid_argument("solve_loglaplace: t must be positive");
    if (snapshots < 2) throw std::invalid_argument("solve_loglaplace: need at least two snapshots");
    const std::size_t n = grid.points();
    if (n < 3) throw std::invalid_argument("solve_loglaplace: grid too small");

    const auto steps = static_cast<std::size_t>(std::ceil(t / grid.k - 1e-9));
    const double k = t / static_cast<double>(steps);
    PdeGrid used = grid;
    used.k = k;
    if (!used.stable())
        throw std::invalid_argument("solve_loglaplace: explicit diffusion needs k <= h^2");

    std::vector<double> chi(n);
    for (std::size_t i = 0; i < n; ++i) chi[i] = cat(grid.x(i));

    VField field;
    field.grid = grid;
    field.theta = theta;
    field.t = t;
    field.steps = steps;
    field.k_used = k;

    // Levels are stored in backward order and flipped at the end; u(tau) = v(t - tau).
    std::vector<std::size_t> store_at(snapshots);
    for (std::size_t j = 0; j < snapshots; ++j) store_at[j] = (steps * j) / (snapshots - 1);
    std::size_t next_store = 0;

    std::vector<double> u(n, theta);
    Diffusion half(grid, n, 0.5 * k);
    std::vector<std::vector<double>> levels;
    std::vector<double> taus;
    for (std::size_t step = 0; step <= steps; ++step) {
        while (next_store < snapshots && store_at[next_store] == step) {
            levels.push_back(u);
            taus.push_back(static_cast<double>(step) * k);
            ++next_store;
        }
        if (step == steps) break;
        half.step(u);
        for (std::size_t i = 0; i < n; ++i) u[i] = u[i] / (1.0 + chi[i] * u[i] * k);
        half.step(u);
    }

    for (std::size_t j = levels.size(); j-- > 0;) {
        field.s.push_back(t - taus[j]);
        field.v.push_back(std::move(levels[j]));
    }
    field.s.front() = 0.0;
    return field;
}

ExtinctionEstimate extinction_prob_pde(const DensityCatalyst& cat, double t, double a, std::span<const double> thetas,
                                       const PdeGrid& grid) {
    if (thetas.size() < 3) throw std::invalid_argument("extinction_prob_pde: need at least three theta values");
    for (std::size_t i = 1; i < thetas.size(); ++i)
        if (!(thetas[i] > thetas[i - 1])) throw std::invalid_argument("extinction_prob_pde: theta sweep must increase");
    if (!(thetas.front() > 0.0) || thetas.back() / thetas.front() < 1e3)
        throw std::invalid_argument("extinction_prob_pde: theta sweep must cover at least three decades");

    ExtinctionEstimate est;
    est.thetas.assign(thetas.begin(), thetas.end());
    for (double th : thetas) {
        const double v = solve_loglaplace(cat, th, t, grid).initial(a);
        if (!est.values.empty() && v < est.values.back() * (1.0 - 1e-12))
            throw std::runtime_error("extinction_prob_pde: v_theta decreased along the sweep");
        est.values.push_back(v);
    }
    est.v_last = est.values.back();

    // Aitken delta-squared over the last three sweep points (geometric tail in the sweep index).
    const std::size_t m = est.values.size();
    const double d1 = est.values[m - 2] - est.values[m - 3];
    const double d2 = est.values[m - 1] - est.values[m - 2];
    est.v_infinity = est.v_last;
    if (d1 > 0.0 && d2 > 0.0 && d2 < d1) est.v_infinity += d2 * d2 / (d1 - d2);
    est.probability = std::exp(-est.v_infinity);
    est.probability_last = std::exp(-est.v_last);
    return est;
}

GridStudy grid_convergence(const DensityCatalyst& cat, double theta, double t, double a, const PdeGrid& grid) {
    GridStudy st;
    PdeGrid g = grid;
    for (int level = 0; level < 3; ++level) {
        st.h.push_back(g.h);
        st.values.push_back(solve_loglaplace(cat, theta, t, g).initial(a));
        g.h *= 0.5;
        g.k *= 0.5;
    }
    st.changes = {std::abs(st.values[1] - st.values[0]), std::abs(st.values[2] - st.values[1])};
    st.ratio = st.changes[1] > 0.0 ? st.changes[0] / st.changes[1] : std::numeric_limits<double>::infinity();
    return st;
}

void write_field_csv(std::ostream& os, const VField& field) {
    os << "s,b,v\n" << std::setprecision(12);
    for (std::size_t j = 0; j < field.s.size(); ++j)
        for (std::size_t i = 0; i < field.v[j].size(); ++i)
            os << field.s[j] << ',' << field.grid.x(i) << ',' << field.v[j][i] << '\n';
}

nlohmann::json summary_json(const ExtinctionEstimate& est, const PdeGrid& grid) {
    return {{"v_infinity", est.v_infinity},
            {"v_last", est.v_last},
            {"extinction_probability", est.probability},
            {"extinction_probability_last_theta", est.probability_last},
            {"thetas", est.thetas},
            {"v_theta", est.values},
            {"grid",
             {{"half_width", grid.half_width},
              {"h", grid.h},
              {"k", grid.k},
              {"points", grid.points()},
              {"scheme", to_string(grid.scheme)}}}};
}

}  // namespace catbranch
