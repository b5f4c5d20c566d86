#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "catbranch/rng.hpp"

namespace catbranch {

/// Half-open window (lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    bool contains(double x) const { return x > lo && x <= hi; }
};

struct Atom {
    double location = 0.0;
    double weight = 0.0;
};

/// Purely atomic catalyst sum_i w_i delta_{b_i} restricted to a window, or the
/// periodic repetition of that window when a period is set.
class AtomicCatalyst {
public:
    AtomicCatalyst() = default;
    /// Sorts the atoms. Throws if a weight is not strictly positive or an atom
    /// lies outside the window (for periodic catalysts: one period).
    AtomicCatalyst(std::vector<Atom> atoms, Interval window, std::optional<double> period = {});

    const std::vector<Atom>& atoms() const { return atoms_; }
    const Interval& window() const { return window_; }
    const std::optional<double>& period() const { return period_; }
    bool empty() const { return atoms_.empty(); }

    /// Mass inside one window (one period when periodic).
    double total_mass() const { return prefix_.empty() ? 0.0 : prefix_.back(); }
    /// Mass of atoms with location in (a, b]; periodic copies included.
    double mass_between(double a, double b) const;
    /// All atoms with location in (a, b], unrolled over periods when periodic.
    std::vector<Atom> atoms_between(double a, double b) const;

private:
    // Mass of atoms with location <= y, counted from the window's left edge
    // (negative for y left of the window when periodic).
    double cumulative(double y) const;

    std::vector<Atom> atoms_;
    std::vector<double> prefix_;  // prefix_[i] = sum of weights of atoms_[0..i]
    Interval window_{};
    std::optional<double> period_;
};

/// Sum over n >= n_min of 2^-n times a point measure pi_n.
struct LayeredCatalyst {
    std::map<int, std::vector<double>> layers;  // sorted locations per layer
    int n_min = 0;
    Interval window{};
    std::optional<double> period;

    static double layer_weight(int n);
    double total_mass() const;
    /// Flatten into one atomic catalyst (each atom carries its layer weight).
    AtomicCatalyst to_atomic() const;
    /// The single layer n as an atomic catalyst with the same window/period.
    AtomicCatalyst layer(int n) const;
};

/// Catalysts with a bounded density: parabolic |b|^q ^ 1, constant, or a gap.
struct DensityCatalyst {
    enum class Kind { parabolic, constant, gap };

    Kind kind = Kind::constant;
    double q = 2.0;           // parabolic exponent
    double level = 1.0;       // constant level, or the level outside the gap
    Interval gap_interval{};  // open gap (lo, hi) where the density vanishes

    static DensityCatalyst parabolic(double q);
    static DensityCatalyst constant(double level);
    static DensityCatalyst gap(double lo, double hi, double outside_level);

    double operator()(double b) const {
        switch (kind) {
            case Kind::parabolic: {
                const double a = b < 0 ? -b : b;
                if (a >= 1.0) return 1.0;
                return q == 2.0 ? a * a : std::pow(a, q);
            }
            case Kind::constant:
                return level;
            case Kind::gap:
                return (b > gap_interval.lo && b < gap_interval.hi) ? 0.0 : level;
        }
        return 0.0;
    }
    double max_level() const { return kind == Kind::parabolic ? 1.0 : level; }
};

constexpr int kMaxLatticeDim = 3;
using Site = std::array<std::int32_t, kMaxLatticeDim>;

int l1_distance(const Site& a, const Site& b);

/// Random medium rho on the cube D_n = {max|b_i| <= 2^n} of Z^d with a fixed
/// value outside the cube.
class LatticeCatalyst {
public:
    LatticeCatalyst() = default;
    LatticeCatalyst(int dim, int radius_exponent, std::vector<double> values, double outside_default);

    int dim() const { return dim_; }
    int radius_exponent() const { return radius_exponent_; }
    std::int64_t radius() const { return radius_; }
    std::int64_t side() const { return 2 * radius_ + 1; }
    std::size_t site_count() const { return values_.size(); }
    double outside_default() const { return outside_default_; }
    const std::vector<double>& values() const { return values_; }

    bool in_cube(const Site& s) const;
    double at(const Site& s) const;
    std::size_t index_of(const Site& s) const;
    Site site_of(std::size_t index) const;

private:
    int dim_ = 1;
    int radius_exponent_ = 0;
    std::int64_t radius_ = 1;
    std::vector<double> values_;
    double outside_default_ = 1.0;
};

// --- stable catalyst (Model 1) ---------------------------------------------

/// Per-unit-length atom intensity constant of the dyadic weight bands,
/// gamma^{-1}(1-2^{-gamma}) / int_0^inf r^{-1-gamma}(1-e^{-r}) dr, computed by
/// adaptive quadrature and cached per gamma.
double stable_band_constant(double gamma);

/// Expected number of atoms per unit length with weight in [2^-n, 2^-n+1).
double stable_band_intensity(double gamma, int n);

/// Moments of the normalized within-band weight law w^{-1-gamma} on [2^-n, 2^-n+1).
double stable_band_weight_mean(double gamma, int n);
double stable_band_weight_second_moment(double gamma, int n);

/// Draws a weight from the band-n law by inversion.
double sample_band_weight(double gamma, int n, Rng& rng);

/// Stable random measure restricted to `window` with Laplace functional
/// exp(-int phi^gamma). Atoms are the union over dyadic weight bands of
/// Poisson point processes; all weights >= 1 form a single Pareto band and
/// bands lying entirely below `weight_floor` are omitted.
AtomicCatalyst sample_stable_catalyst(double gamma, Interval window, double weight_floor, double intensity_scale,
                                      Rng& rng);

struct StableMassOptions {
    double weight_floor = 1e-30;
    /// Bands whose expected atom count exceeds this are summed as a
    /// moment-matched normal compound-Poisson variable instead of atom by atom.
    double exact_count_limit = 64.0;
};

/// Total mass of the stable measure on a window of the given length.
double sample_stable_window_mass(double gamma, double length, Rng& rng, const StableMassOptions& opts = {});

/// Drops atoms with weight >= 2^{-N+1} and rounds every remaining weight down
/// to its dyadic band value 2^-n.
LayeredCatalyst quantize_and_truncate(const AtomicCatalyst& cat, int n_min);

/// Restriction to (-K, K] repeated with period 2K.
AtomicCatalyst periodic_extension(const AtomicCatalyst& cat, double half_width);
LayeredCatalyst periodic_extension(const LayeredCatalyst& cat, double half_width);

/// Largest distance between neighbouring points inside `window` (circular when
/// periodic). Returns +infinity for an empty point list (unbounded gap).
double max_gap(std::span<const double> sorted_points, Interval window, std::optional<double> period = {});

// --- lattice catalyst (Model 2) --------------------------------------------

struct LatticeLimits {
    std::size_t max_sites = std::size_t{1} << 26;
};

LatticeCatalyst sample_lattice_catalyst(int dim, int radius_exponent, Rng& rng, const LatticeLimits& limits = {});

/// Event A(m, n, zeta): no nearest-neighbour connected set of m cube sites has
/// all values <= zeta.
bool cluster_event(const LatticeCatalyst& cat, int m, double zeta);

/// Size of the largest connected component of {b in cube : rho_b <= zeta}.
std::size_t largest_low_cluster(const LatticeCatalyst& cat, double zeta);

/// Number of connected subsets of Z^d with m sites that contain the origin,
/// by exhaustive enumeration.
std::uint64_t count_connected_sets(int m, int dim);

}  // namespace catbranch
