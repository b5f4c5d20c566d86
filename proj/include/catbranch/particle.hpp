#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "catbranch/catalyst.hpp"
#include "catbranch/clt.hpp"
#include "catbranch/rng.hpp"
#include "catbranch/stats.hpp"

namespace catbranch {

enum class MotionKind { brownian, lattice };

/// One reactant particle of mass 1/N.
struct Particle {
    std::uint64_t id = 0;
    std::uint64_t parent = 0;  // 0 for roots
    double birth_time = 0.0;
    double x = 0.0;  // Brownian position
    Site site{};     // lattice position
    double clock = 0.0;      // K accumulated along the ancestral line since the stage origin
    double threshold = 0.0;  // clock level of the next branching event (event engine)
    double rate = 0.0;       // cached branching rate at x
    bool frozen = false;
    double freeze_time = 0.0;
};

struct GenealogyRecord {
    std::uint64_t id = 0;
    std::uint64_t parent = 0;
    double birth_time = 0.0;
};

/// Mass-1/N particle cloud approximating the (stopped) catalytic superprocess.
struct Population {
    std::vector<Particle> particles;
    double time = 0.0;
    int resolution = 1;  // N
    MotionKind motion = MotionKind::brownian;
    int dim = 1;
    std::uint64_t next_id = 1;
    std::optional<double> stage_start;  // set by reset_stage_clocks
    bool record_genealogy = false;
    std::vector<GenealogyRecord> genealogy;

    double total_mass() const { return static_cast<double>(particles.size()) / resolution; }
    bool extinct() const { return particles.empty(); }
    std::size_t active_count() const;
    /// <X, phi> for Brownian populations.
    double pairing(const std::function<double(double)>& phi) const;
};

/// Initial measure: a point mass, a uniform law on an interval, or a lattice point mass.
struct InitialMeasure {
    enum class Kind { point, uniform, lattice_point };
    Kind kind = Kind::point;
    double mass = 1.0;
    double location = 0.0;
    Interval range{};
    Site site{};
    int dim = 1;

    static InitialMeasure point(double mass, double x);
    static InitialMeasure uniform(double mass, double lo, double hi);
    static InitialMeasure lattice_point(double mass, const Site& site, int dim);
};

/// round(mass N) particles (unbiased Bernoulli rounding of the fractional part).
Population init_population(const InitialMeasure& spec, int resolution, Rng& rng, bool record_genealogy = false);

/// Per-particle stopping rule; min_of fires at the first of its members.
struct StoppingRule {
    enum class Kind { fixed_time, exit_interval, exit_cube, k_level, min_of };
    Kind kind = Kind::fixed_time;
    double time = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::int64_t radius = 0;
    double level = 0.0;
    std::vector<StoppingRule> members;

    static StoppingRule fixed_time(double t);
    static StoppingRule exit_interval(double lo, double hi);
    static StoppingRule exit_cube(std::int64_t radius);
    static StoppingRule k_level(double r);
    static StoppingRule min_of(std::vector<StoppingRule> rules);
};

enum class BranchingEngine {
    events,  // exponential thresholds, one fair coin per event, full genealogy
    family   // per-step family size drawn from the exact critical birth-death law
};

struct EvolveOptions {
    double dt = 1e-3;
    BranchingEngine engine = BranchingEngine::family;
    double max_time = std::numeric_limits<double>::infinity();
    std::uint64_t max_particle_steps = 10'000'000;
    std::size_t max_particles = 2'000'000;
    /// Clock levels at which to tally the surviving lineage count.
    std::vector<double> clock_levels;
    /// Times at which the total mass (active plus frozen) is recorded.
    std::vector<double> observe_times;
};

struct EvolveStats {
    std::uint64_t particle_steps = 0;
    std::uint64_t splits = 0;
    std::uint64_t deaths = 0;
    std::vector<double> level_mass;  // mass alive at each clock level
    bool levels_complete = true;     // every lineage reached the top level
    std::vector<double> observed_mass;  // one entry per observe time
};

class ExplosionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Moves, branches and freezes particles until every particle is frozen by
/// `stop` or extinct. Brownian motion uses a continuum rate; the lattice walk
/// uses the lattice medium. Throws ExplosionError when the work cap is hit.
EvolveStats evolve(Population& pop, const ContinuumRate& rate, const StoppingRule& stop, const EvolveOptions& opts,
                   Rng& rng);
EvolveStats evolve(Population& pop, const LatticeCatalyst& medium, const StoppingRule& stop,
                   const EvolveOptions& opts, Rng& rng);

/// Unfreezes particles frozen at the current population time, i.e. those
/// stopped by a fixed-time horizon, so evolution can continue from there.
void release_horizon(Population& pop);

/// Unfreezes every particle and restarts the per-lineage stage clocks at 0.
void reset_stage_clocks(Population& pop);

/// Number of descendants after K-time s of one particle branching at rate 2N
/// per unit K with fair-coin death/split.
std::uint64_t sample_family_size(int resolution, double s, Rng& rng);

double total_mass(const Population& pop);

struct GoodBad {
    double good = 0.0;
    double bad = 0.0;
};

/// Splits the surviving mass by whether a lineage accumulated >= xi of K
/// since the stage origin.
GoodBad classify_good_bad(const Population& pop, double xi);

struct TimeChangedMass {
    std::vector<double> r_grid;
    std::vector<double> mass;  // Z_r
    bool complete = true;
};

/// Z_r: mass of lineages whose own clock reached r, each frozen at its own
/// tau(r). Lineages still below the top level at `horizon` make the result
/// incomplete.
TimeChangedMass time_changed_mass(Population pop, const ContinuumRate& rate, std::span<const double> r_grid,
                                  double horizon, const EvolveOptions& opts, Rng& rng);

struct Moments {
    stats::Estimate mean;
    stats::Estimate variance;
};

/// Empirical mean and variance of replicate values of <X_tau, phi>, with
/// jackknife standard errors.
Moments estimate_moments(std::span<const double> values);

struct TraceRow {
    std::uint64_t replicate = 0;
    double t = 0.0;
    double total_mass = 0.0;
    double good_mass = 0.0;
    double bad_mass = 0.0;
    std::size_t particle_count = 0;
};

/// CSV with header replicate,t,total_mass,good_mass,bad_mass,particle_count.
void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows);

}  // namespace catbranch
