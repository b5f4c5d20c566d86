#include "catbranch/particle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace catbranch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct CompiledStop {
    double horizon = kInf;
    bool has_interval = false;
    double lo = -kInf;
    double hi = kInf;
    std::int64_t radius = -1;
    double level = kInf;
};

void compile(const StoppingRule& rule, CompiledStop& c) {
    switch (rule.kind) {
        case StoppingRule::Kind::fixed_time:
            c.horizon = std::min(c.horizon, rule.time);
            break;
        case StoppingRule::Kind::exit_interval:
            // Leaving either of two intervals first = leaving their intersection.
            c.has_interval = true;
            c.lo = std::max(c.lo, rule.lo);
            c.hi = std::min(c.hi, rule.hi);
            break;
        case StoppingRule::Kind::exit_cube:
            c.radius = c.radius < 0 ? rule.radius : std::min(c.radius, rule.radius);
            break;
        case StoppingRule::Kind::k_level:
            c.level = std::min(c.level, rule.level);
            break;
        case StoppingRule::Kind::min_of:
            for (const auto& m : rule.members) compile(m, c);
            break;
    }
}

bool inside_cube(const Site& s, int dim, std::int64_t radius) {
    for (int i = 0; i < dim; ++i)
        if (std::abs(static_cast<std::int64_t>(s[i])) > radius) return false;
    return true;
}

class BrownianMotion {
public:
    struct Segment {
        double t0 = 0.0, t1 = 0.0;
        double x0 = 0.0, x1 = 0.0;
        double r1 = 0.0;
        double dk = 0.0;
        bool exited = false;
    };

    BrownianMotion(const ContinuumRate& rate, const CompiledStop& stop) : rate_(rate), stop_(stop) {}

    void refresh(Particle& p) const { p.rate = rate_(p.x); }
    bool outside(const Particle& p) const { return stop_.has_interval && !(p.x > stop_.lo && p.x < stop_.hi); }

    const Segment& step(const Particle& p, double t0, double t1, Rng& rng) {
        const double h = t1 - t0;
        seg_.t0 = t0;
        seg_.t1 = t1;
        seg_.x0 = p.x;
        seg_.x1 = p.x + std::sqrt(h) * rng.normal();
        seg_.r1 = rate_(seg_.x1);
        seg_.dk = 0.5 * h * (p.rate + seg_.r1);
        seg_.exited = stop_.has_interval && !(seg_.x1 > stop_.lo && seg_.x1 < stop_.hi);
        return seg_;
    }

    // Point where the trapezoidal clock reaches offset u; the position is a
    // Brownian-bridge draw between the segment ends.
    double locate(double u, Particle& q, Rng& rng) const {
        const double f = seg_.dk > 0.0 ? std::clamp(u / seg_.dk, 0.0, 1.0) : 1.0;
        const double h = seg_.t1 - seg_.t0;
        q.x = seg_.x0 + f * (seg_.x1 - seg_.x0) + std::sqrt(f * (1.0 - f) * h) * rng.normal();
        q.rate = rate_(q.x);
        return seg_.t0 + f * h;
    }

    void finish(Particle& q) const {
        q.x = seg_.x1;
        q.rate = seg_.r1;
    }
    double end_time() const { return seg_.t1; }

private:
    const ContinuumRate& rate_;
    CompiledStop stop_;
    Segment seg_;
};

class LatticeMotion {
public:
    struct Piece {
        double start = 0.0;
        double length = 0.0;
        double rate = 0.0;
        Site site{};
    };
    struct Segment {
        std::vector<Piece> pieces;
        Site end{};
        double t_end = 0.0;
        double dk = 0.0;
        bool exited = false;
    };

    LatticeMotion(const LatticeCatalyst& medium, int dim, const CompiledStop& stop)
        : medium_(medium), dim_(dim), stop_(stop) {}

    void refresh(Particle& p) const { p.rate = medium_.at(p.site); }
    bool outside(const Particle& p) const { return stop_.radius >= 0 && !inside_cube(p.site, dim_, stop_.radius); }

    const Segment& step(const Particle& p, double t0, double t1, Rng& rng) {
        seg_.pieces.clear();
        seg_.dk = 0.0;
        seg_.exited = false;
        Site cur = p.site;
        double r = medium_.at(cur);
        double t = t0;
        for (;;) {
            const double tau = t + rng.exponential(1.0);
            if (tau >= t1) {
                seg_.pieces.push_back({t, t1 - t, r, cur});
                seg_.dk += r * (t1 - t);
                seg_.t_end = t1;
                break;
            }
            seg_.pieces.push_back({t, tau - t, r, cur});
            seg_.dk += r * (tau - t);
            const auto dir = rng.below(static_cast<std::uint64_t>(2 * dim_));
            cur[dir / 2] += (dir % 2 == 0) ? 1 : -1;
            t = tau;
            r = medium_.at(cur);
            if (stop_.radius >= 0 && !inside_cube(cur, dim_, stop_.radius)) {
                seg_.exited = true;
                seg_.t_end = tau;
                break;
            }
        }
        seg_.end = cur;
        return seg_;
    }

    double locate(double u, Particle& q, Rng&) const {
        double acc = 0.0;
        for (const Piece& pc : seg_.pieces) {
            const double dk = pc.rate * pc.length;
            if (pc.rate > 0.0 && acc + dk >= u) {
                q.site = pc.site;
                q.rate = pc.rate;
                return pc.start + std::clamp((u - acc) / pc.rate, 0.0, pc.length);
            }
            acc += dk;
        }
        const Piece& last = seg_.pieces.back();
        q.site = last.site;
        q.rate = last.rate;
        return last.start + last.length;
    }

    void finish(Particle& q) const {
        q.site = seg_.end;
        q.rate = medium_.at(seg_.end);
    }
    double end_time() const { return seg_.t_end; }

private:
    const LatticeCatalyst& medium_;
    int dim_;
    CompiledStop stop_;
    Segment seg_;
};

template <class Motion>
class Engine {
public:
    Engine(Population& pop, Motion& motion, const CompiledStop& stop, const EvolveOptions& opts, Rng& rng)
        : pop_(pop), motion_(motion), stop_(stop), opts_(opts), rng_(rng), two_n_(2.0 * pop.resolution) {}

    EvolveStats run() {
        if (!(opts_.dt > 0.0)) throw std::invalid_argument("evolve: dt must be positive");
        if (!std::is_sorted(opts_.clock_levels.begin(), opts_.clock_levels.end()) ||
            !std::is_sorted(opts_.observe_times.begin(), opts_.observe_times.end()))
            throw std::invalid_argument("evolve: clock levels and observe times must be sorted");
        const double horizon = std::min(stop_.horizon, opts_.max_time);
        if (!std::isfinite(horizon) && !stop_.has_interval && stop_.radius < 0 && !std::isfinite(stop_.level))
            throw std::invalid_argument("evolve: stopping rule never fires and no max_time is set");
        if (horizon < pop_.time) throw std::invalid_argument("evolve: fixed time lies before the population time");

        level_counts_.assign(opts_.clock_levels.size(), 0.0);
        std::vector<Particle> active;
        for (Particle& p : pop_.particles) {
            motion_.refresh(p);
            for (std::size_t j = 0; j < opts_.clock_levels.size() && opts_.clock_levels[j] <= p.clock; ++j)
                level_counts_[j] += 1.0;
            if (p.frozen) {
                frozen_.push_back(p);
            } else if (p.clock >= stop_.level || motion_.outside(p)) {
                freeze(p, pop_.time);
            } else {
                if (!(p.threshold > p.clock)) p.threshold = p.clock + rng_.exponential(two_n_);
                active.push_back(p);
            }
        }

        std::size_t obs = 0;
        auto observe_until = [&](double t, std::size_t count) {
            while (obs < opts_.observe_times.size() && opts_.observe_times[obs] <= t) {
                stats_.observed_mass.push_back(static_cast<double>(count) / pop_.resolution);
                ++obs;
            }
        };
        double t = pop_.time;
        observe_until(t, active.size() + frozen_.size());

        while (!active.empty()) {
            if (t >= horizon) {
                for (Particle& p : active) freeze(p, t);
                active.clear();
                break;
            }
            double te = std::min(t + opts_.dt, horizon);
            if (obs < opts_.observe_times.size() && opts_.observe_times[obs] > t)
                te = std::min(te, opts_.observe_times[obs]);

            next_.clear();
            for (const Particle& p : active) {
                if (opts_.engine == BranchingEngine::family)
                    advance_family(p, t, te);
                else
                    advance_events(p, t, te);
                guard(te);
            }
            active.swap(next_);
            t = te;
            pop_.time = t;
            observe_until(t, active.size() + frozen_.size());
        }
        pop_.time = std::max(pop_.time, t);
        while (obs < opts_.observe_times.size()) {
            stats_.observed_mass.push_back(static_cast<double>(frozen_.size()) / pop_.resolution);
            ++obs;
        }

        pop_.particles = std::move(frozen_);
        if (!opts_.clock_levels.empty()) {
            const double top = opts_.clock_levels.back();
            for (const Particle& p : pop_.particles)
                if (p.clock < top) stats_.levels_complete = false;
        }
        stats_.level_mass.resize(level_counts_.size());
        for (std::size_t j = 0; j < level_counts_.size(); ++j)
            stats_.level_mass[j] = level_counts_[j] / pop_.resolution;
        return stats_;
    }

private:
    void freeze(Particle& p, double t) {
        p.frozen = true;
        p.freeze_time = t;
        frozen_.push_back(p);
    }

    void guard(double t) {
        if (stats_.particle_steps > opts_.max_particle_steps ||
            next_.size() + frozen_.size() > opts_.max_particles) {
            std::ostringstream msg;
            msg << "explosion guard: " << stats_.particle_steps << " particle-steps, " << next_.size() + frozen_.size()
                << " particles at t=" << t;
            throw ExplosionError(msg.str());
        }
    }

    // Tally one lineage alive over clock range (c0, c1].
    void tally(double c0, double c1, double weight = 1.0) {
        const auto& lv = opts_.clock_levels;
        for (auto it = std::upper_bound(lv.begin(), lv.end(), c0); it != lv.end() && *it <= c1; ++it)
            level_counts_[static_cast<std::size_t>(it - lv.begin())] += weight;
    }

    std::uint64_t family_sum(std::uint64_t s, double ds) {
        if (ds <= 0.0) return s;
        std::uint64_t total = 0;
        for (std::uint64_t i = 0; i < s; ++i) total += sample_family_size(pop_.resolution, ds, rng_);
        return total;
    }

    // Family size after K-budget from c0, tallying survivors at each level.
    std::uint64_t family_with_levels(double c0, double budget) {
        const auto& lv = opts_.clock_levels;
        const double c1 = c0 + budget;
        std::uint64_t s = 1;
        double cur = c0;
        for (auto it = std::upper_bound(lv.begin(), lv.end(), c0); it != lv.end() && *it <= c1; ++it) {
            s = family_sum(s, *it - cur);
            cur = *it;
            if (s == 0) return 0;
            level_counts_[static_cast<std::size_t>(it - lv.begin())] += static_cast<double>(s);
        }
        return family_sum(s, c1 - cur);
    }

    void emit(Particle& q, bool frozen, double t_freeze) {
        if (frozen)
            freeze(q, t_freeze);
        else
            next_.push_back(q);
    }

    Particle child_of(const Particle& parent, double birth) {
        Particle c = parent;
        c.id = pop_.next_id++;
        c.parent = parent.id;
        c.birth_time = birth;
        c.threshold = c.clock + rng_.exponential(two_n_);
        if (pop_.record_genealogy) pop_.genealogy.push_back({c.id, c.parent, c.birth_time});
        return c;
    }

    void advance_family(const Particle& p, double t, double te) {
        ++stats_.particle_steps;
        const auto& seg = motion_.step(p, t, te, rng_);
        double budget = seg.dk;
        const bool at_level = p.clock + budget >= stop_.level;
        if (at_level) budget = std::max(0.0, stop_.level - p.clock);

        const std::uint64_t k = family_with_levels(p.clock, budget);
        if (k == 0) {
            ++stats_.deaths;
            return;
        }
        Particle q = p;
        double t_freeze = motion_.end_time();
        bool frozen = seg.exited;
        if (at_level) {
            t_freeze = motion_.locate(budget, q, rng_);
            frozen = true;
        } else {
            motion_.finish(q);
        }
        q.clock = p.clock + budget;
        if (q.threshold <= q.clock) q.threshold = q.clock + rng_.exponential(two_n_);
        if (k == 1) {
            emit(q, frozen, t_freeze);
            return;
        }
        stats_.splits += k - 1;
        for (std::uint64_t i = 0; i < k; ++i) {
            Particle c = child_of(q, t_freeze);
            emit(c, frozen, t_freeze);
        }
    }

    void advance_events(const Particle& p, double t, double te) {
        stack_.clear();
        stack_.push_back({p, t});
        while (!stack_.empty()) {
            auto [q, tc] = stack_.back();
            stack_.pop_back();
            ++stats_.particle_steps;
            if (tc >= te) {
                next_.push_back(q);
                continue;
            }
            const auto& seg = motion_.step(q, tc, te, rng_);
            double budget = seg.dk;
            const bool at_level = q.clock + budget >= stop_.level;
            if (at_level) budget = std::max(0.0, stop_.level - q.clock);

            if (q.threshold <= q.clock + budget) {
                tally(q.clock, q.threshold);
                Particle base = q;
                const double tb = motion_.locate(q.threshold - q.clock, base, rng_);
                base.clock = q.threshold;
                if (!rng_.coin()) {
                    ++stats_.deaths;
                    continue;
                }
                ++stats_.splits;
                for (int i = 0; i < 2; ++i) stack_.push_back({child_of(base, tb), tb});
                continue;
            }

            tally(q.clock, q.clock + budget);
            const double c0 = q.clock;
            q.clock = c0 + budget;
            if (at_level) {
                const double tf = motion_.locate(budget, q, rng_);
                freeze(q, tf);
            } else {
                motion_.finish(q);
                emit(q, seg.exited, motion_.end_time());
            }
        }
    }

    struct Pending {
        Particle particle;
        double time;
    };

    Population& pop_;
    Motion& motion_;
    CompiledStop stop_;
    const EvolveOptions& opts_;
    Rng& rng_;
    double two_n_;
    EvolveStats stats_;
    std::vector<double> level_counts_;
    std::vector<Particle> next_;
    std::vector<Particle> frozen_;
    std::vector<Pending> stack_;
};

}  // namespace

std::size_t Population::active_count() const {
    return static_cast<std::size_t>(
        std::count_if(particles.begin(), particles.end(), [](const Particle& p) { return !p.frozen; }));
}

double Population::pairing(const std::function<double(double)>& phi) const {
    double s = 0.0;
    for (const Particle& p : particles) s += phi(p.x);
    return s / resolution;
}

InitialMeasure InitialMeasure::point(double mass, double x) {
    InitialMeasure m;
    m.kind = Kind::point;
    m.mass = mass;
    m.location = x;
    return m;
}

InitialMeasure InitialMeasure::uniform(double mass, double lo, double hi) {
    if (!(hi > lo)) throw std::invalid_argument("uniform initial measure needs lo < hi");
    InitialMeasure m;
    m.kind = Kind::uniform;
    m.mass = mass;
    m.range = {lo, hi};
    return m;
}

InitialMeasure InitialMeasure::lattice_point(double mass, const Site& site, int dim) {
    if (dim < 1 || dim > kMaxLatticeDim) throw std::invalid_argument("lattice dimension out of range");
    InitialMeasure m;
    m.kind = Kind::lattice_point;
    m.mass = mass;
    m.site = site;
    m.dim = dim;
    return m;
}

Population init_population(const InitialMeasure& spec, int resolution, Rng& rng, bool record_genealogy) {
    if (!(spec.mass > 0.0) || !std::isfinite(spec.mass)) throw std::invalid_argument("initial measure has zero mass");
    if (resolution < 1) throw std::invalid_argument("resolution N must be at least 1");
    const double expected = spec.mass * resolution;
    auto count = static_cast<std::uint64_t>(std::floor(expected));
    if (rng.uniform() < expected - static_cast<double>(count)) ++count;

    Population pop;
    pop.resolution = resolution;
    pop.record_genealogy = record_genealogy;
    if (spec.kind == InitialMeasure::Kind::lattice_point) {
        pop.motion = MotionKind::lattice;
        pop.dim = spec.dim;
    }
    pop.particles.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Particle p;
        p.id = pop.next_id++;
        switch (spec.kind) {
            case InitialMeasure::Kind::point:
                p.x = spec.location;
                break;
            case InitialMeasure::Kind::uniform:
                p.x = rng.uniform(spec.range.lo, spec.range.hi);
                break;
            case InitialMeasure::Kind::lattice_point:
                p.site = spec.site;
                break;
        }
        p.threshold = rng.exponential(2.0 * resolution);
        if (record_genealogy) pop.genealogy.push_back({p.id, 0, 0.0});
        pop.particles.push_back(p);
    }
    return pop;
}

StoppingRule StoppingRule::fixed_time(double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("fixed_time needs t >= 0");
    StoppingRule r;
    r.kind = Kind::fixed_time;
    r.time = t;
    return r;
}

StoppingRule StoppingRule::exit_interval(double lo, double hi) {
    if (!(hi > lo)) throw std::invalid_argument("exit_interval needs lo < hi");
    StoppingRule r;
    r.kind = Kind::exit_interval;
    r.lo = lo;
    r.hi = hi;
    return r;
}

StoppingRule StoppingRule::exit_cube(std::int64_t radius) {
    if (radius < 0) throw std::invalid_argument("exit_cube needs radius >= 0");
    StoppingRule r;
    r.kind = Kind::exit_cube;
    r.radius = radius;
    return r;
}

StoppingRule StoppingRule::k_level(double level) {
    if (!(level >= 0.0)) throw std::invalid_argument("k_level needs r >= 0");
    StoppingRule r;
    r.kind = Kind::k_level;
    r.level = level;
    return r;
}

StoppingRule StoppingRule::min_of(std::vector<StoppingRule> rules) {
    if (rules.empty()) throw std::invalid_argument("min_of needs at least one rule");
    StoppingRule r;
    r.kind = Kind::min_of;
    r.members = std::move(rules);
    return r;
}

std::uint64_t sample_family_size(int resolution, double s, Rng& rng) {
    if (s <= 0.0) return 1;
    const double ns = resolution * s;
    if (rng.uniform() < ns / (1.0 + ns)) return 0;
    // Given survival: 1 + Geometric with success probability 1 / (1 + ns).
    const double log_fail = std::log(ns / (1.0 + ns));
    return 1 + static_cast<std::uint64_t>(std::floor(std::log(rng.uniform_pos()) / log_fail));
}

EvolveStats evolve(Population& pop, const ContinuumRate& rate, const StoppingRule& stop, const EvolveOptions& opts,
                   Rng& rng) {
    if (pop.motion != MotionKind::brownian) throw std::invalid_argument("evolve: continuum rate needs Brownian motion");
    CompiledStop c;
    compile(stop, c);
    if (c.radius >= 0) throw std::invalid_argument("evolve: cube exits apply to lattice populations only");
    if (rate.is_zero() && !std::isfinite(std::min(c.horizon, opts.max_time)) && !c.has_interval)
        throw std::invalid_argument("evolve: clock level is unreachable under a zero catalyst");
    BrownianMotion motion(rate, c);
    return Engine<BrownianMotion>(pop, motion, c, opts, rng).run();
}

EvolveStats evolve(Population& pop, const LatticeCatalyst& medium, const StoppingRule& stop,
                   const EvolveOptions& opts, Rng& rng) {
    if (pop.motion != MotionKind::lattice) throw std::invalid_argument("evolve: lattice medium needs a lattice walk");
    if (pop.dim != medium.dim()) throw std::invalid_argument("evolve: population and medium dimensions differ");
    CompiledStop c;
    compile(stop, c);
    if (c.has_interval) throw std::invalid_argument("evolve: interval exits apply to Brownian populations only");
    LatticeMotion motion(medium, pop.dim, c);
    return Engine<LatticeMotion>(pop, motion, c, opts, rng).run();
}

void release_horizon(Population& pop) {
    for (Particle& p : pop.particles)
        if (p.frozen && p.freeze_time >= pop.time) p.frozen = false;
}

void reset_stage_clocks(Population& pop) {
    for (Particle& p : pop.particles) {
        p.frozen = false;
        p.threshold -= p.clock;
        p.clock = 0.0;
    }
    pop.stage_start = pop.time;
}

double total_mass(const Population& pop) { return pop.total_mass(); }

GoodBad classify_good_bad(const Population& pop, double xi) {
    if (!pop.stage_start) throw std::logic_error("classify_good_bad: stage clocks were never started");
    if (std::isnan(xi) || xi < 0.0) throw std::invalid_argument("classify_good_bad: xi must be >= 0");
    std::size_t good = 0;
    for (const Particle& p : pop.particles)
        if (p.clock >= xi) ++good;
    const double n = pop.resolution;
    return {static_cast<double>(good) / n, static_cast<double>(pop.particles.size() - good) / n};
}

TimeChangedMass time_changed_mass(Population pop, const ContinuumRate& rate, std::span<const double> r_grid,
                                  double horizon, const EvolveOptions& opts, Rng& rng) {
    if (r_grid.empty()) throw std::invalid_argument("time_changed_mass: empty r grid");
    if (!std::is_sorted(r_grid.begin(), r_grid.end()) || r_grid.front() < 0.0)
        throw std::invalid_argument("time_changed_mass: r grid must be sorted and nonnegative");
    reset_stage_clocks(pop);
    EvolveOptions o = opts;
    o.clock_levels.assign(r_grid.begin(), r_grid.end());
    const auto stop = StoppingRule::min_of(
        {StoppingRule::k_level(r_grid.back()), StoppingRule::fixed_time(pop.time + horizon)});
    const EvolveStats st = evolve(pop, rate, stop, o, rng);
    TimeChangedMass out;
    out.r_grid.assign(r_grid.begin(), r_grid.end());
    out.mass = st.level_mass;
    out.complete = st.levels_complete;
    return out;
}

Moments estimate_moments(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("estimate_moments needs at least two replicates");
    return {stats::mean(values), stats::variance(values)};
}

void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows) {
    os << "replicate,t,total_mass,good_mass,bad_mass,particle_count\n";
    os << std::setprecision(12);
    for (const TraceRow& r : rows)
        os << r.replicate << ',' << r.t << ',' << r.total_mass << ',' << r.good_mass << ',' << r.bad_mass << ','
           << r.particle_count << '\n';
}

}  // namespace catbranch
