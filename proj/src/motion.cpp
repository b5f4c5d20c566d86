#include "catbranch/motion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace catbranch {

Site JumpPath::site_at(double t) const {
    Site s = start;
    for (const JumpEvent& e : events) {
        if (e.time > t) break;
        s = e.site;
    }
    return s;
}

Path brownian_path(double a, double t0, double t1, double dt, Rng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("brownian_path: dt must be positive");
    if (!(t1 > t0)) throw std::invalid_argument("brownian_path: need t1 > t0");
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((t1 - t0) / dt - 1e-9)));
    Path p;
    p.t0 = t0;
    p.dt = (t1 - t0) / static_cast<double>(n);
    p.positions.resize(n + 1);
    p.positions[0] = a;
    const double sd = std::sqrt(p.dt);
    for (std::size_t k = 0; k < n; ++k) p.positions[k + 1] = p.positions[k] + sd * rng.normal();
    return p;
}

JumpPath random_walk_path(const Site& a, int dim, double t0, double t1, Rng& rng) {
    if (dim < 1 || dim > kMaxLatticeDim) throw std::invalid_argument("random_walk_path: bad dimension");
    if (t1 < t0) throw std::invalid_argument("random_walk_path: need t1 >= t0");
    JumpPath p;
    p.dim = dim;
    p.t0 = t0;
    p.t_end = t1;
    p.start = a;
    Site cur = a;
    double t = t0 + rng.exponential(1.0);
    while (t <= t1 && t1 > t0) {
        const auto r = rng.below(static_cast<std::uint64_t>(2 * dim));
        cur[r / 2] += (r % 2 == 0) ? 1 : -1;
        p.events.push_back({t, cur});
        t += rng.exponential(1.0);
    }
    return p;
}

namespace {

std::size_t grid_index_at_or_after(const Path& path, double t) {
    if (t <= path.t0) return 0;
    const double x = (t - path.t0) / path.dt;
    auto k = static_cast<std::size_t>(std::ceil(x - 1e-9));
    return std::min(k, path.steps());
}

std::size_t grid_index_at_or_before(const Path& path, double t) {
    if (t <= path.t0) return 0;
    const double x = (t - path.t0) / path.dt;
    auto k = static_cast<std::size_t>(std::floor(x + 1e-9));
    return std::min(k, path.steps());
}

double trapezoid_occupation(const Path& path, std::size_t from, std::size_t to, double lo, double hi, bool closed_hi) {
    auto in = [&](double x) { return x >= lo && (closed_hi ? x <= hi : x < hi); };
    double occ = 0.0;
    for (std::size_t k = from; k < to; ++k)
        occ += 0.5 * path.dt * (static_cast<double>(in(path.positions[k])) + static_cast<double>(in(path.positions[k + 1])));
    return occ;
}

}  // namespace

double local_time(const Path& path, double b, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("local_time: eps must be positive");
    return trapezoid_occupation(path, 0, path.steps(), b - eps, b + eps, false) / (2.0 * eps);
}

double local_time(const Path& path, double b, double eps, double from_time, double to_time) {
    if (!(eps > 0.0)) throw std::invalid_argument("local_time: eps must be positive");
    const std::size_t i = grid_index_at_or_after(path, from_time);
    const std::size_t j = grid_index_at_or_before(path, to_time);
    if (j <= i) return 0.0;
    return trapezoid_occupation(path, i, j, b - eps, b + eps, false) / (2.0 * eps);
}

double occupation_time(const Path& path, double lo, double hi) {
    return trapezoid_occupation(path, 0, path.steps(), lo, hi, true);
}

double occupation_time(const JumpPath& path, const std::function<bool(const Site&)>& in_region) {
    double occ = 0.0;
    double t = path.t0;
    Site cur = path.start;
    for (const JumpEvent& e : path.events) {
        if (in_region(cur)) occ += e.time - t;
        t = e.time;
        cur = e.site;
    }
    if (in_region(cur)) occ += path.t_end - t;
    return occ;
}

std::optional<Hit> first_hit_detail(const Path& path, std::span<const double> targets, double from_time,
                                    const HitOptions& opts) {
    if (targets.empty() || path.positions.empty()) return std::nullopt;
    if (opts.bridge_correction && opts.rng == nullptr) throw std::invalid_argument("bridge correction needs an rng");
    const std::size_t k0 = grid_index_at_or_after(path, from_time);
    auto on_target = [&](double x) { return std::binary_search(targets.begin(), targets.end(), x); };
    if (on_target(path.positions[k0])) return Hit{std::max(from_time, path.time_at(k0)), path.positions[k0]};
    for (std::size_t k = k0; k < path.steps(); ++k) {
        const double x0 = path.positions[k];
        const double x1 = path.positions[k + 1];
        const double lo = std::min(x0, x1);
        const double hi = std::max(x0, x1);
        auto it = std::lower_bound(targets.begin(), targets.end(), lo);
        if (it != targets.end() && *it <= hi) {
            // the bracketed target nearest to the segment start
            double y = *it;
            if (x1 < x0) y = *std::prev(std::upper_bound(targets.begin(), targets.end(), hi));
            return Hit{path.time_at(k + 1), y};
        }
        if (opts.bridge_correction) {
            const double u = opts.rng->uniform();
            double miss = 1.0;
            double nearest = 0.0;
            double best = -1.0;
            auto consider = [&](double y) {
                const double p = std::exp(-2.0 * (x0 - y) * (x1 - y) / path.dt);
                miss *= 1.0 - p;
                if (p > best) {
                    best = p;
                    nearest = y;
                }
            };
            if (it != targets.end()) consider(*it);
            if (it != targets.begin()) consider(*std::prev(it));
            if (u >= miss) return Hit{path.time_at(k + 1), nearest};
        }
    }
    return std::nullopt;
}

std::optional<double> first_hit(const Path& path, std::span<const double> targets, double from_time,
                                const HitOptions& opts) {
    auto h = first_hit_detail(path, targets, from_time, opts);
    if (!h) return std::nullopt;
    return h->time;
}

std::optional<double> exit_time(const Path& path, double lo, double hi) {
    if (path.positions.empty()) return std::nullopt;
    const double x0 = path.positions.front();
    if (!(x0 > lo && x0 < hi)) throw std::invalid_argument("exit_time: path starts outside the region");
    for (std::size_t k = 1; k < path.positions.size(); ++k) {
        const double x = path.positions[k];
        if (!(x > lo && x < hi)) return path.time_at(k);
    }
    return std::nullopt;
}

std::optional<double> exit_time(const JumpPath& path, std::int64_t radius) {
    auto inside = [&](const Site& s) {
        for (int i = 0; i < path.dim; ++i)
            if (s[i] < -radius || s[i] > radius) return false;
        return true;
    };
    if (!inside(path.start)) throw std::invalid_argument("exit_time: walk starts outside the cube");
    for (const JumpEvent& e : path.events)
        if (!inside(e.site)) return e.time;
    return std::nullopt;
}

double path_supremum(const Path& path, Rng* rng) {
    double m = path.positions.front();
    for (std::size_t k = 0; k < path.steps(); ++k) {
        const double x0 = path.positions[k];
        const double x1 = path.positions[k + 1];
        if (rng) {
            // maximum of a Brownian bridge from x0 to x1 over time dt
            const double d = x1 - x0;
            m = std::max(m, 0.5 * (x0 + x1 + std::sqrt(d * d - 2.0 * path.dt * std::log(rng->uniform_pos()))));
        } else {
            m = std::max(m, x1);
        }
    }
    return m;
}

HittingCycle hitting_cycle(const Path& path, std::span<const double> targets, double dwell, int cycles, double eps) {
    if (!(dwell > 0.0) || cycles < 1) throw std::invalid_argument("hitting_cycle: bad dwell or cycle count");
    HittingCycle out;
    double kappa = path.t0;
    for (int m = 0; m < cycles; ++m) {
        auto hit = first_hit_detail(path, targets, kappa);
        if (!hit || hit->time + dwell > path.t_end() + 1e-12) {
            out.truncated = true;
            break;
        }
        out.hitting_delays.push_back(hit->time - kappa);
        out.local_times.push_back(local_time(path, hit->target, eps, hit->time, hit->time + dwell));
        kappa = hit->time + dwell;
    }
    return out;
}

// --- calibration -------------------------------------------------------------

stats::Estimate occupation_tail_probability(double theta, double t, double a, double dt, std::size_t paths, Rng& rng) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < paths; ++i) {
        const Path p = brownian_path(a, 0.0, t, dt, rng);
        if (occupation_time(p, -theta, theta) >= 0.5 * t) ++hits;
    }
    return stats::proportion(hits, paths);
}

OccupationLdFit calibrate_occupation_ld(std::span<const double> times, double dt, std::size_t paths, Rng& rng) {
    if (times.size() < 2) throw std::invalid_argument("calibrate_occupation_ld needs at least two horizons");
    OccupationLdFit out;
    out.times.assign(times.begin(), times.end());
    const double horizon = *std::max_element(times.begin(), times.end());
    std::vector<std::size_t> hits(times.size(), 0);
    for (std::size_t i = 0; i < paths; ++i) {
        const Path p = brownian_path(0.0, 0.0, horizon, dt, rng);
        double occ = 0.0;
        std::size_t next = 0;
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t j = 0; j < times.size(); ++j) order.emplace_back(times[j], j);
        std::sort(order.begin(), order.end());
        for (std::size_t k = 0; k < p.steps() && next < order.size(); ++k) {
            const auto in = [](double x) { return x >= -1.0 && x <= 1.0 ? 1.0 : 0.0; };
            occ += 0.5 * p.dt * (in(p.positions[k]) + in(p.positions[k + 1]));
            while (next < order.size() && p.time_at(k + 1) >= order[next].first - 1e-12) {
                if (occ >= 0.5 * order[next].first) ++hits[order[next].second];
                ++next;
            }
        }
    }
    std::vector<double> logs;
    for (std::size_t j = 0; j < times.size(); ++j) {
        out.probabilities.push_back(stats::proportion(hits[j], paths));
        logs.push_back(std::log(std::max(out.probabilities.back().value, 1e-300)));
    }
    out.fit = stats::linear_fit(out.times, logs);
    out.c0 = -out.fit.slope;
    return out;
}

stats::Estimate calibrate_half_mean_sup(double dt, std::size_t paths, Rng& rng) {
    std::vector<double> sups(paths);
    for (auto& s : sups) s = 0.5 * path_supremum(brownian_path(0.0, 0.0, 1.0, dt, rng), &rng);
    return stats::mean(sups);
}

SumLdFit calibrate_sum_ld(double a, std::span<const int> ks, double dt, std::size_t samples, Rng& rng) {
    if (ks.empty()) throw std::invalid_argument("calibrate_sum_ld needs k values");
    SumLdFit out;
    out.ks.assign(ks.begin(), ks.end());
    const int kmax = *std::max_element(ks.begin(), ks.end());
    std::vector<std::size_t> hits(ks.size(), 0);
    for (std::size_t i = 0; i < samples; ++i) {
        double sum = 0.0;
        for (int m = 1; m <= kmax; ++m) {
            sum += path_supremum(brownian_path(0.0, 0.0, 1.0, dt, rng), &rng);
            for (std::size_t j = 0; j < ks.size(); ++j)
                if (ks[j] == m && sum < a * m) ++hits[j];
        }
    }
    out.c1 = std::numeric_limits<double>::infinity();
    std::vector<double> kd;
    std::vector<double> logs;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        auto p = stats::proportion(hits[j], samples);
        out.probabilities.push_back(p);
        if (p.value > 0.0) {
            kd.push_back(ks[j]);
            logs.push_back(std::log(p.value));
            out.c1 = std::min(out.c1, -std::log(p.value) / (2.0 * ks[j]));
        }
    }
    if (kd.size() >= 2) out.fit = stats::linear_fit(kd, logs);
    return out;
}

HittingTailFit hitting_tail(double spacing, std::span<const double> levels, double dt, std::size_t paths, Rng& rng) {
    if (!(spacing > 0.0) || levels.empty()) throw std::invalid_argument("hitting_tail: bad arguments");
    HittingTailFit out;
    out.spacing = spacing;
    out.levels.assign(levels.begin(), levels.end());
    const double smax = *std::max_element(levels.begin(), levels.end());
    const double sd = std::sqrt(dt);
    std::vector<std::size_t> survive(levels.size(), 0);
    for (std::size_t i = 0; i < paths; ++i) {
        double x = 0.5 * spacing;
        double t = 0.0;
        bool hit = false;
        while (t < smax) {
            const double x1 = x + sd * rng.normal();
            t += dt;
            if (x1 <= 0.0 || x1 >= spacing) {
                hit = true;
            } else {
                const double p0 = std::exp(-2.0 * x * x1 / dt);
                const double p1 = std::exp(-2.0 * (spacing - x) * (spacing - x1) / dt);
                if (rng.uniform() >= (1.0 - p0) * (1.0 - p1)) hit = true;
            }
            if (hit) break;
            x = x1;
        }
        const double h = hit ? t : std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < levels.size(); ++j)
            if (h >= levels[j]) ++survive[j];
    }
    std::vector<double> logs;
    for (std::size_t j = 0; j < levels.size(); ++j) {
        out.tail.push_back(stats::proportion(survive[j], paths));
        logs.push_back(std::log(std::max(out.tail.back().value, 1e-300)));
    }
    if (levels.size() >= 2) out.fit = stats::linear_fit(out.levels, logs);
    return out;
}

}  // namespace catbranch
