#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace catbranch {

/// Random stream used by every sampler. One stream per replicate; streams are
/// derived from (seed, index) so replicates can run in any order or thread.
class Rng {
public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed = 0x5eedULL) : engine_(seed) {}

    /// Independent stream for replicate `index` of an experiment seeded with `seed`.
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                          0x9e3779b9u};
        Rng r;
        r.engine_.seed(seq);
        return r;
    }

    /// Uniform on [0, 1).
    double uniform() { return unif_(engine_); }
    /// Uniform on (0, 1]; safe inside log().
    double uniform_pos() { return 1.0 - unif_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unif_(engine_); }
    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
    /// Exponential with the given rate (mean 1/rate).
    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        std::poisson_distribution<std::uint64_t> d(mean);
        return d(engine_);
    }
    double gamma(double shape, double scale) {
        std::gamma_distribution<double> d(shape, scale);
        return d(engine_);
    }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
        return d(engine_);
    }
    bool coin() { return (engine_() >> 63) != 0; }

    engine_type& engine() { return engine_; }

private:
    engine_type engine_;
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace catbranch
