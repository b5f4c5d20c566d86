#include "catbranch/catalyst.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <unordered_map>

namespace catbranch {

// --- AtomicCatalyst ----------------------------------------------------------

AtomicCatalyst::AtomicCatalyst(std::vector<Atom> atoms, Interval window, std::optional<double> period)
    : atoms_(std::move(atoms)), window_(window), period_(period) {
    if (window_.hi < window_.lo) throw std::invalid_argument("catalyst window has negative length");
    if (period_ && !(*period_ > 0.0)) throw std::invalid_argument("catalyst period must be positive");
    if (period_ && std::abs(*period_ - window_.length()) > 1e-12 * std::max(1.0, *period_))
        throw std::invalid_argument("periodic catalyst window must span exactly one period");
    for (const Atom& a : atoms_) {
        if (!(a.weight > 0.0)) throw std::invalid_argument("catalyst atom weights must be strictly positive");
        if (!window_.contains(a.location)) throw std::invalid_argument("catalyst atom outside its window");
    }
    std::sort(atoms_.begin(), atoms_.end(), [](const Atom& x, const Atom& y) { return x.location < y.location; });
    prefix_.resize(atoms_.size());
    double s = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        s += atoms_[i].weight;
        prefix_[i] = s;
    }
}

double AtomicCatalyst::cumulative(double y) const {
    auto local = [&](double z) {
        // mass of atoms with location <= z, for z inside [lo, hi]
        auto it = std::upper_bound(atoms_.begin(), atoms_.end(), z,
                                   [](double v, const Atom& a) { return v < a.location; });
        const auto k = static_cast<std::size_t>(it - atoms_.begin());
        return k == 0 ? 0.0 : prefix_[k - 1];
    };
    if (!period_) {
        if (y <= window_.lo) return 0.0;
        if (y >= window_.hi) return total_mass();
        return local(y);
    }
    const double p = *period_;
    const double shifts = std::floor((y - window_.lo) / p);
    double z = y - shifts * p;
    if (z <= window_.lo) z = window_.lo;  // round-off guard
    if (z > window_.hi) z = window_.hi;
    return shifts * total_mass() + local(z);
}

double AtomicCatalyst::mass_between(double a, double b) const {
    if (b <= a || atoms_.empty()) return 0.0;
    return cumulative(b) - cumulative(a);
}

std::vector<Atom> AtomicCatalyst::atoms_between(double a, double b) const {
    std::vector<Atom> out;
    if (b <= a || atoms_.empty()) return out;
    auto collect = [&](double shift) {
        for (const Atom& at : atoms_) {
            const double x = at.location + shift;
            if (x > a && x <= b) out.push_back({x, at.weight});
        }
    };
    if (!period_) {
        collect(0.0);
        return out;
    }
    const double p = *period_;
    const auto k0 = static_cast<long long>(std::floor((a - window_.hi) / p));
    const auto k1 = static_cast<long long>(std::ceil((b - window_.lo) / p));
    for (long long k = k0; k <= k1; ++k) collect(static_cast<double>(k) * p);
    std::sort(out.begin(), out.end(), [](const Atom& x, const Atom& y) { return x.location < y.location; });
    return out;
}

// --- LayeredCatalyst ---------------------------------------------------------

double LayeredCatalyst::layer_weight(int n) { return std::ldexp(1.0, -n); }

double LayeredCatalyst::total_mass() const {
    double m = 0.0;
    for (const auto& [n, pts] : layers) m += layer_weight(n) * static_cast<double>(pts.size());
    return m;
}

AtomicCatalyst LayeredCatalyst::to_atomic() const {
    std::vector<Atom> atoms;
    for (const auto& [n, pts] : layers)
        for (double x : pts) atoms.push_back({x, layer_weight(n)});
    return AtomicCatalyst(std::move(atoms), window, period);
}

AtomicCatalyst LayeredCatalyst::layer(int n) const {
    std::vector<Atom> atoms;
    if (auto it = layers.find(n); it != layers.end())
        for (double x : it->second) atoms.push_back({x, layer_weight(n)});
    return AtomicCatalyst(std::move(atoms), window, period);
}

// --- DensityCatalyst ---------------------------------------------------------

DensityCatalyst DensityCatalyst::parabolic(double q) {
    if (!(q > 0.0)) throw std::invalid_argument("parabolic exponent must be positive");
    DensityCatalyst c;
    c.kind = Kind::parabolic;
    c.q = q;
    c.level = 1.0;
    return c;
}

DensityCatalyst DensityCatalyst::constant(double level) {
    if (!(level >= 0.0)) throw std::invalid_argument("constant density must be nonnegative");
    DensityCatalyst c;
    c.kind = Kind::constant;
    c.level = level;
    return c;
}

DensityCatalyst DensityCatalyst::gap(double lo, double hi, double outside_level) {
    if (!(hi > lo)) throw std::invalid_argument("gap interval must be nonempty");
    if (!(outside_level >= 0.0)) throw std::invalid_argument("gap outside level must be nonnegative");
    DensityCatalyst c;
    c.kind = Kind::gap;
    c.level = outside_level;
    c.gap_interval = {lo, hi};
    return c;
}

// --- LatticeCatalyst ---------------------------------------------------------

int l1_distance(const Site& a, const Site& b) {
    int d = 0;
    for (int i = 0; i < kMaxLatticeDim; ++i) d += std::abs(a[i] - b[i]);
    return d;
}

LatticeCatalyst::LatticeCatalyst(int dim, int radius_exponent, std::vector<double> values, double outside_default)
    : dim_(dim), radius_exponent_(radius_exponent), values_(std::move(values)), outside_default_(outside_default) {
    if (dim_ < 1 || dim_ > kMaxLatticeDim) throw std::invalid_argument("lattice dimension must be in 1..3");
    if (radius_exponent_ < 0 || radius_exponent_ > 30) throw std::invalid_argument("bad cube radius exponent");
    radius_ = std::int64_t{1} << radius_exponent_;
    std::size_t expect = 1;
    for (int i = 0; i < dim_; ++i) expect *= static_cast<std::size_t>(side());
    if (values_.size() != expect) throw std::invalid_argument("lattice values do not cover the cube");
    for (double v : values_)
        if (!(v > 0.0 && std::isfinite(v))) throw std::invalid_argument("lattice catalyst values must be positive");
    if (!(outside_default_ > 0.0 && outside_default_ <= 1.0))
        throw std::invalid_argument("lattice outside value must lie in (0,1]");
}

bool LatticeCatalyst::in_cube(const Site& s) const {
    for (int i = 0; i < dim_; ++i)
        if (s[i] < -radius_ || s[i] > radius_) return false;
    return true;
}

std::size_t LatticeCatalyst::index_of(const Site& s) const {
    std::size_t idx = 0;
    for (int i = 0; i < dim_; ++i) idx = idx * static_cast<std::size_t>(side()) + static_cast<std::size_t>(s[i] + radius_);
    return idx;
}

Site LatticeCatalyst::site_of(std::size_t index) const {
    Site s{0, 0, 0};
    const auto w = static_cast<std::size_t>(side());
    for (int i = dim_ - 1; i >= 0; --i) {
        s[i] = static_cast<std::int32_t>(static_cast<std::int64_t>(index % w) - radius_);
        index /= w;
    }
    return s;
}

double LatticeCatalyst::at(const Site& s) const { return in_cube(s) ? values_[index_of(s)] : outside_default_; }

// --- stable catalyst ---------------------------------------------------------

double stable_band_constant(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("stable index gamma must lie in (0,1)");
    static std::mutex mu;
    static std::unordered_map<double, double> cache;
    std::lock_guard lock(mu);
    if (auto it = cache.find(gamma); it != cache.end()) return it->second;

    // int_0^inf r^{-1-gamma}(1 - e^{-r}) dr, split at 1: the integrand behaves
    // like r^{-gamma} near 0 and r^{-1-gamma} at infinity.
    auto f = [gamma](double r) { return std::pow(r, -1.0 - gamma) * -std::expm1(-r); };
    auto g = [gamma](double r) { return r > 0.0 ? std::pow(r, -gamma) * (-std::expm1(-r) / r) : 0.0; };
    boost::math::quadrature::tanh_sinh<double> head_rule;
    const double head = head_rule.integrate(g, 0.0, 1.0, 1e-13);
    boost::math::quadrature::exp_sinh<double> tail_rule;
    const double tail = tail_rule.integrate(f, 1.0, std::numeric_limits<double>::infinity(), 1e-13);
    const double c = (1.0 - std::pow(2.0, -gamma)) / gamma / (head + tail);
    cache.emplace(gamma, c);
    return c;
}

double stable_band_intensity(double gamma, int n) { return stable_band_constant(gamma) * std::pow(2.0, gamma * n); }

double stable_band_weight_mean(double gamma, int n) {
    const double a = std::ldexp(1.0, -n);
    return a * gamma * (std::pow(2.0, 1.0 - gamma) - 1.0) / ((1.0 - gamma) * (1.0 - std::pow(2.0, -gamma)));
}

double stable_band_weight_second_moment(double gamma, int n) {
    const double a = std::ldexp(1.0, -n);
    return a * a * gamma * (std::pow(2.0, 2.0 - gamma) - 1.0) / ((2.0 - gamma) * (1.0 - std::pow(2.0, -gamma)));
}

double sample_band_weight(double gamma, int n, Rng& rng) {
    // CDF on [a, 2a): (1 - (w/a)^{-gamma}) / (1 - 2^{-gamma}).
    const double a = std::ldexp(1.0, -n);
    const double u = rng.uniform();
    const double w = a * std::pow(1.0 - u * (1.0 - std::pow(2.0, -gamma)), -1.0 / gamma);
    return std::min(w, std::nextafter(2.0 * a, 0.0));
}

namespace {

void check_gamma(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("stable index gamma must lie in (0,1)");
}

// Deepest band kept for a weight floor: band n spans [2^-n, 2^-n+1) and is
// dropped once 2^-n+1 <= floor.
int deepest_band(double weight_floor) {
    int n = 1;
    while (std::ldexp(1.0, -n + 1) > weight_floor && n < 1100) ++n;
    return n - 1;
}

// All weights >= 1 (bands n <= 0) form one Pareto band: expected count per
// unit length c_gamma / (1 - 2^-gamma), weight = U^{-1/gamma}.
double heavy_band_intensity(double gamma) { return stable_band_constant(gamma) / (1.0 - std::pow(2.0, -gamma)); }

double sample_heavy_weight(double gamma, Rng& rng) { return std::pow(rng.uniform_pos(), -1.0 / gamma); }

}  // namespace

AtomicCatalyst sample_stable_catalyst(double gamma, Interval window, double weight_floor, double intensity_scale,
                                      Rng& rng) {
    check_gamma(gamma);
    if (!(window.hi >= window.lo)) throw std::invalid_argument("stable catalyst window is empty");
    if (!(weight_floor > 0.0 && weight_floor < 1.0)) throw std::invalid_argument("weight_floor must lie in (0,1)");
    if (!(intensity_scale > 0.0)) throw std::invalid_argument("intensity_scale must be positive");
    const double len = window.length();
    std::vector<Atom> atoms;
    if (len <= 0.0) return AtomicCatalyst({}, window);

    auto place = [&](double w) { atoms.push_back({window.hi - len * rng.uniform(), w}); };
    const auto heavy = rng.poisson(intensity_scale * heavy_band_intensity(gamma) * len);
    for (std::uint64_t i = 0; i < heavy; ++i) place(sample_heavy_weight(gamma, rng));
    const int deepest = deepest_band(weight_floor);
    for (int n = 1; n <= deepest; ++n) {
        const auto k = rng.poisson(intensity_scale * stable_band_intensity(gamma, n) * len);
        for (std::uint64_t i = 0; i < k; ++i) place(sample_band_weight(gamma, n, rng));
    }
    return AtomicCatalyst(std::move(atoms), window);
}

double sample_stable_window_mass(double gamma, double length, Rng& rng, const StableMassOptions& opts) {
    check_gamma(gamma);
    if (!(length >= 0.0)) throw std::invalid_argument("window length must be nonnegative");
    if (length == 0.0) return 0.0;
    double mass = 0.0;
    const auto heavy = rng.poisson(heavy_band_intensity(gamma) * length);
    for (std::uint64_t i = 0; i < heavy; ++i) mass += sample_heavy_weight(gamma, rng);
    const int deepest = deepest_band(opts.weight_floor);
    const double shrink = 1.0 - std::exp2(-gamma);
    const double growth = std::exp2(gamma);
    const double mean_coef = gamma * (std::exp2(1.0 - gamma) - 1.0) / ((1.0 - gamma) * shrink);
    const double second_coef = gamma * (std::exp2(2.0 - gamma) - 1.0) / ((2.0 - gamma) * shrink);
    // Bands above the exact-count limit are independent near-normal sums; one draw covers them all.
    double normal_mean = 0.0, normal_var = 0.0;
    double lambda = stable_band_constant(gamma) * length;
    for (int n = 1; n <= deepest; ++n) {
        lambda *= growth;
        const double a = std::ldexp(1.0, -n);
        if (lambda <= opts.exact_count_limit) {
            const auto k = rng.poisson(lambda);
            for (std::uint64_t i = 0; i < k; ++i)
                mass += std::min(a * std::pow(1.0 - rng.uniform() * shrink, -1.0 / gamma), std::nextafter(2.0 * a, 0.0));
        } else {
            normal_mean += lambda * a * mean_coef;
            normal_var += lambda * a * a * second_coef;
        }
    }
    if (normal_var > 0.0) mass += std::max(0.0, rng.normal(normal_mean, std::sqrt(normal_var)));
    return mass;
}

LayeredCatalyst quantize_and_truncate(const AtomicCatalyst& cat, int n_min) {
    if (n_min < 0) throw std::invalid_argument("truncation level N must be nonnegative");
    LayeredCatalyst out;
    out.n_min = n_min;
    out.window = cat.window();
    out.period = cat.period();
    for (const Atom& a : cat.atoms()) {
        int e = 0;
        std::frexp(a.weight, &e);  // weight in [2^{e-1}, 2^e)
        const int n = 1 - e;
        if (n < n_min) continue;  // weight >= 2^{-N+1}
        out.layers[n].push_back(a.location);
    }
    for (auto& [n, pts] : out.layers) std::sort(pts.begin(), pts.end());
    return out;
}

AtomicCatalyst periodic_extension(const AtomicCatalyst& cat, double half_width) {
    if (!(half_width > 0.0)) throw std::invalid_argument("periodic extension needs K > 0");
    const Interval w{-half_width, half_width};
    std::vector<Atom> kept = cat.atoms_between(w.lo, w.hi);
    return AtomicCatalyst(std::move(kept), w, 2.0 * half_width);
}

LayeredCatalyst periodic_extension(const LayeredCatalyst& cat, double half_width) {
    if (!(half_width > 0.0)) throw std::invalid_argument("periodic extension needs K > 0");
    LayeredCatalyst out;
    out.n_min = cat.n_min;
    out.window = {-half_width, half_width};
    out.period = 2.0 * half_width;
    for (const auto& [n, pts] : cat.layers) {
        AtomicCatalyst layer = cat.layer(n);
        std::vector<double> kept;
        for (const Atom& a : layer.atoms_between(out.window.lo, out.window.hi)) kept.push_back(a.location);
        if (!kept.empty()) out.layers[n] = std::move(kept);
    }
    return out;
}

double max_gap(std::span<const double> sorted_points, Interval window, std::optional<double> period) {
    std::vector<double> pts;
    for (double x : sorted_points)
        if (x >= window.lo && x <= window.hi) pts.push_back(x);
    if (pts.empty()) return std::numeric_limits<double>::infinity();
    double g = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) g = std::max(g, pts[i] - pts[i - 1]);
    if (period) g = std::max(g, pts.front() + *period - pts.back());
    return g;
}

// --- lattice -----------------------------------------------------------------

LatticeCatalyst sample_lattice_catalyst(int dim, int radius_exponent, Rng& rng, const LatticeLimits& limits) {
    if (dim < 1 || dim > kMaxLatticeDim) throw std::invalid_argument("lattice dimension must be in 1..3");
    if (radius_exponent < 0 || radius_exponent > 30) throw std::invalid_argument("bad cube radius exponent");
    const double side = std::ldexp(1.0, radius_exponent + 1) + 1.0;
    const double sites = std::pow(side, dim);
    if (sites > static_cast<double>(limits.max_sites)) throw std::length_error("lattice cube exceeds the site cap");
    std::vector<double> values(static_cast<std::size_t>(sites));
    for (double& v : values) {
        do {
            v = rng.uniform();
        } while (v == 0.0);
    }
    return LatticeCatalyst(dim, radius_exponent, std::move(values), 1.0);
}

std::size_t largest_low_cluster(const LatticeCatalyst& cat, double zeta) {
    const std::size_t n = cat.site_count();
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack;
    std::size_t best = 0;
    for (std::size_t start = 0; start < n; ++start) {
        if (seen[start] || cat.values()[start] > zeta) continue;
        std::size_t size = 0;
        seen[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            ++size;
            const Site s = cat.site_of(cur);
            for (int i = 0; i < cat.dim(); ++i) {
                for (int step : {-1, 1}) {
                    Site nb = s;
                    nb[i] += step;
                    if (!cat.in_cube(nb)) continue;
                    const std::size_t j = cat.index_of(nb);
                    if (seen[j] || cat.values()[j] > zeta) continue;
                    seen[j] = 1;
                    stack.push_back(j);
                }
            }
        }
        best = std::max(best, size);
    }
    return best;
}

bool cluster_event(const LatticeCatalyst& cat, int m, double zeta) {
    if (m < 1) throw std::invalid_argument("cluster size m must be >= 1");
    // A component with >= m sites contains a connected subset of exactly m sites.
    return largest_low_cluster(cat, zeta) < static_cast<std::size_t>(m);
}

std::uint64_t count_connected_sets(int m, int dim) {
    if (m < 1 || dim < 1 || dim > kMaxLatticeDim) throw std::invalid_argument("bad arguments to count_connected_sets");
    using Set = std::vector<Site>;
    std::set<Set> level{Set{Site{0, 0, 0}}};
    for (int size = 1; size < m; ++size) {
        std::set<Set> next;
        for (const Set& s : level) {
            for (const Site& p : s) {
                for (int i = 0; i < dim; ++i) {
                    for (int step : {-1, 1}) {
                        Site nb = p;
                        nb[i] += step;
                        if (std::find(s.begin(), s.end(), nb) != s.end()) continue;
                        Set grown = s;
                        grown.insert(std::upper_bound(grown.begin(), grown.end(), nb), nb);
                        next.insert(std::move(grown));
                    }
                }
            }
        }
        level = std::move(next);
    }
    return level.size();
}

}  // namespace catbranch
