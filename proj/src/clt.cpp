#include "catbranch/clt.hpp"

#include <algorithm>
#include <stdexcept>

namespace catbranch {

CumulativeFunctional::CumulativeFunctional(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
    if (times_.size() != values_.size() || times_.empty())
        throw std::invalid_argument("cumulative functional needs matching, nonempty knots");
    if (values_.front() != 0.0) throw std::invalid_argument("cumulative functional must start at 0");
    for (std::size_t i = 1; i < times_.size(); ++i) {
        if (!(times_[i] > times_[i - 1])) throw std::invalid_argument("cumulative functional times must increase");
        if (values_[i] < values_[i - 1]) throw std::invalid_argument("cumulative functional must be non-decreasing");
    }
}

double CumulativeFunctional::value_at(double t) const {
    if (t <= times_.front()) return values_.front();
    if (t >= times_.back()) return values_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto k = static_cast<std::size_t>(it - times_.begin());
    const double w = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
    return values_[k - 1] + w * (values_[k] - values_[k - 1]);
}

std::optional<double> CumulativeFunctional::inverse(double r) const {
    if (r < 0.0) throw std::invalid_argument("inverse time change needs r >= 0");
    if (r <= values_.front()) return times_.front();
    if (r > values_.back()) return std::nullopt;
    const auto it = std::lower_bound(values_.begin(), values_.end(), r);
    const auto k = static_cast<std::size_t>(it - values_.begin());
    const double v0 = values_[k - 1];
    const double v1 = values_[k];
    return times_[k - 1] + (r - v0) / (v1 - v0) * (times_[k] - times_[k - 1]);
}

ContinuumRate::ContinuumRate(DensityCatalyst density) : density_(density) {}

ContinuumRate::ContinuumRate(AtomicCatalyst atoms, double eps)
    : atomic_(true), atoms_(std::move(atoms)), eps_(eps), inv_width_(1.0 / (2.0 * eps)) {
    if (!(eps > 0.0)) throw std::invalid_argument("smoothing width eps must be positive");
}

bool ContinuumRate::is_zero() const {
    if (atomic_) return atoms_.empty();
    return density_.max_level() == 0.0;
}

CumulativeFunctional integrate_rate(const Path& path, const ContinuumRate& rate) {
    std::vector<double> times(path.positions.size());
    std::vector<double> values(path.positions.size(), 0.0);
    double prev = rate(path.positions.front());
    times[0] = path.t0;
    for (std::size_t k = 1; k < path.positions.size(); ++k) {
        const double cur = rate(path.positions[k]);
        values[k] = values[k - 1] + 0.5 * path.dt * (prev + cur);
        times[k] = path.time_at(k);
        prev = cur;
    }
    return {std::move(times), std::move(values)};
}

CumulativeFunctional clt_atomic(const Path& path, const AtomicCatalyst& cat, double eps) {
    const auto [lo, hi] = std::minmax_element(path.positions.begin(), path.positions.end());
    // Only atoms within eps of the path's range can contribute.
    std::vector<Atom> reach = cat.atoms_between(*lo - eps - 1e-12, *hi + eps);
    const double margin = 2.0 * eps + 1.0;
    AtomicCatalyst local(std::move(reach), Interval{*lo - eps - margin, *hi + eps + margin});
    return integrate_rate(path, ContinuumRate(std::move(local), eps));
}

CumulativeFunctional clt_atomic(const Path& path, const LayeredCatalyst& cat, double eps) {
    return clt_atomic(path, cat.to_atomic(), eps);
}

CumulativeFunctional clt_density(const Path& path, const DensityCatalyst& cat) {
    return integrate_rate(path, ContinuumRate(cat));
}

CumulativeFunctional clt_lattice(const JumpPath& path, const LatticeCatalyst& cat) {
    std::vector<double> times{path.t0};
    std::vector<double> values{0.0};
    Site cur = path.start;
    double t = path.t0;
    for (const JumpEvent& e : path.events) {
        if (e.time > t) {
            values.push_back(values.back() + cat.at(cur) * (e.time - t));
            times.push_back(e.time);
        }
        t = e.time;
        cur = e.site;
    }
    if (path.t_end > t) {
        values.push_back(values.back() + cat.at(cur) * (path.t_end - t));
        times.push_back(path.t_end);
    }
    return {std::move(times), std::move(values)};
}

std::optional<double> inverse_time_change(const CumulativeFunctional& k, double r) { return k.inverse(r); }

}  // namespace catbranch
