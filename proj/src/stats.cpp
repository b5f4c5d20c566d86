#include "catbranch/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace catbranch::stats {

Estimate mean(std::span<const double> xs) {
    const auto n = static_cast<double>(xs.size());
    if (xs.empty()) throw std::invalid_argument("mean of empty sample");
    double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() < 2) return {m, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / (n - 1.0) / n)};
}

Estimate variance(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 3) throw std::invalid_argument("variance needs at least 3 samples");
    const double nd = static_cast<double>(n);
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / nd;
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double var = ss / (nd - 1.0);

    // Leave-one-out variances in O(n): removing x_i changes the mean to
    // m_i = (n m - x_i)/(n-1) and the sum of squares to ss - n/(n-1) (x_i - m)^2.
    double jm = 0.0;
    std::vector<double> loo(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = xs[i] - m;
        loo[i] = (ss - nd / (nd - 1.0) * d * d) / (nd - 2.0);
        jm += loo[i];
    }
    jm /= nd;
    double js = 0.0;
    for (double v : loo) js += (v - jm) * (v - jm);
    return {var, std::sqrt((nd - 1.0) / nd * js)};
}

Estimate proportion(std::size_t hits, std::size_t n) {
    if (n == 0) throw std::invalid_argument("proportion of zero trials");
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double ks_p(double d, double ne) {
    const double s = std::sqrt(ne);
    return kolmogorov_sf((s + 0.12 + 0.11 / s) * d);
}

}  // namespace

KsResult ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf,
                       const std::function<double(double)>& cdf_left) {
    if (xs.empty()) throw std::invalid_argument("KS test on empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < xs.size()) {
        std::size_t j = i;
        while (j < xs.size() && xs[j] == xs[i]) ++j;
        const double v = xs[i];
        const double f = cdf(v);
        const double fl = cdf_left ? cdf_left(v) : f;
        d = std::max(d, std::abs(static_cast<double>(j) / n - f));
        d = std::max(d, std::abs(static_cast<double>(i) / n - fl));
        i = j;
    }
    return {d, ks_p(d, n)};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("KS test on empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() || j < b.size()) {
        double v;
        if (j >= b.size() || (i < a.size() && a[i] <= b[j]))
            v = a[i];
        else
            v = b[j];
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return {d, ks_p(d, na * nb / (na + nb))};
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit needs matched samples");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

namespace {

double zscore(double est, double target, double se) {
    if (se > 0.0) return (est - target) / se;
    if (est == target) return 0.0;
    return est > target ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

}  // namespace

Check check_equal(std::string name, Estimate est, double target, double k, double abs_tol) {
    Check c{std::move(name), est.value, est.se, target, zscore(est.value, target, est.se), est.exact, false, {}};
    c.pass = std::abs(est.value - target) <= k * est.se + abs_tol;
    return c;
}

Check check_at_most(std::string name, Estimate est, double bound, double k) {
    Check c{std::move(name), est.value, est.se, bound, zscore(est.value, bound, est.se), est.exact, false, {}};
    c.pass = est.value <= bound + k * est.se;
    return c;
}

Check check_at_least(std::string name, Estimate est, double bound, double k) {
    Check c{std::move(name), est.value, est.se, bound, zscore(est.value, bound, est.se), est.exact, false, {}};
    c.pass = est.value >= bound - k * est.se;
    return c;
}

Check check_within(std::string name, double value, double target, double tol) {
    Check c{std::move(name), value, 0.0, target, 0.0, true, false, {}};
    c.pass = std::abs(value - target) <= tol;
    c.note = "tolerance " + std::to_string(tol);
    return c;
}

Check check_true(std::string name, bool ok, std::string note) {
    Check c{std::move(name), ok ? 1.0 : 0.0, 0.0, 1.0, 0.0, true, false, {}};
    c.pass = ok;
    c.note = std::move(note);
    return c;
}

}  // namespace catbranch::stats
