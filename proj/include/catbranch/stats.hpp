#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace catbranch::stats {

/// A Monte Carlo estimate with its standard error. `exact` marks values that
/// are computed in closed form and carry no sampling error.
struct Estimate {
    double value = 0.0;
    double se = 0.0;
    bool exact = false;
};

Estimate mean(std::span<const double> xs);
/// Sample variance (n-1 denominator) with a jackknife standard error.
Estimate variance(std::span<const double> xs);
/// Binomial proportion with standard error sqrt(p(1-p)/n).
Estimate proportion(std::size_t hits, std::size_t n);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

/// One-sample KS test against `cdf`. `cdf_left` gives the left limit F(x-)
/// for laws with atoms; when empty the law is taken to be continuous.
KsResult ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf,
                       const std::function<double(double)>& cdf_left = {});
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// One reported comparison: estimate, its error, the target and the verdict.
struct Check {
    std::string name;
    double estimate = 0.0;
    double se = 0.0;
    double target = 0.0;
    double z = 0.0;
    bool exact = false;
    bool pass = false;
    std::string note;
};

/// |estimate - target| <= k * se (or <= abs_tol when se is zero).
Check check_equal(std::string name, Estimate est, double target, double k = 3.0, double abs_tol = 0.0);
/// estimate <= bound + k * se.
Check check_at_most(std::string name, Estimate est, double bound, double k = 3.0);
/// estimate >= bound - k * se.
Check check_at_least(std::string name, Estimate est, double bound, double k = 3.0);
/// Plain tolerance check on a deterministic value.
Check check_within(std::string name, double value, double target, double tol);
Check check_true(std::string name, bool ok, std::string note = {});

}  // namespace catbranch::stats
