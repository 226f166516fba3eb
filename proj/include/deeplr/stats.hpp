#pragma once

#include <functional>
#include <span>

namespace deeplr::stats {

struct IntervalResult {
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.0;  // nominal coverage 1 - alpha
};

double normal_cdf(double x);

/// Inverse of the standard normal CDF. Throws DomainError unless 0 < p < 1.
double normal_quantile(double p);

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

/// Chi-square CDF with `dof` degrees of freedom, i.e. P(dof/2, x/2).
double chi2_cdf(double x, int dof);

/// Chi-square quantile by bisection on chi2_cdf.
double chi2_quantile(double p, int dof);

/// Likelihood-ratio interval for the mean of a Gaussian sample with unknown variance,
/// in its large-sample form mean +- z_{1-alpha/2} * sqrt(s^2 / n).
IntervalResult gaussian_mean_lr_interval(std::span<const double> samples, double alpha);

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and `cdf`.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

}  // namespace deeplr::stats
