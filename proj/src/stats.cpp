#include "deeplr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "deeplr/errors.hpp"

namespace deeplr::stats {

namespace {

constexpr int kMaxGammaIterations = 1000;
constexpr double kGammaEps = 1e-16;
constexpr double kTiny = 1e-300;

// Acklam's rational approximation, relative error ~1e-9 before refinement.
double acklam_quantile(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Series for P(a, x); converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kMaxGammaIterations; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kGammaEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x); used for x >= a + 1.
double gamma_q_continued_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxGammaIterations; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kGammaEps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void require_probability(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError(std::string(what) + ": probability must lie in (0, 1)");
    }
}

void require_dof(int dof) {
    if (dof < 1) throw DomainError("chi-square degrees of freedom must be >= 1");
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    require_probability(p, "normal_quantile");
    if (p == 0.5) return 0.0;
    double x = acklam_quantile(p);
    // Two Halley steps against erfc bring the error to rounding level.
    for (int i = 0; i < 2; ++i) {
        const double e = normal_cdf(x) - p;
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw DomainError("incomplete gamma: shape must be positive");
    if (!(x >= 0.0)) throw DomainError("incomplete gamma: argument must be nonnegative");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_continued_fraction(a, x);
}

double chi2_cdf(double x, int dof) {
    require_dof(dof);
    if (!(x >= 0.0)) throw DomainError("chi2_cdf: x must be nonnegative");
    return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(double p, int dof) {
    require_probability(p, "chi2_quantile");
    require_dof(dof);
    double lo = 0.0;
    double hi = std::max(1.0, static_cast<double>(dof));
    while (chi2_cdf(hi, dof) < p) {
        lo = hi;
        hi *= 2.0;
    }
    // bisect to full precision: near zero the low-dof CDFs are steep in x
    for (int i = 0; i < 2000; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (chi2_cdf(mid, dof) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

IntervalResult gaussian_mean_lr_interval(std::span<const double> samples, double alpha) {
    require_probability(alpha, "gaussian_mean_lr_interval");
    const std::size_t n = samples.size();
    if (n < 2) throw DegenerateDataError("at least two samples are required");
    if (std::all_of(samples.begin(), samples.end(),
                    [&](double y) { return y == samples.front(); })) {
        throw DegenerateDataError("sample variance is zero");
    }

    double mean = 0.0;
    for (double y : samples) mean += y;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double y : samples) ss += (y - mean) * (y - mean);

    const double nd = static_cast<double>(n);
    const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt((1.0 / nd) * (1.0 / (nd - 1.0)) * ss);
    return {mean - half, mean + half, 1.0 - alpha};
}

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw DomainError("ks_distance: no samples");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double distance = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        distance = std::max({distance, (i + 1) / n - f, f - i / n});
    }
    return std::clamp(distance, 0.0, 1.0);
}

}  // namespace deeplr::stats
