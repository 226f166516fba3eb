#pragma once

// Reference implementations written independently of the library, used as test oracles.

#include <cmath>
#include <cstddef>

namespace oracle {

// Maclaurin series of erf in long double; accurate to ~1e-15 for |x| <= 5.
inline long double erf_series(long double x) {
    const long double pi = 3.141592653589793238462643383279502884L;
    long double term = x;
    long double sum = x;
    for (int n = 1; n < 400; ++n) {
        term *= -x * x / n;
        const long double add = term / (2 * n + 1);
        sum += add;
        if (std::fabs(add) < 1e-22L) break;
    }
    return 2.0L / std::sqrt(pi) * sum;
}

inline double phi(double x) {
    if (x < -5.0) return 0.5 * std::erfc(-x / std::sqrt(2.0));
    if (x > 5.0) return 1.0 - 0.5 * std::erfc(x / std::sqrt(2.0));
    return static_cast<double>(0.5L * (1.0L + erf_series(x / std::sqrt(2.0L))));
}

inline double normal_quantile(double p) {
    double lo = -10.0;
    double hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (phi(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// chi-square(1) is the law of a squared standard normal.
inline double chi2_1_cdf(double x) { return x <= 0.0 ? 0.0 : 2.0 * phi(std::sqrt(x)) - 1.0; }

inline double chi2_2_cdf(double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-0.5 * x); }

inline double chi2_3_cdf(double x) {
    if (x <= 0.0) return 0.0;
    const double pi = 3.14159265358979323846;
    return chi2_1_cdf(x) - std::sqrt(2.0 * x / pi) * std::exp(-0.5 * x);
}

}  // namespace oracle
