#pragma once
// Modified Bessel functions I_n and zeros of J_n'.

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hsks {

namespace detail {

inline constexpr double kSeriesSeam = 15.0;

// sum_k (x/2)^{2k+n} / (k! (k+n)!)
inline double bessel_i_series(int n, double x) {
    const double half = 0.5 * x;
    double term = 1.0;
    for (int k = 1; k <= n; ++k) term *= half / k;
    if (term == 0.0) return 0.0;
    const double q = half * half;
    double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= q / (static_cast<double>(k) * (k + n));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

// Hankel expansion e^x / sqrt(2 pi x) * sum_k (-1)^k a_k(n) / x^k, truncated at the smallest term.
inline double bessel_i_asymptotic(int n, double x) {
    const double mu = 4.0 * n * n;
    double term = 1.0;
    double sum = 1.0;
    double prev = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= -(mu - odd * odd) / (k * 8.0 * x);
        // terms grow while (2k-1)^2 < 4n^2; past that, stop at the smallest one
        if (2 * k - 1 > 2 * n && std::abs(term) > std::abs(prev)) break;
        sum += term;
        prev = term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return std::exp(x) / std::sqrt(2.0 * std::numbers::pi * x) * sum;
}

inline long double bessel_j_series(int n, long double x) {
    const long double half = 0.5L * x;
    long double term = 1.0L;
    for (int k = 1; k <= n; ++k) term *= half / k;
    const long double q = half * half;
    long double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= -q / (static_cast<long double>(k) * (k + n));
        sum += term;
        if (std::abs(term) < 1e-21L * (1.0L + std::abs(sum)) && k > half) break;
    }
    return sum;
}

}  // namespace detail

/// I_n(x) for n >= 0, x >= 0.
inline double bessel_i(int order, double x) {
    if (order < 0) throw std::invalid_argument("bessel_i: negative order");
    if (!(x >= 0.0)) throw std::domain_error("bessel_i: negative argument");
    if (x <= detail::kSeriesSeam) return detail::bessel_i_series(order, x);
    return detail::bessel_i_asymptotic(order, x);
}

/// I_n'(x) = (I_{n-1}(x) + I_{n+1}(x)) / 2, with I_{-1} = I_1.
inline double bessel_i_prime(int order, double x) {
    if (order < 0) throw std::invalid_argument("bessel_i_prime: negative order");
    if (!(x >= 0.0)) throw std::domain_error("bessel_i_prime: negative argument");
    if (order == 0) return bessel_i(1, x);
    return 0.5 * (bessel_i(order - 1, x) + bessel_i(order + 1, x));
}

/// J_n(x) by power series in extended precision; adequate for x up to ~30.
inline double bessel_j(int order, double x) {
    if (order < 0) throw std::invalid_argument("bessel_j: negative order");
    return static_cast<double>(detail::bessel_j_series(order, x));
}

inline double bessel_j_prime(int order, double x) {
    const long double lx = x;
    if (order == 0) return -static_cast<double>(detail::bessel_j_series(1, lx));
    return static_cast<double>(
        0.5L * (detail::bessel_j_series(order - 1, lx) - detail::bessel_j_series(order + 1, lx)));
}

/// index-th positive zero of J_order'.
inline double besselj_prime_zero(int order, int index) {
    if (order < 0 || index < 1) throw std::invalid_argument("besselj_prime_zero: bad order/index");
    // zeros of J_n' are spaced roughly pi apart; scan well below that spacing
    const double step = 0.05;
    double a = (order == 0) ? step : std::max(step, static_cast<double>(order) * 0.9);
    double fa = bessel_j_prime(order, a);
    int found = 0;
    while (a < 200.0) {
        const double b = a + step;
        const double fb = bessel_j_prime(order, b);
        if ((fa < 0.0) != (fb < 0.0) || fb == 0.0) {
            if (++found == index) {
                double lo = a, hi = b, flo = fa;
                for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = bessel_j_prime(order, mid);
                    if ((fm < 0.0) == (flo < 0.0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
        }
        a = b;
        fa = fb;
    }
    throw std::runtime_error("besselj_prime_zero: root not bracketed");
}

}  // namespace hsks
