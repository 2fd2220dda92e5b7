#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "turbulux/numerics.hpp"

namespace turbulux::numerics {
namespace {

constexpr double kSeriesLimit = 30.0;

double bessel_series(int order, double x) {
    // sum_k (x/2)^{2k+n} / (k! (k+n)!)
    const double half = 0.5 * x;
    const double q = half * half;
    double term = order == 0 ? 1.0 : half;
    double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k + order));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum * std::exp(-x);
}

double bessel_asymptotic(int order, double x) {
    const double mu = 4.0 * order * order;
    double term = 1.0;
    double sum = 1.0;
    double last = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= -(mu - odd * odd) / (k * 8.0 * x);
        if (std::abs(term) > last) break;  // divergent tail of the series
        sum += term;
        last = std::abs(term);
        if (last < 1e-17 * std::abs(sum)) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

struct PoissonWindow {
    long lo = 0;
    std::vector<double> pmf;

    long hi() const { return lo + static_cast<long>(pmf.size()) - 1; }
};

/// Poisson(mean) probabilities on [lo, hi], built outward from the mode so
/// nothing underflows where the mass actually is.
PoissonWindow poisson_window(double mean, long lo, long hi) {
    PoissonWindow w;
    w.lo = lo;
    w.pmf.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
    if (mean == 0.0) {
        if (lo == 0) w.pmf[0] = 1.0;
        return w;
    }
    const long mode = std::clamp(static_cast<long>(std::floor(mean)), lo, hi);
    const double log_p = -mean + static_cast<double>(mode) * std::log(mean) -
                         std::lgamma(static_cast<double>(mode) + 1.0);
    w.pmf[static_cast<std::size_t>(mode - lo)] = std::exp(log_p);
    for (long k = mode; k < hi; ++k) {
        w.pmf[static_cast<std::size_t>(k + 1 - lo)] =
            w.pmf[static_cast<std::size_t>(k - lo)] * mean / static_cast<double>(k + 1);
    }
    for (long k = mode; k > lo; --k) {
        w.pmf[static_cast<std::size_t>(k - 1 - lo)] =
            w.pmf[static_cast<std::size_t>(k - lo)] * static_cast<double>(k) / mean;
    }
    return w;
}

long window_lo(double mean) {
    return std::max(0L, static_cast<long>(std::floor(mean - 12.0 * std::sqrt(mean) - 40.0)));
}

long window_hi(double mean) {
    return static_cast<long>(std::ceil(mean + 12.0 * std::sqrt(mean) + 40.0));
}

/// P(M <= N) for independent M ~ Poisson(m_mean), N ~ Poisson(n_mean).
/// Mass outside the Chernoff windows is below 1e-30 and dropped.
double prob_m_not_above_n(double m_mean, double n_mean) {
    const long n_lo = window_lo(n_mean);
    const long n_hi = window_hi(n_mean);
    const long m_lo = window_lo(m_mean);
    const long m_hi = std::max(window_hi(m_mean), n_hi);
    if (n_hi < m_lo) return 0.0;

    const PoissonWindow pm = poisson_window(m_mean, m_lo, m_hi);
    const PoissonWindow pn = poisson_window(n_mean, n_lo, n_hi);

    double cdf_m = 0.0;
    long k_m = m_lo;
    double sum = 0.0;
    for (long k = n_lo; k <= n_hi; ++k) {
        while (k_m <= k && k_m <= m_hi) {
            cdf_m += pm.pmf[static_cast<std::size_t>(k_m - m_lo)];
            ++k_m;
        }
        sum += pn.pmf[static_cast<std::size_t>(k - n_lo)] * cdf_m;
    }
    return std::clamp(sum, 0.0, 1.0);
}

void check_marcum_args(double a, double b) {
    if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw DomainError("numerics", "Marcum Q requires finite nonnegative arguments");
    }
}

}  // namespace

double bessel_i_scaled(int order, double x) {
    if (order != 0 && order != 1) {
        throw DomainError("numerics", "bessel_i_scaled supports orders 0 and 1");
    }
    if (!(x >= 0.0)) throw DomainError("numerics", "bessel_i_scaled requires x >= 0");
    if (x == 0.0) return order == 0 ? 1.0 : 0.0;
    if (!std::isfinite(x)) return 0.0;
    return x <= kSeriesLimit ? bessel_series(order, x) : bessel_asymptotic(order, x);
}

double marcum_q1(double a, double b) {
    check_marcum_args(a, b);
    if (b == 0.0) return 1.0;
    const double x = 0.5 * a * a;
    const double y = 0.5 * b * b;
    if (a == 0.0) return std::exp(-y);
    // Q1 = P(M <= N); when M tends to exceed N this sum is the small one.
    if (y >= x) return prob_m_not_above_n(y, x);
    return 1.0 - marcum_q1_complement(a, b);
}

double marcum_q1_complement(double a, double b) {
    check_marcum_args(a, b);
    if (b == 0.0) return 0.0;
    const double x = 0.5 * a * a;
    const double y = 0.5 * b * b;
    if (a == 0.0) return -std::expm1(-y);
    if (y >= x) return 1.0 - prob_m_not_above_n(y, x);
    // P(N < M) = P(N <= M) - P(N = M), both small here.
    const double n_le_m = prob_m_not_above_n(x, y);
    const long lo = std::max(window_lo(x), window_lo(y));
    const long hi = std::min(window_hi(x), window_hi(y));
    double tie = 0.0;
    if (lo <= hi) {
        const PoissonWindow px = poisson_window(x, lo, hi);
        const PoissonWindow py = poisson_window(y, lo, hi);
        for (std::size_t i = 0; i < px.pmf.size(); ++i) tie += px.pmf[i] * py.pmf[i];
    }
    return std::clamp(n_le_m - tie, 0.0, 1.0);
}

double normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("numerics", "normal_quantile requires 0 < u < 1");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace turbulux::numerics
