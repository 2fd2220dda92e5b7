#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <queue>
#include <vector>

#include "turbulux/numerics.hpp"

namespace turbulux::numerics {
namespace {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525478037, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
// Gauss weights attach to kXgk[1], kXgk[3], ..., kXgk[9].
constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
    double lo;
    double hi;
    double value;
    double error;

    bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment kronrod21(const F& f, double lo, double hi) {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = f(center);
    double kronrod = fc * kWgk[10];
    double gauss = 0.0;
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kXgk[static_cast<std::size_t>(j)];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += kWgk[static_cast<std::size_t>(j)] * pair;
        if (j % 2 == 1) gauss += kWg[static_cast<std::size_t>(j / 2)] * pair;
    }
    const double value = kronrod * half;
    double error = std::abs((kronrod - gauss) * half);
    // QUADPACK-style scaling of the raw difference
    if (error > 0.0) error = std::min(error, std::pow(200.0 * error, 1.5));
    error = std::max(error, 50.0 * std::numeric_limits<double>::epsilon() * std::abs(value));
    return {lo, hi, value, error};
}

template <class F>
QuadratureResult adaptive(const F& f, double lo, double hi, const QuadratureSpec& spec) {
    std::priority_queue<Segment> queue;
    Segment first = kronrod21(f, lo, hi);
    double total = first.value;
    double total_error = first.error;
    queue.push(first);
    int subdivisions = 1;
    double frozen_error = 0.0;  // segments too narrow to split further

    while (total_error + frozen_error > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
        if (queue.empty()) break;
        if (subdivisions >= spec.max_subdivisions) {
            throw QuadratureError("adaptive quadrature did not converge",
                                  {total, total_error + frozen_error, subdivisions});
        }
        Segment worst = queue.top();
        queue.pop();
        const double width = worst.hi - worst.lo;
        if (width < 1e-14 * std::max(std::abs(worst.lo), std::abs(worst.hi)) || width < 1e-300) {
            frozen_error += worst.error;
            total_error -= worst.error;
            continue;
        }
        const double mid = 0.5 * (worst.lo + worst.hi);
        const Segment left = kronrod21(f, worst.lo, mid);
        const Segment right = kronrod21(f, mid, worst.hi);
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
        ++subdivisions;
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    double sum = 0.0;
    double err = frozen_error;
    while (!queue.empty()) {
        sum += queue.top().value;
        err += queue.top().error;
        queue.pop();
    }
    if (frozen_error > std::max(spec.abs_tol, spec.rel_tol * std::abs(sum))) {
        throw QuadratureError("adaptive quadrature hit the resolution limit",
                              {sum, err, subdivisions});
    }
    return {sum, err, subdivisions};
}

}  // namespace

void QuadratureSpec::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
        throw InvalidArgument("numerics", "quadrature tolerances must be positive");
    }
    if (max_subdivisions < 1) {
        throw InvalidArgument("numerics", "quadrature needs at least one subdivision");
    }
}

QuadratureError::QuadratureError(const std::string& message, QuadratureResult best)
    : Error("numerics", [&] {
          char buf[96];
          std::snprintf(buf, sizeof(buf), " (estimate %.12g, error %.3g)", best.value, best.error);
          return message + buf;
      }()),
      best_(best) {}

QuadratureResult integrate(const Integrand& f, double lo, double hi, const QuadratureSpec& spec) {
    spec.validate();
    if (std::isnan(lo) || std::isnan(hi) || !(lo < hi)) {
        throw InvalidArgument("numerics", "integrate requires lo < hi");
    }
    const bool lo_inf = std::isinf(lo);
    const bool hi_inf = std::isinf(hi);
    if (!lo_inf && !hi_inf) return adaptive(f, lo, hi, spec);
    if (!lo_inf) {
        // x = lo + (1 - t) / t
        auto g = [&](double t) {
            const double x = lo + (1.0 - t) / t;
            return f(x) / (t * t);
        };
        return adaptive(g, 0.0, 1.0, spec);
    }
    if (!hi_inf) {
        auto g = [&](double t) {
            const double x = hi - (1.0 - t) / t;
            return f(x) / (t * t);
        };
        return adaptive(g, 0.0, 1.0, spec);
    }
    auto g = [&](double t) {
        const double s = (1.0 - t) / t;
        return (f(s) + f(-s)) / (t * t);
    };
    return adaptive(g, 0.0, 1.0, spec);
}

GaussRule gauss_legendre_unit(int points) {
    if (points < 1) throw InvalidArgument("numerics", "Gauss-Legendre rule needs >= 1 point");
    const auto n = static_cast<std::size_t>(points);
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                const auto jd = static_cast<double>(j);
                p0 = ((2.0 * jd - 1.0) * z * p1 - (jd - 1.0) * p2) / jd;
            }
            dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[i] = 0.5 * (1.0 - z);
        rule.nodes[n - 1 - i] = 0.5 * (1.0 + z);
        rule.weights[i] = 0.5 * w;
        rule.weights[n - 1 - i] = 0.5 * w;
    }
    return rule;
}

}  // namespace turbulux::numerics
