#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "turbulux/error.hpp"

namespace turbulux::numerics {

// ---------------------------------------------------------------------------
// Special functions

/// Exponentially scaled modified Bessel function of the first kind,
/// e^{-x} I_order(x), for order 0 or 1 and x >= 0.
double bessel_i_scaled(int order, double x);

/// First-order Marcum Q-function Q_1(a, b) for a, b >= 0.
///
/// Evaluated through the Poisson-mixture identity Q_1(a,b) = P(M <= N) with
/// N ~ Poisson(a^2/2) and M ~ Poisson(b^2/2), whose terms are all
/// nonnegative. The complementary sum is used when Q_1 is close to one.
double marcum_q1(double a, double b);

/// 1 - Q_1(a, b), accurate when Q_1 is close to one.
double marcum_q1_complement(double a, double b);

/// Standard normal quantile Phi^{-1}(u) for u in (0, 1).
double normal_quantile(double u);

/// Standard normal CDF.
double normal_cdf(double z);

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureSpec {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_subdivisions = 2000;

    void validate() const;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int subdivisions = 0;
};

/// Raised when adaptive quadrature cannot meet its tolerance; carries the
/// best estimate reached so callers may still use it.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& message, QuadratureResult best);

    const QuadratureResult& best() const noexcept { return best_; }

private:
    QuadratureResult best_;
};

using Integrand = std::function<double(double)>;

/// Globally adaptive 21-point Gauss-Kronrod quadrature with bisection of the
/// interval carrying the largest error. Either bound may be infinite.
QuadratureResult integrate(const Integrand& f, double lo, double hi,
                           const QuadratureSpec& spec = {});

/// Gauss-Legendre rule mapped to [0, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussRule gauss_legendre_unit(int points);

// ---------------------------------------------------------------------------
// Random numbers

/// Counter-based random stream. The variate sequence is a pure function of
/// (seed, stream index): draw j of stream s is a keyed hash of
/// (seed, s, j), so results do not depend on threads or scheduling.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1).
    double uniform();
    double normal();

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Two-parameter box-constrained least squares

using Vec2 = std::array<double, 2>;

struct Box2 {
    Vec2 lower;
    Vec2 upper;

    bool contains(const Vec2& p) const;
    Vec2 project(const Vec2& p) const;
};

struct LeastSquaresOptions {
    int max_iterations = 200;
    double gradient_tol = 1e-10;
    double step_tol = 1e-10;
    double residual_tol = 1e-14;
    /// Relative finite-difference step for the Jacobian.
    double fd_step = 1e-6;
};

struct LeastSquaresResult {
    Vec2 params{};
    Vec2 residuals{};
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::array<bool, 2> at_lower{};
    std::array<bool, 2> at_upper{};

    bool boundary_active() const {
        return at_lower[0] || at_lower[1] || at_upper[0] || at_upper[1];
    }
};

using Residuals2 = std::function<Vec2(const Vec2&)>;

/// Levenberg-Marquardt on r1^2 + r2^2 with projection onto the box.
LeastSquaresResult least_squares_2(const Residuals2& residuals, Vec2 init,
                                   const Box2& box,
                                   const LeastSquaresOptions& options = {});

}  // namespace turbulux::numerics
