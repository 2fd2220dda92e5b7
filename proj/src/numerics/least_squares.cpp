#include <algorithm>
#include <cmath>

#include "turbulux/numerics.hpp"

namespace turbulux::numerics {
namespace {

double norm2(const Vec2& r) { return r[0] * r[0] + r[1] * r[1]; }

}  // namespace

bool Box2::contains(const Vec2& p) const {
    return p[0] >= lower[0] && p[0] <= upper[0] && p[1] >= lower[1] && p[1] <= upper[1];
}

Vec2 Box2::project(const Vec2& p) const {
    return {std::clamp(p[0], lower[0], upper[0]), std::clamp(p[1], lower[1], upper[1])};
}

LeastSquaresResult least_squares_2(const Residuals2& residuals, Vec2 init, const Box2& box,
                                   const LeastSquaresOptions& options) {
    for (int i = 0; i < 2; ++i) {
        if (!(box.lower[static_cast<std::size_t>(i)] <= box.upper[static_cast<std::size_t>(i)])) {
            throw InvalidArgument("numerics", "least squares box has lower > upper");
        }
    }
    Vec2 p = box.project(init);
    Vec2 r = residuals(p);
    double cost = norm2(r);
    double damping = 1e-3;

    LeastSquaresResult out;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        if (cost <= options.residual_tol * options.residual_tol) {
            out.converged = true;
            break;
        }
        // Central-difference Jacobian, one-sided against the box walls.
        double jac[2][2];
        for (std::size_t j = 0; j < 2; ++j) {
            const double h = options.fd_step * std::max(1.0, std::abs(p[j]));
            Vec2 plus = p;
            Vec2 minus = p;
            plus[j] = std::min(p[j] + h, box.upper[j]);
            minus[j] = std::max(p[j] - h, box.lower[j]);
            const double span = plus[j] - minus[j];
            if (span <= 0.0) {
                jac[0][j] = jac[1][j] = 0.0;
                continue;
            }
            const Vec2 rp = residuals(plus);
            const Vec2 rm = residuals(minus);
            jac[0][j] = (rp[0] - rm[0]) / span;
            jac[1][j] = (rp[1] - rm[1]) / span;
        }
        const double a00 = jac[0][0] * jac[0][0] + jac[1][0] * jac[1][0];
        const double a01 = jac[0][0] * jac[0][1] + jac[1][0] * jac[1][1];
        const double a11 = jac[0][1] * jac[0][1] + jac[1][1] * jac[1][1];
        Vec2 grad = {jac[0][0] * r[0] + jac[1][0] * r[1], jac[0][1] * r[0] + jac[1][1] * r[1]};

        // Gradient components pushing into an active wall do not count.
        Vec2 free_grad = grad;
        std::array<bool, 2> pinned{};
        for (std::size_t j = 0; j < 2; ++j) {
            if ((p[j] <= box.lower[j] && grad[j] > 0.0) || (p[j] >= box.upper[j] && grad[j] < 0.0)) {
                free_grad[j] = 0.0;
                pinned[j] = true;
            }
        }
        if (std::hypot(free_grad[0], free_grad[1]) < options.gradient_tol) {
            out.converged = true;
            break;
        }

        bool improved = false;
        double step_len = 0.0;
        for (int tries = 0; tries < 40; ++tries) {
            const double b00 = a00 + damping * std::max(a00, 1e-300);
            const double b11 = a11 + damping * std::max(a11, 1e-300);
            Vec2 step{};
            if (pinned[0] || pinned[1]) {
                // one coordinate held at its wall: damped step in the other
                const std::size_t j = pinned[0] ? 1 : 0;
                step[j] = -free_grad[j] / (j == 0 ? b00 : b11);
            } else {
                const double det = b00 * b11 - a01 * a01;
                if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
                    damping *= 10.0;
                    continue;
                }
                step = {-(b11 * grad[0] - a01 * grad[1]) / det, -(b00 * grad[1] - a01 * grad[0]) / det};
            }
            const Vec2 trial = box.project({p[0] + step[0], p[1] + step[1]});
            const Vec2 rt = residuals(trial);
            const double ct = norm2(rt);
            if (std::isfinite(ct) && ct < cost) {
                step_len = std::hypot(trial[0] - p[0], trial[1] - p[1]);
                p = trial;
                r = rt;
                cost = ct;
                damping = std::max(damping * 0.3, 1e-12);
                improved = true;
                break;
            }
            damping *= 10.0;
            if (damping > 1e16) break;
        }
        if (!improved) {
            // no descent possible at any damping: a stationary point to FD accuracy
            out.converged = true;
            break;
        }
        if (step_len < options.step_tol * (1.0 + std::hypot(p[0], p[1]))) {
            out.converged = true;
            ++it;
            break;
        }
    }

    out.params = p;
    out.residuals = r;
    out.residual_norm = std::sqrt(cost);
    out.iterations = it;
    for (std::size_t j = 0; j < 2; ++j) {
        const double tol = 1e-9 * std::max(1.0, box.upper[j] - box.lower[j]);
        out.at_lower[j] = p[j] <= box.lower[j] + tol;
        out.at_upper[j] = p[j] >= box.upper[j] - tol;
    }
    return out;
}

}  // namespace turbulux::numerics
