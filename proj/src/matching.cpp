#include "turbulux/matching.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "turbulux/error.hpp"

namespace turbulux {
namespace {

double tail_probability(double sigma2, double factor) {
    if (sigma2 <= 0.0) return 0.0;
    const double sigma = std::sqrt(sigma2);
    return 0.5 * std::erfc((std::log(factor) + 0.5 * sigma2) / (sigma * std::numbers::sqrt2));
}

}  // namespace

void BeamStats::validate() const {
    if (!(sigma_bw2 >= 0.0) || !(mean_s > 0.0) || !(mean_s2 > 0.0) || !std::isfinite(mean_s2)) {
        throw InvalidMoments("matching", "beam statistics must be positive and finite");
    }
    if (mean_s2 < mean_s * mean_s) {
        throw InvalidMoments("matching", "<S^2> < <S>^2 in beam statistics");
    }
}

bool EtaMoments::consistent(double slack) const {
    if (!(mean > 0.0) || !(mean <= 1.0 + slack) || !(second > 0.0)) return false;
    if (second > mean + slack) return false;
    if (mean * mean > second + slack) return false;
    if (sqrt_mean) {
        const double r = *sqrt_mean;
        if (!(r >= 0.0) || r * r > mean + slack || mean > r + slack) return false;
    }
    return true;
}

void EtaMoments::validate() const {
    if (!(mean > 0.0) || !(mean <= 1.0)) throw InvalidMoments("matching", "<eta> must lie in (0, 1]");
    if (!(second > 0.0)) throw InvalidMoments("matching", "<eta^2> must be positive");
    if (second > mean) throw InvalidMoments("matching", "<eta^2> exceeds <eta>");
    if (mean * mean > second) throw InvalidMoments("matching", "<eta>^2 exceeds <eta^2>");
    if (sqrt_mean) {
        const double r = *sqrt_mean;
        if (!(r >= 0.0) || r * r > mean || mean > r) {
            throw InvalidMoments("matching", "<sqrt(eta)> violates <sqrt(eta)>^2 <= <eta> <= <sqrt(eta)>");
        }
    }
}

LogNormalParams lognormal_from_s_moments(double mean_s, double mean_s2) {
    if (!(mean_s > 0.0) || !std::isfinite(mean_s) || !std::isfinite(mean_s2)) {
        throw InvalidMoments("matching", "<S> must be positive and finite");
    }
    if (mean_s2 < mean_s * mean_s) throw InvalidMoments("matching", "<S^2> < <S>^2");
    LogNormalParams p;
    p.sigma2 = std::max(0.0, std::log(mean_s2 / (mean_s * mean_s)));
    p.mu = std::log(mean_s) - 0.5 * p.sigma2;
    return p;
}

ConditionalEtaMoments conditional_eta_moments(double S, double x0sq, double a) {
    if (!(S > 0.0) || !(a > 0.0) || !(x0sq >= 0.0)) {
        throw InvalidArgument("matching", "conditional moments need S > 0, a > 0, <x0^2> >= 0");
    }
    ConditionalEtaMoments out;
    const double e1 = std::exp(-2.0 * a * a / (4.0 * x0sq + S));
    out.mean = -std::expm1(-2.0 * a * a / (4.0 * x0sq + S));
    // the second moment is pinned between mean^2 and mean, both 1 to rounding
    if (x0sq == 0.0 || e1 < 1e-17) {
        out.second = out.mean * out.mean;
        return out;
    }
    const double p = S / (8.0 * x0sq);
    const double alpha = 2.0 * a / std::sqrt(S) *
                         std::sqrt(2.0 * p * (p + 1.0) / (2.0 * p * p + 3.0 * p + 1.0));
    const double beta = 1.0 / (2.0 * p + 1.0);
    // 1 - beta^2 = 4p(p+1) / (2p+1)^2
    const double s = 2.0 * std::sqrt(p * (p + 1.0)) / (2.0 * p + 1.0);
    const double big = alpha / s;
    const double small = alpha * beta / s;
    const double bracket = numerics::marcum_q1_complement(big, small) + numerics::marcum_q1(small, big);
    out.second = 1.0 - 2.0 * e1 + std::exp(-0.5 * alpha * alpha) * bracket;
    out.second = std::clamp(out.second, out.mean * out.mean, out.mean);
    return out;
}

EtaMoments model_eta_moments(double sigma_bw2, double a, const LogNormalParams& s,
                             const numerics::QuadratureSpec& spec) {
    if (!(sigma_bw2 >= 0.0)) throw InvalidArgument("matching", "sigma_bw2 must be >= 0");
    EtaMoments m;
    m.mean = lognormal_average(
        s, [&](double S) { return conditional_eta_moments(S, sigma_bw2, a).mean; }, spec);
    m.second = lognormal_average(
        s, [&](double S) { return conditional_eta_moments(S, sigma_bw2, a).second; }, spec);
    return m;
}

double tail_sigma2_bound(double factor, double prob) {
    if (!(factor > 1.0) || !(prob > 0.0 && prob < 1.0)) {
        throw InvalidArgument("matching", "tail constraint needs factor > 1 and 0 < prob < 1");
    }
    // The tail probability rises in sigma^2 up to 2 ln(factor).
    double hi = 2.0 * std::log(factor);
    if (tail_probability(hi, factor) <= prob) return std::numeric_limits<double>::infinity();
    double lo = 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (tail_probability(mid, factor) <= prob ? lo : hi) = mid;
    }
    return lo;
}

MatchResult match_eta_moments(const EtaMoments& targets, double sigma_bw2, double a,
                              const LogNormalParams& init, const MatchOptions& options) {
    targets.validate();
    init.validate();
    if (!(sigma_bw2 > 0.0) || !(a > 0.0)) {
        throw InvalidArgument("matching", "matching needs sigma_bw2 > 0 and a > 0");
    }
    if (!(options.mean_factor > 1.0) || !(options.sigma2_min > 0.0) ||
        !(options.sigma2_min < options.sigma2_max)) {
        throw InvalidArgument("matching", "bad matching constraint box");
    }
    const double nu0 = init.mu + 0.5 * init.sigma2;
    const double upper = std::min(options.sigma2_max, tail_sigma2_bound(options.tail_factor, options.tail_prob));
    numerics::Box2 box{{nu0 - std::log(options.mean_factor), options.sigma2_min},
                       {nu0 + std::log(options.mean_factor), upper}};

    auto residuals = [&](const numerics::Vec2& q) -> numerics::Vec2 {
        const LogNormalParams s{q[0] - 0.5 * q[1], q[1]};
        const EtaMoments m = model_eta_moments(sigma_bw2, a, s, options.quadrature);
        return {m.mean / targets.mean - 1.0, m.second / targets.second - 1.0};
    };
    const auto ls = numerics::least_squares_2(residuals, {nu0, init.sigma2}, box, options.solver);

    MatchResult out;
    out.params = {ls.params[0] - 0.5 * ls.params[1], ls.params[1]};
    out.residual_norm = ls.residual_norm;
    out.iterations = ls.iterations;
    out.converged = ls.converged;
    out.boundary_active = ls.boundary_active();
    out.feasible = ls.converged && ls.residual_norm <= options.feasible_residual;
    return out;
}

std::string to_string(CalibrationMethod m) {
    return m == CalibrationMethod::SMoments ? "s-moments" : "eta-moments";
}

CalibrationMethod method_from_string(const std::string& name) {
    if (name == "s-moments") return CalibrationMethod::SMoments;
    if (name == "eta-moments") return CalibrationMethod::EtaMoments;
    throw InvalidArgument("matching", "unknown calibration method '" + name + "'");
}

CircularBeamPdt calibrate_s_moments(const BeamStats& stats, double a, EtaConvention conv) {
    stats.validate();
    CircularBeamPdt m;
    m.sigma_bw2 = stats.sigma_bw2;
    m.s = lognormal_from_s_moments(stats.mean_s, stats.mean_s2);
    m.aperture = a;
    m.convention = conv;
    m.validate();
    return m;
}

EtaCalibration calibrate_eta_moments(const BeamStats& stats, const EtaMoments& targets, double a,
                                     EtaConvention conv, const MatchOptions& options) {
    targets.validate();
    const CircularBeamPdt start = calibrate_s_moments(stats, a, conv);
    EtaCalibration out;
    out.match = match_eta_moments(targets, stats.sigma_bw2, a, start.s, options);
    out.model = start;
    out.model.s = out.match.params;
    return out;
}

std::string to_string(LossMode m) { return m == LossMode::Rescale ? "rescale" : "fold"; }

LossMode loss_mode_from_string(const std::string& name) {
    if (name == "rescale") return LossMode::Rescale;
    if (name == "fold") return LossMode::Fold;
    throw InvalidArgument("matching", "unknown loss mode '" + name + "'");
}

CircularBeamPdt apply_constant_loss(double eta_c, const CircularBeamPdt& model) {
    if (!(eta_c > 0.0 && eta_c <= 1.0)) throw InvalidArgument("matching", "eta_c must lie in (0, 1]");
    CircularBeamPdt out = model;
    out.eta_c = model.eta_c * eta_c;
    return out;
}

EtaMoments apply_constant_loss(double eta_c, const EtaMoments& targets) {
    if (!(eta_c > 0.0 && eta_c <= 1.0)) throw InvalidArgument("matching", "eta_c must lie in (0, 1]");
    EtaMoments out = targets;
    out.mean = eta_c * targets.mean;
    out.second = eta_c * eta_c * targets.second;
    if (targets.sqrt_mean) out.sqrt_mean = std::sqrt(eta_c) * *targets.sqrt_mean;
    return out;
}

double constant_loss_efficiency(double fixed_db, double db_per_km, double length_m) {
    if (!(fixed_db >= 0.0) || !(db_per_km >= 0.0) || !(length_m >= 0.0)) {
        throw InvalidArgument("matching", "loss budget terms must be >= 0");
    }
    return std::pow(10.0, -(fixed_db + db_per_km * length_m / 1000.0) / 10.0);
}

}  // namespace turbulux
