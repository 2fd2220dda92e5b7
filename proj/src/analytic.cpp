#include "turbulux/analytic.hpp"

#include <cmath>

#include "turbulux/error.hpp"

namespace turbulux {
namespace {

void require_focused(const ChannelConfig& c) {
    if (!c.focused()) {
        throw ModelBreakdown("analytic", "closed-form statistics require a focused beam (F0 = L)");
    }
}

}  // namespace

AnalyticBeamStats beam_stats_analytic(const ChannelConfig& config) {
    require_focused(config);
    const DerivedChannel d = derive_channel(config);
    const double w2 = std::pow(config.w0_resolved(), 2);
    const double om = d.fresnel;
    const double r2 = d.rytov;
    const double r4 = r2 * r2;

    AnalyticBeamStats out;
    BeamStats& s = out.stats;
    s.sigma_bw2 = 0.31 * w2 * r2 * std::pow(om, -7.0 / 6.0) - 0.06 * w2 * r4 * std::pow(om, -1.0 / 3.0);
    s.mean_s = w2 * std::pow(om, -2.0) + 2.93 * w2 * r2 * std::pow(om, -7.0 / 6.0) +
               0.24 * w2 * r4 * std::pow(om, -1.0 / 3.0);
    s.mean_s2 = w2 * w2 *
                (std::pow(om, -4.0) + 6.48 * r2 * std::pow(om, -19.0 / 6.0) +
                 9.40 * r4 * std::pow(om, -7.0 / 3.0) + 2.60 * r4 * r2 * std::pow(om, -1.5) -
                 0.05 * r4 * r4 * std::pow(om, -2.0 / 3.0));
    if (s.sigma_bw2 < 0.0) throw ModelBreakdown("analytic", "beam-wandering variance turned negative");
    // vacuum: <S^2> = <S>^2 up to rounding
    if (s.mean_s2 < s.mean_s * s.mean_s * (1.0 - 1e-12)) {
        throw ModelBreakdown("analytic", "<S^2> < <S>^2: formulas outside their validity range");
    }
    s.mean_s2 = std::max(s.mean_s2, s.mean_s * s.mean_s);
    out.w_lt = std::sqrt(s.mean_s + 4.0 * s.sigma_bw2);
    out.weak_turbulence = r2 <= 1.0;
    return out;
}

std::string to_string(AnalyticVariant v) {
    return v == AnalyticVariant::GaussianConsistent ? "gaussian-consistent" : "as-printed";
}

AnalyticVariant variant_from_string(const std::string& name) {
    if (name == "gaussian-consistent") return AnalyticVariant::GaussianConsistent;
    if (name == "as-printed") return AnalyticVariant::AsPrinted;
    throw InvalidArgument("analytic", "unknown variant '" + name + "'");
}

AnalyticEtaMoments eta_moments_analytic(const ChannelConfig& config, double a, AnalyticVariant variant) {
    require_focused(config);
    if (!(a > 0.0)) throw InvalidArgument("analytic", "aperture must be positive");
    const DerivedChannel d = derive_channel(config);
    const double w2 = std::pow(config.w0_resolved(), 2);
    const double om = d.fresnel;
    const double r2 = d.rytov;
    const double a2 = a * a;

    const double v = std::pow(om, -2.0) + 3.17 * r2 * std::pow(om, -7.0 / 6.0);
    const double g = 1.0 + 2.0 * v * om * om;
    const double second = -std::expm1(-4.0 * a2 / (w2 * std::pow(om, -2.0) * g)) *
                          -std::expm1(-a2 * g / (v * w2));

    AnalyticEtaMoments out;
    out.moments.second = second;
    if (variant == AnalyticVariant::AsPrinted) {
        const double denom = 2.0 * w2 * (std::pow(om, -2.0) + 1.05 * r2 * std::pow(om, -7.0 / 6.0));
        out.moments.mean = -std::expm1(-a2 / denom);
    } else {
        const AnalyticBeamStats b = beam_stats_analytic(config);
        out.moments.mean = -std::expm1(-2.0 * a2 / (b.stats.mean_s + 4.0 * b.stats.sigma_bw2));
    }
    out.valid = out.moments.consistent(1e-12);
    return out;
}

double beam_wandering_prefactor(const ChannelConfig& config) {
    const DerivedChannel d = derive_channel(config);
    return std::exp(-0.13 * d.rytov * std::pow(d.fresnel, -5.0 / 6.0));
}

}  // namespace turbulux
