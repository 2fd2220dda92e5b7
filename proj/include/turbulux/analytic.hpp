#pragma once

#include <string>

#include "turbulux/channel.hpp"
#include "turbulux/matching.hpp"

namespace turbulux {

/// Weak-turbulence beam statistics for a focused Gaussian beam.
struct AnalyticBeamStats {
    BeamStats stats;
    double w_lt = 0.0;          ///< long-term radius, sqrt(<S> + 4 sigma_bw^2)
    bool weak_turbulence = true;  ///< false once sigma_R^2 exceeds 1
};

AnalyticBeamStats beam_stats_analytic(const ChannelConfig& config);

enum class AnalyticVariant { AsPrinted, GaussianConsistent };

std::string to_string(AnalyticVariant v);
AnalyticVariant variant_from_string(const std::string& name);

struct AnalyticEtaMoments {
    EtaMoments moments;  ///< sqrt_mean left empty
    bool valid = true;   ///< false when <eta^2> <= <eta> or <eta>^2 <= <eta^2> fails
};

AnalyticEtaMoments eta_moments_analytic(const ChannelConfig& config, double a,
                                        AnalyticVariant variant = AnalyticVariant::GaussianConsistent);

/// exp(-0.13 sigma_R^2 Omega^(-5/6)); dropped from the simplified <eta> by default.
double beam_wandering_prefactor(const ChannelConfig& config);

}  // namespace turbulux
