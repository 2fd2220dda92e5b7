#pragma once

#include <optional>
#include <string>

#include "turbulux/numerics.hpp"
#include "turbulux/pdt.hpp"

namespace turbulux {

struct BeamStats {
    double sigma_bw2 = 0.0;  ///< m^2
    double mean_s = 0.0;     ///< <S>, m^2
    double mean_s2 = 0.0;    ///< <S^2>, m^4

    void validate() const;
};

struct EtaMoments {
    double mean = 0.0;
    double second = 0.0;
    std::optional<double> sqrt_mean;

    double variance() const { return second - mean * mean; }
    /// True when every moment inequality holds (tolerance `slack`).
    bool consistent(double slack = 0.0) const;
    /// Throws InvalidMoments naming the violated inequality.
    void validate() const;
};

LogNormalParams lognormal_from_s_moments(double mean_s, double mean_s2);

struct ConditionalEtaMoments {
    double mean = 0.0;
    double second = 0.0;
};

/// Exact first two moments of the aperture transmittance of a Gaussian beam
/// with squared spot radius S whose centroid is Gaussian with per-axis
/// variance x0sq.
ConditionalEtaMoments conditional_eta_moments(double S, double x0sq, double a);

/// <eta>, <eta^2> of the circular-beam model through the closed-form
/// conditional moments averaged over the log-normal S law.
EtaMoments model_eta_moments(double sigma_bw2, double a, const LogNormalParams& s,
                             const numerics::QuadratureSpec& spec = {});

struct MatchOptions {
    double sigma2_min = 1e-6;
    double sigma2_max = 2.0;
    double mean_factor = 5.0;   ///< allowed ratio between fitted and initial mean S
    double tail_factor = 10.0;
    double tail_prob = 0.01;    ///< P(S > tail_factor * mean) must stay below this
    double feasible_residual = 1e-6;
    numerics::QuadratureSpec quadrature{1e-14, 1e-12, 4000};
    numerics::LeastSquaresOptions solver{};
};

/// Largest sigma^2 for which P(S > factor * <S>) <= prob under a log-normal.
double tail_sigma2_bound(double factor, double prob);

struct MatchResult {
    LogNormalParams params;
    double residual_norm = 0.0;  ///< relative residuals
    int iterations = 0;
    bool converged = false;
    bool boundary_active = false;
    bool feasible = false;  ///< converged with residual below MatchOptions::feasible_residual
};

MatchResult match_eta_moments(const EtaMoments& targets, double sigma_bw2, double a,
                              const LogNormalParams& init, const MatchOptions& options = {});

enum class CalibrationMethod { SMoments, EtaMoments };

std::string to_string(CalibrationMethod m);
CalibrationMethod method_from_string(const std::string& name);

CircularBeamPdt calibrate_s_moments(const BeamStats& stats, double a,
                                    EtaConvention conv = EtaConvention::GaussianConsistent);

struct EtaCalibration {
    CircularBeamPdt model;
    MatchResult match;
};

/// Transmittance-moment matching started from the S-moment solution.
EtaCalibration calibrate_eta_moments(const BeamStats& stats, const EtaMoments& targets, double a,
                                     EtaConvention conv = EtaConvention::GaussianConsistent,
                                     const MatchOptions& options = {});

enum class LossMode { Rescale, Fold };

std::string to_string(LossMode m);
LossMode loss_mode_from_string(const std::string& name);

/// Rescale mode: the PDT of eta_c * eta.
CircularBeamPdt apply_constant_loss(double eta_c, const CircularBeamPdt& model);
/// Fold mode: matching targets that include the constant loss.
EtaMoments apply_constant_loss(double eta_c, const EtaMoments& targets);

/// Transceiver loss plus distributed attenuation, as an efficiency.
double constant_loss_efficiency(double fixed_db, double db_per_km, double length_m);

}  // namespace turbulux
