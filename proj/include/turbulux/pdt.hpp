#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "turbulux/numerics.hpp"

namespace turbulux {

/// Which maximal-transmittance law the conditional PDT uses.
///  - AsPrinted:          eta0(S) = 1 - exp(-a^2 / S)
///  - GaussianConsistent: eta0(S) = 1 - exp(-2 a^2 / S), the transmittance of a
///    centered Gaussian beam with squared spot radius S.
enum class EtaConvention { AsPrinted, GaussianConsistent };

std::string to_string(EtaConvention c);
EtaConvention convention_from_string(const std::string& name);

struct ConditionalParams {
    double eta0 = 0.0;
    double shape = 0.0;  ///< lambda
    double scale = 0.0;  ///< R, meters
};

ConditionalParams conditional_params(double S, double a,
                                     EtaConvention conv = EtaConvention::GaussianConsistent);

/// Beam-wandering PDT at fixed spot size S; zero outside (0, eta0(S)).
double conditional_pdt(double eta, double S, double sigma_bw2, double a,
                       EtaConvention conv = EtaConvention::GaussianConsistent);

/// Closed-form CDF of conditional_pdt.
double conditional_cdf(double eta, double S, double sigma_bw2, double a,
                       EtaConvention conv = EtaConvention::GaussianConsistent);

/// Inverse of conditional_cdf for u in (0, 1).
double conditional_quantile(double u, double S, double sigma_bw2, double a,
                            EtaConvention conv = EtaConvention::GaussianConsistent);

/// E[eta^p | S] under the conditional PDT.
double conditional_pdt_moment(double p, double S, double sigma_bw2, double a,
                              EtaConvention conv = EtaConvention::GaussianConsistent,
                              const numerics::QuadratureSpec& spec = {});

struct LogNormalParams {
    double mu = 0.0;      ///< log of m^2
    double sigma2 = 0.0;

    double mean() const;
    double second_moment() const;
    double density(double S) const;
    double cdf(double S) const;
    void validate() const;
};

/// Calibrated circular-beam PDT. With eta_c < 1 the object describes
/// eta_c * eta, i.e. the density eta_c^-1 P(eta / eta_c).
struct CircularBeamPdt {
    double sigma_bw2 = 0.0;
    LogNormalParams s;
    double aperture = 0.0;
    EtaConvention convention = EtaConvention::GaussianConsistent;
    double eta_c = 1.0;

    void validate() const;
    /// Supremum of the transmittance support (eta_c included).
    double support_max() const;
};

double total_pdt(double eta, const CircularBeamPdt& model, const numerics::QuadratureSpec& spec = {});
double total_cdf(double eta, const CircularBeamPdt& model, const numerics::QuadratureSpec& spec = {});

/// <eta^p> of the model for p > 0.
double pdt_moment(double p, const CircularBeamPdt& model, const numerics::QuadratureSpec& spec = {});

std::vector<double> sample_pdt(const CircularBeamPdt& model, std::size_t n, numerics::RngStream& rng);

nlohmann::json pdt_to_json(const CircularBeamPdt& model);
CircularBeamPdt pdt_from_json(const nlohmann::json& doc);

/// Integrates g(S) against the log-normal law on log-S over the z-window
/// [-12, z_hi] with z = (ln S - mu) / sigma. Falls back to g(e^mu) when
/// sigma^2 = 0.
double lognormal_average(const LogNormalParams& s, const std::function<double(double)>& g,
                         const numerics::QuadratureSpec& spec = {},
                         double z_hi = 12.0);

}  // namespace turbulux
