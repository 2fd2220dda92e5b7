#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "turbulux/matching.hpp"
#include "turbulux/pdt.hpp"
#include "turbulux/simulator.hpp"

namespace turbulux {

struct EmpiricalSummary {
    std::size_t n = 0;
    double mean_eta = 0.0;
    double mean_eta2 = 0.0;
    double mean_sqrt_eta = 0.0;
    double var_eta = 0.0;  ///< unbiased
    double sigma_bw2 = 0.0;  ///< mean of the unbiased Var(x0), Var(y0)
    double mean_s = 0.0;
    double mean_s2 = 0.0;
    std::optional<double> corr_s_x02;

    EtaMoments eta_moments() const;
    BeamStats beam_stats() const;
};

/// Which spot-size column enters <S>, <S^2>: the x-axis moment, or the
/// isotropic average (Sx + Sy) / 2.
enum class SAxis { X, Isotropic };

/// Raises DomainError when corr is requested but S or x0^2 is constant.
EmpiricalSummary summarize(const std::vector<double>& eta, const std::vector<double>& x0,
                           const std::vector<double>& y0, const std::vector<double>& S,
                           bool with_corr = true);
EmpiricalSummary summarize(const SampleSet& samples, std::size_t aperture_index = 0,
                           SAxis axis = SAxis::X, bool with_corr = true);

/// D_N = sup |F_N - F| over the order statistics.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

enum class LogNormalFit { MaximumLikelihood, Moments };

struct KsLogNormal {
    double d = 0.0;
    LogNormalParams fit;
};

KsLogNormal ks_lognormal(const std::vector<double>& S, LogNormalFit fit = LogNormalFit::MaximumLikelihood);

double ks_pdt(const std::vector<double>& eta, const CircularBeamPdt& model,
              const numerics::QuadratureSpec& spec = {1e-11, 1e-9, 2000});

enum class DensityKind { Histogram, Kernel };

struct TabulatedDensity {
    std::vector<double> x;
    std::vector<double> density;
    double bin_width = 0.0;  ///< histogram bin width or kernel bandwidth
};

/// Freedman-Diaconis histogram (bin centers) or Silverman Gaussian KDE.
TabulatedDensity density_estimate(const std::vector<double>& sample, DensityKind kind,
                                  int kernel_points = 512);

/// Two-column CSV "x,<name>".
void write_curve_csv(const std::string& path, const std::string& x_name, const std::string& y_name,
                     const std::vector<double>& x, const std::vector<double>& y);

}  // namespace turbulux
