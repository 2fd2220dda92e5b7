#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "turbulux/pdt.hpp"

namespace turbulux {

/// D(alpha0) S(chi) |0>, amplitude-squeezed for chi > 0.
struct GaussianInputState {
    double alpha0 = 0.0;
    double chi = 0.0;

    void validate() const;
};

/// Squeezing parameter for a quadrature variance `db` decibels below vacuum.
double chi_from_db(double db);

struct InputMoments {
    double mean_n = 0.0;
    double var_n = 0.0;
    double mandel_q = 0.0;     ///< 0 for vacuum by convention
    double mean_x = 0.0;       ///< vacuum <dx^2> = 1/2 normalization
    double normal_var_x = 0.0; ///< <:dx^2:>
};

InputMoments input_gaussian_moments(const GaussianInputState& state);

/// Law of the effective transmittance eta_c * eta.
class EtaAverager {
public:
    enum class Kind { PointMass, Model, Samples };

    static EtaAverager point(double eta, double eta_c = 1.0);
    /// <eta>, <eta^2> from the closed-form matched route; <sqrt(eta)> and the
    /// click-averaging nodes from the PDT itself.
    static EtaAverager from_model(const CircularBeamPdt& model, double eta_c = 1.0, int nodes_per_axis = 129);
    static EtaAverager from_samples(const std::vector<double>& eta, double eta_c = 1.0);

    Kind kind() const { return kind_; }
    double mean() const { return mean_; }
    double second() const { return second_; }
    double variance() const { return second_ - mean_ * mean_; }
    double sqrt_mean() const { return sqrt_mean_; }
    /// <dT^2> = <eta> - <sqrt(eta)>^2 with T = sqrt(eta), >= 0
    double delta_t2() const { return delta_t2_; }
    /// Quadrature nodes (eta, weight) with weights summing to one.
    const std::vector<std::pair<double, double>>& nodes() const { return nodes_; }

private:
    Kind kind_ = Kind::PointMass;
    double mean_ = 0.0;
    double second_ = 0.0;
    double sqrt_mean_ = 0.0;
    double delta_t2_ = 0.0;
    std::vector<std::pair<double, double>> nodes_;
};

double mandel_q_out(double q_in, double mean_n_in, const EtaAverager& averager);

/// Smallest admissible photon-number cutoff for the state.
int minimum_cutoff(const GaussianInputState& state);

/// Number-basis probabilities of the input state, 0..cutoff. cutoff = 0
/// picks the smallest cutoff >= minimum_cutoff whose tail is below 1e-10.
std::vector<double> photon_distribution(const GaussianInputState& state, int cutoff = 0);

/// Photon statistics after a pure-loss channel of transmittance eta.
std::vector<double> attenuated_photon_dist(const GaussianInputState& state, double eta, int cutoff = 0);

/// Binomial loss map applied to an arbitrary photon distribution.
std::vector<double> apply_loss(const std::vector<double>& p, double eta);

/// kernel[n][m]: probability that m photons spread uniformly over N
/// detectors trigger exactly n of them.
std::vector<std::vector<double>> click_kernel(int detectors, int max_photons);

struct ClickStatistics {
    std::vector<double> p;  ///< P_n, n = 0..N
    double mean = 0.0;
    double variance = 0.0;
    std::optional<double> q_n;  ///< empty when <n> is 0 or N
};

ClickStatistics click_statistics(const GaussianInputState& state, int detectors,
                                 const EtaAverager& averager, int cutoff = 0);

/// Output quadrature variance <dx^2>_out (vacuum = 1/2).
double squeezing_out(const GaussianInputState& state, const EtaAverager& averager);

}  // namespace turbulux
