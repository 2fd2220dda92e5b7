#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "turbulux/channel.hpp"
#include "turbulux/numerics.hpp"

namespace turbulux {

/// Numerical grid of the phase-screen simulator. Zero-valued window and
/// kappa bounds are filled in by resolve_grid.
struct GridSpec {
    int n = 512;
    double window = 0.0;      ///< side length, m
    int screens = 10;
    int modes = 512;          ///< sparse-spectrum modes per screen
    double kappa_min = 0.0;   ///< rad/m
    double kappa_max = 0.0;   ///< rad/m
    double mask_fraction = 0.125;

    double dx() const { return window / n; }
    void validate() const;
};

/// Rough long-term spot radius used to size the window.
double expected_long_term_radius(const ChannelConfig& config);

GridSpec resolve_grid(const GridSpec& grid, const ChannelConfig& config);

nlohmann::json grid_to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& doc);

/// Complex amplitude on an n x n grid, row-major with rows along y.
/// Node (ix, iy) sits at ((ix - n/2) dx, (iy - n/2) dx).
struct FieldGrid {
    int n = 0;
    double dx = 0.0;
    double z = 0.0;
    std::vector<std::complex<double>> u;

    double coord(int i) const { return (i - n / 2) * dx; }
    double power() const;
};

FieldGrid initial_field(const ChannelConfig& config, const GridSpec& grid);

/// von Karman-Tatarskii refractive-index spectrum.
double refractive_spectrum(double kappa, const ChannelConfig& config);

/// One sparse-spectrum phase screen: phi(r) = sum_m Re(a_m exp(i kappa_m . r)).
struct PhaseScreen {
    struct Mode {
        double kx;
        double ky;
        double re;
        double im;
    };
    std::vector<Mode> modes;

    double evaluate(double x, double y) const;
    /// Screen sampled on the field grid, same layout as FieldGrid::u.
    std::vector<double> render(int n, double dx) const;
};

/// Log-spaced annuli with their spectral weights for one slab thickness.
class ScreenSpectrum {
public:
    ScreenSpectrum(const ChannelConfig& config, double dz, const GridSpec& grid);

    PhaseScreen sample(numerics::RngStream& rng) const;

    /// Phase variance carried by all annuli.
    double total_variance() const;
    /// Phase structure function of the discretized spectrum at separation r.
    double structure_function(double r) const;

    const std::vector<double>& edges() const { return edges_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    std::vector<double> edges_;
    std::vector<double> weights_;    ///< <|a_m|^2>
    std::vector<double> exponents_;  ///< local power law of kappa Phi_n
    double k_ = 0.0;
    double dz_ = 0.0;
    ChannelConfig config_;
};

PhaseScreen sample_phase_screen(const ChannelConfig& config, double dz, const GridSpec& grid,
                                numerics::RngStream& rng);

/// Supplies the phase of screen `index` (0-based) at axial position z.
using ScreenSource = std::function<std::vector<double>(int index, double z)>;

/// Split-step propagator bound to one grid. Owns FFT plans and work
/// buffers; use one instance per thread.
class Propagator {
public:
    Propagator(const ChannelConfig& config, const GridSpec& grid);
    ~Propagator();
    Propagator(const Propagator&) = delete;
    Propagator& operator=(const Propagator&) = delete;

    /// Turbulent propagation from z = 0 to L with screens drawn from rng.
    FieldGrid propagate(const FieldGrid& field, numerics::RngStream& rng);
    /// Same step structure with caller-provided screens.
    FieldGrid propagate(const FieldGrid& field, const ScreenSource& screens);

    /// Fraction of power removed by the boundary mask in the last run.
    double mask_loss() const { return mask_loss_; }

private:
    FieldGrid run(const FieldGrid& field, const ScreenSource* source, numerics::RngStream* rng);

    struct Impl;
    std::unique_ptr<Impl> impl_;
    double mask_loss_ = 0.0;
};

FieldGrid propagate(const FieldGrid& field, const ChannelConfig& config, const GridSpec& grid,
                    numerics::RngStream& rng);

struct Observables {
    std::vector<double> eta;  ///< one per aperture
    double x0 = 0.0;
    double y0 = 0.0;
    double S = 0.0;   ///< 4 <(x - x0)^2>
    double Sy = 0.0;  ///< 4 <(y - y0)^2>
    double power = 0.0;
};

Observables measure_observables(const FieldGrid& field, const std::vector<double>& apertures);
Observables measure_observables(const FieldGrid& field, double aperture);

/// Per-pixel aperture coverage (4 x 4 supersampling on the rim).
std::vector<double> aperture_weights(int n, double dx, double a);

struct SampleSet {
    ChannelConfig channel;
    GridSpec grid;
    std::uint64_t seed = 0;
    std::vector<double> apertures;
    std::vector<std::vector<double>> eta;  ///< eta[k][i] for apertures[k]
    std::vector<double> x0;
    std::vector<double> y0;
    std::vector<double> S;
    std::vector<double> Sy;

    std::size_t size() const { return x0.size(); }
    /// First m realizations (identical to a run of size m).
    SampleSet head(std::size_t m) const;
    /// Index of an aperture in `apertures`, matched to 1e-12 m.
    std::size_t aperture_index(double a) const;
    void validate() const;
};

struct EnsembleOptions {
    unsigned workers = 1;  ///< 0 = hardware concurrency
    std::function<void(std::size_t done, std::size_t total)> progress;
};

SampleSet run_ensemble(const ChannelConfig& config, const GridSpec& grid, std::size_t n,
                       std::uint64_t seed, const std::vector<double>& apertures,
                       const EnsembleOptions& options = {});

/// CSV with columns idx, eta, x0_m, y0_m, S_m2, Sy_m2, eta_a1.. plus a JSON
/// sidecar next to it (same stem, ".json").
void save_sample_set(const SampleSet& set, const std::string& csv_path);
SampleSet load_sample_set(const std::string& csv_path);
std::string sidecar_path(const std::string& csv_path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

}  // namespace turbulux
