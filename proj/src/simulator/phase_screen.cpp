#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "turbulux/error.hpp"
#include "turbulux/simulator.hpp"

namespace turbulux {

double refractive_spectrum(double kappa, const ChannelConfig& config) {
    const double inv_outer = std::isinf(config.outer_scale) ? 0.0 : 1.0 / config.outer_scale;
    const double q = kappa * config.inner_scale / (2.0 * std::numbers::pi);
    return 0.033 * config.cn2 * std::exp(-q * q) /
           std::pow(kappa * kappa + inv_outer * inv_outer, 11.0 / 6.0);
}

double PhaseScreen::evaluate(double x, double y) const {
    double phi = 0.0;
    for (const auto& m : modes) {
        const double arg = m.kx * x + m.ky * y;
        phi += m.re * std::cos(arg) - m.im * std::sin(arg);
    }
    return phi;
}

std::vector<double> PhaseScreen::render(int n, double dx) const {
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto m = static_cast<Eigen::Index>(modes.size());
    std::vector<double> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    if (m == 0) return out;

    // Re(a e^{i(alpha+beta)}) = cos(beta) X1(alpha) + sin(beta) X2(alpha)
    Eigen::MatrixXd xs(n, 2 * m);
    Eigen::MatrixXd ys(n, 2 * m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto& md = modes[static_cast<std::size_t>(j)];
        for (int i = 0; i < n; ++i) {
            const double c = (i - n / 2) * dx;
            const double ca = std::cos(md.kx * c);
            const double sa = std::sin(md.kx * c);
            xs(i, j) = md.re * ca - md.im * sa;
            xs(i, j + m) = -md.re * sa - md.im * ca;
            ys(i, j) = std::cos(md.ky * c);
            ys(i, j + m) = std::sin(md.ky * c);
        }
    }
    Eigen::Map<RowMatrix> phase(out.data(), n, n);
    phase.noalias() = ys * xs.transpose();
    return out;
}

ScreenSpectrum::ScreenSpectrum(const ChannelConfig& config, double dz, const GridSpec& grid)
    : dz_(dz), config_(config) {
    grid.validate();
    if (!(dz > 0.0)) throw InvalidArgument("simulator", "slab thickness must be positive");
    if (!(grid.kappa_min > 0.0) || !(grid.kappa_max > grid.kappa_min)) {
        throw InvalidArgument("simulator", "spectral coverage needs 0 < kappa_min < kappa_max");
    }
    k_ = 2.0 * std::numbers::pi / config.wavelength;
    const auto m = static_cast<std::size_t>(grid.modes);
    edges_.resize(m + 1);
    const double ratio = grid.kappa_max / grid.kappa_min;
    for (std::size_t j = 0; j <= m; ++j) {
        edges_[j] = grid.kappa_min * std::pow(ratio, static_cast<double>(j) / static_cast<double>(m));
    }
    edges_[m] = grid.kappa_max;

    auto radial = [&](double kappa) { return kappa * refractive_spectrum(kappa, config); };
    const double scale = 8.0 * std::numbers::pi * std::numbers::pi * k_ * k_ * dz;
    weights_.resize(m);
    exponents_.resize(m);
    const numerics::QuadratureSpec spec{1e-300, 1e-10, 200};
    for (std::size_t j = 0; j < m; ++j) {
        const double lo = edges_[j];
        const double hi = edges_[j + 1];
        weights_[j] = config.cn2 > 0.0 ? scale * numerics::integrate(radial, lo, hi, spec).value : 0.0;
        const double flo = radial(lo);
        const double fhi = radial(hi);
        exponents_[j] = (flo > 0.0 && fhi > 0.0) ? std::log(fhi / flo) / std::log(hi / lo) : 0.0;
    }
}

PhaseScreen ScreenSpectrum::sample(numerics::RngStream& rng) const {
    PhaseScreen screen;
    screen.modes.reserve(weights_.size());
    for (std::size_t j = 0; j < weights_.size(); ++j) {
        const double lo = edges_[j];
        const double r = edges_[j + 1] / lo;
        const double q = exponents_[j] + 1.0;
        const double u = rng.uniform();
        // inverse CDF of kappa^(q-1) on [lo, hi]
        const double kappa = std::abs(q) < 1e-9 ? lo * std::pow(r, u)
                                                : lo * std::pow(1.0 + u * std::expm1(q * std::log(r)), 1.0 / q);
        const double psi = 2.0 * std::numbers::pi * rng.uniform();
        const double amp = std::sqrt(0.5 * weights_[j]);
        const double re = amp * rng.normal();
        const double im = amp * rng.normal();
        screen.modes.push_back({kappa * std::cos(psi), kappa * std::sin(psi), re, im});
    }
    return screen;
}

double ScreenSpectrum::total_variance() const {
    double v = 0.0;
    for (double w : weights_) v += 0.5 * w;
    return v;
}

double ScreenSpectrum::structure_function(double r) const {
    const double scale = 8.0 * std::numbers::pi * std::numbers::pi * k_ * k_ * dz_;
    auto f = [&](double kappa) {
        return kappa * refractive_spectrum(kappa, config_) * (1.0 - std::cyl_bessel_j(0.0, kappa * r));
    };
    const numerics::QuadratureSpec spec{1e-300, 1e-9, 4000};
    double total = 0.0;
    // one panel per decade keeps the oscillatory tail well resolved
    double lo = edges_.front();
    while (lo < edges_.back()) {
        const double hi = std::min(edges_.back(), lo * 10.0);
        total += numerics::integrate(f, lo, hi, spec).value;
        lo = hi;
    }
    return scale * total;
}

PhaseScreen sample_phase_screen(const ChannelConfig& config, double dz, const GridSpec& grid,
                                numerics::RngStream& rng) {
    return ScreenSpectrum(config, dz, grid).sample(rng);
}

}  // namespace turbulux
