#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "fft.hpp"
#include "turbulux/analytic.hpp"
#include "turbulux/error.hpp"
#include "turbulux/simulator.hpp"

namespace turbulux {
namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

double vacuum_spot2(const ChannelConfig& c) {
    const double w0 = c.w0_resolved();
    const double k = 2.0 * std::numbers::pi / c.wavelength;
    const double f0 = c.f0_resolved();
    const double focus = std::isinf(f0) ? 1.0 : 1.0 - c.length / f0;
    const double diff = 2.0 * c.length / (k * w0 * w0);
    return w0 * w0 * (focus * focus + diff * diff);
}

}  // namespace

void GridSpec::validate() const {
    if (n < 128 || !power_of_two(n)) throw InvalidArgument("simulator", "grid n must be a power of two >= 128");
    if (!(window > 0.0) || !std::isfinite(window)) throw InvalidArgument("simulator", "window must be positive");
    if (screens < 1) throw InvalidArgument("simulator", "need at least one screen");
    if (modes < 1) throw InvalidArgument("simulator", "need at least one mode per screen");
    if (!(mask_fraction >= 0.0 && mask_fraction < 0.5)) {
        throw InvalidArgument("simulator", "mask fraction must lie in [0, 0.5)");
    }
}

double expected_long_term_radius(const ChannelConfig& config) {
    if (config.focused()) return beam_stats_analytic(config).w_lt;
    const DerivedChannel d = derive_channel(config);
    const double w02 = std::pow(config.w0_resolved(), 2);
    const double turb = (2.93 + 4.0 * 0.31) * w02 * d.rytov * std::pow(d.fresnel, -7.0 / 6.0);
    return std::sqrt(vacuum_spot2(config) + turb);
}

GridSpec resolve_grid(const GridSpec& grid, const ChannelConfig& config) {
    GridSpec g = grid;
    const double w0 = config.w0_resolved();
    const double wlt = expected_long_term_radius(config);
    if (g.window == 0.0) g.window = 8.0 * std::max(w0, wlt);
    g.validate();
    if (g.window < 6.0 * std::max(w0, wlt) * (1.0 - 1e-12)) {
        throw InvalidArgument("simulator", "window must be at least 6 spot radii");
    }
    const double dx = g.dx();
    if (g.kappa_min == 0.0) {
        g.kappa_min = std::isinf(config.outer_scale) ? 2.0 * std::numbers::pi / (1000.0 * g.window)
                                                     : 2.0 * std::numbers::pi / config.outer_scale;
    }
    if (g.kappa_max == 0.0) {
        const double nyquist = std::numbers::pi / dx;
        g.kappa_max = std::min({nyquist, 2.0 * std::numbers::pi / config.inner_scale,
                                2.0 * std::numbers::pi / (3.0 * dx)});
    }
    if (!(g.kappa_min > 0.0) || !(g.kappa_max > g.kappa_min)) {
        throw InvalidArgument("simulator", "spectral coverage needs 0 < kappa_min < kappa_max");
    }
    return g;
}

nlohmann::json grid_to_json(const GridSpec& g) {
    return {{"n", g.n},
            {"window_m", g.window},
            {"screens", g.screens},
            {"modes", g.modes},
            {"kappa_min", g.kappa_min},
            {"kappa_max", g.kappa_max},
            {"mask_fraction", g.mask_fraction}};
}

GridSpec grid_from_json(const nlohmann::json& doc) {
    GridSpec g;
    try {
        g.n = doc.at("n").get<int>();
        g.window = doc.at("window_m").get<double>();
        g.screens = doc.at("screens").get<int>();
        g.modes = doc.at("modes").get<int>();
        g.kappa_min = doc.at("kappa_min").get<double>();
        g.kappa_max = doc.at("kappa_max").get<double>();
        g.mask_fraction = doc.at("mask_fraction").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("simulator", std::string("bad grid document: ") + e.what());
    }
    return g;
}

double FieldGrid::power() const {
    double p = 0.0;
    for (const auto& v : u) p += std::norm(v);
    return p * dx * dx;
}

FieldGrid initial_field(const ChannelConfig& config, const GridSpec& grid) {
    grid.validate();
    const double w0 = config.w0_resolved();
    const double dx = grid.dx();
    if (2.0 * w0 / dx < 16.0) {
        throw InvalidArgument("simulator", "grid resolves W0 with fewer than 16 points across");
    }
    const double k = 2.0 * std::numbers::pi / config.wavelength;
    const double f0 = config.f0_resolved();
    const double curvature = std::isinf(f0) ? 0.0 : k / (2.0 * f0);
    const double amp = std::sqrt(2.0 / (std::numbers::pi * w0 * w0));

    FieldGrid f;
    f.n = grid.n;
    f.dx = dx;
    f.z = 0.0;
    f.u.resize(static_cast<std::size_t>(grid.n) * static_cast<std::size_t>(grid.n));
    for (int iy = 0; iy < grid.n; ++iy) {
        const double y = f.coord(iy);
        for (int ix = 0; ix < grid.n; ++ix) {
            const double x = f.coord(ix);
            const double r2 = x * x + y * y;
            f.u[static_cast<std::size_t>(iy) * grid.n + ix] =
                amp * std::exp(-r2 / (w0 * w0)) * std::polar(1.0, -curvature * r2);
        }
    }
    return f;
}

struct Propagator::Impl {
    ChannelConfig config;
    GridSpec grid;
    double dz = 0.0;
    detail::Fft2d fft;
    std::vector<std::complex<double>> h_full;
    std::vector<std::complex<double>> h_half;
    std::vector<double> mask;
    std::optional<ScreenSpectrum> spectrum;

    Impl(const ChannelConfig& c, const GridSpec& g) : config(c), grid(g), fft(g.n) {}
};

Propagator::Propagator(const ChannelConfig& config, const GridSpec& grid)
    : impl_(std::make_unique<Impl>(config, grid)) {
    grid.validate();
    const int n = grid.n;
    const auto nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    const double dx = grid.dx();
    const double k = 2.0 * std::numbers::pi / config.wavelength;
    impl_->dz = config.length / grid.screens;

    impl_->h_full.resize(nn);
    impl_->h_half.resize(nn);
    const double norm = 1.0 / static_cast<double>(nn);
    const double dk = 2.0 * std::numbers::pi / (n * dx);
    for (int iy = 0; iy < n; ++iy) {
        const double ky = (iy < n / 2 ? iy : iy - n) * dk;
        for (int ix = 0; ix < n; ++ix) {
            const double kx = (ix < n / 2 ? ix : ix - n) * dk;
            const double q = (kx * kx + ky * ky) / (2.0 * k);
            const auto idx = static_cast<std::size_t>(iy) * n + ix;
            impl_->h_full[idx] = std::polar(norm, -q * impl_->dz);
            impl_->h_half[idx] = std::polar(norm, -q * 0.5 * impl_->dz);
        }
    }

    // separable super-Gaussian absorber, about one at the inner edge of the band
    std::vector<double> edge(static_cast<std::size_t>(n), 1.0);
    if (grid.mask_fraction > 0.0) {
        const double half = 0.5 * grid.window;
        const double inner = half * (1.0 - 2.0 * grid.mask_fraction);
        const double width = half - inner;
        for (int i = 0; i < n; ++i) {
            const double x = std::abs((i - n / 2) * dx);
            if (x > inner) {
                const double t = (x - inner) / width;
                edge[static_cast<std::size_t>(i)] = std::exp(-std::pow(2.0 * t, 8.0));
            }
        }
    }
    impl_->mask.resize(nn);
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            impl_->mask[static_cast<std::size_t>(iy) * n + ix] =
                edge[static_cast<std::size_t>(iy)] * edge[static_cast<std::size_t>(ix)];
        }
    }
    if (config.cn2 > 0.0) impl_->spectrum.emplace(config, impl_->dz, grid);
}

Propagator::~Propagator() = default;

FieldGrid Propagator::propagate(const FieldGrid& field, numerics::RngStream& rng) {
    return run(field, nullptr, &rng);
}

FieldGrid Propagator::propagate(const FieldGrid& field, const ScreenSource& screens) {
    return run(field, &screens, nullptr);
}

FieldGrid Propagator::run(const FieldGrid& field, const ScreenSource* source, numerics::RngStream* rng) {
    Impl& im = *impl_;
    const int n = im.grid.n;
    const auto nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    if (field.n != n || field.u.size() != nn || std::abs(field.dx - im.grid.dx()) > 1e-12 * field.dx) {
        throw InvalidArgument("simulator", "field does not match the propagator grid");
    }
    std::complex<double>* buf = im.fft.data();
    std::copy(field.u.begin(), field.u.end(), buf);

    const int steps = im.grid.screens;
    double absorbed = 0.0;
    const double start = field.power();
    const double cell = field.dx * field.dx;
    for (int s = 0; s <= steps; ++s) {
        const auto& h = (s == 0 || s == steps) ? im.h_half : im.h_full;
        im.fft.forward();
        for (std::size_t i = 0; i < nn; ++i) buf[i] *= h[i];
        im.fft.backward();
        if (s == steps) break;

        const double z = (s + 0.5) * im.dz;
        std::vector<double> phase;
        if (source != nullptr) {
            phase = (*source)(s, z);
            if (phase.size() != nn) throw InvalidArgument("simulator", "screen has the wrong size");
        } else if (im.spectrum) {
            phase = im.spectrum->sample(*rng).render(n, field.dx);
        }
        double lost = 0.0;
        for (std::size_t i = 0; i < nn; ++i) {
            const double m = im.mask[i];
            if (m < 1.0) lost += std::norm(buf[i]) * (1.0 - m * m);
            if (!phase.empty()) buf[i] *= std::polar(m, phase[i]);
            else if (m < 1.0) buf[i] *= m;
        }
        absorbed += lost * cell;
    }

    FieldGrid out;
    out.n = n;
    out.dx = field.dx;
    out.z = field.z + impl_->config.length;
    out.u.assign(buf, buf + nn);
    mask_loss_ = start > 0.0 ? absorbed / start : 0.0;
    return out;
}

FieldGrid propagate(const FieldGrid& field, const ChannelConfig& config, const GridSpec& grid,
                    numerics::RngStream& rng) {
    Propagator p(config, grid);
    return p.propagate(field, rng);
}

std::vector<double> aperture_weights(int n, double dx, double a) {
    if (!(a > 0.0)) throw InvalidArgument("simulator", "aperture must be positive");
    if (a > 0.5 * n * dx * (1.0 - 2.0 / n)) {
        throw InvalidArgument("simulator", "aperture does not fit inside the window");
    }
    std::vector<double> w(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    const double h = 0.5 * dx;
    const double a2 = a * a;
    for (int iy = 0; iy < n; ++iy) {
        const double y = (iy - n / 2) * dx;
        for (int ix = 0; ix < n; ++ix) {
            const double x = (ix - n / 2) * dx;
            const double nx = std::max(std::abs(x) - h, 0.0);
            const double ny = std::max(std::abs(y) - h, 0.0);
            const double fx = std::abs(x) + h;
            const double fy = std::abs(y) + h;
            double cover = 0.0;
            if (fx * fx + fy * fy <= a2) {
                cover = 1.0;
            } else if (nx * nx + ny * ny < a2) {
                int inside = 0;
                for (int sy = 0; sy < 4; ++sy) {
                    const double py = y - h + (sy + 0.5) * 0.25 * dx;
                    for (int sx = 0; sx < 4; ++sx) {
                        const double px = x - h + (sx + 0.5) * 0.25 * dx;
                        inside += (px * px + py * py < a2) ? 1 : 0;
                    }
                }
                cover = inside / 16.0;
            }
            w[static_cast<std::size_t>(iy) * n + ix] = cover;
        }
    }
    return w;
}

Observables measure_observables(const FieldGrid& field, const std::vector<double>& apertures) {
    const int n = field.n;
    const auto nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    if (field.u.size() != nn) throw InvalidArgument("simulator", "malformed field");
    std::vector<double> intensity(nn);
    double p = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    for (int iy = 0; iy < n; ++iy) {
        const double y = field.coord(iy);
        for (int ix = 0; ix < n; ++ix) {
            const auto i = static_cast<std::size_t>(iy) * n + ix;
            const double v = std::norm(field.u[i]);
            if (!std::isfinite(v)) throw Error("simulator", "non-finite field value");
            intensity[i] = v;
            p += v;
            sx += field.coord(ix) * v;
            sy += y * v;
        }
    }
    Observables o;
    const double cell = field.dx * field.dx;
    o.power = p * cell;
    if (!(p > 0.0)) throw Error("simulator", "field carries no power");
    o.x0 = sx / p;
    o.y0 = sy / p;
    double mxx = 0.0;
    double myy = 0.0;
    for (int iy = 0; iy < n; ++iy) {
        const double dy = field.coord(iy) - o.y0;
        for (int ix = 0; ix < n; ++ix) {
            const double dxx = field.coord(ix) - o.x0;
            const double v = intensity[static_cast<std::size_t>(iy) * n + ix];
            mxx += dxx * dxx * v;
            myy += dy * dy * v;
        }
    }
    o.S = 4.0 * mxx / p;
    o.Sy = 4.0 * myy / p;
    for (double a : apertures) {
        const auto w = aperture_weights(n, field.dx, a);
        double e = 0.0;
        for (std::size_t i = 0; i < nn; ++i) e += w[i] * intensity[i];
        e *= cell;
        if (e < -1e-6 || e > 1.0 + 1e-6) {
            throw Error("simulator", "transmittance " + std::to_string(e) + " outside [0, 1]");
        }
        o.eta.push_back(std::clamp(e, 0.0, 1.0));
    }
    return o;
}

Observables measure_observables(const FieldGrid& field, double aperture) {
    return measure_observables(field, std::vector<double>{aperture});
}

}  // namespace turbulux
