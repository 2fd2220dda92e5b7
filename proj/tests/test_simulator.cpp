#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "turbulux/error.hpp"
#include "turbulux/simulator.hpp"

using namespace turbulux;

namespace {

ChannelConfig channel(double L, double cn2 = 1e-15) {
    ChannelConfig c;
    c.length = L;
    c.cn2 = cn2;
    return c;
}

GridSpec grid(const ChannelConfig& c, int n = 256, int modes = 512) {
    GridSpec g;
    g.n = n;
    g.modes = modes;
    return resolve_grid(g, c);
}

FieldGrid gaussian(int n, double dx, double w, double cx = 0.0, double cy = 0.0) {
    FieldGrid f;
    f.n = n;
    f.dx = dx;
    f.u.resize(static_cast<std::size_t>(n) * n);
    const double amp = std::sqrt(2.0 / (std::numbers::pi * w * w));
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            const double x = f.coord(ix) - cx;
            const double y = f.coord(iy) - cy;
            f.u[static_cast<std::size_t>(iy) * n + ix] = amp * std::exp(-(x * x + y * y) / (w * w));
        }
    }
    return f;
}

}  // namespace

TEST_CASE("initial_field: normalization and spot size") {
    const auto c = channel(1000.0);
    const auto g = grid(c);
    const auto f = initial_field(c, g);
    CHECK(std::abs(f.power() - 1.0) < 1e-6);
    const auto obs = measure_observables(f, 0.5 * g.window * 0.9);
    const double w02 = std::pow(c.w0_resolved(), 2);
    CHECK(std::abs(obs.S / w02 - 1.0) < 5e-3);
    CHECK(std::abs(obs.Sy / w02 - 1.0) < 5e-3);
    CHECK(std::abs(obs.x0) < 1e-12);

    GridSpec coarse = g;
    coarse.window = 20.0 * g.window;
    CHECK_THROWS_AS(initial_field(c, coarse), InvalidArgument);
}

TEST_CASE("resolve_grid and GridSpec validation") {
    const auto c = channel(2000.0);
    const auto g = grid(c, 512);
    CHECK(g.window == doctest::Approx(8.0 * expected_long_term_radius(c)));
    CHECK(g.kappa_min == doctest::Approx(2.0 * std::numbers::pi / c.outer_scale));
    CHECK(g.kappa_max == doctest::Approx(2.0 * std::numbers::pi / (3.0 * g.dx())));
    const auto back = grid_from_json(grid_to_json(g));
    CHECK(back.window == g.window);
    CHECK(back.kappa_max == g.kappa_max);

    GridSpec bad;
    bad.n = 200;
    CHECK_THROWS_AS(resolve_grid(bad, c), InvalidArgument);
    bad.n = 64;
    CHECK_THROWS_AS(resolve_grid(bad, c), InvalidArgument);
    GridSpec narrow;
    narrow.window = 3.0 * expected_long_term_radius(c);
    CHECK_THROWS_AS(resolve_grid(narrow, c), InvalidArgument);
}

TEST_CASE("propagate: vacuum focusing and power conservation") {
    for (double L : {1000.0, 2000.0}) {
        const auto c = channel(L, 0.0);
        const auto g = grid(c);
        Propagator p(c, g);
        numerics::RngStream rng(1, 0);
        const auto in = initial_field(c, g);
        const auto out = p.propagate(in, rng);
        const double fresnel = derive_channel(c).fresnel;
        const double expect = std::pow(c.w0_resolved(), 2) / (fresnel * fresnel);
        const auto obs = measure_observables(out, 0.012);
        CHECK(std::abs(obs.S / expect - 1.0) < 0.01);
        CHECK(p.mask_loss() < 1e-4);
        CHECK(std::abs(out.power() + p.mask_loss() * in.power() - in.power()) < 1e-6);
        CHECK(out.z == L);
    }
}

TEST_CASE("propagate: tilt screen displaces the centroid") {
    const auto c = channel(1000.0, 0.0);
    const auto g = grid(c);
    const double k = 2.0 * std::numbers::pi / c.wavelength;
    const double dz = c.length / g.screens;
    const double z_screen = 0.5 * dz;
    const double shift = 2e-3;
    const double slope = shift * k / (c.length - z_screen);
    const auto nn = static_cast<std::size_t>(g.n) * g.n;
    const ScreenSource tilt = [&](int index, double z) {
        std::vector<double> phase(nn, 0.0);
        if (index == 0) {
            CHECK(z == doctest::Approx(z_screen));
            for (int iy = 0; iy < g.n; ++iy) {
                for (int ix = 0; ix < g.n; ++ix) phase[static_cast<std::size_t>(iy) * g.n + ix] = slope * (ix - g.n / 2) * g.dx();
            }
        }
        return phase;
    };
    Propagator p(c, g);
    const auto out = p.propagate(initial_field(c, g), tilt);
    const auto obs = measure_observables(out, 0.012);
    CHECK(std::abs(obs.x0 / shift - 1.0) < 0.05);
    CHECK(std::abs(obs.y0) < 1e-3 * shift);
}

TEST_CASE("measure_observables: synthetic Gaussian and translation") {
    const int n = 256;
    const double dx = 5e-4;
    const double w = 0.015;
    const double a = 0.012;
    const auto f = gaussian(n, dx, w);
    const auto obs = measure_observables(f, std::vector<double>{a, 0.02});
    CHECK(std::abs(obs.eta[0] / (-std::expm1(-2.0 * a * a / (w * w))) - 1.0) < 5e-3);
    CHECK(std::abs(obs.eta[1] / (-std::expm1(-2.0 * 0.02 * 0.02 / (w * w))) - 1.0) < 5e-3);
    CHECK(std::abs(obs.S / (w * w) - 1.0) < 5e-3);
    CHECK(std::abs(obs.power - 1.0) < 1e-6);

    const double delta = 10 * dx;
    const auto moved = gaussian(n, dx, w, delta, 0.0);
    const auto m = measure_observables(moved, a);
    CHECK(m.x0 - obs.x0 == doctest::Approx(delta).epsilon(1e-9));
    CHECK(std::abs(m.y0 - obs.y0) < 1e-12);
    CHECK(std::abs(m.S / obs.S - 1.0) < 1e-3);
    CHECK(m.eta[0] < obs.eta[0]);

    CHECK_THROWS_AS(measure_observables(f, 0.2), InvalidArgument);
    CHECK_THROWS_AS(measure_observables(f, -0.01), InvalidArgument);
}

TEST_CASE("aperture_weights: area") {
    const int n = 256;
    const double dx = 5e-4;
    const double a = 0.0123;
    const auto w = aperture_weights(n, dx, a);
    double area = 0.0;
    for (double v : w) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        area += v;
    }
    CHECK(std::abs(area * dx * dx / (std::numbers::pi * a * a) - 1.0) < 2e-3);
}

TEST_CASE("phase screens: determinism and zero mean") {
    const auto c = channel(1000.0);
    const auto g = grid(c);
    const double dz = c.length / g.screens;
    const ScreenSpectrum spectrum(c, dz, g);
    numerics::RngStream r1(42, 3), r2(42, 3);
    const auto s1 = spectrum.sample(r1);
    const auto s2 = spectrum.sample(r2);
    REQUIRE(s1.modes.size() == s2.modes.size());
    for (std::size_t j = 0; j < s1.modes.size(); ++j) {
        CHECK(s1.modes[j].kx == s2.modes[j].kx);
        CHECK(s1.modes[j].re == s2.modes[j].re);
    }
    const auto rendered = s1.render(g.n, g.dx());
    CHECK(rendered[static_cast<std::size_t>(37) * g.n + 101] ==
          doctest::Approx(s1.evaluate((101 - g.n / 2) * g.dx(), (37 - g.n / 2) * g.dx())).epsilon(1e-9));

    const int count = 1000;
    std::vector<std::pair<double, double>> probes;
    for (int i = 0; i < 10; ++i) probes.emplace_back(0.004 * i - 0.02, 0.003 * i);
    std::vector<double> sum(probes.size(), 0.0), sum2(probes.size(), 0.0);
    numerics::RngStream rng(7, 0);
    for (int s = 0; s < count; ++s) {
        const auto screen = spectrum.sample(rng);
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const double v = screen.evaluate(probes[p].first, probes[p].second);
            sum[p] += v;
            sum2[p] += v * v;
        }
    }
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const double mean = sum[p] / count;
        const double var = sum2[p] / count - mean * mean;
        CHECK(std::abs(mean) < 4.0 * std::sqrt(var / count));
    }
}

TEST_CASE("phase screens: structure function") {
    const auto c = channel(1000.0);
    const auto g = grid(c);
    const double dz = c.length / g.screens;
    const ScreenSpectrum spectrum(c, dz, g);
    const std::vector<double> seps{4.0 * g.dx(), 10.0 * g.dx(), 0.03 * g.window, g.window / 8.0};
    const int count = 4000;
    const int bases = 8;
    std::vector<double> acc(seps.size(), 0.0);
    numerics::RngStream rng(11, 0);
    for (int s = 0; s < count; ++s) {
        const auto screen = spectrum.sample(rng);
        for (int b = 0; b < bases; ++b) {
            const double th = std::numbers::pi * b / bases;
            const double x = 0.01 * std::cos(2.0 * th);
            const double y = 0.01 * std::sin(3.0 * th);
            const double phi0 = screen.evaluate(x, y);
            for (std::size_t k = 0; k < seps.size(); ++k) {
                const double d = screen.evaluate(x + seps[k] * std::cos(th), y + seps[k] * std::sin(th)) - phi0;
                acc[k] += d * d;
            }
        }
    }
    for (std::size_t k = 0; k < seps.size(); ++k) {
        const double empirical = acc[k] / (count * bases);
        const double expect = spectrum.structure_function(seps[k]);
        CHECK(std::abs(empirical / expect - 1.0) < 0.05);
    }
    // Kolmogorov 5/3 law between the two small separations
    const double slope = std::log(spectrum.structure_function(seps[1]) / spectrum.structure_function(seps[0])) /
                         std::log(seps[1] / seps[0]);
    CHECK(slope == doctest::Approx(5.0 / 3.0).epsilon(0.05));
}

TEST_CASE("run_ensemble: worker count does not change results") {
    const auto c = channel(1000.0);
    GridSpec g;
    g.n = 128;
    g.screens = 5;
    g.modes = 64;
    g = resolve_grid(g, c);
    const std::vector<double> apertures{0.012, 0.015};
    const auto one = run_ensemble(c, g, 100, 2024, apertures, {1, {}});
    const auto many = run_ensemble(c, g, 100, 2024, apertures, {8, {}});
    REQUIRE(one.size() == 100);
    REQUIRE(many.size() == 100);
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(one.eta[0][i] == many.eta[0][i]);
        CHECK(one.eta[1][i] == many.eta[1][i]);
        CHECK(one.x0[i] == many.x0[i]);
        CHECK(one.y0[i] == many.y0[i]);
        CHECK(one.S[i] == many.S[i]);
    }
    const auto small = run_ensemble(c, g, 10, 2024, apertures);
    const auto head = one.head(10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(small.S[i] == head.S[i]);
    CHECK(one.aperture_index(0.015) == 1);
    CHECK_THROWS_AS(one.aperture_index(0.02), InvalidArgument);
    CHECK_THROWS_AS(run_ensemble(c, g, 0, 1, apertures), InvalidArgument);
    CHECK_NOTHROW(one.validate());
}

TEST_CASE("sample sets: CSV round trip is bit-exact") {
    const auto c = channel(500.0);
    GridSpec g;
    g.n = 128;
    g.screens = 4;
    g.modes = 32;
    g = resolve_grid(g, c);
    const auto set = run_ensemble(c, g, 12, 99, {0.005, 0.01});
    const auto dir = std::filesystem::temp_directory_path() / "turbulux_test_samples";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "set.csv").string();
    save_sample_set(set, path);
    CHECK(std::filesystem::exists(sidecar_path(path)));
    const auto back = load_sample_set(path);
    CHECK(back.seed == set.seed);
    CHECK(back.channel.length == set.channel.length);
    CHECK(back.grid.window == set.grid.window);
    CHECK(back.grid.kappa_max == set.grid.kappa_max);
    REQUIRE(back.size() == set.size());
    REQUIRE(back.apertures == set.apertures);
    for (std::size_t i = 0; i < set.size(); ++i) {
        CHECK(back.eta[0][i] == set.eta[0][i]);
        CHECK(back.eta[1][i] == set.eta[1][i]);
        CHECK(back.x0[i] == set.x0[i]);
        CHECK(back.y0[i] == set.y0[i]);
        CHECK(back.S[i] == set.S[i]);
        CHECK(back.Sy[i] == set.Sy[i]);
    }
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(load_sample_set((dir / "missing.csv").string()), InvalidArgument);
}

TEST_CASE("format_double: shortest round trip") {
    for (double x : {0.1, 1.0 / 3.0, 2.894e-4, 1e-300, 123456789.0}) {
        CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("run_ensemble: grid convergence of <eta>") {
    const auto c = channel(1000.0);
    GridSpec coarse;
    coarse.n = 256;
    coarse.modes = 128;
    coarse = resolve_grid(coarse, c);
    GridSpec fine = coarse;
    fine.n = 512;
    const auto a = run_ensemble(c, coarse, 40, 5, {0.015});
    const auto b = run_ensemble(c, fine, 40, 5, {0.015});
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < 40; ++i) {
        ma += a.eta[0][i];
        mb += b.eta[0][i];
    }
    CHECK(std::abs(mb / ma - 1.0) < 0.01);
}

TEST_CASE("run_ensemble: centroid marginal is close to Gaussian") {
    const auto c = channel(1000.0);
    GridSpec g;
    g.n = 128;
    g.screens = 10;
    g.modes = 64;
    g = resolve_grid(g, c);
    const auto set = run_ensemble(c, g, 10000, 77, {0.015});
    for (const auto* col : {&set.x0, &set.y0}) {
        const double n = static_cast<double>(col->size());
        double m = 0.0;
        for (double v : *col) m += v;
        m /= n;
        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (double v : *col) {
            const double d = v - m;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        const double skew = m3 / std::pow(m2, 1.5);
        const double kurt = m4 / (m2 * m2) - 3.0;
        CHECK(std::abs(skew) < 0.2);
        CHECK(std::abs(kurt) < 0.2);
    }
}
