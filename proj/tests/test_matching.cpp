#include <cmath>
#include <numbers>

#include "doctest.h"
#include "turbulux/analytic.hpp"
#include "turbulux/error.hpp"
#include "turbulux/matching.hpp"

using namespace turbulux;
using numerics::integrate;

namespace {

// Transmittance of a Gaussian beam (squared radius S) whose center sits r0
// off the axis of a circular aperture of radius a.
double offset_transmittance(double r0, double S, double a) {
    auto f = [&](double r) {
        const double d = r - r0;
        return 4.0 * r / S * std::exp(-2.0 * d * d / S) * numerics::bessel_i_scaled(0, 4.0 * r * r0 / S);
    };
    return integrate(f, 0.0, a, {1e-14, 1e-12, 2000}).value;
}

// Brute-force average over a Gaussian centroid with per-axis variance x0sq.
std::pair<double, double> brute_force_moments(double S, double x0sq, double a) {
    auto weight = [&](double r0) { return r0 / x0sq * std::exp(-0.5 * r0 * r0 / x0sq); };
    const double hi = 12.0 * std::sqrt(x0sq);
    const double m1 = integrate([&](double r0) { return weight(r0) * offset_transmittance(r0, S, a); }, 0.0, hi,
                                {1e-12, 1e-10, 2000}).value;
    const double m2 = integrate(
        [&](double r0) {
            const double t = offset_transmittance(r0, S, a);
            return weight(r0) * t * t;
        },
        0.0, hi, {1e-12, 1e-10, 2000}).value;
    return {m1, m2};
}

}  // namespace

TEST_CASE("lognormal_from_s_moments") {
    const auto z = lognormal_from_s_moments(2.894e-4, 2.894e-4 * 2.894e-4);
    CHECK(z.sigma2 == 0.0);
    CHECK(z.mu == doctest::Approx(std::log(2.894e-4)).epsilon(1e-15));

    const double m = 2.894e-4;
    const auto p = lognormal_from_s_moments(m, 1.2 * m * m);
    CHECK(std::abs(std::exp(p.mu + 0.5 * p.sigma2) / m - 1.0) < 1e-12);
    CHECK(std::abs(p.second_moment() / (1.2 * m * m) - 1.0) < 1e-12);
    CHECK(p.sigma2 == doctest::Approx(std::log(1.2)).epsilon(1e-14));

    CHECK_THROWS_AS(lognormal_from_s_moments(m, 0.9 * m * m), InvalidMoments);
    CHECK_THROWS_AS(lognormal_from_s_moments(-m, m * m), InvalidMoments);
}

TEST_CASE("conditional_eta_moments: limits") {
    const double a = 0.012;
    const double S = 3e-4;
    const auto z = conditional_eta_moments(S, 0.0, a);
    CHECK(z.mean == doctest::Approx(-std::expm1(-2.0 * a * a / S)).epsilon(1e-15));
    CHECK(z.second == doctest::Approx(z.mean * z.mean).epsilon(1e-15));
    const auto tiny = conditional_eta_moments(S, 1e-14, a);
    CHECK(std::abs(tiny.second - z.second) < 1e-8);

    const auto wide = conditional_eta_moments(S, 4e-6, 10.0);
    CHECK(wide.mean == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(wide.second == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(conditional_eta_moments(0.0, 1e-6, a), InvalidArgument);
    CHECK_THROWS_AS(conditional_eta_moments(S, -1e-6, a), InvalidArgument);
}

TEST_CASE("conditional_eta_moments: brute-force centroid oracle") {
    const double S = 0.017 * 0.017;
    const double x0sq = 0.0018 * 0.0018;
    const double a = 0.012;
    const auto c = conditional_eta_moments(S, x0sq, a);
    const auto [b1, b2] = brute_force_moments(S, x0sq, a);
    CHECK(std::abs(c.mean - b1) < 5e-4);
    CHECK(std::abs(c.second - b2) < 5e-4);
    CHECK(c.second <= c.mean);
}

TEST_CASE("conditional_eta_moments: both Marcum orderings agree") {
    for (double S : {1e-4, 3e-4, 1e-3}) {
        for (double x0sq : {1e-7, 3e-6, 3e-5}) {
            for (double a : {0.005, 0.012, 0.03}) {
                const double p = S / (8.0 * x0sq);
                const double alpha = 2.0 * a / std::sqrt(S) *
                                     std::sqrt(2.0 * p * (p + 1.0) / (2.0 * p * p + 3.0 * p + 1.0));
                const double beta = 1.0 / (2.0 * p + 1.0);
                const double s = std::sqrt(1.0 - beta * beta);
                const double big = alpha / s;
                const double small = alpha * beta / s;
                const double e1 = std::exp(-2.0 * a * a / (4.0 * x0sq + S));
                // 1 - Q(big, small) + Q(small, big), rewritten through the symmetric identity
                const double other = 2.0 - 2.0 * numerics::marcum_q1(big, small) +
                                     std::exp(-0.5 * (big - small) * (big - small)) *
                                         numerics::bessel_i_scaled(0, big * small);
                const double second = 1.0 - 2.0 * e1 + std::exp(-0.5 * alpha * alpha) * other;
                const auto c = conditional_eta_moments(S, x0sq, a);
                const double clamped = std::clamp(second, c.mean * c.mean, c.mean);
                CHECK(std::abs(c.second - clamped) < 1e-10);
            }
        }
    }
}

TEST_CASE("model_eta_moments: forward consistency over the box") {
    const double a = 0.012;
    for (double mu : {-9.0, -8.0, -7.0}) {
        for (double s2 : {1e-6, 0.01, 0.1, 0.5, 1.5}) {
            const auto m = model_eta_moments(2e-5, a, {mu, s2});
            CHECK(m.second <= m.mean);
            CHECK(m.mean * m.mean <= m.second + 1e-15);
        }
    }
}

TEST_CASE("tail_sigma2_bound") {
    const double b = tail_sigma2_bound(10.0, 0.01);
    CHECK(b > 0.0);
    const double sigma = std::sqrt(b);
    const double tail = 0.5 * std::erfc((std::log(10.0) + 0.5 * b) / (sigma * std::numbers::sqrt2));
    CHECK(tail == doctest::Approx(0.01).epsilon(1e-10));
    CHECK(std::isinf(tail_sigma2_bound(10.0, 0.2)));
    CHECK_THROWS_AS(tail_sigma2_bound(0.5, 0.01), InvalidArgument);
}

TEST_CASE("match_eta_moments: round trip from planted parameters") {
    const double a = 0.012;
    const double bw2 = 2.35e-5;
    for (const LogNormalParams& planted : {LogNormalParams{-7.3, 0.05}, LogNormalParams{-7.0, 0.3},
                                           LogNormalParams{-8.1, 0.012}}) {
        const EtaMoments targets = model_eta_moments(bw2, a, planted, {1e-14, 1e-12, 4000});
        const LogNormalParams init{planted.mu + 0.2, planted.sigma2 * 1.5};
        const auto r = match_eta_moments(targets, bw2, a, init);
        CHECK(r.converged);
        CHECK(r.feasible);
        CHECK_FALSE(r.boundary_active);
        CHECK(std::abs(r.params.mu - planted.mu) < 1e-6);
        CHECK(std::abs(r.params.sigma2 - planted.sigma2) < 1e-6);
        const auto back = model_eta_moments(bw2, a, r.params, {1e-14, 1e-12, 4000});
        CHECK(std::abs(back.mean / targets.mean - 1.0) < 1e-6);
        CHECK(std::abs(back.second / targets.second - 1.0) < 1e-6);
    }
}

TEST_CASE("match_eta_moments: invalid targets and unreachable targets") {
    const LogNormalParams init{-7.2, 0.05};
    CHECK_THROWS_AS(match_eta_moments({0.3, 0.4, {}}, 2e-5, 0.012, init), InvalidMoments);
    CHECK_THROWS_AS(match_eta_moments({0.3, 0.05, {}}, 2e-5, 0.012, init), InvalidMoments);

    // a spread only sigma^2 = 5 could produce, with the box capped at 2
    const EtaMoments far = model_eta_moments(2e-5, 0.012, {-7.2 - 2.5, 5.0});
    const auto r = match_eta_moments(far, 2e-5, 0.012, init);
    CHECK(r.boundary_active);
    CHECK_FALSE(r.feasible);
}

TEST_CASE("calibration methods produce valid but different models") {
    ChannelConfig c;
    c.length = 2000.0;
    const auto stats = beam_stats_analytic(c).stats;
    const double a = 0.012;
    const auto a_model = calibrate_s_moments(stats, a);
    const auto forward = model_eta_moments(a_model.sigma_bw2, a, a_model.s);
    // targets the s-moments solution does not reproduce
    const EtaMoments targets{forward.mean * 0.97, forward.second * 0.95, {}};
    const auto b = calibrate_eta_moments(stats, targets, a);
    CHECK(b.match.feasible);
    CHECK_NOTHROW(a_model.validate());
    CHECK_NOTHROW(b.model.validate());
    CHECK(b.model.sigma_bw2 == a_model.sigma_bw2);
    CHECK(std::abs(b.model.s.mu - a_model.s.mu) + std::abs(b.model.s.sigma2 - a_model.s.sigma2) > 1e-4);
    CHECK(method_from_string("s-moments") == CalibrationMethod::SMoments);
    CHECK(to_string(CalibrationMethod::EtaMoments) == "eta-moments");
    CHECK_THROWS_AS(method_from_string("ml"), InvalidArgument);
}

TEST_CASE("constant loss: both modes") {
    CircularBeamPdt m;
    m.sigma_bw2 = 2e-5;
    m.s = {-7.2, 0.05};
    m.aperture = 0.012;
    const auto same = apply_constant_loss(1.0, m);
    CHECK(same.eta_c == 1.0);
    CHECK(same.s.mu == m.s.mu);
    const EtaMoments t{0.4, 0.2, 0.6};
    const auto t1 = apply_constant_loss(1.0, t);
    CHECK(t1.mean == t.mean);
    CHECK(t1.second == t.second);
    CHECK(*t1.sqrt_mean == *t.sqrt_mean);

    const auto r = apply_constant_loss(0.48, m);
    CHECK(std::abs(pdt_moment(1.0, r) - 0.48 * pdt_moment(1.0, m)) < 1e-8);
    const auto f = apply_constant_loss(0.48, t);
    CHECK(f.mean == doctest::Approx(0.48 * 0.4));
    CHECK(f.second == doctest::Approx(0.48 * 0.48 * 0.2));
    CHECK(*f.sqrt_mean == doctest::Approx(std::sqrt(0.48) * 0.6));
    CHECK_THROWS_AS(apply_constant_loss(0.0, m), InvalidArgument);
    CHECK(loss_mode_from_string("fold") == LossMode::Fold);
    CHECK_THROWS_AS(loss_mode_from_string("scale"), InvalidArgument);
}

TEST_CASE("constant_loss_efficiency: link budget") {
    CHECK(constant_loss_efficiency(3.0, 0.1, 2000.0) == doctest::Approx(0.47863009232263831).epsilon(1e-14));
    CHECK(std::abs(constant_loss_efficiency(3.0, 0.1, 2000.0) - 0.48) < 0.005);
    CHECK(constant_loss_efficiency(0.0, 0.0, 5000.0) == 1.0);
}

TEST_CASE("EtaMoments: inequalities") {
    CHECK(EtaMoments{0.5, 0.3, {}}.consistent());
    CHECK_FALSE(EtaMoments{0.5, 0.6, {}}.consistent());
    CHECK_FALSE(EtaMoments{0.5, 0.2, {}}.consistent());
    CHECK(EtaMoments{0.5, 0.3, 0.7}.consistent());
    CHECK_FALSE(EtaMoments{0.5, 0.3, 0.4}.consistent());
    CHECK_THROWS_AS(EtaMoments({0.5, 0.3, 0.75}).validate(), InvalidMoments);
}
