#include <cmath>
#include <limits>

#include "doctest.h"
#include "turbulux/analytic.hpp"
#include "turbulux/error.hpp"

using namespace turbulux;

namespace {

ChannelConfig fig1(double L) {
    ChannelConfig c;
    c.length = L;
    return c;
}

}  // namespace

TEST_CASE("beam_stats_analytic: vacuum limit") {
    ChannelConfig c = fig1(1000.0);
    c.cn2 = 0.0;
    const auto r = beam_stats_analytic(c);
    const double w2 = std::pow(c.w0_resolved(), 2);
    const double om = derive_channel(c).fresnel;
    CHECK(r.stats.sigma_bw2 == 0.0);
    CHECK(r.stats.mean_s == doctest::Approx(w2 / (om * om)).epsilon(1e-14));
    CHECK(r.stats.mean_s2 == doctest::Approx(r.stats.mean_s * r.stats.mean_s).epsilon(1e-14));
    CHECK(r.w_lt == doctest::Approx(std::sqrt(r.stats.mean_s)).epsilon(1e-14));
}

TEST_CASE("beam_stats_analytic: long-term radius at 2000 m") {
    const auto r = beam_stats_analytic(fig1(2000.0));
    CHECK(derive_channel(fig1(2000.0)).rytov == doctest::Approx(0.1533).epsilon(2e-3));
    CHECK(r.w_lt == doctest::Approx(0.0290).epsilon(5e-3));
    CHECK(std::abs(r.w_lt / 0.028 - 1.0) < 0.05);
    CHECK(r.w_lt * r.w_lt == doctest::Approx(r.stats.mean_s + 4.0 * r.stats.sigma_bw2).epsilon(1e-14));
    CHECK(r.weak_turbulence);
}

TEST_CASE("beam_stats_analytic: values at 1000 m") {
    const auto r = beam_stats_analytic(fig1(1000.0));
    CHECK(r.stats.sigma_bw2 == doctest::Approx(3.37e-6).epsilon(5e-3));
    CHECK(std::sqrt(r.stats.sigma_bw2) == doctest::Approx(1.8e-3).epsilon(0.02));
    CHECK(r.stats.mean_s == doctest::Approx(2.89e-4).epsilon(5e-3));
    CHECK(r.stats.mean_s2 >= r.stats.mean_s * r.stats.mean_s);
    CHECK_NOTHROW(r.stats.validate());
}

TEST_CASE("beam_stats_analytic: focused beams only") {
    ChannelConfig c = fig1(1000.0);
    c.f0 = 500.0;
    CHECK_THROWS_AS(beam_stats_analytic(c), ModelBreakdown);
    c.f0 = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(beam_stats_analytic(c), ModelBreakdown);
    CHECK_THROWS_AS(eta_moments_analytic(c, 0.012), ModelBreakdown);
}

TEST_CASE("beam_stats_analytic: strong turbulence is flagged") {
    ChannelConfig c = fig1(2000.0);
    c.cn2 = 1e-14;
    CHECK(derive_channel(c).rytov > 1.0);
    CHECK_FALSE(beam_stats_analytic(c).weak_turbulence);
}

TEST_CASE("eta_moments_analytic: vacuum") {
    ChannelConfig c = fig1(1000.0);
    c.cn2 = 0.0;
    const double a = 0.012;
    const double w2 = std::pow(c.w0_resolved(), 2);
    const double om = derive_channel(c).fresnel;
    const auto g = eta_moments_analytic(c, a, AnalyticVariant::GaussianConsistent);
    const double expect = 1.0 - std::exp(-2.0 * a * a * om * om / w2);
    CHECK(g.moments.mean == doctest::Approx(expect).epsilon(1e-14));
    // the two-bracket second moment reduces to these factors, not to <eta>^2
    const double x = a * a * om * om / w2;
    const double second = -std::expm1(-4.0 * x / 3.0) * -std::expm1(-3.0 * x);
    CHECK(g.moments.second == doctest::Approx(second).epsilon(1e-14));
    CHECK(g.moments.second < g.moments.mean * g.moments.mean);
    CHECK_FALSE(g.valid);
    CHECK_FALSE(g.moments.sqrt_mean.has_value());
}

TEST_CASE("eta_moments_analytic: printed pair at 2000 m, a = 12 mm") {
    const auto c = fig1(2000.0);
    const auto p = eta_moments_analytic(c, 0.012, AnalyticVariant::AsPrinted);
    CHECK(p.moments.mean == doctest::Approx(0.114).epsilon(0.01));
    CHECK(p.moments.second == doctest::Approx(0.130).epsilon(0.01));
    CHECK(p.moments.second > p.moments.mean);
    CHECK_FALSE(p.valid);

    const auto g = eta_moments_analytic(c, 0.012, AnalyticVariant::GaussianConsistent);
    CHECK(g.moments.mean == doctest::Approx(0.290).epsilon(0.01));
    CHECK(g.moments.mean > g.moments.second);
    CHECK(g.valid);
}

TEST_CASE("eta_moments_analytic: wide aperture and bad input") {
    const auto c = fig1(2000.0);
    for (auto v : {AnalyticVariant::AsPrinted, AnalyticVariant::GaussianConsistent}) {
        const auto r = eta_moments_analytic(c, 5.0, v);
        CHECK(r.moments.mean == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.moments.second == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(eta_moments_analytic(c, 0.0), InvalidArgument);
    CHECK(variant_from_string("as-printed") == AnalyticVariant::AsPrinted);
    CHECK(to_string(AnalyticVariant::GaussianConsistent) == "gaussian-consistent");
    CHECK_THROWS_AS(variant_from_string("printed"), InvalidArgument);
}

TEST_CASE("beam_wandering_prefactor") {
    ChannelConfig c = fig1(2000.0);
    const double r2 = derive_channel(c).rytov;
    CHECK(beam_wandering_prefactor(c) == doctest::Approx(std::exp(-0.13 * r2)).epsilon(1e-14));
    CHECK(beam_wandering_prefactor(c) == doctest::Approx(0.98044).epsilon(1e-3));
    c.cn2 = 0.0;
    CHECK(beam_wandering_prefactor(c) == 1.0);
    for (double cn2 : {1e-16, 1e-15, 1e-14, 1e-13}) {
        c.cn2 = cn2;
        const double p = beam_wandering_prefactor(c);
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("analytic statistics are monotone in Cn2 over the weak regime") {
    ChannelConfig c = fig1(2000.0);
    double prev_bw = -1.0, prev_s = -1.0, prev_s2 = -1.0, prev_eta = 2.0;
    for (int i = 0; i < 50; ++i) {
        c.cn2 = 1e-17 * std::pow(10.0, 2.0 * i / 49.0);
        const auto r = beam_stats_analytic(c);
        CHECK(derive_channel(c).rytov < 1.0);
        CHECK(r.stats.sigma_bw2 > prev_bw);
        CHECK(r.stats.mean_s > prev_s);
        CHECK(r.stats.mean_s2 > prev_s2);
        const double eta = eta_moments_analytic(c, 0.012).moments.mean;
        CHECK(eta < prev_eta);
        prev_bw = r.stats.sigma_bw2;
        prev_s = r.stats.mean_s;
        prev_s2 = r.stats.mean_s2;
        prev_eta = eta;
    }
}

TEST_CASE("dimensionless outputs are invariant under a length rescaling") {
    const double f = 10.0;
    ChannelConfig c = fig1(1500.0);
    c.w0 = 0.02;
    ChannelConfig s = c;
    s.wavelength *= f;
    s.length *= f;
    s.w0 *= f;
    s.cn2 *= std::pow(f, -2.0 / 3.0);
    const double a = 0.013;
    CHECK(derive_channel(s).rytov == doctest::Approx(derive_channel(c).rytov).epsilon(1e-12));
    for (auto v : {AnalyticVariant::AsPrinted, AnalyticVariant::GaussianConsistent}) {
        const auto m1 = eta_moments_analytic(c, a, v).moments;
        const auto m2 = eta_moments_analytic(s, a * f, v).moments;
        CHECK(m2.mean == doctest::Approx(m1.mean).epsilon(1e-12));
        CHECK(m2.second == doctest::Approx(m1.second).epsilon(1e-12));
    }
    const auto b1 = beam_stats_analytic(c);
    const auto b2 = beam_stats_analytic(s);
    CHECK(b2.w_lt / f == doctest::Approx(b1.w_lt).epsilon(1e-12));
}
