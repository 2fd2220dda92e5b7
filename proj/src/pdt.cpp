#include "turbulux/pdt.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "turbulux/error.hpp"

namespace turbulux {
namespace {

constexpr double kZWindow = 12.0;

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// 1 - e^{-x} I0(x) without cancellation for small x
double one_minus_i0e(double x) {
    if (x >= 1.0) return 1.0 - numerics::bessel_i_scaled(0, x);
    const double q = 0.25 * x * x;
    double term = 1.0;
    double tail = 0.0;
    for (int k = 1; k < 60; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k));
        tail += term;
        if (term < 1e-18 * tail) break;
    }
    return -std::expm1(-x) - std::exp(-x) * tail;
}

double eta0_of(double S, double a, EtaConvention conv) {
    const double ratio = a * a / S;
    return conv == EtaConvention::GaussianConsistent ? -std::expm1(-2.0 * ratio) : -std::expm1(-ratio);
}

double support_cutoff(double eta, double a, EtaConvention conv) {
    const double k = conv == EtaConvention::GaussianConsistent ? 2.0 : 1.0;
    return k * a * a / (-std::log1p(-eta));
}

void check_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw InvalidArgument("pdt", std::string(what) + " must be positive and finite");
    }
}

// ln(eta0(S) / eta) for 0 < eta < eta0; for eta near one the difference
// eta0 - eta is formed as (1 - eta) - (1 - eta0), both exact or nearly so
double log_ratio(double eta, double S, double a, EtaConvention conv) {
    const double k = conv == EtaConvention::GaussianConsistent ? 2.0 : 1.0;
    const double gap = eta >= 0.5 ? (1.0 - eta) - std::exp(-k * a * a / S) : eta0_of(S, a, conv) - eta;
    return std::log1p(gap / eta);
}

}  // namespace

std::string to_string(EtaConvention c) {
    return c == EtaConvention::GaussianConsistent ? "gaussian-consistent" : "as-printed";
}

EtaConvention convention_from_string(const std::string& name) {
    if (name == "gaussian-consistent") return EtaConvention::GaussianConsistent;
    if (name == "as-printed") return EtaConvention::AsPrinted;
    throw InvalidArgument("pdt", "unknown convention '" + name + "'");
}

ConditionalParams conditional_params(double S, double a, EtaConvention conv) {
    check_positive(S, "S");
    check_positive(a, "aperture");
    const double x = 4.0 * a * a / S;
    const double omi0 = one_minus_i0e(x);
    const double i1 = numerics::bessel_i_scaled(1, x);
    ConditionalParams out;
    out.eta0 = eta0_of(S, a, conv);
    const double log_term = std::log(2.0 * out.eta0 / omi0);
    if (!(log_term > 0.0)) {
        throw ModelBreakdown("pdt", "shape parameter undefined: 2 eta0 <= 1 - e^-x I0(x) at S/a^2 = " +
                                        std::to_string(S / (a * a)));
    }
    out.shape = 2.0 * x * i1 / omi0 / log_term;
    out.scale = a * std::pow(log_term, -1.0 / out.shape);
    return out;
}

double conditional_pdt(double eta, double S, double sigma_bw2, double a, EtaConvention conv) {
    check_positive(sigma_bw2, "sigma_bw2");
    const ConditionalParams p = conditional_params(S, a, conv);
    if (!(eta > 0.0) || !(eta < p.eta0)) return 0.0;
    const double c = p.scale * p.scale / (2.0 * sigma_bw2);
    const double ell = log_ratio(eta, S, a, conv);
    if (!(ell > 0.0)) return 0.0;
    const double log_ell = std::log(ell);
    const double t = std::exp(2.0 / p.shape * log_ell);
    const double log_pdf = std::log(2.0 * c / p.shape) - std::log(eta) +
                           (2.0 / p.shape - 1.0) * log_ell - c * t;
    return std::exp(log_pdf);
}

double conditional_cdf(double eta, double S, double sigma_bw2, double a, EtaConvention conv) {
    if (!(sigma_bw2 >= 0.0)) throw InvalidArgument("pdt", "sigma_bw2 must be >= 0");
    const ConditionalParams p = conditional_params(S, a, conv);
    if (!(eta > 0.0)) return 0.0;
    if (!(eta < p.eta0)) return 1.0;
    if (sigma_bw2 == 0.0) return 0.0;
    const double c = p.scale * p.scale / (2.0 * sigma_bw2);
    return std::exp(-c * std::pow(std::max(0.0, log_ratio(eta, S, a, conv)), 2.0 / p.shape));
}

double conditional_quantile(double u, double S, double sigma_bw2, double a, EtaConvention conv) {
    if (!(sigma_bw2 >= 0.0)) throw InvalidArgument("pdt", "sigma_bw2 must be >= 0");
    const ConditionalParams p = conditional_params(S, a, conv);
    if (!(u > 0.0)) return 0.0;
    if (!(u < 1.0) || sigma_bw2 == 0.0) return p.eta0;
    const double c = p.scale * p.scale / (2.0 * sigma_bw2);
    const double ell = std::pow(-std::log(u) / c, 0.5 * p.shape);
    return p.eta0 * std::exp(-ell);
}

double conditional_pdt_moment(double p, double S, double sigma_bw2, double a, EtaConvention conv,
                              const numerics::QuadratureSpec& spec) {
    check_positive(p, "moment order");
    const ConditionalParams cp = conditional_params(S, a, conv);
    if (sigma_bw2 == 0.0) return std::pow(cp.eta0, p);
    check_positive(sigma_bw2, "sigma_bw2");
    const double c = cp.scale * cp.scale / (2.0 * sigma_bw2);
    // w = c ln(eta0/eta)^(2/lambda) is unit-exponential
    auto f = [&](double w) {
        return std::exp(-w - p * std::pow(w / c, 0.5 * cp.shape));
    };
    return std::pow(cp.eta0, p) * numerics::integrate(f, 0.0, INFINITY, spec).value;
}

double LogNormalParams::mean() const { return std::exp(mu + 0.5 * sigma2); }

double LogNormalParams::second_moment() const { return std::exp(2.0 * mu + 2.0 * sigma2); }

double LogNormalParams::density(double S) const {
    if (!(S > 0.0)) return 0.0;
    if (sigma2 == 0.0) throw DomainError("pdt", "log-normal density is singular for sigma2 = 0");
    const double z = (std::log(S) - mu) / std::sqrt(sigma2);
    return phi(z) / (S * std::sqrt(sigma2));
}

double LogNormalParams::cdf(double S) const {
    if (!(S > 0.0)) return 0.0;
    if (sigma2 == 0.0) return S >= std::exp(mu) ? 1.0 : 0.0;
    return 0.5 * std::erfc(-(std::log(S) - mu) / std::sqrt(2.0 * sigma2));
}

void LogNormalParams::validate() const {
    if (!std::isfinite(mu) || !std::isfinite(sigma2) || !(sigma2 >= 0.0)) {
        throw InvalidArgument("pdt", "log-normal parameters must be finite with sigma2 >= 0");
    }
}

void CircularBeamPdt::validate() const {
    s.validate();
    check_positive(sigma_bw2, "sigma_bw2");
    check_positive(aperture, "aperture");
    if (!(eta_c > 0.0 && eta_c <= 1.0)) throw InvalidArgument("pdt", "eta_c must lie in (0, 1]");
}

double CircularBeamPdt::support_max() const {
    const double s_min = std::exp(s.mu - kZWindow * std::sqrt(s.sigma2));
    return eta_c * eta0_of(s_min, aperture, convention);
}

double lognormal_average(const LogNormalParams& s, const std::function<double(double)>& g,
                         const numerics::QuadratureSpec& spec, double z_hi) {
    s.validate();
    if (s.sigma2 == 0.0) return g(std::exp(s.mu));
    const double sigma = std::sqrt(s.sigma2);
    const double hi = std::min(kZWindow, z_hi);
    if (!(hi > -kZWindow)) return 0.0;
    auto f = [&](double z) { return phi(z) * g(std::exp(s.mu + sigma * z)); };
    return numerics::integrate(f, -kZWindow, hi, spec).value;
}

double total_pdt(double eta, const CircularBeamPdt& model, const numerics::QuadratureSpec& spec) {
    model.validate();
    const double e = eta / model.eta_c;
    // the last few ulps below one carry no resolvable mass
    if (!(e > 0.0) || !(e < 1.0 - 64.0 * std::numeric_limits<double>::epsilon())) return 0.0;
    const double a = model.aperture;
    const double bw2 = model.sigma_bw2;
    auto g = [&](double S) { return conditional_pdt(e, S, bw2, a, model.convention); };
    if (model.s.sigma2 == 0.0) return g(std::exp(model.s.mu)) / model.eta_c;

    const double sigma = std::sqrt(model.s.sigma2);
    const double z_max = (std::log(support_cutoff(e, a, model.convention)) - model.s.mu) / sigma;
    if (!(z_max > -kZWindow)) return 0.0;
    if (z_max >= kZWindow) return lognormal_average(model.s, g, spec) / model.eta_c;

    // Near the cutoff the conditional density grows like l^(2/lambda - 1)
    // in l = ln(eta0(S) / eta). That end is integrated in l itself, the
    // rest in log S.
    const double k = model.convention == EtaConvention::GaussianConsistent ? 2.0 : 1.0;
    const double log_e = std::log(e);
    const double eta0_lo = eta0_of(std::exp(model.s.mu - kZWindow * sigma), a, model.convention);
    const double l_split = 0.5 * std::log(eta0_lo / e);

    // S(l) from eta0(S) = eta e^l, with 1 - eta0 formed directly
    auto s_of_l = [&](double l, double& one_minus_q) {
        one_minus_q = -std::expm1(log_e + l);
        return k * a * a / -std::log(one_minus_q);
    };
    auto f = [&](double l) {
        if (!(l > 0.0)) return 0.0;
        double omq = 0.0;
        const double S = s_of_l(l, omq);
        const double l1 = -std::log(omq);
        const double z = (std::log(S) - model.s.mu) / sigma;
        const double dlns = (1.0 - omq) / (omq * l1);
        const ConditionalParams p = conditional_params(S, a, model.convention);
        const double c = p.scale * p.scale / (2.0 * bw2);
        const double log_l = std::log(l);
        const double log_pdf = std::log(2.0 * c / p.shape) - log_e + (2.0 / p.shape - 1.0) * log_l -
                               c * std::exp(2.0 / p.shape * log_l);
        return phi(z) * dlns / sigma * std::exp(log_pdf);
    };
    double omq = 0.0;
    const double z_split = (std::log(s_of_l(l_split, omq)) - model.s.mu) / sigma;
    const double near = numerics::integrate(f, 0.0, l_split, spec).value;
    const double far = lognormal_average(model.s, g, spec, z_split);
    return (near + far) / model.eta_c;
}

double total_cdf(double eta, const CircularBeamPdt& model, const numerics::QuadratureSpec& spec) {
    model.validate();
    const double e = eta / model.eta_c;
    if (!(e > 0.0)) return 0.0;
    if (!(e < 1.0)) return 1.0;
    auto g = [&](double S) {
        return conditional_cdf(e, S, model.sigma_bw2, model.aperture, model.convention);
    };
    if (model.s.sigma2 == 0.0) return g(std::exp(model.s.mu));
    const double z_max = (std::log(support_cutoff(e, model.aperture, model.convention)) - model.s.mu) /
                         std::sqrt(model.s.sigma2);
    // S above the cutoff has eta0(S) <= eta, so F(eta|S) = 1 there
    const double upper_mass = 0.5 * std::erfc(z_max / std::numbers::sqrt2);
    return std::min(1.0, upper_mass + lognormal_average(model.s, g, spec, z_max));
}

double pdt_moment(double p, const CircularBeamPdt& model, const numerics::QuadratureSpec& spec) {
    model.validate();
    check_positive(p, "moment order");
    auto g = [&](double S) {
        return conditional_pdt_moment(p, S, model.sigma_bw2, model.aperture, model.convention, spec);
    };
    return std::pow(model.eta_c, p) * lognormal_average(model.s, g, spec);
}

std::vector<double> sample_pdt(const CircularBeamPdt& model, std::size_t n, numerics::RngStream& rng) {
    model.validate();
    if (n == 0) throw InvalidArgument("pdt", "sample count must be >= 1");
    const double sigma = std::sqrt(model.s.sigma2);
    std::vector<double> out(n);
    for (auto& eta : out) {
        const double S = std::exp(model.s.mu + sigma * rng.normal());
        const double u = rng.uniform();
        eta = model.eta_c *
              conditional_quantile(u, S, model.sigma_bw2, model.aperture, model.convention);
    }
    return out;
}

nlohmann::json pdt_to_json(const CircularBeamPdt& model) {
    return {{"sigma_bw2", model.sigma_bw2},   {"mu", model.s.mu},
            {"sigma2", model.s.sigma2},       {"aperture_m", model.aperture},
            {"convention", to_string(model.convention)}, {"eta_c", model.eta_c}};
}

CircularBeamPdt pdt_from_json(const nlohmann::json& doc) {
    CircularBeamPdt m;
    try {
        m.sigma_bw2 = doc.at("sigma_bw2").get<double>();
        m.s.mu = doc.at("mu").get<double>();
        m.s.sigma2 = doc.at("sigma2").get<double>();
        m.aperture = doc.at("aperture_m").get<double>();
        m.convention = convention_from_string(doc.value("convention", "gaussian-consistent"));
        m.eta_c = doc.value("eta_c", 1.0);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("pdt", std::string("bad model document: ") + e.what());
    }
    m.validate();
    return m;
}

}  // namespace turbulux
