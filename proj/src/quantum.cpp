#include "turbulux/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "turbulux/error.hpp"
#include "turbulux/matching.hpp"

namespace turbulux {

void GaussianInputState::validate() const {
    if (!(alpha0 >= 0.0) || !std::isfinite(alpha0)) throw InvalidArgument("quantum", "alpha0 must be >= 0");
    if (!(chi >= 0.0) || !std::isfinite(chi)) throw InvalidArgument("quantum", "chi must be >= 0");
}

double chi_from_db(double db) {
    if (!(db >= 0.0)) throw InvalidArgument("quantum", "squeezing in dB must be >= 0");
    return db * std::numbers::ln10 / 20.0;
}

InputMoments input_gaussian_moments(const GaussianInputState& state) {
    state.validate();
    const double a2 = state.alpha0 * state.alpha0;
    const double sh = std::sinh(state.chi);
    const double ch = std::cosh(state.chi);
    InputMoments m;
    m.mean_n = a2 + sh * sh;
    m.var_n = a2 * std::exp(-2.0 * state.chi) + 2.0 * sh * sh * ch * ch;
    m.mandel_q = m.mean_n > 0.0 ? m.var_n / m.mean_n - 1.0 : 0.0;
    m.mean_x = std::numbers::sqrt2 * state.alpha0;
    m.normal_var_x = 0.5 * std::expm1(-2.0 * state.chi);
    return m;
}

EtaAverager EtaAverager::point(double eta, double eta_c) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("quantum", "point mass must lie in [0, 1]");
    if (!(eta_c > 0.0 && eta_c <= 1.0)) throw InvalidArgument("quantum", "eta_c must lie in (0, 1]");
    EtaAverager a;
    a.kind_ = Kind::PointMass;
    const double e = eta_c * eta;
    a.mean_ = e;
    a.second_ = e * e;
    a.sqrt_mean_ = std::sqrt(e);
    a.delta_t2_ = 0.0;
    a.nodes_ = {{e, 1.0}};
    return a;
}

EtaAverager EtaAverager::from_model(const CircularBeamPdt& model, double eta_c, int nodes_per_axis) {
    model.validate();
    if (!(eta_c > 0.0 && eta_c <= 1.0)) throw InvalidArgument("quantum", "eta_c must lie in (0, 1]");
    if (nodes_per_axis < 2) throw InvalidArgument("quantum", "need at least 2 nodes per axis");
    EtaAverager a;
    a.kind_ = Kind::Model;
    const double scale = eta_c * model.eta_c;
    const EtaMoments m = model_eta_moments(model.sigma_bw2, model.aperture, model.s);
    a.mean_ = scale * m.mean;
    a.second_ = scale * scale * m.second;

    const double d1 = scale * pdt_moment(1.0, model) / model.eta_c;
    const double dh = std::sqrt(scale) * pdt_moment(0.5, model) / std::sqrt(model.eta_c);
    a.sqrt_mean_ = dh;
    a.delta_t2_ = std::max(0.0, d1 - dh * dh);

    const auto rule = numerics::gauss_legendre_unit(nodes_per_axis);
    const double sigma = std::sqrt(model.s.sigma2);
    const std::size_t s_nodes = model.s.sigma2 > 0.0 ? rule.nodes.size() : 1;
    for (std::size_t i = 0; i < s_nodes; ++i) {
        const double ws = s_nodes == 1 ? 1.0 : rule.weights[i];
        const double z = s_nodes == 1 ? 0.0 : numerics::normal_quantile(rule.nodes[i]);
        const double S = std::exp(model.s.mu + sigma * z);
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            const double e = conditional_quantile(rule.nodes[j], S, model.sigma_bw2, model.aperture,
                                                  model.convention);
            a.nodes_.emplace_back(scale * e, ws * rule.weights[j]);
        }
    }
    return a;
}

EtaAverager EtaAverager::from_samples(const std::vector<double>& eta, double eta_c) {
    if (eta.empty()) throw InvalidArgument("quantum", "sample averager needs samples");
    if (!(eta_c > 0.0 && eta_c <= 1.0)) throw InvalidArgument("quantum", "eta_c must lie in (0, 1]");
    EtaAverager a;
    a.kind_ = Kind::Samples;
    const double w = 1.0 / static_cast<double>(eta.size());
    double m1 = 0.0, m2 = 0.0, mh = 0.0;
    a.nodes_.reserve(eta.size());
    for (double v : eta) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("quantum", "eta sample outside [0, 1]");
        const double e = eta_c * v;
        m1 += e;
        m2 += e * e;
        mh += std::sqrt(e);
        a.nodes_.emplace_back(e, w);
    }
    a.mean_ = m1 * w;
    a.second_ = m2 * w;
    a.sqrt_mean_ = mh * w;
    a.delta_t2_ = std::max(0.0, a.mean_ - a.sqrt_mean_ * a.sqrt_mean_);
    return a;
}

double mandel_q_out(double q_in, double mean_n_in, const EtaAverager& averager) {
    const double m = averager.mean();
    if (!(m > 0.0)) throw DomainError("quantum", "Mandel relation needs <eta> > 0");
    return averager.second() / m * q_in + averager.variance() / m * mean_n_in;
}

int minimum_cutoff(const GaussianInputState& state) {
    const double n = input_gaussian_moments(state).mean_n;
    return static_cast<int>(std::ceil(4.0 * n + 10.0 * std::sqrt(n) + 20.0));
}

namespace {

// Normalized number-basis probabilities 0..ext from the amplitude recurrence.
std::vector<double> recurrence_probabilities(const GaussianInputState& state, int ext) {
    const double ch = std::cosh(state.chi);
    const double sh = std::sinh(state.chi);
    const double drive = state.alpha0 * std::exp(state.chi);
    std::vector<double> c(static_cast<std::size_t>(ext) + 1, 0.0);
    c[0] = 1.0;
    for (int n = 0; n < ext; ++n) {
        const double prev = n > 0 ? c[static_cast<std::size_t>(n - 1)] : 0.0;
        c[static_cast<std::size_t>(n + 1)] =
            (drive * c[static_cast<std::size_t>(n)] - sh * std::sqrt(static_cast<double>(n)) * prev) /
            (ch * std::sqrt(static_cast<double>(n + 1)));
        if (std::abs(c[static_cast<std::size_t>(n + 1)]) > 1e150) {
            for (int j = 0; j <= n + 1; ++j) c[static_cast<std::size_t>(j)] *= 1e-150;
        }
    }
    double total = 0.0;
    for (double v : c) total += v * v;
    for (double& v : c) v = v * v / total;
    return c;
}

double tail_beyond(const std::vector<double>& p, int cutoff) {
    double kept = 0.0;
    for (int n = 0; n <= cutoff; ++n) kept += p[static_cast<std::size_t>(n)];
    return 1.0 - kept;
}

}  // namespace

std::vector<double> photon_distribution(const GaussianInputState& state, int cutoff) {
    state.validate();
    const int need = minimum_cutoff(state);
    const bool automatic = cutoff == 0;
    if (automatic) cutoff = need;
    if (cutoff < need) {
        throw InvalidArgument("quantum", "cutoff " + std::to_string(cutoff) + " below the required " +
                                             std::to_string(need));
    }
    std::vector<double> full = recurrence_probabilities(state, 2 * cutoff + 50);
    // squeezed states have geometric tails the mean-based bound can miss
    while (automatic && tail_beyond(full, cutoff) > 1e-10 && cutoff < 100000) {
        cutoff *= 2;
        full = recurrence_probabilities(state, 2 * cutoff + 50);
    }
    if (tail_beyond(full, cutoff) > 1e-10) {
        throw InvalidArgument("quantum", "photon-number tail beyond the cutoff exceeds 1e-10");
    }
    if (automatic) {
        while (cutoff > need && tail_beyond(full, cutoff - 1) <= 1e-10) --cutoff;
    }
    full.resize(static_cast<std::size_t>(cutoff) + 1);
    return full;
}

std::vector<double> apply_loss(const std::vector<double>& p, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("quantum", "transmittance must lie in [0, 1]");
    const std::size_t n = p.size();
    std::vector<double> out(n, 0.0);
    // row j of Pascal's triangle weighted by eta^m (1-eta)^(j-m)
    std::vector<double> row(n, 0.0);
    row[0] = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j > 0) {
            for (std::size_t m = j; m > 0; --m) row[m] = eta * row[m - 1] + (1.0 - eta) * row[m];
            row[0] *= 1.0 - eta;
        }
        const double pj = p[j];
        if (pj == 0.0) continue;
        for (std::size_t m = 0; m <= j; ++m) out[m] += pj * row[m];
    }
    return out;
}

std::vector<double> attenuated_photon_dist(const GaussianInputState& state, double eta, int cutoff) {
    return apply_loss(photon_distribution(state, cutoff), eta);
}

std::vector<std::vector<double>> click_kernel(int detectors, int max_photons) {
    if (detectors < 1) throw InvalidArgument("quantum", "need at least one detector");
    if (max_photons < 0) throw InvalidArgument("quantum", "photon cutoff must be >= 0");
    const auto nd = static_cast<std::size_t>(detectors);
    const auto np = static_cast<std::size_t>(max_photons);
    std::vector<std::vector<double>> k(nd + 1, std::vector<double>(np + 1, 0.0));
    std::vector<double> q(nd + 1, 0.0);
    q[0] = 1.0;
    const double inv = 1.0 / detectors;
    for (std::size_t m = 0; m <= np; ++m) {
        for (std::size_t n = 0; n <= nd; ++n) k[n][m] = q[n];
        std::vector<double> next(nd + 1, 0.0);
        for (std::size_t n = 0; n <= nd; ++n) {
            next[n] = q[n] * static_cast<double>(n) * inv;
            if (n > 0) next[n] += q[n - 1] * static_cast<double>(nd - n + 1) * inv;
        }
        q.swap(next);
    }
    return k;
}

ClickStatistics click_statistics(const GaussianInputState& state, int detectors,
                                 const EtaAverager& averager, int cutoff) {
    const std::vector<double> input = photon_distribution(state, cutoff);
    const int max_m = static_cast<int>(input.size()) - 1;
    const auto kernel = click_kernel(detectors, max_m);
    const auto nd = static_cast<std::size_t>(detectors);

    std::vector<double> avg_photons(input.size(), 0.0);
    for (const auto& [eta, w] : averager.nodes()) {
        const auto pm = apply_loss(input, eta);
        for (std::size_t m = 0; m < pm.size(); ++m) avg_photons[m] += w * pm[m];
    }
    ClickStatistics out;
    out.p.assign(nd + 1, 0.0);
    for (std::size_t n = 0; n <= nd; ++n) {
        double s = 0.0;
        for (std::size_t m = 0; m < avg_photons.size(); ++m) s += kernel[n][m] * avg_photons[m];
        out.p[n] = s;
    }
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t n = 0; n <= nd; ++n) {
        m1 += static_cast<double>(n) * out.p[n];
        m2 += static_cast<double>(n * n) * out.p[n];
    }
    out.mean = m1;
    out.variance = std::max(0.0, m2 - m1 * m1);
    const double N = detectors;
    if (m1 > 1e-300 && N - m1 > 1e-300 * N) {
        out.q_n = N * out.variance / (m1 * (N - m1)) - 1.0;
    }
    return out;
}

double squeezing_out(const GaussianInputState& state, const EtaAverager& averager) {
    const InputMoments in = input_gaussian_moments(state);
    const double normal = averager.mean() * in.normal_var_x + averager.delta_t2() * in.mean_x * in.mean_x;
    return normal + 0.5;
}

}  // namespace turbulux
