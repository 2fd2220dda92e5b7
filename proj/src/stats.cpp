#include "turbulux/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "turbulux/error.hpp"

namespace turbulux {
namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double unbiased_var(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double quantile_sorted(const std::vector<double>& s, double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double f = pos - static_cast<double>(i);
    return i + 1 < s.size() ? s[i] * (1.0 - f) + s[i + 1] * f : s.back();
}

}  // namespace

EtaMoments EmpiricalSummary::eta_moments() const {
    EtaMoments m;
    m.mean = mean_eta;
    m.second = mean_eta2;
    m.sqrt_mean = mean_sqrt_eta;
    return m;
}

BeamStats EmpiricalSummary::beam_stats() const { return {sigma_bw2, mean_s, mean_s2}; }

EmpiricalSummary summarize(const std::vector<double>& eta, const std::vector<double>& x0,
                           const std::vector<double>& y0, const std::vector<double>& S, bool with_corr) {
    const std::size_t n = eta.size();
    if (n < 2) throw InvalidArgument("stats", "summary needs at least 2 samples");
    if (x0.size() != n || y0.size() != n || S.size() != n) {
        throw InvalidArgument("stats", "sample columns have unequal length");
    }
    EmpiricalSummary out;
    out.n = n;
    const double inv = 1.0 / static_cast<double>(n);
    double e1 = 0.0, e2 = 0.0, er = 0.0, s1 = 0.0, s2 = 0.0;
    double q1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        e1 += eta[i];
        e2 += eta[i] * eta[i];
        er += std::sqrt(std::max(eta[i], 0.0));
        s1 += S[i];
        s2 += S[i] * S[i];
        const double x2 = x0[i] * x0[i];
        q1 += x2;
    }
    out.mean_eta = e1 * inv;
    out.mean_eta2 = e2 * inv;
    out.mean_sqrt_eta = er * inv;
    out.var_eta = unbiased_var(eta);
    out.sigma_bw2 = 0.5 * (unbiased_var(x0) + unbiased_var(y0));
    out.mean_s = s1 * inv;
    out.mean_s2 = s2 * inv;
    if (with_corr) {
        const auto [s_lo, s_hi] = std::minmax_element(S.begin(), S.end());
        const auto [x_lo, x_hi] = std::minmax_element(x0.begin(), x0.end(),
                                                      [](double a, double b) { return a * a < b * b; });
        if (*s_lo == *s_hi || (*x_lo) * (*x_lo) == (*x_hi) * (*x_hi)) {
            throw DomainError("stats", "correlation undefined for a constant S or x0^2 sample");
        }
        const double mq = q1 * inv;
        double vs = 0.0, vx = 0.0, cov = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ds = S[i] - out.mean_s;
            const double dq = x0[i] * x0[i] - mq;
            vs += ds * ds;
            vx += dq * dq;
            cov += ds * dq;
        }
        out.corr_s_x02 = std::clamp(cov / std::sqrt(vs * vx), -1.0, 1.0);
    }
    return out;
}

EmpiricalSummary summarize(const SampleSet& samples, std::size_t aperture_index, SAxis axis,
                           bool with_corr) {
    if (aperture_index >= samples.eta.size()) throw InvalidArgument("stats", "aperture index out of range");
    if (axis == SAxis::X) {
        return summarize(samples.eta[aperture_index], samples.x0, samples.y0, samples.S, with_corr);
    }
    std::vector<double> s(samples.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 0.5 * (samples.S[i] + samples.Sy[i]);
    return summarize(samples.eta[aperture_index], samples.x0, samples.y0, s, with_corr);
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw InvalidArgument("stats", "KS statistic of an empty sample");
    std::sort(sample.begin(), sample.end());
    const auto n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return std::clamp(d, 0.0, 1.0);
}

KsLogNormal ks_lognormal(const std::vector<double>& S, LogNormalFit fit) {
    if (S.size() < 10) throw InvalidArgument("stats", "log-normal KS test needs n >= 10");
    for (double s : S) {
        if (!(s > 0.0)) throw DomainError("stats", "log-normal KS test needs positive samples");
    }
    KsLogNormal out;
    if (fit == LogNormalFit::MaximumLikelihood) {
        std::vector<double> logs(S.size());
        std::transform(S.begin(), S.end(), logs.begin(), [](double s) { return std::log(s); });
        out.fit.mu = mean_of(logs);
        double v = 0.0;
        for (double l : logs) v += (l - out.fit.mu) * (l - out.fit.mu);
        out.fit.sigma2 = v / static_cast<double>(logs.size());
    } else {
        double m1 = 0.0, m2 = 0.0;
        for (double s : S) {
            m1 += s;
            m2 += s * s;
        }
        m1 /= static_cast<double>(S.size());
        m2 /= static_cast<double>(S.size());
        out.fit = lognormal_from_s_moments(m1, m2);
    }
    if (!(out.fit.sigma2 > 0.0)) throw DomainError("stats", "degenerate log-normal fit");
    out.d = ks_statistic(S, [&](double s) { return out.fit.cdf(s); });
    return out;
}

double ks_pdt(const std::vector<double>& eta, const CircularBeamPdt& model, const numerics::QuadratureSpec& spec) {
    if (eta.size() < 10) throw InvalidArgument("stats", "PDT KS test needs n >= 10");
    return ks_statistic(eta, [&](double e) { return total_cdf(e, model, spec); });
}

TabulatedDensity density_estimate(const std::vector<double>& sample, DensityKind kind, int kernel_points) {
    if (sample.size() < 10) throw InvalidArgument("stats", "density estimate needs n >= 10");
    std::vector<double> s = sample;
    std::sort(s.begin(), s.end());
    const auto n = static_cast<double>(s.size());
    const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
    const double lo = s.front();
    const double hi = s.back();
    TabulatedDensity out;

    if (kind == DensityKind::Histogram) {
        double h = 2.0 * iqr * std::cbrt(1.0 / n);
        if (!(h > 0.0)) h = (hi > lo) ? (hi - lo) / std::ceil(std::sqrt(n)) : 1.0;
        const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / h)));
        h = hi > lo ? (hi - lo) / static_cast<double>(bins) : h;
        std::vector<double> counts(bins, 0.0);
        for (double v : s) {
            auto b = static_cast<std::size_t>((v - lo) / h);
            counts[std::min(b, bins - 1)] += 1.0;
        }
        out.bin_width = h;
        for (std::size_t b = 0; b < bins; ++b) {
            out.x.push_back(lo + (static_cast<double>(b) + 0.5) * h);
            out.density.push_back(counts[b] / (n * h));
        }
        return out;
    }

    if (kernel_points < 16) throw InvalidArgument("stats", "kernel grid needs >= 16 points");
    const double sd = std::sqrt(unbiased_var(s));
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1.0;
    const double h = 0.9 * spread * std::pow(n, -0.2);
    out.bin_width = h;
    const double a = lo - 5.0 * h;
    const double b = hi + 5.0 * h;
    const double step = (b - a) / (kernel_points - 1);
    const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
    for (int j = 0; j < kernel_points; ++j) {
        const double x = a + j * step;
        // only samples within 8 bandwidths contribute
        const auto first = std::lower_bound(s.begin(), s.end(), x - 8.0 * h);
        const auto last = std::upper_bound(s.begin(), s.end(), x + 8.0 * h);
        double acc = 0.0;
        for (auto it = first; it != last; ++it) {
            const double t = (x - *it) / h;
            acc += std::exp(-0.5 * t * t);
        }
        out.x.push_back(x);
        out.density.push_back(acc * norm);
    }
    return out;
}

void write_curve_csv(const std::string& path, const std::string& x_name, const std::string& y_name,
                     const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw InvalidArgument("stats", "curve columns have unequal length");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("stats", "cannot write '" + path + "'");
    out << x_name << ',' << y_name << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) out << format_double(x[i]) << ',' << format_double(y[i]) << '\n';
}

}  // namespace turbulux
