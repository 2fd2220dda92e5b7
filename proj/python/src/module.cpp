#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "turbulux/turbulux.hpp"

namespace py = pybind11;
using namespace turbulux;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

Array to_array(const std::vector<double>& v) {
    Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

// Applies f elementwise, keeping the input shape.
template <class F>
Array vectorize(const Array& x, F f) {
    Array out(std::vector<py::ssize_t>(x.shape(), x.shape() + x.ndim()));
    const double* in = x.data();
    double* o = out.mutable_data();
    for (py::ssize_t i = 0; i < x.size(); ++i) o[i] = f(in[i]);
    return out;
}

ChannelConfig channel_from_kwargs(const py::kwargs& kw) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [key, value] : kw) {
        const auto name = py::cast<std::string>(key);
        if (py::isinstance<py::str>(value)) doc[name] = py::cast<std::string>(value);
        else doc[name] = py::cast<double>(value);
    }
    return channel_from_json(doc);
}

py::dict channel_dict(const ChannelConfig& c) {
    py::dict d;
    const nlohmann::json doc = channel_to_json(c);
    for (const auto& [key, value] : doc.items()) {
        if (value.is_string()) d[py::str(key)] = value.get<std::string>();
        else d[py::str(key)] = value.get<double>();
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Circular-beam transmittance model for turbulent free-space links";
    m.attr("__version__") = TURBULUX_VERSION;

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", error);
    py::register_exception<DomainError>(m, "DomainError", error);
    py::register_exception<InvalidMoments>(m, "InvalidMoments", error);
    py::register_exception<ModelBreakdown>(m, "ModelBreakdown", error);

    // channel

    py::class_<ChannelConfig>(m, "ChannelConfig")
        .def(py::init(&channel_from_kwargs),
             "Keys: wavelength_m, length_m, w0_m, f0_m, cn2, l0_m, outer_m, aperture_m, eta_c.")
        .def_readwrite("wavelength", &ChannelConfig::wavelength)
        .def_readwrite("length", &ChannelConfig::length)
        .def_readwrite("w0", &ChannelConfig::w0)
        .def_readwrite("f0", &ChannelConfig::f0)
        .def_readwrite("cn2", &ChannelConfig::cn2)
        .def_readwrite("inner_scale", &ChannelConfig::inner_scale)
        .def_readwrite("outer_scale", &ChannelConfig::outer_scale)
        .def_readwrite("aperture", &ChannelConfig::aperture)
        .def_readwrite("eta_c", &ChannelConfig::eta_c)
        .def("validate", &ChannelConfig::validate, py::arg("need_aperture") = true)
        .def("resolved", &ChannelConfig::resolved)
        .def("to_dict", &channel_dict)
        .def("__repr__", [](const ChannelConfig& c) { return "ChannelConfig(" + channel_to_json(c).dump() + ")"; });

    py::class_<DerivedChannel>(m, "DerivedChannel")
        .def_readonly("k", &DerivedChannel::k)
        .def_readonly("fresnel", &DerivedChannel::fresnel)
        .def_readonly("rytov", &DerivedChannel::rytov)
        .def_readonly("coherence", &DerivedChannel::coherence);
    m.def("derive_channel", &derive_channel);
    m.def("load_channel_config", &load_channel_config);
    m.def("efficiency_from_db", &efficiency_from_db);

    // pdt

    py::enum_<EtaConvention>(m, "EtaConvention")
        .value("AS_PRINTED", EtaConvention::AsPrinted)
        .value("GAUSSIAN_CONSISTENT", EtaConvention::GaussianConsistent);

    py::class_<LogNormalParams>(m, "LogNormalParams")
        .def(py::init([](double mu, double sigma2) { return LogNormalParams{mu, sigma2}; }), py::arg("mu"),
             py::arg("sigma2"))
        .def_readwrite("mu", &LogNormalParams::mu)
        .def_readwrite("sigma2", &LogNormalParams::sigma2)
        .def("mean", &LogNormalParams::mean)
        .def("second_moment", &LogNormalParams::second_moment)
        .def("__repr__", [](const LogNormalParams& p) {
            return "LogNormalParams(mu=" + std::to_string(p.mu) + ", sigma2=" + std::to_string(p.sigma2) + ")";
        });

    py::class_<CircularBeamPdt>(m, "CircularBeamPdt")
        .def(py::init([](double sigma_bw2, const LogNormalParams& s, double aperture, EtaConvention conv, double eta_c) {
                 CircularBeamPdt p{sigma_bw2, s, aperture, conv, eta_c};
                 p.validate();
                 return p;
             }),
             py::arg("sigma_bw2"), py::arg("s"), py::arg("aperture"),
             py::arg("convention") = EtaConvention::GaussianConsistent, py::arg("eta_c") = 1.0)
        .def_readwrite("sigma_bw2", &CircularBeamPdt::sigma_bw2)
        .def_readwrite("s", &CircularBeamPdt::s)
        .def_readwrite("aperture", &CircularBeamPdt::aperture)
        .def_readwrite("convention", &CircularBeamPdt::convention)
        .def_readwrite("eta_c", &CircularBeamPdt::eta_c)
        .def("support_max", &CircularBeamPdt::support_max)
        .def("pdf", [](const CircularBeamPdt& p, const Array& eta) {
            return vectorize(eta, [&](double e) { return total_pdt(e, p); });
        })
        .def("cdf", [](const CircularBeamPdt& p, const Array& eta) {
            return vectorize(eta, [&](double e) { return total_cdf(e, p); });
        })
        .def("moment", [](const CircularBeamPdt& p, double order) { return pdt_moment(order, p); })
        .def("sample", [](const CircularBeamPdt& p, std::size_t n, std::uint64_t seed, std::uint64_t stream) {
            numerics::RngStream rng(seed, stream);
            return to_array(sample_pdt(p, n, rng));
        }, py::arg("n"), py::arg("seed"), py::arg("stream") = 0)
        .def("to_json", [](const CircularBeamPdt& p) { return pdt_to_json(p).dump(); })
        .def_static("from_json", [](const std::string& s) { return pdt_from_json(nlohmann::json::parse(s)); });

    m.def("conditional_pdt", [](const Array& eta, double S, double sigma_bw2, double a, EtaConvention conv) {
        return vectorize(eta, [&](double e) { return conditional_pdt(e, S, sigma_bw2, a, conv); });
    }, py::arg("eta"), py::arg("S"), py::arg("sigma_bw2"), py::arg("a"),
          py::arg("convention") = EtaConvention::GaussianConsistent);

    // matching

    py::class_<BeamStats>(m, "BeamStats")
        .def(py::init([](double sigma_bw2, double mean_s, double mean_s2) {
                 BeamStats b{sigma_bw2, mean_s, mean_s2};
                 b.validate();
                 return b;
             }),
             py::arg("sigma_bw2"), py::arg("mean_s"), py::arg("mean_s2"))
        .def_readonly("sigma_bw2", &BeamStats::sigma_bw2)
        .def_readonly("mean_s", &BeamStats::mean_s)
        .def_readonly("mean_s2", &BeamStats::mean_s2);

    py::class_<EtaMoments>(m, "EtaMoments")
        .def(py::init([](double mean, double second) { return EtaMoments{mean, second, std::nullopt}; }),
             py::arg("mean"), py::arg("second"))
        .def_readonly("mean", &EtaMoments::mean)
        .def_readonly("second", &EtaMoments::second)
        .def_readonly("sqrt_mean", &EtaMoments::sqrt_mean)
        .def("variance", &EtaMoments::variance)
        .def("consistent", &EtaMoments::consistent, py::arg("slack") = 0.0);

    py::class_<MatchResult>(m, "MatchResult")
        .def_readonly("params", &MatchResult::params)
        .def_readonly("residual_norm", &MatchResult::residual_norm)
        .def_readonly("iterations", &MatchResult::iterations)
        .def_readonly("converged", &MatchResult::converged)
        .def_readonly("boundary_active", &MatchResult::boundary_active)
        .def_readonly("feasible", &MatchResult::feasible);

    m.def("conditional_eta_moments", [](double S, double x0sq, double a) {
        const auto c = conditional_eta_moments(S, x0sq, a);
        return py::make_tuple(c.mean, c.second);
    });
    m.def("model_eta_moments", [](double sigma_bw2, double a, const LogNormalParams& s) {
        return model_eta_moments(sigma_bw2, a, s);
    });
    m.def("lognormal_from_s_moments", &lognormal_from_s_moments);
    m.def("calibrate_s_moments", &calibrate_s_moments, py::arg("stats"), py::arg("a"),
          py::arg("convention") = EtaConvention::GaussianConsistent);
    m.def("calibrate_eta_moments", [](const BeamStats& stats, const EtaMoments& targets, double a,
                                      EtaConvention conv) {
        auto r = calibrate_eta_moments(stats, targets, a, conv);
        return py::make_tuple(r.model, r.match);
    }, py::arg("stats"), py::arg("targets"), py::arg("a"), py::arg("convention") = EtaConvention::GaussianConsistent);
    m.def("apply_constant_loss", py::overload_cast<double, const CircularBeamPdt&>(&apply_constant_loss));

    // analytic

    py::enum_<AnalyticVariant>(m, "AnalyticVariant")
        .value("AS_PRINTED", AnalyticVariant::AsPrinted)
        .value("GAUSSIAN_CONSISTENT", AnalyticVariant::GaussianConsistent);
    py::class_<AnalyticBeamStats>(m, "AnalyticBeamStats")
        .def_readonly("stats", &AnalyticBeamStats::stats)
        .def_readonly("w_lt", &AnalyticBeamStats::w_lt)
        .def_readonly("weak_turbulence", &AnalyticBeamStats::weak_turbulence);
    m.def("beam_stats_analytic", &beam_stats_analytic);
    m.def("eta_moments_analytic", [](const ChannelConfig& c, double a, AnalyticVariant v) {
        const auto r = eta_moments_analytic(c, a, v);
        return py::make_tuple(r.moments, r.valid);
    }, py::arg("config"), py::arg("a"), py::arg("variant") = AnalyticVariant::GaussianConsistent);

    // simulator and stats

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init([](int n, int screens, int modes) {
                 GridSpec g;
                 g.n = n;
                 g.screens = screens;
                 g.modes = modes;
                 return g;
             }),
             py::arg("n") = 512, py::arg("screens") = 10, py::arg("modes") = 512)
        .def_readwrite("n", &GridSpec::n)
        .def_readwrite("window", &GridSpec::window)
        .def_readwrite("screens", &GridSpec::screens)
        .def_readwrite("modes", &GridSpec::modes);

    py::class_<SampleSet>(m, "SampleSet")
        .def("__len__", &SampleSet::size)
        .def_readonly("channel", &SampleSet::channel)
        .def_readonly("grid", &SampleSet::grid)
        .def_readonly("seed", &SampleSet::seed)
        .def_property_readonly("apertures", [](const SampleSet& s) { return to_array(s.apertures); })
        .def("eta", [](const SampleSet& s, std::size_t k) { return to_array(s.eta.at(k)); }, py::arg("k") = 0)
        .def_property_readonly("x0", [](const SampleSet& s) { return to_array(s.x0); })
        .def_property_readonly("y0", [](const SampleSet& s) { return to_array(s.y0); })
        .def_property_readonly("S", [](const SampleSet& s) { return to_array(s.S); })
        .def_property_readonly("Sy", [](const SampleSet& s) { return to_array(s.Sy); })
        .def("head", &SampleSet::head)
        .def("save", [](const SampleSet& s, const std::string& path) { save_sample_set(s, path); });
    m.def("load_sample_set", &load_sample_set);

    m.def("run_ensemble", [](const ChannelConfig& c, const GridSpec& g, std::size_t n, std::uint64_t seed,
                             const std::vector<double>& apertures, unsigned workers) {
        EnsembleOptions o;
        o.workers = workers;
        py::gil_scoped_release release;
        return run_ensemble(c, g, n, seed, apertures, o);
    }, py::arg("config"), py::arg("grid"), py::arg("n"), py::arg("seed"), py::arg("apertures"),
          py::arg("workers") = 1);

    py::class_<EmpiricalSummary>(m, "EmpiricalSummary")
        .def_readonly("n", &EmpiricalSummary::n)
        .def_readonly("mean_eta", &EmpiricalSummary::mean_eta)
        .def_readonly("mean_eta2", &EmpiricalSummary::mean_eta2)
        .def_readonly("mean_sqrt_eta", &EmpiricalSummary::mean_sqrt_eta)
        .def_readonly("var_eta", &EmpiricalSummary::var_eta)
        .def_readonly("sigma_bw2", &EmpiricalSummary::sigma_bw2)
        .def_readonly("mean_s", &EmpiricalSummary::mean_s)
        .def_readonly("mean_s2", &EmpiricalSummary::mean_s2)
        .def_readonly("corr_s_x02", &EmpiricalSummary::corr_s_x02)
        .def("eta_moments", &EmpiricalSummary::eta_moments)
        .def("beam_stats", &EmpiricalSummary::beam_stats);
    m.def("summarize", [](const Array& eta, const Array& x0, const Array& y0, const Array& S) {
        return summarize(to_vector(eta), to_vector(x0), to_vector(y0), to_vector(S));
    });
    m.def("summarize_set", [](const SampleSet& s, std::size_t k) { return summarize(s, k); }, py::arg("samples"),
          py::arg("k") = 0);
    m.def("ks_pdt", [](const Array& eta, const CircularBeamPdt& p) { return ks_pdt(to_vector(eta), p); });
    m.def("ks_lognormal", [](const Array& S) {
        const auto r = ks_lognormal(to_vector(S));
        return py::make_tuple(r.d, r.fit);
    });

    // quantum

    py::class_<GaussianInputState>(m, "GaussianInputState")
        .def(py::init([](double alpha0, double chi) {
                 GaussianInputState s{alpha0, chi};
                 s.validate();
                 return s;
             }),
             py::arg("alpha0"), py::arg("chi") = 0.0)
        .def_readonly("alpha0", &GaussianInputState::alpha0)
        .def_readonly("chi", &GaussianInputState::chi);
    m.def("chi_from_db", &chi_from_db);

    py::class_<InputMoments>(m, "InputMoments")
        .def_readonly("mean_n", &InputMoments::mean_n)
        .def_readonly("var_n", &InputMoments::var_n)
        .def_readonly("mandel_q", &InputMoments::mandel_q)
        .def_readonly("mean_x", &InputMoments::mean_x)
        .def_readonly("normal_var_x", &InputMoments::normal_var_x);
    m.def("input_gaussian_moments", &input_gaussian_moments);

    py::class_<EtaAverager>(m, "EtaAverager")
        .def_static("point", &EtaAverager::point, py::arg("eta"), py::arg("eta_c") = 1.0)
        .def_static("from_model", &EtaAverager::from_model, py::arg("model"), py::arg("eta_c") = 1.0,
                    py::arg("nodes_per_axis") = 129)
        .def_static("from_samples", [](const Array& eta, double eta_c) {
            return EtaAverager::from_samples(to_vector(eta), eta_c);
        }, py::arg("eta"), py::arg("eta_c") = 1.0)
        .def("mean", &EtaAverager::mean)
        .def("second", &EtaAverager::second)
        .def("sqrt_mean", &EtaAverager::sqrt_mean);

    m.def("mandel_q_out", &mandel_q_out);
    m.def("photon_distribution", [](const GaussianInputState& s, int cutoff) {
        return to_array(photon_distribution(s, cutoff));
    }, py::arg("state"), py::arg("cutoff") = 0);
    m.def("click_statistics", [](const GaussianInputState& s, int detectors, const EtaAverager& avg) {
        const auto c = click_statistics(s, detectors, avg);
        py::dict d;
        d["p"] = to_array(c.p);
        d["mean"] = c.mean;
        d["variance"] = c.variance;
        d["q_n"] = c.q_n ? py::cast(*c.q_n) : py::none();
        return d;
    });
    m.def("squeezing_out", &squeezing_out);
}
