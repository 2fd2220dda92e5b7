#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "turbulux/turbulux.hpp"

namespace turbulux::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kCommands{"params", "simulate", "calibrate", "pdt", "validate", "quantum"};

std::string aperture_tag(double a_mm) { return "a" + format_double(a_mm) + "mm"; }

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;
};

std::string cell_text(const json& v) {
    if (v.is_null()) return "";
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return format_double(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cli", "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("cli", "write to '" + path.string() + "' failed");
}

std::string table_name(const std::string& stem, const std::string& format) {
    return stem + (format == "json" ? ".json" : ".csv");
}

void write_table(const fs::path& dir, const std::string& stem, const std::string& format, const Table& t) {
    std::ostringstream s;
    if (format == "json") {
        json arr = json::array();
        for (const auto& row : t.rows) {
            json obj = json::object();
            for (std::size_t c = 0; c < t.columns.size(); ++c) obj[t.columns[c]] = row[c];
            arr.push_back(obj);
        }
        s << arr.dump(2) << '\n';
    } else {
        for (std::size_t c = 0; c < t.columns.size(); ++c) s << (c ? "," : "") << t.columns[c];
        s << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) s << (c ? "," : "") << cell_text(row[c]);
            s << '\n';
        }
    }
    write_text(dir / table_name(stem, format), s.str());
}

json number(double x) {
    if (std::isfinite(x)) return x;
    return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
}

json optional_number(const std::optional<double>& x) { return x ? number(*x) : json(nullptr); }

ChannelConfig apply_overrides(ChannelConfig c, const std::vector<std::string>& overrides) {
    if (overrides.empty()) return c;
    json j = channel_to_json(c);
    if (std::isnan(c.f0)) j["f0_m"] = "focused";
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw InvalidArgument("cli", "--set expects KEY=VALUE, got '" + kv + "'");
        }
        j[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return channel_from_json(j);
}

double total_eta_c(const Plan& p) { return p.channel.eta_c * efficiency_from_db(p.options.loss_db); }

std::vector<double> apertures_m(const Plan& p) {
    std::vector<double> a;
    for (double mm : p.options.apertures_mm) a.push_back(mm * 1e-3);
    return a;
}

// Beam statistics and transmittance targets from the selected source.
class Source {
public:
    explicit Source(const Plan& plan) : plan_(plan) {
        const auto& o = plan.options;
        if (o.source == "sample") {
            set_ = load_sample_set(o.samples_file);
        } else if (o.source == "moments") {
            std::ifstream in(o.moments_file);
            if (!in) throw InvalidArgument("cli", "cannot open moments file '" + o.moments_file + "'");
            try {
                moments_ = json::parse(in);
            } catch (const json::exception& e) {
                throw InvalidArgument("cli", std::string("malformed moments file: ") + e.what());
            }
        }
    }

    BeamStats stats(double a) const {
        const auto& o = plan_.options;
        if (o.source == "sample") {
            return summarize(*set_, set_->aperture_index(a), SAxis::X, false).beam_stats();
        }
        if (o.source == "moments") {
            BeamStats b;
            try {
                b.sigma_bw2 = moments_.at("sigma_bw2").get<double>();
                b.mean_s = moments_.at("mean_s").get<double>();
                b.mean_s2 = moments_.at("mean_s2").get<double>();
            } catch (const json::exception& e) {
                throw InvalidArgument("cli", std::string("moments file: ") + e.what());
            }
            return b;
        }
        (void)a;
        return beam_stats_analytic(plan_.channel).stats;
    }

    EtaMoments targets(double a) const {
        const auto& o = plan_.options;
        if (o.source == "sample") {
            return summarize(*set_, set_->aperture_index(a), SAxis::X, false).eta_moments();
        }
        if (o.source == "moments") {
            try {
                for (const auto& e : moments_.at("eta")) {
                    if (std::abs(e.at("aperture_m").get<double>() - a) <= 1e-12) {
                        return {e.at("mean").get<double>(), e.at("second").get<double>(), {}};
                    }
                }
            } catch (const json::exception& e) {
                throw InvalidArgument("cli", std::string("moments file: ") + e.what());
            }
            throw InvalidArgument("cli", "moments file has no entry for aperture " + format_double(a) + " m");
        }
        const auto r = eta_moments_analytic(plan_.channel, a, variant_from_string(o.variant));
        if (!r.valid) {
            throw InvalidMoments("matching", "analytic (" + o.variant + ") moments at a = " + format_double(a) +
                                                 " m violate <eta>^2 <= <eta^2> <= <eta>");
        }
        return r.moments;
    }

private:
    const Plan& plan_;
    std::optional<SampleSet> set_;
    json moments_;
};

struct Calibrated {
    double a = 0.0;
    CircularBeamPdt model;
    EtaMoments targets;
    std::optional<MatchResult> match;
};

Calibrated calibrate(const Plan& plan, const Source& src, double a, bool with_loss) {
    const auto& o = plan.options;
    const auto conv = convention_from_string(o.convention);
    const double eta_c = with_loss ? total_eta_c(plan) : 1.0;
    const BeamStats stats = src.stats(a);
    Calibrated c;
    c.a = a;
    if (method_from_string(o.method) == CalibrationMethod::SMoments) {
        c.model = calibrate_s_moments(stats, a, conv);
        c.targets = model_eta_moments(c.model.sigma_bw2, a, c.model.s);
        if (eta_c < 1.0) c.model = apply_constant_loss(eta_c, c.model);
        return c;
    }
    c.targets = src.targets(a);
    c.targets.validate();
    const bool fold = eta_c < 1.0 && loss_mode_from_string(o.loss_mode) == LossMode::Fold;
    const EtaMoments t = fold ? apply_constant_loss(eta_c, c.targets) : c.targets;
    auto r = calibrate_eta_moments(stats, t, a, conv);
    c.model = r.model;
    c.match = r.match;
    if (eta_c < 1.0 && !fold) c.model = apply_constant_loss(eta_c, c.model);
    return c;
}

json model_document(const Plan& plan, const Calibrated& c) {
    json j;
    j["model"] = pdt_to_json(c.model);
    j["method"] = plan.options.method;
    j["source"] = plan.options.source;
    j["aperture_m"] = c.a;
    j["targets"] = {{"mean", c.targets.mean}, {"second", c.targets.second}};
    if (c.match) {
        j["match"] = {{"converged", c.match->converged},
                      {"feasible", c.match->feasible},
                      {"boundary_active", c.match->boundary_active},
                      {"iterations", c.match->iterations},
                      {"residual_norm", c.match->residual_norm}};
    }
    return j;
}

Table calibration_table(const std::vector<Calibrated>& cal) {
    Table t{{"aperture_mm", "mu", "sigma2", "sigma_bw2", "eta_c", "target_mean", "target_second", "feasible"}, {}};
    for (const auto& c : cal) {
        t.rows.push_back({c.a * 1e3, c.model.s.mu, c.model.s.sigma2, c.model.sigma_bw2, c.model.eta_c,
                          c.targets.mean, c.targets.second,
                          c.match ? json(c.match->feasible) : json(nullptr)});
    }
    return t;
}

void run_params(const Plan& p, const fs::path& out) {
    const auto d = derive_channel(p.channel);
    const auto b = beam_stats_analytic(p.channel);
    const auto variant = variant_from_string(p.options.variant);
    Table t{{"quantity", "value"}, {}};
    auto add = [&](const std::string& k, json v) { t.rows.push_back({k, std::move(v)}); };
    add("k_per_m", d.k);
    add("fresnel", d.fresnel);
    add("rytov", d.rytov);
    add("coherence_m", number(d.coherence));
    add("sigma_bw2_m2", b.stats.sigma_bw2);
    add("mean_s_m2", b.stats.mean_s);
    add("mean_s2_m4", b.stats.mean_s2);
    add("w_lt_m", b.w_lt);
    add("weak_turbulence", b.weak_turbulence);
    add("wandering_prefactor", beam_wandering_prefactor(p.channel));
    for (double a : apertures_m(p)) {
        const auto m = eta_moments_analytic(p.channel, a, variant);
        const std::string tag = aperture_tag(a * 1e3);
        add("mean_eta_" + tag, m.moments.mean);
        add("mean_eta2_" + tag, m.moments.second);
        add("valid_" + tag, m.valid);
    }
    write_table(out, "params", p.options.format, t);
}

void run_simulate(const Plan& p, const fs::path& out) {
    const auto& o = p.options;
    GridSpec g;
    g.n = o.grid;
    g.screens = o.screens;
    g.modes = o.modes;
    g = resolve_grid(g, p.channel);
    EnsembleOptions eo;
    eo.workers = o.workers;
    const auto set = run_ensemble(p.channel, g, o.samples, o.seed, apertures_m(p), eo);
    save_sample_set(set, (out / "samples.csv").string());

    Table t{{"aperture_mm", "n", "mean_eta", "mean_eta2", "mean_sqrt_eta", "sigma_bw2", "mean_s", "mean_s2",
             "corr_s_x02", "ks_lognormal_s"},
            {}};
    std::optional<double> ks;
    if (set.size() >= 10) ks = ks_lognormal(set.S).d;
    for (std::size_t k = 0; k < set.apertures.size(); ++k) {
        const bool corr = set.size() >= 3;
        EmpiricalSummary s;
        try {
            s = summarize(set, k, SAxis::X, corr);
        } catch (const DomainError&) {
            s = summarize(set, k, SAxis::X, false);
        }
        t.rows.push_back({set.apertures[k] * 1e3, static_cast<long long>(s.n), s.mean_eta, s.mean_eta2,
                          s.mean_sqrt_eta, s.sigma_bw2, s.mean_s, s.mean_s2, optional_number(s.corr_s_x02),
                          optional_number(ks)});
    }
    write_table(out, "summary", o.format, t);
}

std::vector<Calibrated> calibrate_all(const Plan& p, const Source& src, bool with_loss) {
    std::vector<Calibrated> cal;
    for (double a : apertures_m(p)) cal.push_back(calibrate(p, src, a, with_loss));
    return cal;
}

void write_models(const Plan& p, const fs::path& out, const std::vector<Calibrated>& cal) {
    for (const auto& c : cal) {
        write_text(out / ("model_" + aperture_tag(c.a * 1e3) + ".json"), model_document(p, c).dump(2) + "\n");
    }
}

void run_calibrate(const Plan& p, const fs::path& out) {
    const Source src(p);
    const auto cal = calibrate_all(p, src, true);
    write_models(p, out, cal);
    write_table(out, "calibration", p.options.format, calibration_table(cal));
}

void run_pdt(const Plan& p, const fs::path& out) {
    const Source src(p);
    const auto cal = calibrate_all(p, src, true);
    write_models(p, out, cal);
    for (const auto& c : cal) {
        Table t{{"eta", "pdf", "cdf"}, {}};
        const double top = c.model.support_max();
        for (int j = 0; j < p.options.points; ++j) {
            const double eta = top * (j + 0.5) / p.options.points;
            t.rows.push_back({eta, total_pdt(eta, c.model), total_cdf(eta, c.model)});
        }
        write_table(out, "pdt_" + aperture_tag(c.a * 1e3), p.options.format, t);
    }
}

void run_validate(const Plan& p, const fs::path& out) {
    const Source src(p);
    const SampleSet set = load_sample_set(p.options.samples_file);
    const auto cal = calibrate_all(p, src, true);
    const double eta_c = total_eta_c(p);
    const double ks_s = ks_lognormal(set.S).d;
    Table t{{"aperture_mm", "method", "source", "n", "ks_pdt", "ks_lognormal_s", "model_mean_eta",
             "sample_mean_eta", "model_mean_eta2", "sample_mean_eta2"},
            {}};
    for (const auto& c : cal) {
        std::vector<double> eta = set.eta[set.aperture_index(c.a)];
        for (double& e : eta) e *= eta_c;
        const double d = ks_pdt(eta, c.model);
        double m1 = 0.0, m2 = 0.0;
        for (double e : eta) {
            m1 += e;
            m2 += e * e;
        }
        m1 /= static_cast<double>(eta.size());
        m2 /= static_cast<double>(eta.size());
        const double f1 = pdt_moment(1.0, c.model);
        const double f2 = pdt_moment(2.0, c.model);
        t.rows.push_back({c.a * 1e3, p.options.method, p.options.source, static_cast<long long>(eta.size()), d,
                          ks_s, f1, m1, f2, m2});

        std::sort(eta.begin(), eta.end());
        Table curve{{"eta", "empirical_cdf", "model_cdf"}, {}};
        const double top = c.model.support_max();
        for (int j = 0; j < p.options.points; ++j) {
            const double x = top * (j + 0.5) / p.options.points;
            const auto below = std::upper_bound(eta.begin(), eta.end(), x) - eta.begin();
            curve.rows.push_back({x, static_cast<double>(below) / static_cast<double>(eta.size()), total_cdf(x, c.model)});
        }
        write_table(out, "cdf_" + aperture_tag(c.a * 1e3), p.options.format, curve);
    }
    write_table(out, "validate", p.options.format, t);
}

GaussianInputState input_state(const Options& o) {
    return {o.alpha0, o.squeezing_db ? chi_from_db(std::abs(*o.squeezing_db)) : o.chi};
}

std::optional<double> observable(const Options& o, const EtaAverager& avg) {
    const GaussianInputState st = input_state(o);
    if (o.observable == "mandel") {
        const auto in = input_gaussian_moments(st);
        return mandel_q_out(in.mandel_q, in.mean_n, avg);
    }
    if (o.observable == "binomial") return click_statistics(st, o.detectors, avg).q_n;
    return squeezing_out(st, avg);
}

void run_quantum(const Plan& p, const fs::path& out) {
    const Source src(p);
    const auto cal = calibrate_all(p, src, false);
    const double eta_c = total_eta_c(p);
    std::optional<SampleSet> set;
    if (!p.options.samples_file.empty()) set = load_sample_set(p.options.samples_file);
    Table t{{"aperture_mm", "model", "samples"}, {}};
    for (const auto& c : cal) {
        const auto model = observable(p.options, EtaAverager::from_model(c.model, eta_c));
        std::optional<double> direct;
        if (set) direct = observable(p.options, EtaAverager::from_samples(set->eta[set->aperture_index(c.a)], eta_c));
        t.rows.push_back({c.a * 1e3, optional_number(model), optional_number(direct)});
    }
    write_table(out, "quantum_" + p.options.observable, p.options.format, t);
}

void require(bool ok, const std::string& message) {
    if (!ok) throw InvalidArgument("cli", message);
}

}  // namespace

json options_to_json(const Options& o) {
    return {{"command", o.command},
            {"config", o.config_path},
            {"set", o.overrides},
            {"seed", o.seed},
            {"samples", o.samples},
            {"grid", o.grid},
            {"screens", o.screens},
            {"modes", o.modes},
            {"aperture_mm", o.apertures_mm},
            {"method", o.method},
            {"variant", o.variant},
            {"convention", o.convention},
            {"source", o.source},
            {"loss_mode", o.loss_mode},
            {"loss_db", o.loss_db},
            {"out", o.out},
            {"format", o.format},
            {"workers", o.workers},
            {"samples_file", o.samples_file},
            {"moments_file", o.moments_file},
            {"points", o.points},
            {"observable", o.observable},
            {"alpha0", o.alpha0},
            {"chi", o.chi},
            {"squeezing_db", o.squeezing_db ? json(*o.squeezing_db) : json(nullptr)},
            {"detectors", o.detectors}};
}

Options options_from_json(const json& j) {
    Options o;
    try {
        o.command = j.at("command").get<std::string>();
        o.config_path = j.at("config").get<std::string>();
        o.overrides = j.at("set").get<std::vector<std::string>>();
        o.seed = j.at("seed").get<std::uint64_t>();
        o.samples = j.at("samples").get<std::size_t>();
        o.grid = j.at("grid").get<int>();
        o.screens = j.at("screens").get<int>();
        o.modes = j.at("modes").get<int>();
        o.apertures_mm = j.at("aperture_mm").get<std::vector<double>>();
        o.method = j.at("method").get<std::string>();
        o.variant = j.at("variant").get<std::string>();
        o.convention = j.at("convention").get<std::string>();
        o.source = j.at("source").get<std::string>();
        o.loss_mode = j.at("loss_mode").get<std::string>();
        o.loss_db = j.at("loss_db").get<double>();
        o.out = j.at("out").get<std::string>();
        o.format = j.at("format").get<std::string>();
        o.workers = j.at("workers").get<unsigned>();
        o.samples_file = j.at("samples_file").get<std::string>();
        o.moments_file = j.at("moments_file").get<std::string>();
        o.points = j.at("points").get<int>();
        o.observable = j.at("observable").get<std::string>();
        o.alpha0 = j.at("alpha0").get<double>();
        o.chi = j.at("chi").get<double>();
        if (!j.at("squeezing_db").is_null()) o.squeezing_db = j.at("squeezing_db").get<double>();
        o.detectors = j.at("detectors").get<int>();
    } catch (const json::exception& e) {
        throw InvalidArgument("cli", std::string("manifest options: ") + e.what());
    }
    return o;
}

json Plan::to_json() const {
    return {{"schema", "v1"},
            {"command", options.command},
            {"options", options_to_json(options)},
            {"channel", channel_to_json(channel.resolved())},
            {"seed", options.seed},
            {"steps", steps},
            {"inputs", inputs},
            {"outputs", outputs}};
}

Plan make_plan(const Options& options) {
    Plan p;
    p.options = options;
    Options& o = p.options;
    require(std::find(kCommands.begin(), kCommands.end(), o.command) != kCommands.end(),
            "unknown command '" + o.command + "'");

    if (!o.config_path.empty()) {
        p.channel = load_channel_config(o.config_path);
        p.inputs.push_back(o.config_path);
    }
    p.channel = apply_overrides(p.channel, o.overrides);
    if (o.loss_db != 0.0) efficiency_from_db(o.loss_db);

    method_from_string(o.method);
    variant_from_string(o.variant);
    convention_from_string(o.convention);
    loss_mode_from_string(o.loss_mode);
    require(o.format == "csv" || o.format == "json", "--format must be csv or json");
    require(o.source == "analytic" || o.source == "sample" || o.source == "moments",
            "--source must be analytic, sample or moments");

    if (o.source == "sample" || o.command == "validate") {
        require(!o.samples_file.empty(), o.command + " needs --samples-file");
        require(fs::exists(o.samples_file), "samples file '" + o.samples_file + "' not found");
        require(fs::exists(sidecar_path(o.samples_file)), "sidecar of '" + o.samples_file + "' not found");
        p.inputs.push_back(o.samples_file);
        p.inputs.push_back(sidecar_path(o.samples_file));
    }
    if (o.command == "quantum" && !o.samples_file.empty() && o.source != "sample") {
        require(fs::exists(o.samples_file), "samples file '" + o.samples_file + "' not found");
        p.inputs.push_back(o.samples_file);
    }
    if (o.source == "moments") {
        require(!o.moments_file.empty(), "--source moments needs --moments-file");
        require(fs::exists(o.moments_file), "moments file '" + o.moments_file + "' not found");
        p.inputs.push_back(o.moments_file);
    }

    if (o.apertures_mm.empty()) {
        if (p.channel.aperture > 0.0) {
            o.apertures_mm.push_back(p.channel.aperture * 1e3);
        } else if (o.source == "sample" || o.command == "validate") {
            for (double a : load_sample_set(o.samples_file).apertures) o.apertures_mm.push_back(a * 1e3);
        }
    }
    require(!o.apertures_mm.empty(), "no aperture given (--aperture-mm or aperture_m in the config)");
    for (double a : o.apertures_mm) require(a > 0.0 && std::isfinite(a), "apertures must be positive");

    if (o.source == "sample" || o.command == "validate") {
        const SampleSet set = load_sample_set(o.samples_file);
        for (double a : o.apertures_mm) set.aperture_index(a * 1e-3);
    }
    if (o.loss_db > 0.0 && o.loss_mode == "fold") {
        require(o.method == "eta-moments", "fold loss mode needs the eta-moments method");
    }
    require(o.points >= 2, "--points must be >= 2");

    const std::string out = o.out;
    auto output = [&](const std::string& name) { p.outputs.push_back((fs::path(out) / name).string()); };
    const auto tags = [&] {
        std::vector<std::string> v;
        for (double a : o.apertures_mm) v.push_back(aperture_tag(a));
        return v;
    }();

    if (o.command == "params") {
        beam_stats_analytic(p.channel);
        p.steps = {"derive", "analytic"};
        output(table_name("params", o.format));
    } else if (o.command == "simulate") {
        require(o.samples >= 1, "--samples must be >= 1");
        GridSpec g;
        g.n = o.grid;
        g.screens = o.screens;
        g.modes = o.modes;
        g = resolve_grid(g, p.channel);
        for (double a : o.apertures_mm) {
            require(a * 1e-3 < 0.5 * g.window * (1.0 - 2.0 / g.n), "aperture does not fit inside the window");
        }
        initial_field(p.channel, g);
        p.steps = {"derive", "simulate", "summarize"};
        output("samples.csv");
        output("samples.json");
        output(table_name("summary", o.format));
    } else if (o.command == "calibrate" || o.command == "pdt") {
        p.steps = {"derive", "source:" + o.source, "calibrate:" + o.method};
        for (const auto& t : tags) output("model_" + t + ".json");
        if (o.command == "calibrate") {
            output(table_name("calibration", o.format));
        } else {
            p.steps.push_back("tabulate");
            for (const auto& t : tags) output(table_name("pdt_" + t, o.format));
        }
    } else if (o.command == "validate") {
        p.steps = {"derive", "source:" + o.source, "calibrate:" + o.method, "ks"};
        for (const auto& t : tags) output(table_name("cdf_" + t, o.format));
        output(table_name("validate", o.format));
    } else if (o.command == "quantum") {
        require(o.observable == "mandel" || o.observable == "binomial" || o.observable == "squeezing",
                "--observable must be mandel, binomial or squeezing");
        require(o.detectors >= 1, "--detectors must be >= 1");
        input_state(o).validate();
        p.steps = {"derive", "source:" + o.source, "calibrate:" + o.method, "quantum:" + o.observable};
        output(table_name("quantum_" + o.observable, o.format));
    }
    output("manifest.json");
    return p;
}

int execute(const Plan& plan) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path out(plan.options.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
        std::cerr << "error [cli]: cannot create '" << out.string() << "': " << ec.message() << '\n';
        return kRuntime;
    }
    json manifest = plan.to_json();
    manifest["tool"] = "turbulux";
    manifest["version"] = TURBULUX_VERSION;
    int code = kOk;
    try {
        const auto& cmd = plan.options.command;
        if (cmd == "params") run_params(plan, out);
        else if (cmd == "simulate") run_simulate(plan, out);
        else if (cmd == "calibrate") run_calibrate(plan, out);
        else if (cmd == "pdt") run_pdt(plan, out);
        else if (cmd == "validate") run_validate(plan, out);
        else if (cmd == "quantum") run_quantum(plan, out);
        manifest["status"] = "ok";
    } catch (const Error& e) {
        std::cerr << "error [" << e.module() << "]: " << e.what() << '\n';
        manifest["status"] = "error";
        manifest["error"] = {{"module", e.module()}, {"message", e.what()}};
        code = kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        manifest["status"] = "error";
        manifest["error"] = {{"module", ""}, {"message", e.what()}};
        code = kRuntime;
    }
    json written = json::array();
    for (const auto& f : plan.outputs) {
        if (fs::exists(f) || fs::path(f).filename() == "manifest.json") written.push_back(f);
    }
    manifest["outputs"] = written;
    manifest["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
        write_text(out / "manifest.json", manifest.dump(2) + "\n");
    } catch (const Error& e) {
        std::cerr << "error [" << e.module() << "]: " << e.what() << '\n';
        return kRuntime;
    }
    return code;
}

namespace {

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config_path, "Channel config (JSON or key = value)");
    sub->add_option("--set", o.overrides, "Channel override KEY=VALUE (repeatable)");
    sub->add_option("--aperture-mm", o.apertures_mm, "Aperture radii in mm")->delimiter(',');
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--format", o.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
    sub->add_flag("--dry-run", o.dry_run, "Print the plan and exit");
}

void add_calibration(CLI::App* sub, Options& o) {
    sub->add_option("--method", o.method, "Calibration method")->check(CLI::IsMember({"s-moments", "eta-moments"}));
    sub->add_option("--variant", o.variant, "Analytic moment variant")
        ->check(CLI::IsMember({"as-printed", "gaussian-consistent"}));
    sub->add_option("--convention", o.convention, "Conditional PDT convention")
        ->check(CLI::IsMember({"as-printed", "gaussian-consistent"}));
    sub->add_option("--source", o.source, "Moment source")->check(CLI::IsMember({"analytic", "sample", "moments"}));
    sub->add_option("--samples-file", o.samples_file, "SampleSet CSV from simulate");
    sub->add_option("--moments-file", o.moments_file, "JSON file with beam and transmittance moments");
    sub->add_option("--loss-db", o.loss_db, "Constant loss in dB");
    sub->add_option("--loss-mode", o.loss_mode, "Constant-loss handling")->check(CLI::IsMember({"rescale", "fold"}));
}

unsigned default_workers() {
    const char* env = std::getenv("TURBULUX_WORKERS");
    if (env == nullptr || *env == '\0') return 1;
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0') {
        std::cerr << "warning: ignoring TURBULUX_WORKERS='" << env << "'\n";
        return 1;
    }
    return static_cast<unsigned>(v);
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Fading-channel transmittance models for free-space links"};
    app.set_version_flag("--version", std::string(TURBULUX_VERSION));
    app.require_subcommand(1);

    Options o;
    o.workers = default_workers();
    std::string manifest_path;

    auto* params = app.add_subcommand("params", "Analytic beam and transmittance statistics");
    add_common(params, o);
    params->add_option("--variant", o.variant, "Analytic moment variant")
        ->check(CLI::IsMember({"as-printed", "gaussian-consistent"}));

    auto* simulate = app.add_subcommand("simulate", "Phase-screen ensemble to a SampleSet");
    add_common(simulate, o);
    simulate->add_option("--seed", o.seed, "Master seed");
    simulate->add_option("--samples", o.samples, "Realizations");
    simulate->add_option("--grid", o.grid, "Grid points per side (power of two)");
    simulate->add_option("--screens", o.screens, "Phase screens along the path");
    simulate->add_option("--modes", o.modes, "Sparse-spectrum modes per screen");

    auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit the circular-beam PDT");
    add_common(calibrate_cmd, o);
    add_calibration(calibrate_cmd, o);

    auto* pdt = app.add_subcommand("pdt", "Calibrate and tabulate density and CDF");
    add_common(pdt, o);
    add_calibration(pdt, o);
    pdt->add_option("--points", o.points, "Tabulation points");

    auto* validate = app.add_subcommand("validate", "KS distance between model and SampleSet");
    add_common(validate, o);
    add_calibration(validate, o);
    validate->add_option("--points", o.points, "CDF curve points");

    auto* quantum = app.add_subcommand("quantum", "Nonclassicality after the fading channel");
    add_common(quantum, o);
    add_calibration(quantum, o);
    quantum->add_option("--observable", o.observable, "mandel, binomial or squeezing")
        ->check(CLI::IsMember({"mandel", "binomial", "squeezing"}));
    quantum->add_option("--alpha0", o.alpha0, "Coherent amplitude");
    quantum->add_option("--chi", o.chi, "Squeezing parameter");
    quantum->add_option("--squeezing-db", o.squeezing_db, "Input squeezing in dB, either sign (overrides --chi)");
    quantum->add_option("--detectors", o.detectors, "On-off detectors for the binomial parameter");

    auto* replay = app.add_subcommand("replay", "Re-run from a manifest");
    replay->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
    std::string replay_out;
    replay->add_option("--out", replay_out, "Output directory (default: the recorded one)");
    replay->add_flag("--dry-run", o.dry_run, "Print the plan and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (replay->parsed()) {
            std::ifstream in(manifest_path);
            if (!in) throw InvalidArgument("cli", "cannot open manifest '" + manifest_path + "'");
            json doc;
            try {
                doc = json::parse(in);
            } catch (const json::exception& e) {
                throw InvalidArgument("cli", std::string("malformed manifest: ") + e.what());
            }
            if (doc.value("schema", "") != "v1") throw InvalidArgument("cli", "unsupported manifest schema");
            const bool dry = o.dry_run;
            const unsigned workers = o.workers;
            o = options_from_json(doc.at("options"));
            o.dry_run = dry;
            o.workers = workers;
            if (!replay_out.empty()) o.out = replay_out;
        } else {
            for (auto* sub : app.get_subcommands()) o.command = sub->get_name();
            const auto* sub = app.get_subcommands().front();
            const auto* src_opt = sub->get_option_no_throw("--source");
            if (src_opt == nullptr || src_opt->count() == 0) {
                if (!o.moments_file.empty()) o.source = "moments";
                else if (!o.samples_file.empty()) o.source = "sample";
            }
        }
        const Plan plan = make_plan(o);
        if (o.dry_run) {
            std::cout << plan.to_json().dump(2) << '\n';
            return kOk;
        }
        return execute(plan);
    } catch (const Error& e) {
        std::cerr << "error [" << e.module() << "]: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    }
}

}  // namespace turbulux::cli
