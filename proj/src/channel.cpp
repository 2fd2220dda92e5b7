#include "turbulux/channel.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "turbulux/error.hpp"

namespace turbulux {
namespace {

constexpr const char* kKeys[] = {"wavelength_m", "length_m", "w0_m",       "f0_m", "cn2",
                                 "l0_m",         "outer_m",  "aperture_m", "eta_c"};

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_number(const std::string& key, const std::string& raw) {
    std::string v = trim(raw);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
    if (v == "inf" || v == "+inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        throw InvalidArgument("channel", "key '" + key + "' has non-numeric value '" + v + "'");
    }
    if (used != v.size()) {
        throw InvalidArgument("channel", "key '" + key + "' has trailing junk in '" + v + "'");
    }
    return out;
}

void assign(ChannelConfig& c, const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (key == "w0_m" && (v == "fresnel" || v == "\"fresnel\"")) {
        c.w0 = 0.0;
        return;
    }
    if (key == "f0_m" && (v == "focused" || v == "\"focused\"")) {
        c.f0 = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    const double x = parse_number(key, v);
    if (key == "wavelength_m") c.wavelength = x;
    else if (key == "length_m") c.length = x;
    else if (key == "w0_m") c.w0 = x;
    else if (key == "f0_m") c.f0 = x;
    else if (key == "cn2") c.cn2 = x;
    else if (key == "l0_m") c.inner_scale = x;
    else if (key == "outer_m") c.outer_scale = x;
    else if (key == "aperture_m") c.aperture = x;
    else if (key == "eta_c") c.eta_c = x;
    else throw InvalidArgument("channel", "unknown key '" + key + "'");
}

nlohmann::json number_or_inf(double x) {
    if (std::isinf(x)) return "inf";
    return x;
}

}  // namespace

double ChannelConfig::w0_resolved() const {
    if (w0 > 0.0) return w0;
    return std::sqrt(length * wavelength / std::numbers::pi);
}

double ChannelConfig::f0_resolved() const { return std::isnan(f0) ? length : f0; }

bool ChannelConfig::focused() const { return f0_resolved() == length; }

void ChannelConfig::validate(bool need_aperture) const {
    auto positive = [](double x, const char* name) {
        if (!(x > 0.0)) throw InvalidArgument("channel", std::string(name) + " must be positive");
    };
    positive(wavelength, "wavelength_m");
    positive(length, "length_m");
    if (!std::isfinite(wavelength) || !std::isfinite(length)) {
        throw InvalidArgument("channel", "wavelength and length must be finite");
    }
    if (w0 < 0.0 || std::isnan(w0) || std::isinf(w0)) {
        throw InvalidArgument("channel", "w0_m must be positive or 'fresnel'");
    }
    if (!std::isnan(f0)) positive(f0, "f0_m");
    if (!(cn2 >= 0.0) || !std::isfinite(cn2)) throw InvalidArgument("channel", "cn2 must be >= 0");
    positive(inner_scale, "l0_m");
    positive(outer_scale, "outer_m");
    if (!(inner_scale < outer_scale)) throw InvalidArgument("channel", "l0_m must be below outer_m");
    if (need_aperture) {
        positive(aperture, "aperture_m");
        if (!std::isfinite(aperture)) throw InvalidArgument("channel", "aperture_m must be finite");
    }
    if (!(eta_c > 0.0 && eta_c <= 1.0)) throw InvalidArgument("channel", "eta_c must lie in (0, 1]");
}

ChannelConfig ChannelConfig::resolved() const {
    ChannelConfig c = *this;
    c.w0 = w0_resolved();
    c.f0 = f0_resolved();
    return c;
}

DerivedChannel derive_channel(const ChannelConfig& config) {
    config.validate(false);
    DerivedChannel d;
    const double w0 = config.w0_resolved();
    const double L = config.length;
    d.k = 2.0 * std::numbers::pi / config.wavelength;
    d.fresnel = d.k * w0 * w0 / (2.0 * L);
    d.rytov = 1.23 * config.cn2 * std::pow(d.k, 7.0 / 6.0) * std::pow(L, 11.0 / 6.0);
    d.coherence = config.cn2 > 0.0 ? std::pow(1.46 * config.cn2 * d.k * d.k * L, -3.0 / 5.0)
                                   : std::numeric_limits<double>::infinity();
    return d;
}

ChannelConfig parse_channel_config(const std::string& text) {
    ChannelConfig c;
    const std::string body = trim(text);
    if (!body.empty() && body.front() == '{') {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument("channel", std::string("malformed JSON: ") + e.what());
        }
        return channel_from_json(doc);
    }
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) eq = line.find(':');
        if (eq == std::string::npos) {
            throw InvalidArgument("channel", "line " + std::to_string(lineno) + ": expected key = value");
        }
        assign(c, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    c.validate(false);
    return c;
}

ChannelConfig load_channel_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("channel", "cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_channel_config(buf.str());
}

nlohmann::json channel_to_json(const ChannelConfig& c) {
    nlohmann::json j;
    j["wavelength_m"] = c.wavelength;
    j["length_m"] = c.length;
    if (c.w0 > 0.0) j["w0_m"] = c.w0;
    else j["w0_m"] = "fresnel";
    if (std::isnan(c.f0)) j["f0_m"] = c.length;
    else j["f0_m"] = number_or_inf(c.f0);
    j["cn2"] = c.cn2;
    j["l0_m"] = c.inner_scale;
    j["outer_m"] = number_or_inf(c.outer_scale);
    j["aperture_m"] = c.aperture;
    j["eta_c"] = c.eta_c;
    return j;
}

ChannelConfig channel_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw InvalidArgument("channel", "config must be a JSON object");
    ChannelConfig c;
    for (const auto& [key, value] : doc.items()) {
        bool known = false;
        for (const char* k : kKeys) known = known || key == k;
        if (!known) throw InvalidArgument("channel", "unknown key '" + key + "'");
        if (value.is_number()) {
            std::ostringstream s;
            s.precision(17);
            s << value.get<double>();
            assign(c, key, s.str());
        } else if (value.is_string()) {
            assign(c, key, value.get<std::string>());
        } else {
            throw InvalidArgument("channel", "key '" + key + "' must be a number or string");
        }
    }
    c.validate(false);
    return c;
}

double efficiency_from_db(double loss_db) {
    if (!(loss_db >= 0.0) || !std::isfinite(loss_db)) {
        throw InvalidArgument("channel", "loss in dB must be finite and >= 0");
    }
    return std::pow(10.0, -loss_db / 10.0);
}

}  // namespace turbulux
