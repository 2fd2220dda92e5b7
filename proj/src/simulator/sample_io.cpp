#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "turbulux/error.hpp"
#include "turbulux/simulator.hpp"

namespace turbulux {
namespace {

double parse_field(const std::string& text, std::size_t line) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw InvalidArgument("simulator", "bad number '" + text + "' on CSV line " + std::to_string(line));
    }
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) throw Error("simulator", "number formatting failed");
    return std::string(buf, ptr);
}

std::string sidecar_path(const std::string& csv_path) {
    return std::filesystem::path(csv_path).replace_extension(".json").string();
}

void save_sample_set(const SampleSet& set, const std::string& csv_path) {
    set.validate();
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw InvalidArgument("simulator", "cannot write '" + csv_path + "'");
    csv << "idx,eta,x0_m,y0_m,S_m2,Sy_m2";
    for (std::size_t k = 1; k < set.apertures.size(); ++k) csv << ",eta_a" << k;
    csv << '\n';
    for (std::size_t i = 0; i < set.size(); ++i) {
        csv << i << ',' << format_double(set.eta[0][i]) << ',' << format_double(set.x0[i]) << ','
            << format_double(set.y0[i]) << ',' << format_double(set.S[i]) << ','
            << format_double(set.Sy[i]);
        for (std::size_t k = 1; k < set.apertures.size(); ++k) csv << ',' << format_double(set.eta[k][i]);
        csv << '\n';
    }
    if (!csv) throw Error("simulator", "write to '" + csv_path + "' failed");

    nlohmann::json side;
    side["schema"] = "v1";
    side["seed"] = set.seed;
    side["n"] = set.size();
    side["apertures_m"] = set.apertures;
    side["grid"] = grid_to_json(set.grid);
    side["channel"] = channel_to_json(set.channel);
    side["s_axis"] = "x";
    std::ofstream js(sidecar_path(csv_path), std::ios::binary);
    js << side.dump(2) << '\n';
    if (!js) throw Error("simulator", "write to sidecar of '" + csv_path + "' failed");
}

SampleSet load_sample_set(const std::string& csv_path) {
    std::ifstream js(sidecar_path(csv_path));
    if (!js) throw InvalidArgument("simulator", "missing sidecar for '" + csv_path + "'");
    nlohmann::json side;
    try {
        side = nlohmann::json::parse(js);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("simulator", std::string("malformed sidecar: ") + e.what());
    }
    SampleSet set;
    try {
        set.seed = side.at("seed").get<std::uint64_t>();
        set.apertures = side.at("apertures_m").get<std::vector<double>>();
        set.grid = grid_from_json(side.at("grid"));
        set.channel = channel_from_json(side.at("channel"));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("simulator", std::string("bad sidecar: ") + e.what());
    }
    const std::size_t n_expected = side.value("n", std::size_t{0});

    std::ifstream csv(csv_path);
    if (!csv) throw InvalidArgument("simulator", "cannot read '" + csv_path + "'");
    std::string line;
    std::getline(csv, line);
    const auto header = split(line);
    const std::size_t extra = set.apertures.empty() ? 0 : set.apertures.size() - 1;
    if (header.size() != 6 + extra || header[0] != "idx" || header[1] != "eta" || header[4] != "S_m2") {
        throw InvalidArgument("simulator", "unexpected CSV header in '" + csv_path + "'");
    }
    set.eta.assign(set.apertures.size(), {});
    std::size_t lineno = 1;
    while (std::getline(csv, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw InvalidArgument("simulator", "wrong column count on CSV line " + std::to_string(lineno));
        }
        if (static_cast<std::size_t>(parse_field(cells[0], lineno)) != set.x0.size()) {
            throw InvalidArgument("simulator", "out-of-order idx on CSV line " + std::to_string(lineno));
        }
        set.eta[0].push_back(parse_field(cells[1], lineno));
        set.x0.push_back(parse_field(cells[2], lineno));
        set.y0.push_back(parse_field(cells[3], lineno));
        set.S.push_back(parse_field(cells[4], lineno));
        set.Sy.push_back(parse_field(cells[5], lineno));
        for (std::size_t k = 1; k <= extra; ++k) set.eta[k].push_back(parse_field(cells[5 + k], lineno));
    }
    if (n_expected != 0 && n_expected != set.size()) {
        throw InvalidArgument("simulator", "CSV row count disagrees with sidecar");
    }
    set.validate();
    return set;
}

}  // namespace turbulux
