#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "turbulux/channel.hpp"

namespace turbulux::cli {

enum Exit : int { kOk = 0, kRuntime = 1, kUsage = 2, kConfig = 3 };

/// Every knob a command can read. Serialized into the manifest so a run can
/// be replayed from it alone.
struct Options {
    std::string command;
    std::string config_path;
    std::vector<std::string> overrides;  ///< key=value channel edits
    std::uint64_t seed = 1;
    std::size_t samples = 1000;
    int grid = 512;
    int screens = 10;
    int modes = 512;
    std::vector<double> apertures_mm;
    std::string method = "eta-moments";
    std::string variant = "gaussian-consistent";
    std::string convention = "gaussian-consistent";
    std::string source = "analytic";
    std::string loss_mode = "rescale";
    double loss_db = 0.0;
    std::string out = ".";
    std::string format = "csv";
    unsigned workers = 1;
    std::string samples_file;
    std::string moments_file;
    int points = 200;
    std::string observable = "mandel";
    double alpha0 = 6.0;
    double chi = 0.4;
    std::optional<double> squeezing_db;  ///< overrides chi; sign ignored
    int detectors = 7;
    bool dry_run = false;
};

nlohmann::json options_to_json(const Options& o);
Options options_from_json(const nlohmann::json& doc);

/// Resolved inputs of one run. Building it performs all validation that
/// does not need the pipeline itself.
struct Plan {
    Options options;
    ChannelConfig channel;
    std::vector<std::string> steps;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    nlohmann::json to_json() const;
};

/// Raises InvalidArgument (exit 3) for bad values or unreadable inputs.
Plan make_plan(const Options& options);

/// Runs the pipeline, writes outputs and the manifest. Returns the exit code.
int execute(const Plan& plan);

/// Full command line entry point.
int run(int argc, char** argv);

}  // namespace turbulux::cli
