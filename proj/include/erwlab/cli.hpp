#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "erwlab/presets.hpp"

namespace erwlab {

struct RunConfig {
    std::string subcommand;  // simulate | analyze | oracle | verify | sa | presets

    std::optional<std::string> preset;
    Params params;
    std::optional<std::string> model_path;

    long n_max = 10000;
    int N = 1000;
    std::uint64_t seed = 42;
    std::vector<long> checkpoints;
    int threads = 0;

    std::string suite = "all";
    std::string out;  // output file; empty writes to the stream
    std::optional<std::string> tol_overrides_path;

    // oracle
    int oracle_n = 12;

    // sa
    std::string drift;
    double theta0 = 0.0;
    double theta1 = 0.0;
    std::string noise = "gaussian:1.0";
    int k = 1;
    int terms = -1;
};

/// Tolerance table with defaults; override keys are "<suite>.<name>".
struct Tolerances {
    nlohmann::json values;

    Tolerances();
    double get(const std::string& key) const;
    bool has(const std::string& key) const { return values.contains(key); }
    /// Throws ConfigInvalid on unknown keys or non-numeric values.
    void apply(const nlohmann::json& overrides);
};

/// Runs one subcommand. Exit code: 0 all checks pass, 1 a check failed, 2 configuration error.
int run_config(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Full command line entry point used by the erw-lab tool.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace erwlab
