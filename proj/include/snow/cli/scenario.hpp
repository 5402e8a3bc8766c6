// scenario.hpp - run one named scenario from a spec and write its files
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace snow::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kUnknownScenario = 2, kInvalidConfig = 3 };

struct ScenarioSpec {
    std::string name;
    std::string config_path;              // empty: scenario defaults only
    std::string output_dir = "out";
    std::optional<std::uint64_t> seed;    // overrides config and --set
    std::vector<std::string> overrides;   // "key=value"
};

struct RunReport {
    int exit_code = kOk;
    std::string message;                  // error text when exit_code != 0
    std::vector<std::string> files;       // written, relative to output_dir
    std::vector<std::string> summary;
    std::size_t invariant_violations = 0;
};

// Config precedence: built-in defaults, scenario defaults, config file,
// overrides, seed. Never throws; failures map to the exit codes.
RunReport run_scenario(const ScenarioSpec& spec);

std::string scenario_list();
std::string usage_text();

}  // namespace snow::cli
