// snowsim - command-line runner for the simulator scenarios
#include <iostream>

#include "CLI11.hpp"
#include "snow/cli/scenario.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"SNOW white-space LPWAN simulator"};
    app.require_subcommand(0, 1);
    bool list = false;
    app.add_flag("--list", list, "list scenarios and exit");

    snow::cli::ScenarioSpec spec;
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "run one scenario");
    run->add_option("scenario", spec.name, "scenario name")->required();
    run->add_option("--config", spec.config_path, "key=value config file");
    auto* seed_opt = run->add_option("--seed", seed, "RNG seed");
    run->add_option("--out", spec.output_dir, "output directory")->capture_default_str();
    run->add_option("--set", spec.overrides, "override key=value (repeatable)")->take_all();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (list) {
        std::cout << snow::cli::scenario_list();
        return 0;
    }
    if (!*run) {
        std::cerr << snow::cli::usage_text();
        return snow::cli::kUnknownScenario;
    }
    if (*seed_opt) spec.seed = seed;

    const auto rep = snow::cli::run_scenario(spec);
    if (rep.exit_code != snow::cli::kOk) {
        std::cerr << "snowsim: " << rep.message << '\n';
        return rep.exit_code;
    }
    for (const auto& line : rep.summary) std::cout << line << '\n';
    std::cout << "mac invariant violations: " << rep.invariant_violations << '\n';
    std::cout << "wrote";
    for (const auto& f : rep.files) std::cout << ' ' << f;
    std::cout << " to " << spec.output_dir << '\n';
    return 0;
}
