#include "snow/cli/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "snow/sim/config.hpp"
#include "snow/sim/scenarios.hpp"

namespace snow::cli {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << text;
    if (!os) throw std::runtime_error("write failed: " + p.string());
}

std::string csv(const sim::Table& t)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
    os << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
    }
    return os.str();
}

}  // namespace

std::string scenario_list()
{
    std::ostringstream os;
    for (const auto& s : sim::scenario_registry()) os << "  " << s.name << "  " << s.description << '\n';
    return os.str();
}

std::string usage_text()
{
    return "usage: snowsim run <scenario> [--config FILE] [--seed N] [--out DIR] [--set key=value]...\n"
           "       snowsim --list\n"
           "scenarios:\n" +
           scenario_list();
}

RunReport run_scenario(const ScenarioSpec& spec)
{
    RunReport rep;
    const auto* info = sim::find_scenario(spec.name);
    if (!info) {
        rep.exit_code = kUnknownScenario;
        rep.message = "unknown scenario '" + spec.name + "'\n" + usage_text();
        return rep;
    }

    sim::SimConfig cfg;
    sim::ScenarioParams params;
    try {
        info->defaults(cfg);
        std::vector<std::pair<std::string, std::string>> kv;
        if (!spec.config_path.empty())
            for (const auto& e : sim::load_key_values(spec.config_path)) kv.push_back(e);
        for (const auto& o : spec.overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos || eq == 0) throw sim::ConfigError("override needs key=value: " + o);
            kv.emplace_back(o.substr(0, eq), o.substr(eq + 1));
        }
        for (const auto& [k, v] : kv) {
            if (k.rfind("scenario.", 0) == 0)
                params[k] = v;
            else
                sim::apply_setting(cfg, k, v);
        }
        if (spec.seed) cfg.seed = *spec.seed;
        cfg.validate();
    } catch (const sim::ConfigError& e) {
        rep.exit_code = kInvalidConfig;
        rep.message = e.what();
        return rep;
    }

    sim::ScenarioOutput out;
    try {
        out = info->run(cfg, params);
    } catch (const sim::ConfigError& e) {
        rep.exit_code = kInvalidConfig;
        rep.message = e.what();
        return rep;
    } catch (const std::exception& e) {
        rep.exit_code = kRuntimeFailure;
        rep.message = e.what();
        return rep;
    }

    try {
        const fs::path dir(spec.output_dir);
        fs::create_directories(dir);

        std::ostringstream m;
        sim::write_metrics_header(m);
        for (const auto& [label, metrics] : out.runs) sim::write_metrics_rows(m, label, metrics);
        write_file(dir / "metrics.csv", m.str());
        rep.files.push_back("metrics.csv");

        std::ostringstream t;
        out.trace.write(t);
        write_file(dir / "trace.log", t.str());
        rep.files.push_back("trace.log");

        for (const auto& tb : out.tables) {
            write_file(dir / tb.file, csv(tb));
            rep.files.push_back(tb.file);
        }

        std::ostringstream s;
        s << "scenario " << spec.name << '\n' << "seed " << cfg.seed << '\n' << "runs " << out.runs.size() << '\n';
        for (const auto& line : out.summary) s << line << '\n';
        s << "mac_invariant_violations " << out.violations.size() << '\n';
        for (std::size_t i = 0; i < out.violations.size() && i < 20; ++i) s << "  " << out.violations[i] << '\n';
        write_file(dir / "summary.txt", s.str());
        rep.files.push_back("summary.txt");
    } catch (const std::exception& e) {
        rep.exit_code = kRuntimeFailure;
        rep.message = e.what();
        return rep;
    }
    rep.summary = out.summary;
    rep.invariant_violations = out.violations.size();
    return rep;
}

}  // namespace snow::cli
