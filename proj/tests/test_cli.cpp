#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "snow/cli/scenario.hpp"

using namespace snow::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("snowsim_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::size_t data_rows(const fs::path& csv)
{
    std::istringstream is(slurp(csv));
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++n;
    return n > 0 ? n - 1 : 0;
}

}  // namespace

TEST_CASE("unknown scenario exits 2 with usage")
{
    ScenarioSpec s;
    s.name = "nope";
    s.output_dir = scratch("unknown").string();
    const auto r = run_scenario(s);
    CHECK(r.exit_code == kUnknownScenario);
    CHECK(r.message.find("usage") != std::string::npos);
    CHECK(r.message.find("uplink_scaling") != std::string::npos);
    CHECK_FALSE(fs::exists(s.output_dir));
}

TEST_CASE("every scenario is listed")
{
    const auto l = scenario_list();
    for (const char* n : {"papr", "range_prr", "uplink_scaling", "downlink", "mobility", "near_far", "interference",
                          "atpc_convergence", "estimator_bench"})
        CHECK(l.find(n) != std::string::npos);
}

TEST_CASE("invalid config exits 3")
{
    ScenarioSpec s;
    s.name = "papr";
    s.output_dir = scratch("badcfg").string();
    for (const char* bad : {"no.such.key=1", "traffic.payload_bytes=999", "traffic.payload_bytes=abc",
                            "scenario.bogus=1", "missing_equals"}) {
        s.overrides = {bad};
        INFO(bad);
        CHECK(run_scenario(s).exit_code == kInvalidConfig);
    }
    s.overrides.clear();
    s.config_path = (fs::temp_directory_path() / "snowsim_missing.conf").string();
    CHECK(run_scenario(s).exit_code == kInvalidConfig);
}

TEST_CASE("papr rerun with the same seed is byte identical")
{
    ScenarioSpec s;
    s.name = "papr";
    s.seed = 7;
    s.overrides = {"scenario.frames=3000"};
    const auto dir_a = scratch("papr_a");
    s.output_dir = dir_a.string();
    const auto a = run_scenario(s);
    REQUIRE(a.exit_code == kOk);
    s.output_dir = scratch("papr_b").string();
    const auto b = run_scenario(s);
    REQUIRE(b.exit_code == kOk);
    REQUIRE(a.files == b.files);
    for (const auto& f : {"fig4_papr_ccdf.csv", "metrics.csv", "summary.txt", "trace.log"})
        CHECK(fs::exists(fs::path(s.output_dir) / f));
    for (const auto& f : a.files)
        CHECK_MESSAGE(slurp(dir_a / f) == slurp(fs::path(s.output_dir) / f), f);
    s.seed = 8;
    s.output_dir = scratch("papr_c").string();
    REQUIRE(run_scenario(s).exit_code == kOk);
    CHECK(slurp(fs::path(s.output_dir) / "fig4_papr_ccdf.csv") != slurp(dir_a / "fig4_papr_ccdf.csv"));
}

TEST_CASE("config file, overrides and seed precedence")
{
    const auto dir = scratch("prec");
    fs::create_directories(dir);
    const auto conf = dir / "a.conf";
    {
        std::ofstream os(conf);
        os << "# atpc loop\nseed = 3\natpc.threshold = 0.8\nscenario.iterations = 4\n";
    }
    ScenarioSpec s;
    s.name = "atpc_convergence";
    s.config_path = conf.string();
    s.overrides = {"atpc.threshold=0.85"};
    s.seed = 11;
    s.output_dir = (dir / "out").string();
    const auto r = run_scenario(s);
    REQUIRE(r.exit_code == kOk);
    const auto summary = slurp(dir / "out" / "summary.txt");
    CHECK(summary.find("seed 11") != std::string::npos);
    CHECK(data_rows(dir / "out" / "fig_atpc_convergence.csv") == 5u);
}

TEST_CASE("uplink_scaling table has 6 node counts x 3 cases")
{
    ScenarioSpec s;
    s.name = "uplink_scaling";
    s.overrides = {"traffic.packets_per_node=8", "atpc.probe_packets=2", "atpc.window=3"};
    s.output_dir = scratch("scaling").string();
    const auto r = run_scenario(s);
    REQUIRE(r.exit_code == kOk);
    const fs::path out(s.output_dir);
    CHECK(data_rows(out / "fig14a_throughput_vs_nodes.csv") == 18u);
    CHECK(slurp(out / "fig14a_throughput_vs_nodes.csv").rfind("nodes,case,throughput_kbps,per_node_kbps\n", 0) == 0);
    CHECK(fs::exists(out / "fig14b_delay_vs_nodes.csv"));
    CHECK(fs::exists(out / "fig14c_energy_vs_nodes.csv"));
    CHECK(r.invariant_violations == 0u);
    CHECK(slurp(out / "metrics.csv").rfind("run,node,subcarrier,distance_m,", 0) == 0);
}

TEST_CASE("downlink scenario writes its tables")
{
    ScenarioSpec s;
    s.name = "downlink";
    s.overrides = {"scenario.packets=20"};
    s.output_dir = scratch("downlink").string();
    const auto r = run_scenario(s);
    REQUIRE(r.exit_code == kOk);
    const fs::path out(s.output_dir);
    CHECK(data_rows(out / "fig8c_downlink_prr_vs_distance.csv") == 25u);
    CHECK(data_rows(out / "fig_downlink_failover.csv") == 3u);
    const auto trace = slurp(out / "trace.log");
    const auto ann = trace.find(",announce,");
    const auto fo = trace.find(",failover,");
    REQUIRE(ann != std::string::npos);
    REQUIRE(fo != std::string::npos);
    CHECK(ann < fo);
}
