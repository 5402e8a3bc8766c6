// acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "snow/atpc/atpc.hpp"
#include "snow/channel/impairments.hpp"
#include "snow/channel/link.hpp"
#include "snow/cli/scenario.hpp"
#include "snow/estimation/csi.hpp"
#include "snow/mac/invariants.hpp"
#include "snow/phy/dofdm.hpp"
#include "snow/phy/modulation.hpp"
#include "snow/phy/packet.hpp"
#include "snow/phy/papr.hpp"
#include "snow/phy/receiver.hpp"
#include "snow/sim/metrics.hpp"
#include "snow/sim/scenarios.hpp"
#include "test_util.hpp"

using namespace snow;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

// runs collected by the network criteria, checked together at criterion 9
std::vector<sim::LabeledRun> g_runs;

void keep(const std::vector<sim::LabeledRun>& runs)
{
    g_runs.insert(g_runs.end(), runs.begin(), runs.end());
}

sim::SimConfig scenario_config(const std::string& name)
{
    sim::SimConfig c;
    sim::find_scenario(name)->defaults(c);
    return c;
}

Outcome papr()
{
    const auto s = sim::papr_study(100000, 64, 200e3, 1);
    const double eff = 100.0 * phy::hpa_efficiency(14.0);
    std::ostringstream os;
    os << "threshold " << sim::fmt(s.threshold_real_db, 3) << " dB, hpa(14 dB) " << sim::fmt(eff, 3) << "%";
    const bool ok = s.threshold_real_db >= 13.0 && s.threshold_real_db <= 15.0 && std::abs(eff - 1.99) <= 0.05;
    return {ok, os.str()};
}

Outcome cfo()
{
    const double noiseless = sim::cfo_noiseless_max_rel_error(201, 20.0, 505e6);
    const auto at20 = sim::cfo_bench(20.0, 1000, 20.0, 505e6, 2);
    bool ordered = true;
    std::ostringstream os;
    os << "noiseless max rel " << noiseless << ", 20 dB fine rel rms " << sim::fmt(100.0 * at20.fine_rel_rms, 3)
       << "%, fine/coarse rms:";
    for (double snr : {5.0, 10.0, 20.0, 40.0}) {
        const auto r = sim::cfo_bench(snr, 300, 20.0, 505e6, 3);
        ordered = ordered && r.failures == 0 && r.fine_rms_hz <= r.coarse_rms_hz;
        os << " " << sim::fmt(r.fine_rms_hz, 2) << "/" << sim::fmt(r.coarse_rms_hz, 2);
    }
    const bool ok = noiseless < 1e-6 && at20.failures == 0 && at20.fine_rel_rms <= 0.01 && ordered;
    return {ok, os.str()};
}

Outcome csi()
{
    constexpr double rate = 11200.0;
    const auto known = phy::preamble_bits();
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> over(2, 16), pick(0, 3);
    std::uniform_real_distribution<double> noise(0.0, 1.0);
    const int parts_choice[] = {1, 2, 4, 8};
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double fs = over(rng) * rate;
        auto y = phy::modulate(known, {phy::ModulationKind::ook, rate}, 0.0, std::min(39000.0, fs / 2.0), fs);
        const Complex h = channel::draw_rayleigh(rng);
        for (auto& s : y.samples) s *= h;
        channel::add_awgn(y, noise(rng), rng);
        const auto est = estimation::estimate_csi(y, known, parts_choice[pick(rng)]);

        const auto m = static_cast<Eigen::Index>(y.size());
        Eigen::MatrixXcd p(m, 1);
        Eigen::VectorXcd yy(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            p(i, 0) = known[static_cast<std::size_t>(i) * known.size() / static_cast<std::size_t>(m)] ? 1.0 : 0.0;
            yy(i) = y.samples[static_cast<std::size_t>(i)];
        }
        const Complex oracle = (p.completeOrthogonalDecomposition().pseudoInverse() * yy)(0);
        worst = std::max(worst, std::abs(est.h_gain - oracle));
    }
    std::ostringstream os;
    os << "1000 instances, worst |H - H_pinv| " << worst;
    return {worst < 1e-9, os.str()};
}

Outcome atpc_fit()
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0), tp(-5.0, 20.0);
    std::uniform_int_distribution<int> count(2, 40);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        atpc::PdrSamples s;
        const int n = count(rng);
        s.pairs.emplace_back(0.0, u(rng));
        s.pairs.emplace_back(15.0, u(rng));
        for (int i = 2; i < n; ++i) s.pairs.emplace_back(tp(rng), u(rng));
        const auto m = atpc::fit_initial(s);
        Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
        Eigen::Vector2d r = Eigen::Vector2d::Zero();
        for (const auto& [x, l] : s.pairs) {
            const Eigen::Vector2d v(1.0, x);
            a += v * v.transpose();
            r += v * l;
        }
        const Eigen::Vector2d sol = a.fullPivLu().solve(r);
        worst = std::max({worst, std::abs(m.a_hat - sol(1)), std::abs(m.b_hat - sol(0))});
    }
    int first_exact = -1, first_sampled = -1;
    for (bool sampled : {false, true}) {
        const auto rows = sim::atpc_closed_loop(0.04, 0.35, 0.9, 100, 10, sampled, 5);
        int& first = sampled ? first_sampled : first_exact;
        for (const auto& row : rows)
            if (row.iteration >= 1 && std::abs(row.measured_pdr - 0.9) <= 0.05) {
                first = row.iteration;
                break;
            }
    }
    std::ostringstream os;
    os << "fit worst diff " << worst << ", within 0.05 at iteration " << first_exact << " (exact) " << first_sampled
       << " (sampled)";
    const bool ok = worst < 1e-9 && first_exact >= 1 && first_exact <= 5 && first_sampled >= 1 && first_sampled <= 5;
    return {ok, os.str()};
}

Outcome dofdm_round_trip()
{
    const auto plan = phy::SpectrumPlan::snow_default();
    const auto ids = plan.data_subcarriers();
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> start(0.0005, 0.004);
    std::size_t packets = 0, bit_errors = 0, lost = 0;
    for (int round = 0; round < 40; ++round) {
        std::vector<std::pair<phy::BasebandSignal, double>> parts;
        std::vector<std::vector<std::uint8_t>> payloads;
        std::vector<double> starts;
        for (int id : ids) {
            payloads.push_back(testing::random_payload(rng, 30));
            starts.push_back(start(rng));
            parts.emplace_back(testing::wideband_frame(payloads.back(), id, plan), starts.back());
        }
        const auto streams = phy::dofdm_decode(channel::mix_concurrent(parts), plan, ids);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            phy::ReceiverConfig rc;
            rc.search_begin = std::max(0.0, starts[i] * plan.sample_rate_hz - 2000.0);
            rc.search_end = starts[i] * plan.sample_rate_hz + 2000.0;
            const auto fr = phy::receive_frame(streams.at(ids[i]), rc);
            const auto bits = phy::SnowPacket::make(payloads[i]).to_bits();
            for (std::size_t b = 0; b < bits.size(); ++b) bit_errors += b >= fr.bits.size() || fr.bits[b] != bits[b];
            lost += !(fr.packet && fr.packet->payload == payloads[i]);
            ++packets;
        }
    }
    std::ostringstream os;
    os << packets << " packets over " << ids.size() << " subcarriers, bit errors " << bit_errors << ", lost " << lost;
    return {packets == 1000 && bit_errors == 0 && lost == 0, os.str()};
}

std::vector<double> g_full_delays;

Outcome scaling()
{
    auto c = scenario_config("uplink_scaling");
    c.ideal_channel = true;
    const auto s = sim::scaling_study(c, {1, 5, 10, 15, 20, 25}, {sim::ScalingCase{"full", true, true, true}});
    keep(s.runs);
    std::vector<std::pair<double, double>> xy;
    bool per_node_ok = true;
    std::ostringstream os;
    os << "per-node kbps:";
    for (const auto& r : s.rows) {
        xy.emplace_back(r.nodes, r.throughput_kbps);
        per_node_ok = per_node_ok && std::abs(r.per_node_kbps - 11.16) <= 0.1 * 11.16;
        os << " " << sim::fmt(r.per_node_kbps, 3);
        g_full_delays.push_back(r.delay_ms);
    }
    const auto f = sim::fit_line(xy);
    os << ", slope " << sim::fmt(f.slope, 3) << " kbps/node, r2 " << sim::fmt(f.r2, 5);
    return {f.r2 >= 0.99 && per_node_ok, os.str()};
}

Outcome compensation()
{
    const auto c = scenario_config("range_prr");
    const auto s = sim::range_study(c, {1000.0}, 10);
    keep(s.runs);
    const auto& r = s.rows.at(0);
    std::ostringstream os;
    os << "1000 m prr comp " << sim::fmt(r.prr_comp, 4) << " nocomp " << sim::fmt(r.prr_nocomp, 4);
    const bool ok = r.prr_comp >= 0.9 && r.prr_nocomp <= 0.5 && r.prr_comp - r.prr_nocomp >= 0.4;
    return {ok, os.str()};
}

Outcome near_far()
{
    const auto c = scenario_config("near_far");
    const auto s = sim::near_far_study(c, 400.0, {0.0});
    keep(s.runs);
    const double low = s.fixed.at(0).pdr;
    std::ostringstream os;
    os << "pdr at 0 dBm " << sim::fmt(low, 4) << ", atpc at " << sim::fmt(s.atpc_power_dbm, 1) << " dBm pdr "
       << sim::fmt(s.atpc_pdr_after_fit, 4) << " over " << s.atpc_windows << " windows";
    const bool ok = low < c.atpc_threshold && s.atpc_windows > 0 && s.atpc_pdr_after_fit >= c.atpc_threshold - 0.05;
    return {ok, os.str()};
}

Outcome invariants()
{
    std::size_t records = 0, violations = 0;
    std::string first;
    for (const auto& r : g_runs) {
        records += r.result.trace.size();
        const auto v = mac::check_mac_invariants(r.result.trace, r.result.invariant_config(r.config));
        if (!v.empty() && first.empty()) first = r.label + ": " + v.front();
        violations += v.size();
    }
    std::ostringstream os;
    os << g_runs.size() << " runs, " << records << " trace records, " << violations << " violations";
    if (!first.empty()) os << " (" << first << ")";
    return {!g_runs.empty() && records > 0 && violations == 0, os.str()};
}

Outcome snr_loss()
{
    bool ok = true;
    std::ostringstream os;
    os << "measured/closed form:";
    for (double x : {0.05, 0.1, 0.15, 0.2, 0.25, 0.29}) {
        const auto r = sim::snr_loss_mc(x, 20.0, 400, 7);
        const double rel = std::abs(r.measured - r.closed_form) / r.closed_form;
        ok = ok && rel <= 0.1;
        os << " " << sim::fmt(r.measured, 3) << "/" << sim::fmt(r.closed_form, 3);
    }
    return {ok, os.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

Outcome determinism()
{
    struct Case {
        std::string name;
        std::vector<std::string> overrides;
    };
    const std::vector<Case> cases{
        {"papr", {"scenario.frames=2000"}},
        {"uplink_scaling", {"traffic.packets_per_node=10", "atpc.probe_packets=3", "atpc.window=5"}},
        {"near_far", {"traffic.packets_per_node=60", "atpc.probe_packets=10", "atpc.window=10", "scenario.powers=0,15"}},
        {"downlink", {"scenario.packets=10"}},
        {"atpc_convergence", {}},
        {"estimator_bench", {"scenario.trials=50"}},
    };
    const fs::path root = fs::temp_directory_path() / "snowsim_acceptance";
    std::size_t compared = 0;
    std::string mismatch;
    for (const auto& c : cases) {
        std::vector<std::string> files;
        for (const char* tag : {"a", "b"}) {
            cli::ScenarioSpec s;
            s.name = c.name;
            s.overrides = c.overrides;
            s.seed = 99;
            s.output_dir = (root / (c.name + "_" + tag)).string();
            fs::remove_all(s.output_dir);
            const auto r = cli::run_scenario(s);
            if (r.exit_code != cli::kOk) return {false, c.name + " exited " + std::to_string(r.exit_code) + ": " + r.message};
            files = r.files;
        }
        for (const auto& f : files) {
            if (fs::path(f).extension() != ".csv") continue;
            ++compared;
            if (slurp(root / (c.name + "_a") / f) != slurp(root / (c.name + "_b") / f) && mismatch.empty())
                mismatch = c.name + "/" + f;
        }
    }
    fs::remove_all(root);
    std::ostringstream os;
    os << compared << " csv files over " << cases.size() << " scenarios";
    if (!mismatch.empty()) os << ", differs: " << mismatch;
    return {compared > 0 && mismatch.empty(), os.str()};
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"papr statistic", papr},
        {"cfo estimator recovery", cfo},
        {"csi least squares oracle", csi},
        {"atpc closed form and loop", atpc_fit},
        {"d-ofdm round trip", dofdm_round_trip},
        {"throughput linear scaling", scaling},
        {"compensation benefit", compensation},
        {"near-far with atpc", near_far},
        {"mac invariants", invariants},
        {"snr loss closed form", snr_loss},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    if (!g_full_delays.empty()) {
        const auto [lo, hi] = std::minmax_element(g_full_delays.begin(), g_full_delays.end());
        std::printf("INFO delay flatness: e2e delay %.2f .. %.2f ms across node counts (%.1f%% spread)\n", *lo, *hi,
                    100.0 * (*hi - *lo) / *lo);
    }
    return failed == 0 ? 0 : 1;
}
