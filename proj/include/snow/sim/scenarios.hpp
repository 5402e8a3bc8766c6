// scenarios.hpp - experiment drivers: each study returns plain numbers, and
// each scenario runner turns a study into tables, summary lines and a trace
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "snow/mac/trace.hpp"
#include "snow/sim/config.hpp"
#include "snow/sim/engine.hpp"
#include "snow/sim/metrics.hpp"

namespace snow::sim {

// ---- plain studies -------------------------------------------------------

struct PaprStudy {
    std::vector<double> papr_real_db;     // per frame, real-valued DAC drive
    std::vector<double> papr_complex_db;  // per frame, complex envelope
    double threshold_real_db = 0.0;       // P[PAPR > x] <= exceed
    double threshold_complex_db = 0.0;
    double exceed = 1e-4;
};
PaprStudy papr_study(int frames, int subcarriers, double spacing_hz, std::uint64_t seed);

struct CfoBenchRow {
    double snr_db = 0.0;       // per wideband sample
    int trials = 0;
    int failures = 0;          // ambiguity or estimator errors
    double coarse_rms_hz = 0.0;
    double fine_rms_hz = 0.0;
    double fine_rel_rms = 0.0;  // rms error over rms injected offset
};
// offsets uniform in +-ppm_span at carrier_hz; snr_db > 200 means noiseless
CfoBenchRow cfo_bench(double snr_db, int trials, double ppm_span, double carrier_hz, std::uint64_t seed);
// largest relative error of the noiseless fine estimate over `count` offsets
// evenly spread across +-ppm_span
double cfo_noiseless_max_rel_error(int count, double ppm_span, double carrier_hz);

struct CsiBenchRow {
    double snr_db = 0.0;
    int parts = 4;
    double mean_abs_error = 0.0;  // |H_hat - H| averaged over trials
};
CsiBenchRow csi_bench(double snr_db, int parts, int trials, std::uint64_t seed);

struct SnrLossRow {
    double pi_df_t = 0.0;
    double es_n0_db = 0.0;
    double measured = 0.0;     // SNR without offset over SINR with it
    double closed_form = 0.0;  // 1 + (pi df T)^2 / 3 * Es/N0
};
SnrLossRow snr_loss_mc(double pi_df_t, double es_n0_db, int symbols, std::uint64_t seed);

struct AtpcLoopRow {
    int iteration = 0;  // 0 = initial fit
    double power_dbm = 0.0;
    double true_pdr = 0.0;
    double measured_pdr = 0.0;
    double a_hat = 0.0;
    double b_hat = 0.0;
};
// closed loop on pdr = clamp(a tp + b); readings are Bernoulli draws when
// `sampled`, else the exact link PDR
std::vector<AtpcLoopRow> atpc_closed_loop(double a_true, double b_true, double threshold, int window,
                                          int iterations, bool sampled, std::uint64_t seed);

// ---- network studies -----------------------------------------------------

struct LabeledRun {
    std::string label;
    SimConfig config;
    RunResult result;
};

struct RangeRow {
    double distance_m = 0.0;
    double prr_comp = 0.0;
    double prr_nocomp = 0.0;
    double rssi_dbm = 0.0;       // mean received power, fading included
    double path_loss_db = 0.0;
    double free_space_db = 0.0;
};
struct RangeStudy {
    std::vector<RangeRow> rows;
    std::vector<LabeledRun> runs;
};
RangeStudy range_study(const SimConfig& base, const std::vector<double>& distances, int nodes_per_distance);

struct ScalingCase {
    std::string name;
    bool csi = true;
    bool cfo = true;
    bool atpc = true;
};
std::vector<ScalingCase> default_scaling_cases();

struct ScalingRow {
    int nodes = 0;
    std::string case_name;
    double throughput_kbps = 0.0;      // network total
    double per_node_kbps = 0.0;
    double delay_ms = 0.0;
    double energy_uj_per_bit = 0.0;
    double prr = 0.0;
};
struct ScalingStudy {
    std::vector<ScalingRow> rows;
    std::vector<LabeledRun> runs;
};
ScalingStudy scaling_study(const SimConfig& base, const std::vector<int>& node_counts,
                           const std::vector<ScalingCase>& cases);

struct NearFarRow {
    double power_dbm = 0.0;
    double pdr = 0.0;
    double prr = 0.0;
};
struct NearFarStudy {
    std::vector<NearFarRow> fixed;
    double atpc_power_dbm = 0.0;      // choice after the last update
    double atpc_pdr_after_fit = 0.0;  // mean over update windows
    int atpc_windows = 0;
    std::vector<AtpcPoint> atpc_points;
    std::vector<LabeledRun> runs;
};
// middle node id 1 at `distance_m` on a data subcarrier whose two neighbours
// carry continuous 0 dBm senders 20 m from the BS
NearFarStudy near_far_study(const SimConfig& base, double distance_m, const std::vector<double>& powers);

struct InterferenceRow {
    double overlap = 0.0;
    int run = 0;
    double prr = 0.0;
};
struct InterferenceStudy {
    std::vector<InterferenceRow> rows;
    std::vector<LabeledRun> runs;
};
InterferenceStudy interference_study(const SimConfig& base, const std::vector<double>& overlaps, int runs);

struct MobilityRow {
    double speed_mph = 0.0;
    int payload_bytes = 0;
    bool compensated = true;
    double throughput_kbps = 0.0;
    double energy_uj_per_bit = 0.0;
    double delay_ms = 0.0;
    double prr = 0.0;
};
struct MobilityStudy {
    std::vector<MobilityRow> rows;
    std::vector<LabeledRun> runs;
};
MobilityStudy mobility_study(const SimConfig& base, const std::vector<double>& speeds_mph,
                             const std::vector<int>& payloads, double distance_m);

struct DownlinkRow {
    int node = 0;
    double distance_m = 0.0;
    double prr_comp = 0.0;
    double prr_nocomp = 0.0;
    double throughput_kbps_comp = 0.0;  // frame bits over airtime of decoded frames
};
struct FailoverRow {
    std::string phase;
    int downlink_subcarrier = 0;
    double prr = 0.0;
};
struct DownlinkStudy {
    std::vector<DownlinkRow> rows;
    std::vector<FailoverRow> failover;
    mac::TraceLog trace;
};
DownlinkStudy downlink_study(const SimConfig& base, int packets_per_node);

// ---- scenario runners ----------------------------------------------------

struct Table {
    std::string file;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct ScenarioOutput {
    std::vector<std::pair<std::string, Metrics>> runs;
    mac::TraceLog trace;
    std::vector<Table> tables;
    std::vector<std::string> summary;
    std::vector<std::string> violations;  // MAC invariant failures, prefixed by run label
};

// "scenario." keys; everything else configures the simulator
using ScenarioParams = std::map<std::string, std::string>;

struct ScenarioInfo {
    std::string name;
    std::string description;
    void (*defaults)(SimConfig&);
    ScenarioOutput (*run)(const SimConfig&, const ScenarioParams&);
};

const std::vector<ScenarioInfo>& scenario_registry();
const ScenarioInfo* find_scenario(const std::string& name);

// checks every run's trace, adds run markers and (up to trace_runs) traces
void collect_runs(ScenarioOutput& out, const std::vector<LabeledRun>& runs, std::size_t trace_runs);

}  // namespace snow::sim
