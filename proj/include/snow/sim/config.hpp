// config.hpp - simulation configuration and its key=value text form
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "snow/channel/path_loss.hpp"
#include "snow/phy/modulation.hpp"
#include "snow/phy/spectrum_plan.hpp"
#include "snow/sim/energy.hpp"

namespace snow::sim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NodeSpec {
    int id = 0;
    double distance_m = 100.0;
    double angle_rad = 0.0;                // position bearing seen from the BS
    std::optional<double> ppm;             // unset: drawn uniformly in +-ppm_max
    std::optional<double> fixed_power_dbm; // set: ATPC never changes it
    int subcarrier = 0;                    // 0: assigned by the BS at join
    bool continuous = false;               // background sender: no ACK wait, never decoded
    std::optional<double> interval_max_ms; // gap after each packet, default traffic interval
    bool mobile = false;
    double speed_mps = 0.0;
};

struct InterfererConfig {
    bool enabled = false;
    double overlap = 1.0;        // fraction of the data subcarriers hit per burst
    double tx_power_dbm = 0.0;
    double distance_m = 10.0;    // from the BS
    double period_ms = 200.0;
    int payload_bytes = 40;
    double symbol_rate = 11200.0;
};

struct SimConfig {
    phy::SpectrumPlan spectrum = phy::SpectrumPlan::snow_default();

    // topology
    int node_count = 25;
    std::vector<double> cluster_distances_m{200, 400, 600, 800, 1000};
    double cluster_jitter_m = 10.0;
    std::vector<NodeSpec> nodes;  // explicit topology, overrides the clusters
    double ppm_max = 20.0;

    // traffic
    int payload_bytes = 30;
    double interval_min_ms = 0.0;
    double interval_max_ms = 500.0;
    double start_spread_ms = 500.0;
    int packets_per_node = 100;

    // compensation
    bool csi = true;
    bool cfo = true;
    bool atpc = true;

    std::uint64_t seed = 1;

    // radios
    phy::ModulationScheme uplink{phy::ModulationKind::ook, 11200.0};
    phy::ModulationScheme downlink{phy::ModulationKind::ook, 4800.0};
    double node_bandwidth_hz = 39000.0;
    double tx_power_dbm = 15.0;
    double bs_tx_power_dbm = 15.0;
    double rx_sensitivity_dbm = -114.0;
    double cca_margin_db = 6.0;
    int join_payload_bytes = 8;

    // channel
    bool ideal_channel = false;  // no noise, no fading
    bool fading = true;
    double noise_psd_dbm_hz = -156.0;
    channel::PathLossModel pathloss = channel::PathLossModel::log_distance(3.5, 100.0);

    // atpc
    double atpc_threshold = 0.9;
    std::vector<double> atpc_probe_levels{0, 5, 10, 15};
    int atpc_probe_packets = 100;
    int atpc_window = 50;
    double atpc_min_dbm = 0.0;
    double atpc_max_dbm = 15.0;

    // mac
    double initial_window_ms = 32.0;
    double congestion_window_ms = 64.0;
    int max_retries = 8;
    double ack_guard_ms = 1.0;

    // receiver
    double tracking_gain = 0.05;
    int csi_parts = 4;
    double join_min_snr_db = 15.0;
    int join_attempts = 5;
    int downlink_samples_per_symbol = 4;

    EnergyProfile energy;
    InterfererConfig interferer;

    bool trace = true;

    bool noisy() const { return !ideal_channel; }
    bool faded() const { return !ideal_channel && fading; }
    // throws ConfigError
    void validate() const;
};

// key=value pairs, '#' starts a comment, blank lines ignored
std::map<std::string, std::string> parse_key_values(std::istream& is);
std::map<std::string, std::string> load_key_values(const std::string& path);

// throws ConfigError on an unknown key or a malformed value
void apply_setting(SimConfig& cfg, const std::string& key, const std::string& value);
void apply_settings(SimConfig& cfg, const std::map<std::string, std::string>& kv);
bool is_sim_key(const std::string& key);
std::vector<std::string> sim_keys();

// helpers shared with scenario parameter parsing
double parse_double(const std::string& key, const std::string& v);
long parse_int(const std::string& key, const std::string& v);
bool parse_bool(const std::string& key, const std::string& v);
std::vector<double> parse_list(const std::string& key, const std::string& v);

}  // namespace snow::sim
