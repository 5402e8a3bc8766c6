#include "snow/sim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace snow::sim {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

using Setter = std::function<void(SimConfig&, const std::string&, const std::string&)>;

std::vector<int> to_ints(const std::string& key, const std::vector<double>& v)
{
    std::vector<int> out;
    for (double x : v) {
        if (x != std::floor(x)) throw ConfigError(key + ": expected integers");
        out.push_back(static_cast<int>(x));
    }
    return out;
}

channel::PathLossModel parse_pathloss(const std::string& key, const std::string& v, const channel::PathLossModel& cur)
{
    if (v == "free_space") return channel::PathLossModel::free_space();
    if (v == "log_distance") return channel::PathLossModel::log_distance(cur.exponent, cur.reference_m);
    if (v.rfind("fixed:", 0) == 0) return channel::PathLossModel::fixed(parse_double(key, v.substr(6)));
    throw ConfigError(key + ": expected free_space, log_distance or fixed:<dB>");
}

const std::vector<std::pair<std::string, Setter>>& setters()
{
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"seed", [](SimConfig& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(parse_int(k, v)); }},
        {"nodes.count", [](SimConfig& c, auto& k, auto& v) { c.node_count = static_cast<int>(parse_int(k, v)); }},
        {"nodes.distances_m", [](SimConfig& c, auto& k, auto& v) { c.cluster_distances_m = parse_list(k, v); }},
        {"nodes.jitter_m", [](SimConfig& c, auto& k, auto& v) { c.cluster_jitter_m = parse_double(k, v); }},
        {"nodes.ppm_max", [](SimConfig& c, auto& k, auto& v) { c.ppm_max = parse_double(k, v); }},
        {"traffic.payload_bytes", [](SimConfig& c, auto& k, auto& v) { c.payload_bytes = static_cast<int>(parse_int(k, v)); }},
        {"traffic.interval_min_ms", [](SimConfig& c, auto& k, auto& v) { c.interval_min_ms = parse_double(k, v); }},
        {"traffic.interval_max_ms", [](SimConfig& c, auto& k, auto& v) { c.interval_max_ms = parse_double(k, v); }},
        {"traffic.start_spread_ms", [](SimConfig& c, auto& k, auto& v) { c.start_spread_ms = parse_double(k, v); }},
        {"traffic.packets_per_node",
         [](SimConfig& c, auto& k, auto& v) { c.packets_per_node = static_cast<int>(parse_int(k, v)); }},
        {"comp.csi", [](SimConfig& c, auto& k, auto& v) { c.csi = parse_bool(k, v); }},
        {"comp.cfo", [](SimConfig& c, auto& k, auto& v) { c.cfo = parse_bool(k, v); }},
        {"comp.atpc", [](SimConfig& c, auto& k, auto& v) { c.atpc = parse_bool(k, v); }},
        {"comp.all",
         [](SimConfig& c, auto& k, auto& v) { c.csi = c.cfo = c.atpc = parse_bool(k, v); }},
        {"phy.uplink_modulation",
         [](SimConfig& c, auto& k, auto& v) {
             try {
                 c.uplink.kind = phy::parse_modulation(v);
             } catch (const std::exception&) {
                 throw ConfigError(k + ": unknown modulation '" + v + "'");
             }
         }},
        {"phy.uplink_symbol_rate", [](SimConfig& c, auto& k, auto& v) { c.uplink.symbol_rate = parse_double(k, v); }},
        {"phy.downlink_symbol_rate",
         [](SimConfig& c, auto& k, auto& v) { c.downlink.symbol_rate = parse_double(k, v); }},
        {"phy.ask_low_level",
         [](SimConfig& c, auto& k, auto& v) { c.uplink.ask_low_level = c.downlink.ask_low_level = parse_double(k, v); }},
        {"phy.node_bandwidth_hz", [](SimConfig& c, auto& k, auto& v) { c.node_bandwidth_hz = parse_double(k, v); }},
        {"radio.tx_power_dbm", [](SimConfig& c, auto& k, auto& v) { c.tx_power_dbm = parse_double(k, v); }},
        {"radio.bs_tx_power_dbm", [](SimConfig& c, auto& k, auto& v) { c.bs_tx_power_dbm = parse_double(k, v); }},
        {"radio.rx_sensitivity_dbm", [](SimConfig& c, auto& k, auto& v) { c.rx_sensitivity_dbm = parse_double(k, v); }},
        {"radio.cca_margin_db", [](SimConfig& c, auto& k, auto& v) { c.cca_margin_db = parse_double(k, v); }},
        {"channel.ideal", [](SimConfig& c, auto& k, auto& v) { c.ideal_channel = parse_bool(k, v); }},
        {"channel.fading", [](SimConfig& c, auto& k, auto& v) { c.fading = parse_bool(k, v); }},
        {"channel.noise_psd_dbm_hz", [](SimConfig& c, auto& k, auto& v) { c.noise_psd_dbm_hz = parse_double(k, v); }},
        {"channel.pathloss", [](SimConfig& c, auto& k, auto& v) { c.pathloss = parse_pathloss(k, v, c.pathloss); }},
        {"channel.pathloss_exponent", [](SimConfig& c, auto& k, auto& v) { c.pathloss.exponent = parse_double(k, v); }},
        {"channel.reference_m", [](SimConfig& c, auto& k, auto& v) { c.pathloss.reference_m = parse_double(k, v); }},
        {"atpc.threshold", [](SimConfig& c, auto& k, auto& v) { c.atpc_threshold = parse_double(k, v); }},
        {"atpc.probe_levels", [](SimConfig& c, auto& k, auto& v) { c.atpc_probe_levels = parse_list(k, v); }},
        {"atpc.probe_packets",
         [](SimConfig& c, auto& k, auto& v) { c.atpc_probe_packets = static_cast<int>(parse_int(k, v)); }},
        {"atpc.window", [](SimConfig& c, auto& k, auto& v) { c.atpc_window = static_cast<int>(parse_int(k, v)); }},
        {"atpc.min_dbm", [](SimConfig& c, auto& k, auto& v) { c.atpc_min_dbm = parse_double(k, v); }},
        {"atpc.max_dbm", [](SimConfig& c, auto& k, auto& v) { c.atpc_max_dbm = parse_double(k, v); }},
        {"mac.initial_window_ms", [](SimConfig& c, auto& k, auto& v) { c.initial_window_ms = parse_double(k, v); }},
        {"mac.congestion_window_ms",
         [](SimConfig& c, auto& k, auto& v) { c.congestion_window_ms = parse_double(k, v); }},
        {"mac.max_retries", [](SimConfig& c, auto& k, auto& v) { c.max_retries = static_cast<int>(parse_int(k, v)); }},
        {"mac.ack_guard_ms", [](SimConfig& c, auto& k, auto& v) { c.ack_guard_ms = parse_double(k, v); }},
        {"rx.tracking_gain", [](SimConfig& c, auto& k, auto& v) { c.tracking_gain = parse_double(k, v); }},
        {"rx.csi_parts", [](SimConfig& c, auto& k, auto& v) { c.csi_parts = static_cast<int>(parse_int(k, v)); }},
        {"rx.join_min_snr_db", [](SimConfig& c, auto& k, auto& v) { c.join_min_snr_db = parse_double(k, v); }},
        {"rx.downlink_samples_per_symbol",
         [](SimConfig& c, auto& k, auto& v) { c.downlink_samples_per_symbol = static_cast<int>(parse_int(k, v)); }},
        {"spectrum.join", [](SimConfig& c, auto& k, auto& v) { c.spectrum.join_index = static_cast<int>(parse_int(k, v)); }},
        {"spectrum.downlink",
         [](SimConfig& c, auto& k, auto& v) { c.spectrum.downlink_index = static_cast<int>(parse_int(k, v)); }},
        {"spectrum.backups",
         [](SimConfig& c, auto& k, auto& v) { c.spectrum.backup_indices = to_ints(k, parse_list(k, v)); }},
        {"spectrum.guards",
         [](SimConfig& c, auto& k, auto& v) { c.spectrum.guard_indices = to_ints(k, parse_list(k, v)); }},
        {"energy.supply_v", [](SimConfig& c, auto& k, auto& v) { c.energy.supply_v = parse_double(k, v); }},
        {"energy.rx_current_ma", [](SimConfig& c, auto& k, auto& v) { c.energy.rx_current_a = parse_double(k, v) * 1e-3; }},
        {"energy.idle_current_ma",
         [](SimConfig& c, auto& k, auto& v) { c.energy.idle_current_a = parse_double(k, v) * 1e-3; }},
        {"interferer.enabled", [](SimConfig& c, auto& k, auto& v) { c.interferer.enabled = parse_bool(k, v); }},
        {"interferer.overlap", [](SimConfig& c, auto& k, auto& v) { c.interferer.overlap = parse_double(k, v); }},
        {"interferer.tx_power_dbm",
         [](SimConfig& c, auto& k, auto& v) { c.interferer.tx_power_dbm = parse_double(k, v); }},
        {"interferer.distance_m", [](SimConfig& c, auto& k, auto& v) { c.interferer.distance_m = parse_double(k, v); }},
        {"interferer.period_ms", [](SimConfig& c, auto& k, auto& v) { c.interferer.period_ms = parse_double(k, v); }},
        {"interferer.payload_bytes",
         [](SimConfig& c, auto& k, auto& v) { c.interferer.payload_bytes = static_cast<int>(parse_int(k, v)); }},
        {"trace.enabled", [](SimConfig& c, auto& k, auto& v) { c.trace = parse_bool(k, v); }},
    };
    return table;
}

}  // namespace

double parse_double(const std::string& key, const std::string& v)
{
    const std::string t = trim(v);
    try {
        std::size_t used = 0;
        const double x = std::stod(t, &used);
        if (used != t.size() || !std::isfinite(x)) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

long parse_int(const std::string& key, const std::string& v)
{
    const std::string t = trim(v);
    try {
        std::size_t used = 0;
        const long x = std::stol(t, &used);
        if (used != t.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v)
{
    const std::string t = trim(v);
    if (t == "true" || t == "on" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "off" || t == "0" || t == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(parse_double(key, item));
    }
    return out;
}

std::map<std::string, std::string> parse_key_values(std::istream& is)
{
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::map<std::string, std::string> load_key_values(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    return parse_key_values(f);
}

bool is_sim_key(const std::string& key)
{
    const auto& t = setters();
    return std::any_of(t.begin(), t.end(), [&](const auto& p) { return p.first == key; });
}

std::vector<std::string> sim_keys()
{
    std::vector<std::string> out;
    for (const auto& [k, s] : setters()) out.push_back(k);
    return out;
}

void apply_setting(SimConfig& cfg, const std::string& key, const std::string& value)
{
    for (const auto& [k, set] : setters())
        if (k == key) {
            set(cfg, key, value);
            return;
        }
    throw ConfigError("unknown config key '" + key + "'");
}

void apply_settings(SimConfig& cfg, const std::map<std::string, std::string>& kv)
{
    for (const auto& [k, v] : kv) apply_setting(cfg, k, v);
}

void SimConfig::validate() const
{
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    try {
        spectrum.validate();
        uplink.validate();
        downlink.validate();
        energy.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    need(nodes.empty() ? node_count >= 1 : true, "nodes.count must be >= 1");
    need(nodes.empty() ? !cluster_distances_m.empty() : true, "nodes.distances_m is empty");
    for (double d : cluster_distances_m) need(d > 0.0, "nodes.distances_m must be positive");
    for (const auto& n : nodes) need(n.distance_m > 0.0, "node distance must be positive");
    need(cluster_jitter_m >= 0.0, "nodes.jitter_m must be >= 0");
    need(ppm_max >= 0.0 && ppm_max <= 40.0, "nodes.ppm_max must be in [0, 40]");
    need(payload_bytes >= 0 && payload_bytes <= 255, "traffic.payload_bytes must be in [0, 255]");
    need(interval_min_ms >= 0.0 && interval_max_ms >= interval_min_ms, "traffic interval bounds are inverted");
    need(start_spread_ms >= 0.0, "traffic.start_spread_ms must be >= 0");
    need(packets_per_node >= 1, "traffic.packets_per_node must be >= 1");
    need(noise_psd_dbm_hz < 0.0, "channel.noise_psd_dbm_hz looks wrong (expected a negative dBm/Hz)");
    need(pathloss.exponent > 0.0 && pathloss.reference_m > 0.0, "path loss parameters must be positive");
    need(atpc_threshold > 0.0 && atpc_threshold <= 1.0, "atpc.threshold must be in (0, 1]");
    need(atpc_probe_levels.size() >= 2, "atpc.probe_levels needs at least 2 levels");
    need(atpc_probe_packets >= 1 && atpc_window >= 1, "ATPC packet counts must be >= 1");
    need(atpc_min_dbm < atpc_max_dbm, "atpc.min_dbm must be below atpc.max_dbm");
    need(initial_window_ms >= 0.0 && congestion_window_ms >= 0.0, "backoff windows must be >= 0");
    need(max_retries >= 0, "mac.max_retries must be >= 0");
    need(ack_guard_ms >= 0.0, "mac.ack_guard_ms must be >= 0");
    need(tracking_gain >= 0.0 && tracking_gain < 1.0, "rx.tracking_gain must be in [0, 1)");
    need(csi_parts >= 1 && 32 % csi_parts == 0, "rx.csi_parts must divide 32");
    need(downlink_samples_per_symbol >= 1, "rx.downlink_samples_per_symbol must be >= 1");
    need(node_bandwidth_hz > 0.0 && node_bandwidth_hz <= spectrum.subcarrier_bandwidth_hz,
         "phy.node_bandwidth_hz must fit a subcarrier");
    need(uplink.symbol_rate <= spectrum.spacing_hz() / 4.0, "uplink symbol rate too high for the G-FFT stream");
    need(interferer.overlap >= 0.0 && interferer.overlap <= 1.0, "interferer.overlap must be in [0, 1]");
    need(interferer.period_ms > 0.0 && interferer.distance_m > 0.0, "interferer timing/distance must be positive");
    for (const auto& n : nodes)
        if (n.subcarrier != 0) need(spectrum.is_data(n.subcarrier), "node subcarrier is not a data subcarrier");
}

}  // namespace snow::sim
