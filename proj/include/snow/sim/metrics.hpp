// metrics.hpp - per-node and network PRR/PDR, throughput, delay, energy
#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace snow::sim {

struct NodeMetrics {
    int node = 0;
    int subcarrier = 0;
    double distance_m = 0.0;
    bool continuous = false;
    bool mobile = false;
    bool joined = true;

    int generated = 0;  // packets handed to the MAC
    int sent = 0;       // transmission attempts
    int decoded = 0;    // attempts decoded by the BS
    int lost = 0;       // attempts not decoded
    int acked = 0;      // attempts whose ACK reached the node
    int delivered = 0;  // packets acknowledged (any attempt)
    int dropped = 0;    // packets given up after max retries
    int cca_busy = 0;

    double airtime_s = 0.0;
    double decoded_frame_bits = 0.0;
    double decoded_payload_bits = 0.0;
    double delay_sum_s = 0.0;
    int delay_count = 0;
    double energy_j = 0.0;
    double final_power_dbm = 0.0;
    double ppm_true = 0.0;
    double ppm_estimated = 0.0;

    double prr() const;
    double pdr() const;
    double throughput_bps() const;  // decoded frame bits over own airtime
    double mean_delay_s() const;
    double energy_per_bit_j() const;  // over decoded payload bits
};

struct Metrics {
    std::vector<NodeMetrics> nodes;
    double duration_s = 0.0;
    int ack_epochs = 0;

    // aggregates skip continuous (background) transmitters
    int sent() const;
    int decoded() const;
    int acked() const;
    double prr() const;
    double pdr() const;
    double throughput_bps() const;  // sum of per-node throughput
    double mean_delay_s() const;    // over all acknowledged packets
    double energy_j() const;
    double energy_per_bit_j() const;
    double mean_node_throughput_bps() const;
};

// header: run,node,subcarrier,distance_m,tx_power_dbm,sent,decoded,lost,acked,
// delivered,dropped,prr,pdr,throughput_kbps,e2e_delay_ms,energy_mj,energy_per_bit_uj
void write_metrics_header(std::ostream& os);
void write_metrics_rows(std::ostream& os, const std::string& run_label, const Metrics& m);

// least-squares line through (x, y): slope, intercept, r^2
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
LineFit fit_line(const std::vector<std::pair<double, double>>& xy);

// fixed-point text used everywhere output must be byte-stable
std::string fmt(double v, int decimals = 4);

}  // namespace snow::sim
