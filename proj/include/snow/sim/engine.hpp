// engine.hpp - discrete-event network run: joins, CSMA/CA, concurrent uplink
// decoding on the G-FFT, ACK epochs on the downlink, ATPC, energy
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snow/mac/invariants.hpp"
#include "snow/mac/trace.hpp"
#include "snow/sim/config.hpp"
#include "snow/sim/energy.hpp"
#include "snow/sim/metrics.hpp"

namespace snow::sim {

struct AtpcPoint {
    double time_s = 0.0;
    int node = 0;
    std::string phase;  // probe, fit, update
    double power_dbm = 0.0;
    double a_hat = 0.0;
    double b_hat = 0.0;
    double window_pdr = 0.0;
};

struct JoinRecord {
    int node = 0;
    int subcarrier = 0;
    double ppm_true = 0.0;
    double ppm_estimated = 0.0;
    int attempts = 0;
    bool ok = false;
};

struct RunResult {
    Metrics metrics;
    mac::TraceLog trace;
    std::vector<RadioInterval> radio;
    std::vector<AtpcPoint> atpc;
    std::vector<JoinRecord> joins;
    double ack_airtime_max_s = 0.0;

    mac::InvariantConfig invariant_config(const SimConfig& cfg) const;
};

// per-entity RNG seed derived from the run seed
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t entity, std::uint64_t purpose);

// explicit nodes if given, else node_count nodes dealt round-robin over the
// distance clusters (node i in cluster i mod clusters)
std::vector<NodeSpec> build_topology(const SimConfig& cfg);

// throws ConfigError on an invalid config, std::runtime_error if the run
// cannot complete (e.g. more nodes than subcarriers can hold)
RunResult run(const SimConfig& cfg);

}  // namespace snow::sim
