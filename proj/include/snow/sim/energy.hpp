// energy.hpp - CC13x0-style current profile and radio-state energy accounting
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "snow/mac/trace.hpp"

namespace snow::sim {

enum class RadioState { tx, rx, idle };

struct EnergyProfile {
    double supply_v = 3.3;
    double rx_current_a = 5.4e-3;
    double idle_current_a = 0.0;
    // (dBm, A) points, linearly interpolated and clamped at the ends
    std::vector<std::pair<double, double>> tx_current_table{{0.0, 5.4e-3}, {10.0, 13.4e-3}, {15.0, 22.0e-3}};

    double tx_current_a(double power_dbm) const;
    double current_a(RadioState s, double power_dbm) const;
    void validate() const;
};

struct RadioInterval {
    int node = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    RadioState state = RadioState::idle;
    double power_dbm = 0.0;
};

struct EnergyReport {
    std::map<int, double> joules;  // per node
    std::map<int, double> joules_per_bit;
};

// delivered_bits: payload bits per node used for the per-bit figure.
// Throws std::invalid_argument when two intervals of one node overlap.
EnergyReport energy_consumed(const std::vector<RadioInterval>& intervals, const EnergyProfile& profile,
                             const std::map<int, double>& delivered_bits = {});

// radio intervals recorded as "radio" trace events
std::vector<RadioInterval> intervals_from_trace(const mac::TraceLog& trace);
EnergyReport energy_consumed(const mac::TraceLog& trace, const EnergyProfile& profile,
                             const std::map<int, double>& delivered_bits = {});

std::string to_string(RadioState s);

}  // namespace snow::sim
