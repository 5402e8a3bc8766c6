// invariants.hpp - protocol checks over a recorded trace
#pragma once

#include <set>
#include <string>
#include <vector>

#include "snow/mac/trace.hpp"

namespace snow::mac {

struct InvariantConfig {
    int join_subcarrier = 28;
    std::set<int> downlink_subcarriers{26};  // current and retired
    double ack_duration_us = 0.0;            // one downlink ACK transmission
    double slack_us = 2.0;                   // rounding of trace timestamps
};

// Returns one message per violation:
//  - tx_start not preceded by a clear CCA of the same node
//  - ACK epoch bits differ from the subcarriers decoded since the last epoch
//  - a decoded packet acknowledged later than 2 ACK durations after decode
//  - data on the join subcarrier or uplink on a downlink subcarrier
std::vector<std::string> check_mac_invariants(const TraceLog& trace, const InvariantConfig& cfg);

}  // namespace snow::mac
