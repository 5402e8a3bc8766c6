// base_station.hpp - BS bookkeeping: join, ACK bit-vector epochs, downlink failover
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "snow/estimation/cfo.hpp"
#include "snow/phy/signal.hpp"
#include "snow/phy/spectrum_plan.hpp"

namespace snow::mac {

struct AckBitVector {
    std::vector<std::uint8_t> bits;  // index id-1
    // (subcarrier, node id hash) for shared subcarriers only
    std::vector<std::pair<int, std::uint8_t>> sharer_hashes;

    bool test(int id) const;
    std::size_t count() const;
    // payload bytes: packed bits MSB first, then 2 bytes per sharer entry
    std::vector<std::uint8_t> to_payload() const;
    std::string bit_string() const;
    // a node on `subcarrier` with `node_hash` is acknowledged
    bool acknowledges(int subcarrier, std::uint8_t node_hash) const;
};

std::uint8_t node_id_hash(int node_id);

AckBitVector bs_ack_epoch(const std::set<int>& decoded, const phy::SpectrumPlan& plan);
// with the shared-subcarrier extension: decoded (subcarrier, node id) pairs
AckBitVector bs_ack_epoch(const std::vector<std::pair<int, int>>& decoded, const phy::SpectrumPlan& plan,
                          const std::map<int, int>& subcarrier_load);

struct BsState {
    phy::SpectrumPlan plan;
    std::map<int, int> assignments;  // node -> subcarrier
    std::vector<int> retired;        // downlink subcarriers taken out of service
    std::deque<AckBitVector> pending_acks;

    explicit BsState(phy::SpectrumPlan p) : plan(std::move(p)) {}
    int downlink_index() const { return plan.downlink_index; }
    std::map<int, int> load() const;  // subcarrier -> node count
};

// first free data subcarrier in id order, else the least loaded one
int assign_subcarrier(BsState& bs, int node_id);

struct JoinResult {
    int subcarrier = 0;
    double delta_f_i = 0.0;
    estimation::CfoEstimate cfo;
};

// The BS side of a join: coarse+fine CFO on the join-subcarrier preamble
// samples, ppm extrapolation, subcarrier assignment. Estimation failures
// propagate (the node retries the join).
JoinResult bs_join(BsState& bs, int node_id, const phy::BasebandSignal& join_preamble, double symbol_rate);

struct NoiseReport {
    int subcarrier = 0;
    double downlink_prr = 1.0;
};

bool failover_needed(const NoiseReport& report, double prr_floor = 0.5);

// switches to the first backup; throws std::runtime_error when none remain
BsState downlink_failover(const BsState& bs, const NoiseReport& report);

}  // namespace snow::mac
