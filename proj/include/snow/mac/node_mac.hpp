// node_mac.hpp - node CSMA/CA state machine
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace snow::mac {

using Tick = std::int64_t;  // simulation clock unit, set by the caller

struct ProtocolError : std::logic_error {
    using std::logic_error::logic_error;
};

enum class MacMode { sleep, initial_backoff, cca, congestion_backoff, transmit, await_ack, receive };
enum class MacEventKind { wake, timer, cca_result, ack_bit, ack_timeout, listen };
enum class MacAction { none, start_cca, transmit, listen_downlink, sleep };
enum class MacOutcome { none, delivered, dropped };

std::string to_string(MacMode m);
std::string to_string(MacEventKind e);
std::string to_string(MacAction a);

struct MacEvent {
    MacEventKind kind = MacEventKind::wake;
    bool busy = false;  // cca_result
    bool bit = false;   // ack_bit: own bit set (and id hash matched when shared)

    static MacEvent wake() { return {MacEventKind::wake}; }
    static MacEvent timer() { return {MacEventKind::timer}; }
    static MacEvent cca(bool busy) { return {MacEventKind::cca_result, busy, false}; }
    static MacEvent ack(bool bit) { return {MacEventKind::ack_bit, false, bit}; }
    static MacEvent ack_timeout() { return {MacEventKind::ack_timeout}; }
    static MacEvent listen() { return {MacEventKind::listen}; }
};

struct MacTiming {
    Tick initial_window = 0;     // backoff drawn uniformly from [0, window]
    Tick congestion_window = 0;
    Tick tx_duration = 0;
    Tick ack_timeout = 0;        // measured from the end of the transmission
    int max_retries = 8;
};

struct NodeMacState {
    MacMode mode = MacMode::sleep;
    int assigned_subcarrier = 0;
    Tick backoff_deadline = 0;  // next timer instant in any timed mode
    int retry_count = 0;
    double cfo_feedback_i = 0.0;  // delta f_i from the join, Hz
    double cfo_feedback_d = 0.0;  // delta f_d, Hz
    MacOutcome outcome = MacOutcome::none;
};

struct StepResult {
    NodeMacState state;
    MacAction action = MacAction::none;
};

// throws ProtocolError for an event that is not valid in the current mode
StepResult node_step(const NodeMacState& state, const MacEvent& event, std::mt19937_64& rng, Tick now,
                     const MacTiming& timing);

}  // namespace snow::mac
