#include "snow/mac/node_mac.hpp"

namespace snow::mac {

std::string to_string(MacMode m)
{
    switch (m) {
    case MacMode::sleep: return "sleep";
    case MacMode::initial_backoff: return "initial_backoff";
    case MacMode::cca: return "cca";
    case MacMode::congestion_backoff: return "congestion_backoff";
    case MacMode::transmit: return "transmit";
    case MacMode::await_ack: return "await_ack";
    case MacMode::receive: return "receive";
    }
    return "?";
}

std::string to_string(MacEventKind e)
{
    switch (e) {
    case MacEventKind::wake: return "wake";
    case MacEventKind::timer: return "timer";
    case MacEventKind::cca_result: return "cca_result";
    case MacEventKind::ack_bit: return "ack_bit";
    case MacEventKind::ack_timeout: return "ack_timeout";
    case MacEventKind::listen: return "listen";
    }
    return "?";
}

std::string to_string(MacAction a)
{
    switch (a) {
    case MacAction::none: return "none";
    case MacAction::start_cca: return "start_cca";
    case MacAction::transmit: return "transmit";
    case MacAction::listen_downlink: return "listen_downlink";
    case MacAction::sleep: return "sleep";
    }
    return "?";
}

namespace {

Tick draw(std::mt19937_64& rng, Tick window)
{
    if (window <= 0) return 0;
    return std::uniform_int_distribution<Tick>(0, window)(rng);
}

[[noreturn]] void reject(const NodeMacState& s, const MacEvent& e)
{
    throw ProtocolError("mac: event " + to_string(e.kind) + " not valid in mode " + to_string(s.mode));
}

}  // namespace

StepResult node_step(const NodeMacState& state, const MacEvent& event, std::mt19937_64& rng, Tick now,
                     const MacTiming& timing)
{
    StepResult r{state, MacAction::none};
    NodeMacState& s = r.state;
    switch (state.mode) {
    case MacMode::sleep:
        if (event.kind == MacEventKind::wake) {
            s.mode = MacMode::initial_backoff;
            s.outcome = MacOutcome::none;
            s.retry_count = 0;
            s.backoff_deadline = now + draw(rng, timing.initial_window);
        } else if (event.kind == MacEventKind::listen) {
            s.mode = MacMode::receive;
            r.action = MacAction::listen_downlink;
        } else {
            reject(state, event);
        }
        break;
    case MacMode::receive:
        if (event.kind != MacEventKind::timer) reject(state, event);
        s.mode = MacMode::sleep;
        r.action = MacAction::sleep;
        break;
    case MacMode::initial_backoff:
    case MacMode::congestion_backoff:
        if (event.kind != MacEventKind::timer) reject(state, event);
        s.mode = MacMode::cca;
        r.action = MacAction::start_cca;
        break;
    case MacMode::cca:
        if (event.kind != MacEventKind::cca_result) reject(state, event);
        if (event.busy) {
            s.mode = MacMode::congestion_backoff;
            s.backoff_deadline = now + draw(rng, timing.congestion_window);
        } else {
            s.mode = MacMode::transmit;
            s.backoff_deadline = now + timing.tx_duration;
            r.action = MacAction::transmit;
        }
        break;
    case MacMode::transmit:
        if (event.kind != MacEventKind::timer) reject(state, event);
        s.mode = MacMode::await_ack;
        s.backoff_deadline = now + timing.ack_timeout;
        r.action = MacAction::listen_downlink;
        break;
    case MacMode::await_ack:
        if (event.kind == MacEventKind::ack_bit) {
            if (event.bit) {
                s.mode = MacMode::sleep;
                s.outcome = MacOutcome::delivered;
                s.retry_count = 0;
                r.action = MacAction::sleep;
            }
        } else if (event.kind == MacEventKind::ack_timeout) {
            if (state.retry_count < timing.max_retries) {
                s.retry_count = state.retry_count + 1;
                s.mode = MacMode::initial_backoff;
                s.backoff_deadline = now + draw(rng, timing.initial_window);
            } else {
                s.mode = MacMode::sleep;
                s.outcome = MacOutcome::dropped;
                s.retry_count = 0;
                r.action = MacAction::sleep;
            }
        } else {
            reject(state, event);
        }
        break;
    }
    return r;
}

}  // namespace snow::mac
