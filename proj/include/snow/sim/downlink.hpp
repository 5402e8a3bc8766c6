// downlink.hpp - node-side reception of BS frames on the downlink subcarrier
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "snow/phy/modulation.hpp"
#include "snow/phy/signal.hpp"

namespace snow::sim {

struct DownlinkLink {
    Complex amplitude{1.0, 0.0};  // received amplitude, fading included
    double offset_hz = 0.0;       // residual CFO after the node's correction
    double n0_mw_per_hz = 0.0;    // complex sample variance is n0 * fs
};

struct DownlinkRxOptions {
    phy::ModulationScheme scheme{phy::ModulationKind::ook, 4800.0};
    int samples_per_symbol = 4;
    bool coherent = true;
    int csi_parts = 4;
    double tracking_gain = 0.05;
    double nominal_amplitude = 1.0;  // used without CSI
};

// Synthesizes the frame carrying `payload`, passes it through the link and
// decodes it with frame timing known from the preamble. Returns the payload
// when it parses with a good CRC.
std::optional<std::vector<std::uint8_t>> receive_downlink(const std::vector<std::uint8_t>& payload,
                                                          const DownlinkLink& link, const DownlinkRxOptions& opt,
                                                          std::mt19937_64& rng);

// on-air duration of a frame with `payload_bytes` at `symbol_rate`
double frame_airtime_s(std::size_t payload_bytes, double symbol_rate);

}  // namespace snow::sim
