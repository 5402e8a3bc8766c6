// receiver.hpp - per-subcarrier packet detection and decoding on a G-FFT stream
#pragma once

#include <optional>

#include "snow/estimation/csi.hpp"
#include "snow/phy/modulation.hpp"
#include "snow/phy/packet.hpp"
#include "snow/phy/signal.hpp"

namespace snow::phy {

// One stream sample is one FFT window of `window_length` wideband samples.
// Frame timing is kept in wideband samples relative to stream sample 0.
struct ReceiverConfig {
    ModulationScheme scheme;
    double wideband_rate = 8.4e6;
    int window_length = 42;
    bool coherent = true;           // LS CSI from the preamble + equalization
    int csi_parts = 4;
    double tracking_gain = 0.05;    // decision-directed CSI update per symbol
    double nominal_amplitude = 1.0; // threshold reference without CSI
    double detection_threshold = 0.6;
    double search_begin = 0.0;      // earliest frame start, wideband samples
    double search_end = -1.0;       // latest frame start, < 0 means whole stream
};

struct Detection {
    bool found = false;
    double start_sample = 0.0;
    double metric = 0.0;  // preamble+sync correlation relative to ideal
};

struct ReceivedFrame {
    Detection detection;
    std::optional<estimation::CsiEstimate> csi;
    Bits bits;
    std::optional<SnowPacket> packet;
};

// per-symbol statistics: member windows are those whose center falls in the
// symbol; value is their mean scaled by window_length^-1/2 so a tone of
// amplitude A on the subcarrier's bin gives A. Symbols outside the stream
// come back as nullopt.
std::optional<std::vector<Complex>> frame_symbols(const BasebandSignal& stream, const ReceiverConfig& cfg,
                                                  double start_sample, std::size_t first, std::size_t count);

Detection detect_preamble(const BasebandSignal& stream, const ReceiverConfig& cfg);
ReceivedFrame receive_frame(const BasebandSignal& stream, const ReceiverConfig& cfg);

}  // namespace snow::phy
