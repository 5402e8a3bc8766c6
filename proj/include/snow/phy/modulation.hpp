// modulation.hpp - node OOK/BPSK/ASK with rectangular pulses
#pragma once

#include <optional>
#include <span>
#include <string>

#include "snow/estimation/csi.hpp"
#include "snow/phy/signal.hpp"

namespace snow::phy {

enum class ModulationKind { ook, bpsk, ask };

std::string to_string(ModulationKind k);
ModulationKind parse_modulation(const std::string& name);  // throws on unknown

struct ModulationScheme {
    ModulationKind kind = ModulationKind::ook;
    double symbol_rate = 11200.0;  // baud
    double ask_low_level = 0.5;    // binary ASK: bit 0 amplitude, bit 1 is 1.0

    double level(std::uint8_t bit) const;
    double decision_threshold() const;  // on the real equalized axis
    void validate() const;
};

// Samples-per-symbol may be fractional; symbol i covers samples
// [round(i*sps), round((i+1)*sps)).
std::size_t symbol_start_sample(std::size_t i, double sps);

// The carrier phase runs from sample 0 of the returned signal.
BasebandSignal modulate(const Bits& bits, const ModulationScheme& scheme, double subcarrier_center_hz,
                        double bandwidth_hz, double sample_rate);

// Per-symbol mean of the signal after mixing `subcarrier_center_hz` to DC.
std::vector<Complex> symbol_statistics(const BasebandSignal& signal, const ModulationScheme& scheme,
                                       double subcarrier_center_hz = 0.0);

struct Demodulated {
    Bits bits;
    std::vector<double> soft;  // signed distance from the decision threshold
};

struct DecisionOptions {
    std::optional<Complex> channel;   // coherent when set
    double nominal_amplitude = 1.0;   // noncoherent OOK/ASK reference
    double tracking_gain = 0.0;       // decision-directed update of channel, 0 = off
    std::span<const std::uint8_t> known;  // reference bits for the leading symbols
    // coherent only: fit a per-symbol phase ramp on the known symbols, remove
    // it and re-fit the channel on them before deciding
    bool estimate_drift = false;
};

Demodulated decide_symbols(std::span<const Complex> z, const ModulationScheme& scheme,
                           const DecisionOptions& opt);

Demodulated demodulate(const BasebandSignal& signal, const ModulationScheme& scheme,
                       const std::optional<estimation::CsiEstimate>& csi,
                       double subcarrier_center_hz = 0.0, double nominal_amplitude = 1.0);

}  // namespace snow::phy
