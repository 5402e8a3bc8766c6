// impairments.hpp - oscillator offset, Doppler, concurrent superposition
#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "snow/phy/signal.hpp"

namespace snow::channel {

phy::BasebandSignal apply_cfo(const phy::BasebandSignal& signal, double delta_f_hz);

struct OscillatorModel {
    double ppm_error = 0.0;
    double drift_per_packet = 0.0;  // ppm per packet
    double max_abs_ppm = 40.0;

    double ppm_at(std::size_t packet_index) const;
    double offset_hz(double carrier_hz, std::size_t packet_index = 0) const;
    void validate() const;
};

struct MobilityState {
    double velocity_mps = 0.0;
    std::optional<double> angle_theta_rad;  // unset: approximate theta = delta_s / r
    double delta_s_m = 0.0;
    double range_r_m = 0.0;
};

double doppler_shift_hz(const MobilityState& mob, double subcarrier_hz);

// sum of signals placed at round(offset * fs) samples from time 0
phy::BasebandSignal mix_concurrent(const std::vector<std::pair<phy::BasebandSignal, double>>& signals);

}  // namespace snow::channel
