// link.hpp - y = H x + w for one node/BS link
#pragma once

#include <cstdint>
#include <random>

#include "snow/channel/path_loss.hpp"
#include "snow/phy/signal.hpp"

namespace snow::channel {

// 0 dBm <-> unit mean baseband power
struct LinkModel {
    double distance_m = 100.0;
    PathLossModel pathloss;
    Complex fading_gain{1.0, 0.0};
    double noise_psd = 0.0;  // N0/2; complex sample variance is 2 * noise_psd * fs
    double tx_power_dbm = 0.0;
    double rx_sensitivity_dbm = -114.0;
    double carrier_hz = 500e6;

    double amplitude_gain() const;  // sqrt of linear tx power minus loss, without H
    void validate() const;
};

phy::BasebandSignal apply_link(const phy::BasebandSignal& signal, const LinkModel& link, std::uint64_t rng_seed);

void add_awgn(phy::BasebandSignal& signal, double variance, std::mt19937_64& rng);

// CN(0,1): Rayleigh magnitude, uniform phase
Complex draw_rayleigh(std::mt19937_64& rng);

double rssi_dbm(const phy::BasebandSignal& signal);

}  // namespace snow::channel
