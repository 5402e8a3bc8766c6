#include "snow/channel/impairments.hpp"

#include <cmath>
#include <stdexcept>

namespace snow::channel {

phy::BasebandSignal apply_cfo(const phy::BasebandSignal& signal, double delta_f_hz)
{
    signal.require_valid("apply_cfo");
    phy::BasebandSignal out = signal;
    if (delta_f_hz == 0.0) return out;
    const double w = 2.0 * kPi * delta_f_hz / signal.sample_rate;
    for (std::size_t n = 0; n < out.size(); ++n) out.samples[n] *= std::polar(1.0, w * static_cast<double>(n));
    return out;
}

double OscillatorModel::ppm_at(std::size_t packet_index) const
{
    return ppm_error + drift_per_packet * static_cast<double>(packet_index);
}

double OscillatorModel::offset_hz(double carrier_hz, std::size_t packet_index) const
{
    return carrier_hz * ppm_at(packet_index) * 1e-6;
}

void OscillatorModel::validate() const
{
    if (std::abs(ppm_error) > max_abs_ppm) throw std::invalid_argument("oscillator: ppm error beyond the crystal bound");
}

double doppler_shift_hz(const MobilityState& mob, double subcarrier_hz)
{
    if (!(subcarrier_hz > 0.0)) throw std::invalid_argument("doppler: carrier must be positive");
    double theta;
    if (mob.angle_theta_rad) {
        theta = *mob.angle_theta_rad;
    } else {
        if (mob.range_r_m == 0.0) throw std::invalid_argument("doppler: zero range in the ds/r approximation");
        theta = mob.delta_s_m / mob.range_r_m;
    }
    return subcarrier_hz * (mob.velocity_mps / kSpeedOfLight) * std::cos(theta);
}

phy::BasebandSignal mix_concurrent(const std::vector<std::pair<phy::BasebandSignal, double>>& signals)
{
    if (signals.empty()) throw std::invalid_argument("mix_concurrent: nothing to mix");
    const double fs = signals.front().first.sample_rate;
    std::size_t len = 0;
    std::vector<std::size_t> starts;
    for (const auto& [s, off] : signals) {
        if (s.sample_rate != fs) throw std::invalid_argument("mix_concurrent: sample rates differ");
        if (off < 0.0) throw std::invalid_argument("mix_concurrent: negative arrival offset");
        const std::size_t st = static_cast<std::size_t>(std::llround(off * fs));
        starts.push_back(st);
        len = std::max(len, st + s.size());
    }
    std::vector<Complex> out(len);
    for (std::size_t i = 0; i < signals.size(); ++i) {
        const auto& s = signals[i].first.samples;
        for (std::size_t n = 0; n < s.size(); ++n) out[starts[i] + n] += s[n];
    }
    return phy::BasebandSignal(std::move(out), fs);
}

}  // namespace snow::channel
