#include "snow/channel/link.hpp"

#include <cmath>
#include <stdexcept>

namespace snow::channel {

double LinkModel::amplitude_gain() const
{
    const double loss = path_loss_db(pathloss, distance_m, carrier_hz);
    return std::pow(10.0, (tx_power_dbm - loss) / 20.0);
}

void LinkModel::validate() const
{
    if (!(distance_m > 0.0)) throw std::invalid_argument("link: distance must be positive");
    if (noise_psd < 0.0) throw std::invalid_argument("link: negative noise psd");
}

void add_awgn(phy::BasebandSignal& signal, double variance, std::mt19937_64& rng)
{
    if (variance <= 0.0) return;
    std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
    for (auto& s : signal.samples) {
        const double re = g(rng);
        const double im = g(rng);
        s += Complex(re, im);
    }
}

phy::BasebandSignal apply_link(const phy::BasebandSignal& signal, const LinkModel& link, std::uint64_t rng_seed)
{
    signal.require_valid("apply_link");
    link.validate();
    const Complex g = link.fading_gain * link.amplitude_gain();
    phy::BasebandSignal out = signal;
    for (auto& s : out.samples) s *= g;
    std::mt19937_64 rng(rng_seed);
    add_awgn(out, 2.0 * link.noise_psd * signal.sample_rate, rng);
    return out;
}

Complex draw_rayleigh(std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    const double re = g(rng);
    const double im = g(rng);
    return {re, im};
}

double rssi_dbm(const phy::BasebandSignal& signal)
{
    signal.require_valid("rssi");
    const double p = signal.avg_power();
    if (!(p > 0.0)) throw std::invalid_argument("rssi: all-zero signal");
    return 10.0 * std::log10(p);
}

}  // namespace snow::channel
