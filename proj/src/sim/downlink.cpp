#include "snow/sim/downlink.hpp"

#include "snow/channel/impairments.hpp"
#include "snow/channel/link.hpp"
#include "snow/estimation/csi.hpp"
#include "snow/phy/packet.hpp"

namespace snow::sim {

double frame_airtime_s(std::size_t payload_bytes, double symbol_rate)
{
    return static_cast<double>(phy::frame_bits(payload_bytes)) / symbol_rate;
}

std::optional<std::vector<std::uint8_t>> receive_downlink(const std::vector<std::uint8_t>& payload,
                                                          const DownlinkLink& link, const DownlinkRxOptions& opt,
                                                          std::mt19937_64& rng)
{
    const auto pkt = phy::SnowPacket::make(payload);
    const Bits bits = pkt.to_bits();
    const double fs = opt.scheme.symbol_rate * opt.samples_per_symbol;

    auto sig = phy::modulate(bits, opt.scheme, 0.0, fs / 2.0, fs);
    if (link.offset_hz != 0.0) sig = channel::apply_cfo(sig, link.offset_hz);
    for (auto& x : sig.samples) x *= link.amplitude;
    if (link.n0_mw_per_hz > 0.0) channel::add_awgn(sig, link.n0_mw_per_hz * fs, rng);

    const auto z = phy::symbol_statistics(sig, opt.scheme);

    phy::DecisionOptions d;
    d.nominal_amplitude = opt.nominal_amplitude;
    Bits known = phy::preamble_bits();
    const Bits sync = phy::sync_bits();
    known.insert(known.end(), sync.begin(), sync.end());
    if (opt.coherent) {
        const phy::BasebandSignal pre(std::vector<Complex>(z.begin(), z.begin() + phy::kPreambleBits),
                                      opt.scheme.symbol_rate);
        try {
            const auto csi = estimation::estimate_csi(pre, phy::preamble_bits(), opt.csi_parts, opt.scheme);
            d.channel = csi.h_gain;
        } catch (const std::exception&) {
            return std::nullopt;  // nothing received
        }
        d.tracking_gain = opt.tracking_gain;
        d.known = known;
        d.estimate_drift = true;
    }
    const auto dem = phy::decide_symbols(z, opt.scheme, d);
    const auto got = phy::parse_packet(dem.bits);
    if (!got) return std::nullopt;
    return got->payload;
}

}  // namespace snow::sim
