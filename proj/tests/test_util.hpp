// shared helpers for the test binaries
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "snow/phy/modulation.hpp"
#include "snow/phy/packet.hpp"
#include "snow/phy/spectrum_plan.hpp"

namespace snow::testing {

inline std::vector<std::uint8_t> random_payload(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_int_distribution<int> byte(0, 255);
    std::vector<std::uint8_t> p(n);
    for (auto& b : p) b = static_cast<std::uint8_t>(byte(rng));
    return p;
}

inline Bits random_bits(std::mt19937_64& rng, std::size_t n)
{
    std::bernoulli_distribution coin(0.5);
    Bits b(n);
    for (auto& x : b) x = coin(rng) ? 1 : 0;
    return b;
}

// a node frame as seen at the BS wideband input, before any channel
inline phy::BasebandSignal wideband_frame(const std::vector<std::uint8_t>& payload, int subcarrier,
                                          const phy::SpectrumPlan& plan,
                                          phy::ModulationScheme scheme = {phy::ModulationKind::ook, 11200.0})
{
    const auto bits = phy::SnowPacket::make(payload).to_bits();
    return phy::modulate(bits, scheme, plan.baseband_offset_hz(subcarrier), 39000.0, plan.sample_rate_hz);
}

}  // namespace snow::testing
