#include "snow/phy/packet.hpp"

#include <stdexcept>

namespace snow::phy {

std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bytes)
{
    std::uint16_t crc = 0xFFFF;
    for (std::uint8_t b : bytes) {
        crc ^= static_cast<std::uint16_t>(b) << 8;
        for (int i = 0; i < 8; ++i)
            crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                                 : static_cast<std::uint16_t>(crc << 1);
    }
    return crc;
}

SnowPacket SnowPacket::make(std::vector<std::uint8_t> payload)
{
    if (payload.size() > kMaxPayload)
        throw std::invalid_argument("payload longer than 255 bytes");
    SnowPacket p;
    p.payload = std::move(payload);
    p.crc = p.expected_crc();
    return p;
}

std::uint16_t SnowPacket::expected_crc() const
{
    std::vector<std::uint8_t> buf;
    buf.reserve(payload.size() + 1);
    buf.push_back(payload_length());
    buf.insert(buf.end(), payload.begin(), payload.end());
    return crc16_ccitt(buf);
}

void append_bits(Bits& out, std::uint64_t value, int nbits)
{
    for (int i = nbits - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>((value >> i) & 1u));
}

std::uint64_t read_bits(std::span<const std::uint8_t> bits, std::size_t pos, int nbits)
{
    if (pos + static_cast<std::size_t>(nbits) > bits.size())
        throw std::out_of_range("read_bits past end");
    std::uint64_t v = 0;
    for (int i = 0; i < nbits; ++i) v = (v << 1) | (bits[pos + i] & 1u);
    return v;
}

Bits SnowPacket::to_bits() const
{
    Bits b;
    b.reserve(frame_bits(payload.size()));
    append_bits(b, preamble, 32);
    append_bits(b, sync_word, 32);
    append_bits(b, payload_length(), 8);
    for (std::uint8_t byte : payload) append_bits(b, byte, 8);
    append_bits(b, crc, 16);
    return b;
}

std::size_t frame_bits(std::size_t payload_bytes)
{
    return kHeaderBits + 8 * payload_bytes + kCrcBits;
}

Bits preamble_bits()
{
    Bits b;
    append_bits(b, kPreamble, 32);
    return b;
}

Bits sync_bits()
{
    Bits b;
    append_bits(b, kSyncWord, 32);
    return b;
}

std::optional<SnowPacket> parse_packet(std::span<const std::uint8_t> bits)
{
    if (bits.size() < kHeaderBits + kCrcBits) return std::nullopt;
    SnowPacket p;
    p.preamble = static_cast<std::uint32_t>(read_bits(bits, 0, 32));
    p.sync_word = static_cast<std::uint32_t>(read_bits(bits, 32, 32));
    if (p.preamble != kPreamble || p.sync_word != kSyncWord) return std::nullopt;
    const std::size_t len = read_bits(bits, 64, 8);
    if (bits.size() < frame_bits(len)) return std::nullopt;
    p.payload.resize(len);
    for (std::size_t i = 0; i < len; ++i)
        p.payload[i] = static_cast<std::uint8_t>(read_bits(bits, kHeaderBits + 8 * i, 8));
    p.crc = static_cast<std::uint16_t>(read_bits(bits, kHeaderBits + 8 * len, 16));
    if (!p.crc_ok()) return std::nullopt;
    return p;
}

}  // namespace snow::phy
