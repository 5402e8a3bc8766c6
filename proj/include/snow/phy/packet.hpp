// packet.hpp - SNOW frame: preamble | sync | length | payload | crc16
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "snow/phy/signal.hpp"

namespace snow::phy {

inline constexpr std::uint32_t kPreamble = 0xAAAAAAAAu;
inline constexpr std::uint32_t kSyncWord = 0x930B51DEu;
inline constexpr std::size_t kPreambleBits = 32;
inline constexpr std::size_t kSyncBits = 32;
inline constexpr std::size_t kHeaderBits = kPreambleBits + kSyncBits + 8;
inline constexpr std::size_t kCrcBits = 16;
inline constexpr std::size_t kMaxPayload = 255;

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no xorout
std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bytes);

struct SnowPacket {
    std::uint32_t preamble = kPreamble;
    std::uint32_t sync_word = kSyncWord;
    std::vector<std::uint8_t> payload;
    std::uint16_t crc = 0;

    static SnowPacket make(std::vector<std::uint8_t> payload);

    std::uint8_t payload_length() const { return static_cast<std::uint8_t>(payload.size()); }
    std::uint16_t expected_crc() const;
    bool crc_ok() const { return crc == expected_crc(); }
    Bits to_bits() const;  // MSB first
};

// total on-air bits for a payload of n bytes
std::size_t frame_bits(std::size_t payload_bytes);

Bits preamble_bits();
Bits sync_bits();

void append_bits(Bits& out, std::uint64_t value, int nbits);
std::uint64_t read_bits(std::span<const std::uint8_t> bits, std::size_t pos, int nbits);

// parses a bit string that starts at the preamble; nullopt on a bad
// preamble or sync word, a truncated frame or a CRC failure
std::optional<SnowPacket> parse_packet(std::span<const std::uint8_t> bits);

}  // namespace snow::phy
