#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "csmaap/common.hpp"

/// Bit-exact 500,000-bit frame codec.
///
/// Layout (0-based bit indices, every field most-significant bit first):
///
///   bit  0          guard bit, 1
///   bits 1..16      sync number 0xE98A
///   bits 17..32     header 0xFFAA
///   bits 33..64     body length, 499887
///   bits 65..80     source
///   bits 81..96     destination, 3
///   bits 97..112    packet id
///   bits 113..      body: PRBS9 (x^9 + x^5 + 1, register seeded with ones)
///
/// Frames are held packed MSB-first: bit k lives in byte k / 8 at mask
/// 0x80 >> (k % 8). The final byte is exactly full (500,000 = 8 * 62,500).
namespace csmaap::packet {

inline constexpr std::size_t kFrameBits = 500'000;
inline constexpr std::size_t kFrameBytes = kFrameBits / 8;
inline constexpr std::size_t kHeaderBits = 113;
inline constexpr std::uint32_t kBodyBits = kFrameBits - kHeaderBits;  // 499887
inline constexpr std::uint16_t kSyncNumber = 0xE98A;
inline constexpr std::uint16_t kHeaderWord = 0xFFAA;
inline constexpr std::uint16_t kDestination = 3;

inline constexpr std::size_t kSyncOffset = 1;
inline constexpr std::size_t kHeaderOffset = 17;
inline constexpr std::size_t kLengthOffset = 33;
inline constexpr std::size_t kSourceOffset = 65;
inline constexpr std::size_t kDestinationOffset = 81;
inline constexpr std::size_t kPacketIdOffset = 97;
inline constexpr std::size_t kBodyOffset = 113;

struct Frame {
  std::vector<std::uint8_t> bytes;  // kFrameBytes, packed MSB-first

  bool bit(std::size_t k) const { return (bytes[k >> 3] >> (7 - (k & 7))) & 1u; }
  void flip(std::size_t k) { bytes[k >> 3] ^= static_cast<std::uint8_t>(0x80u >> (k & 7)); }
  std::size_t size_bits() const { return bytes.size() * 8; }
};

/// Throws InvalidArgument if source or packet_id do not fit in 16 bits.
Frame encode_frame(std::uint32_t source, std::uint32_t packet_id);

struct DecodedFrame {
  bool guard_bit = false;
  std::uint16_t sync_number = 0;
  std::uint16_t header = 0;
  std::uint32_t body_length = 0;
  std::uint16_t source = 0;
  std::uint16_t destination = 0;
  std::uint16_t packet_id = 0;
  std::uint32_t body_error_count = 0;
  bool header_valid = false;
};

/// Throws InvalidArgument unless the frame is exactly kFrameBits long.
DecodedFrame decode_frame(const Frame& frame);

double packet_ber(const DecodedFrame& decoded);

/// The fixed body pattern, kBodyBits long, packed MSB-first.
const std::vector<std::uint8_t>& body_pattern();

/// First `n` bits of the PRBS9 sequence as 0/1 values.
std::vector<std::uint8_t> prbs9_bits(std::size_t n);

void apply_errors(Frame& frame, std::span<const std::uint32_t> positions);

void write_frame(const std::filesystem::path& path, const Frame& frame);
Frame read_frame(const std::filesystem::path& path);

}  // namespace csmaap::packet
