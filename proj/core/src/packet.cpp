#include "csmaap/packet.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace csmaap::packet {

namespace {

void put_field(std::vector<std::uint8_t>& bytes, std::size_t offset, int width, std::uint32_t value) {
  for (int b = 0; b < width; ++b) {
    const std::size_t k = offset + static_cast<std::size_t>(b);
    const auto mask = static_cast<std::uint8_t>(0x80u >> (k & 7));
    if ((value >> (width - 1 - b)) & 1u) {
      bytes[k >> 3] |= mask;
    } else {
      bytes[k >> 3] &= static_cast<std::uint8_t>(~mask);
    }
  }
}

std::uint32_t get_field(const std::vector<std::uint8_t>& bytes, std::size_t offset, int width) {
  std::uint32_t v = 0;
  for (int b = 0; b < width; ++b) {
    const std::size_t k = offset + static_cast<std::size_t>(b);
    v = (v << 1) | ((bytes[k >> 3] >> (7 - (k & 7))) & 1u);
  }
  return v;
}

// Frame-aligned image of the body with all header bits cleared.
const std::vector<std::uint8_t>& body_template() {
  static const std::vector<std::uint8_t> image = [] {
    std::vector<std::uint8_t> bytes(kFrameBytes, 0);
    const auto bits = prbs9_bits(kBodyBits);
    for (std::size_t j = 0; j < bits.size(); ++j) {
      if (bits[j]) {
        const std::size_t k = kBodyOffset + j;
        bytes[k >> 3] |= static_cast<std::uint8_t>(0x80u >> (k & 7));
      }
    }
    return bytes;
  }();
  return image;
}

}  // namespace

std::vector<std::uint8_t> prbs9_bits(std::size_t n) {
  std::vector<std::uint8_t> out(n);
  std::uint32_t s = 0x1FF;
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = static_cast<std::uint8_t>((s >> 8) & 1u);
    const std::uint32_t feedback = ((s >> 8) ^ (s >> 4)) & 1u;
    s = ((s << 1) | feedback) & 0x1FFu;
  }
  return out;
}

const std::vector<std::uint8_t>& body_pattern() {
  static const std::vector<std::uint8_t> packed = [] {
    const auto bits = prbs9_bits(kBodyBits);
    std::vector<std::uint8_t> bytes((kBodyBits + 7) / 8, 0);
    for (std::size_t j = 0; j < bits.size(); ++j) {
      if (bits[j]) bytes[j >> 3] |= static_cast<std::uint8_t>(0x80u >> (j & 7));
    }
    return bytes;
  }();
  return packed;
}

Frame encode_frame(std::uint32_t source, std::uint32_t packet_id) {
  if (source > 0xFFFF) throw InvalidArgument("encode_frame: source does not fit in 16 bits");
  if (packet_id > 0xFFFF) throw InvalidArgument("encode_frame: packet_id does not fit in 16 bits");
  Frame f{body_template()};
  put_field(f.bytes, 0, 1, 1);
  put_field(f.bytes, kSyncOffset, 16, kSyncNumber);
  put_field(f.bytes, kHeaderOffset, 16, kHeaderWord);
  put_field(f.bytes, kLengthOffset, 32, kBodyBits);
  put_field(f.bytes, kSourceOffset, 16, source);
  put_field(f.bytes, kDestinationOffset, 16, kDestination);
  put_field(f.bytes, kPacketIdOffset, 16, packet_id);
  return f;
}

DecodedFrame decode_frame(const Frame& frame) {
  if (frame.bytes.size() != kFrameBytes) {
    std::ostringstream msg;
    msg << "decode_frame: expected " << kFrameBits << " bits, got " << frame.bytes.size() * 8;
    throw InvalidArgument(msg.str());
  }
  DecodedFrame d;
  d.guard_bit = get_field(frame.bytes, 0, 1) != 0;
  d.sync_number = static_cast<std::uint16_t>(get_field(frame.bytes, kSyncOffset, 16));
  d.header = static_cast<std::uint16_t>(get_field(frame.bytes, kHeaderOffset, 16));
  d.body_length = get_field(frame.bytes, kLengthOffset, 32);
  d.source = static_cast<std::uint16_t>(get_field(frame.bytes, kSourceOffset, 16));
  d.destination = static_cast<std::uint16_t>(get_field(frame.bytes, kDestinationOffset, 16));
  d.packet_id = static_cast<std::uint16_t>(get_field(frame.bytes, kPacketIdOffset, 16));
  d.header_valid = d.sync_number == kSyncNumber && d.header == kHeaderWord;

  const auto& ref = body_template();
  constexpr std::size_t first = kBodyOffset >> 3;
  constexpr auto first_mask = static_cast<std::uint8_t>(0xFFu >> (kBodyOffset & 7));
  std::uint32_t errors = static_cast<std::uint32_t>(
      std::popcount(static_cast<std::uint8_t>((frame.bytes[first] ^ ref[first]) & first_mask)));
  for (std::size_t i = first + 1; i < kFrameBytes; ++i) {
    errors += static_cast<std::uint32_t>(std::popcount(static_cast<std::uint8_t>(frame.bytes[i] ^ ref[i])));
  }
  d.body_error_count = errors;
  return d;
}

double packet_ber(const DecodedFrame& decoded) {
  return static_cast<double>(decoded.body_error_count) / static_cast<double>(kBodyBits);
}

void apply_errors(Frame& frame, std::span<const std::uint32_t> positions) {
  const std::size_t n = frame.size_bits();
  for (std::uint32_t k : positions) {
    if (k >= n) throw InvalidArgument("apply_errors: position outside the frame");
    frame.flip(k);
  }
}

void write_frame(const std::filesystem::path& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("write_frame: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(frame.bytes.data()),
            static_cast<std::streamsize>(frame.bytes.size()));
  if (!out) throw InvalidArgument("write_frame: write failed for " + path.string());
}

Frame read_frame(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("read_frame: cannot open " + path.string());
  Frame f;
  f.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  if (f.bytes.size() != kFrameBytes) {
    std::ostringstream msg;
    msg << "read_frame: " << path.string() << " holds " << f.bytes.size() << " bytes, expected "
        << kFrameBytes;
    throw InvalidArgument(msg.str());
  }
  return f;
}

}  // namespace csmaap::packet
