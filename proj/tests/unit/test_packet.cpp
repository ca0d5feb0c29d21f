#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <vector>

#include "csmaap/packet.hpp"
#include "support/oracles.hpp"

using namespace csmaap;
using namespace csmaap::packet;

namespace {

std::uint64_t field(const Frame& f, std::size_t offset, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < width; ++k) v = (v << 1) | (f.bit(offset + k) ? 1u : 0u);
  return v;
}

}  // namespace

TEST(Encode, GoldenHeader) {
  const Frame f = encode_frame(1, 0);
  EXPECT_EQ(f.size_bits(), 500000u);
  EXPECT_TRUE(f.bit(0));
  EXPECT_EQ(field(f, 1, 16), 0xE98Au);
  EXPECT_EQ(field(f, 17, 16), 0xFFAAu);
  EXPECT_EQ(field(f, 33, 32), 499887u);
  EXPECT_EQ(field(f, 65, 16), 1u);
  EXPECT_EQ(field(f, 81, 16), 3u);
  EXPECT_EQ(field(f, 97, 16), 0u);
  // First header bytes, MSB first: 1 1110100 11000101 0 ...
  EXPECT_EQ(f.bytes[0], 0xF4u);
  EXPECT_EQ(f.bytes[1], 0xC5u);
}

TEST(Encode, BodyIsPrbs9) {
  const Frame f = encode_frame(2, 9);
  const auto ref = oracle::prbs9(4000);
  for (std::size_t k = 0; k < ref.size(); ++k) ASSERT_EQ(f.bit(kBodyOffset + k), ref[k] != 0) << k;
  // Period 511.
  for (std::size_t k = 0; k < 2000; ++k) ASSERT_EQ(f.bit(kBodyOffset + k), f.bit(kBodyOffset + k + 511));
  EXPECT_EQ(prbs9_bits(4000), ref);
}

TEST(Encode, SourceFieldIsolated) {
  const Frame a = encode_frame(1, 7);
  const Frame b = encode_frame(2, 7);
  std::set<std::size_t> diff;
  for (std::size_t k = 0; k < kFrameBits; ++k) {
    if (a.bit(k) != b.bit(k)) diff.insert(k);
  }
  ASSERT_FALSE(diff.empty());
  EXPECT_GE(*diff.begin(), kSourceOffset);
  EXPECT_LT(*diff.rbegin(), kSourceOffset + 16);
}

TEST(Encode, OverflowRejected) {
  EXPECT_THROW(encode_frame(0x10000, 0), InvalidArgument);
  EXPECT_THROW(encode_frame(1, 0x10000), InvalidArgument);
  EXPECT_NO_THROW(encode_frame(0xFFFF, 0xFFFF));
}

TEST(Decode, RoundTrip) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<std::uint32_t> u16(0, 0xFFFF);
  for (int i = 0; i < 50; ++i) {
    const std::uint32_t s = u16(rng);
    const std::uint32_t p = u16(rng);
    const DecodedFrame d = decode_frame(encode_frame(s, p));
    EXPECT_TRUE(d.header_valid);
    EXPECT_TRUE(d.guard_bit);
    EXPECT_EQ(d.source, s);
    EXPECT_EQ(d.packet_id, p);
    EXPECT_EQ(d.destination, kDestination);
    EXPECT_EQ(d.body_length, kBodyBits);
    EXPECT_EQ(d.body_error_count, 0u);
  }
}

TEST(Decode, CountsBodyFlips) {
  Frame f = encode_frame(1, 1);
  std::vector<std::uint32_t> pos{kBodyOffset, 1000, 250000, 499999};
  apply_errors(f, pos);
  // Hamming distance against a clean copy.
  const Frame clean = encode_frame(1, 1);
  std::uint32_t hamming = 0;
  for (std::size_t k = kBodyOffset; k < kFrameBits; ++k) hamming += f.bit(k) != clean.bit(k);
  const DecodedFrame d = decode_frame(f);
  EXPECT_EQ(d.body_error_count, hamming);
  EXPECT_EQ(d.body_error_count, 4u);
  EXPECT_TRUE(d.header_valid);
}

TEST(Decode, SyncFlipInvalidatesHeader) {
  Frame f = encode_frame(1, 1);
  f.flip(kSyncOffset + 3);
  const DecodedFrame d = decode_frame(f);
  EXPECT_FALSE(d.header_valid);
  EXPECT_EQ(d.source, 1u);
}

TEST(Decode, WrongLengthRejected) {
  Frame f = encode_frame(1, 1);
  f.bytes.pop_back();
  EXPECT_THROW(decode_frame(f), InvalidArgument);
}

TEST(PacketBer, Values) {
  DecodedFrame d;
  EXPECT_EQ(packet_ber(d), 0.0);
  d.body_error_count = 5;
  EXPECT_DOUBLE_EQ(packet_ber(d), 5.0 / 499887.0);
  EXPECT_NEAR(packet_ber(d), 1.0e-5, 0.01e-5);
  d.body_error_count = kBodyBits;
  EXPECT_EQ(packet_ber(d), 1.0);
}

TEST(PacketBer, AllBodyBitsFlipped) {
  Frame f = encode_frame(2, 3);
  std::vector<std::uint32_t> pos;
  for (std::uint32_t k = kBodyOffset; k < kFrameBits; ++k) pos.push_back(k);
  apply_errors(f, pos);
  EXPECT_EQ(packet_ber(decode_frame(f)), 1.0);
}

TEST(FrameFile, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "csmaap_frame_test.bin";
  const Frame f = encode_frame(2, 77);
  write_frame(path, f);
  EXPECT_EQ(std::filesystem::file_size(path), kFrameBytes);
  const Frame g = read_frame(path);
  EXPECT_EQ(f.bytes, g.bytes);
  std::filesystem::remove(path);
}
