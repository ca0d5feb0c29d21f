#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace csmaap {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Raised when inputs violate an operation's preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a simulation reaches a state it cannot continue from
/// (non-finite clock state, corrupted event ordering).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// Independent, reproducible random stream for (seed, stream id).
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

/// splitmix64 finalizer over a pair, for deriving per-entity seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace csmaap
