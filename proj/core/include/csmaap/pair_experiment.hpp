#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "csmaap/timebase.hpp"
#include "csmaap/timesync.hpp"
#include "csmaap/wiwi_link.hpp"

/// Two-clock stability experiments: the time difference between a pair of
/// oscillators, sampled uniformly, for Allan deviation analysis.
namespace csmaap::pair {

enum class PairKind {
  FreeRubidium,     // two free-running rubidium references
  DisciplinedWiWi,  // crystal follower steered onto a crystal leader over Wi-Wi
  RubidiumCrystal,  // rubidium against a free-running crystal
};

const char* to_string(PairKind kind);

struct PairConfig {
  PairKind kind = PairKind::DisciplinedWiWi;
  double duration_s = 1e4;
  double sample_interval_s = 0.1;
  double settle_s = 60.0;           // discarded before the first sample
  double clock_step_s = 0.05;       // also the Wi-Wi revision interval
  std::uint64_t seed = 1;
  double follower_offset = 52e-6;   // intrinsic y of the second clock
  double distance_m = 5.0;
  timesync::WiWiLinkConfig wiwi;
  timesync::PidController pid;
  timesync::LinkNoise noise;

  void validate() const;
};

struct PairSeries {
  double sample_interval_s = 0.1;
  std::vector<double> time_difference_s;  // second clock minus first
};

PairSeries simulate_pair(const PairConfig& cfg);

/// 1, 2, 5 steps per decade from one sample interval up to a tenth of the record.
std::vector<double> default_taus(double sample_interval_s, double record_s);

timebase::AllanResult pair_allan(const PairSeries& series, std::span<const double> taus);

}  // namespace csmaap::pair
