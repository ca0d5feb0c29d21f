#pragma once

#include <cstdint>

#include "csmaap/common.hpp"
#include "csmaap/timesync.hpp"

namespace csmaap::timesync {

struct SyncEstimate {
  double t_c = 0.0;
  double t_d = 0.0;
  double phi_c_unwrapped = 0.0;
  std::int64_t m_c = 0;
  double l_d = 0.0;
  std::int64_t m_d = 0;  // integer of the phase-sum (distance) tracker
};

enum class LinkMode { Acquiring, Fine, Lost };

const char* to_string(LinkMode mode);

/// Ground truth handed to the link model once per revision.
struct LinkTruth {
  double t_c = 0.0;                   // follower minus leader time error, s
  double distance_m = 0.0;
  double radial_speed_mps = 0.0;      // d(distance)/dt
  double frequency_difference = 0.0;  // follower minus leader effective y
  double phase_sum_bias_rad = 0.0;    // injected reflection bias
};

struct LinkNoise {
  double timestamp_quantum_s = 1e-9;
  double phase_noise_rad = 0.01;  // per measured carrier phase
};

struct LinkObservation {
  SyncEstimate estimate;
  LinkMode mode = LinkMode::Acquiring;
  bool power_ok = true;
  bool distance_valid = false;   // false once the distance tracker is lost
  bool tracking_lost = false;    // the distance tracker lost its ambiguity
  double correction = 0.0;       // PID output; the follower subtracts it
};

/// One leader/follower Wi-Wi link: acquisition on timestamps, then carrier
/// phase, with independent ambiguity trackers for the phase difference
/// (clock offset) and the phase sum (distance).
class WiWiLink {
 public:
  static constexpr double kFineEntryThreshold = 20e-9;
  static constexpr int kFineEntryCount = 5;

  WiWiLink(WiWiLinkConfig cfg, PidController pid, LinkNoise noise, std::uint64_t seed,
           bool disciplining);

  /// Starts already phase-locked with the integrator holding `rate_offset`
  /// (follower minus leader intrinsic y), so the loop needs no acquisition.
  void start_locked(double rate_offset);

  /// Opens the loop until the next call to `restore`. The follower free-runs.
  void force_loss();
  void restore();

  LinkObservation revise(const LinkTruth& truth, bool power_ok);

  LinkMode mode() const { return mode_; }
  const PidController& pid() const { return pid_; }
  const WiWiLinkConfig& config() const { return cfg_; }

 private:
  WiWiLinkConfig cfg_;
  PidController pid_;
  PidController pid_initial_;
  LinkNoise noise_;
  Rng rng_;
  bool disciplining_;
  bool forced_loss_ = false;
  LinkMode mode_ = LinkMode::Acquiring;
  int fine_count_ = 0;
  AmbiguityTracker offset_tracker_;
  AmbiguityTracker distance_tracker_;
  double correction_ = 0.0;
};

}  // namespace csmaap::timesync
