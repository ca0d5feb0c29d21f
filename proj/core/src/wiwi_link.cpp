#include "csmaap/wiwi_link.hpp"

#include <cmath>
#include <limits>

namespace csmaap::timesync {

const char* to_string(LinkMode mode) {
  switch (mode) {
    case LinkMode::Acquiring: return "acquiring";
    case LinkMode::Fine: return "locked";
    case LinkMode::Lost: return "lost";
  }
  return "?";
}

WiWiLink::WiWiLink(WiWiLinkConfig cfg, PidController pid, LinkNoise noise, std::uint64_t seed,
                   bool disciplining)
    : cfg_(cfg),
      pid_(pid),
      pid_initial_(pid),
      noise_(noise),
      rng_(make_rng(seed, 0x3131)),
      disciplining_(disciplining) {
  cfg_.validate();
  pid_.validate();
}

void WiWiLink::start_locked(double rate_offset) {
  pid_ = pid_initial_;
  if (pid_.ki != 0.0) pid_.integral = rate_offset / pid_.ki;
  pid_.output = rate_offset;
  correction_ = rate_offset;
  mode_ = LinkMode::Fine;
  fine_count_ = kFineEntryCount;
  offset_tracker_ = AmbiguityTracker{};
}

void WiWiLink::force_loss() { forced_loss_ = true; }
void WiWiLink::restore() { forced_loss_ = false; }

LinkObservation WiWiLink::revise(const LinkTruth& truth, bool power_ok) {
  LinkObservation obs;
  obs.power_ok = power_ok;
  const double f0 = cfg_.carrier_frequency_hz;
  const double t_d = truth.distance_m / kSpeedOfLight;
  const double T = cfg_.revision_interval_s;

  if (!power_ok || forced_loss_) {
    mode_ = LinkMode::Lost;
    correction_ = 0.0;
    obs.mode = mode_;
    obs.estimate.t_c = std::numeric_limits<double>::quiet_NaN();
    obs.estimate.t_d = std::numeric_limits<double>::quiet_NaN();
    obs.estimate.l_d = std::numeric_limits<double>::quiet_NaN();
    obs.distance_valid = false;
    obs.tracking_lost = distance_tracker_.lost();
    return obs;
  }
  if (mode_ == LinkMode::Lost) {
    // Link back: reacquire from scratch.
    mode_ = LinkMode::Acquiring;
    fine_count_ = 0;
    pid_ = pid_initial_;
  }

  const auto noisy = [&](double phi) {
    return noise_.phase_noise_rad > 0.0 ? phi + noise_.phase_noise_rad * standard_normal(rng_) : phi;
  };
  const double phi_a_true = -kTwoPi * f0 * (truth.t_c + t_d);
  const double phi_b_true = kTwoPi * f0 * (truth.t_c - t_d);
  const PhaseExchange px(noisy(phi_a_true) + truth.phase_sum_bias_rad, noisy(phi_b_true), f0);

  // Distance: phase-sum tracker, seeded from ground truth on first sight.
  const double sum_rate = -4.0 * kPi * f0 * truth.radial_speed_mps / kSpeedOfLight;
  if (!distance_tracker_.seeded()) {
    distance_tracker_.seed(px.sum(), ambiguity_for(px.sum(), -4.0 * kPi * f0 * t_d));
  } else if (!distance_tracker_.lost()) {
    distance_tracker_.observe(px.sum(), sum_rate * T);
  }
  obs.tracking_lost = distance_tracker_.lost();
  obs.distance_valid = !obs.tracking_lost;
  if (obs.distance_valid) {
    obs.estimate.m_d = distance_tracker_.m();
    obs.estimate.l_d = estimate_distance(px, distance_tracker_.m());
    obs.estimate.t_d = obs.estimate.l_d / kSpeedOfLight;
  } else {
    obs.estimate.l_d = std::numeric_limits<double>::quiet_NaN();
    obs.estimate.t_d = std::numeric_limits<double>::quiet_NaN();
  }

  // Offset: timestamps while acquiring, carrier phase once close enough.
  double measured_t_c = 0.0;
  const double true_diff = 4.0 * kPi * f0 * truth.t_c;
  if (mode_ == LinkMode::Fine && !offset_tracker_.seeded()) {
    offset_tracker_.seed(px.difference(), ambiguity_for(px.difference(), true_diff));
  } else if (mode_ == LinkMode::Fine) {
    const double diff_rate = 4.0 * kPi * f0 * truth.frequency_difference;
    const UnwrapResult r = offset_tracker_.observe(px.difference(), diff_rate * T);
    if (std::holds_alternative<TrackingLost>(r)) {
      mode_ = LinkMode::Acquiring;
      fine_count_ = 0;
    }
  }
  if (mode_ == LinkMode::Fine) {
    obs.estimate.m_c = offset_tracker_.m();
    obs.estimate.phi_c_unwrapped = offset_tracker_.unwrapped();
    measured_t_c = twcp_offset(px, offset_tracker_.m());
  } else {
    const TimestampExchange ex = simulate_exchange(truth.t_c, t_d, 0.0, noise_.timestamp_quantum_s);
    const TwttOffsets o = twtt_offsets(ex);
    measured_t_c = solve_offset_delay(o.t_a, o.t_b).t_c;
    fine_count_ = std::abs(measured_t_c) < kFineEntryThreshold ? fine_count_ + 1 : 0;
    if (fine_count_ >= kFineEntryCount) {
      // The switch happens after this revision's timestamp measurement; the
      // phase tracker picks up on the next one.
      mode_ = LinkMode::Fine;
      offset_tracker_ = AmbiguityTracker{};
    }
  }
  obs.estimate.t_c = measured_t_c;

  if (disciplining_) {
    const DisciplineOutput out = discipline_step(pid_, measured_t_c);
    pid_ = out.pid;
    correction_ = out.frequency_correction;
  } else {
    correction_ = 0.0;
  }
  obs.correction = correction_;
  obs.mode = mode_;
  return obs;
}

}  // namespace csmaap::timesync
