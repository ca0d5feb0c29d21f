#include "csmaap/timesync.hpp"

#include <cmath>

namespace csmaap::timesync {

TwttOffsets twtt_offsets(const TimestampExchange& ex) {
  return TwttOffsets{ex.t_ba - ex.t_bb, ex.t_ab - ex.t_aa};
}

OffsetDelay solve_offset_delay(double t_a, double t_b) {
  OffsetDelay r;
  r.t_c = (t_b - t_a) / 2.0;
  r.t_d = (t_b + t_a) / 2.0;
  r.non_physical = r.t_d < 0.0;
  return r;
}

namespace {
double quantize(double t, double quantum) {
  return quantum > 0.0 ? std::round(t / quantum) * quantum : t;
}
}  // namespace

TimestampExchange simulate_exchange(double t_c, double t_d, double start, double quantum_s) {
  // True departure from A is `start` (A's clock is the reference), arrival at
  // B is start + t_d. B's immediate reply leaves at that true instant and
  // lands back at A t_d later.
  const double arrive_b = start + t_d;
  TimestampExchange ex;
  ex.t_aa = quantize(start, quantum_s);
  ex.t_ab = quantize(arrive_b + t_c, quantum_s);
  ex.t_bb = ex.t_ab;
  ex.t_ba = quantize(arrive_b + t_d, quantum_s);
  return ex;
}

double wrap_phase(double radians) {
  double w = std::remainder(radians, kTwoPi);  // [-pi, pi]
  if (w <= -kPi) w += kTwoPi;
  return w;
}

PhaseExchange::PhaseExchange(double phi_a_raw, double phi_b_raw, double f0)
    : phi_a(wrap_phase(phi_a_raw)), phi_b(wrap_phase(phi_b_raw)), f0_hz(f0) {
  if (!(f0 > 0.0)) throw InvalidArgument("PhaseExchange: f0 must be positive");
}

PhaseExchange simulate_phase_exchange(double t_c, double t_d, double f0) {
  return PhaseExchange(-kTwoPi * f0 * (t_c + t_d), kTwoPi * f0 * (t_c - t_d), f0);
}

double twcp_offset(const PhaseExchange& px, std::int64_t m_c) {
  return (px.difference() + kTwoPi * static_cast<double>(m_c)) / (4.0 * kPi * px.f0_hz);
}

double estimate_distance(const PhaseExchange& px, std::int64_t m) {
  return -(kSpeedOfLight / (4.0 * kPi * px.f0_hz)) * (px.sum() + kTwoPi * static_cast<double>(m));
}

UnwrapResult unwrap_phase(double previous_unwrapped, double new_wrapped, double expected_delta) {
  const double target = previous_unwrapped + expected_delta;
  const auto m = static_cast<std::int64_t>(std::llround((target - new_wrapped) / kTwoPi));
  const double value = new_wrapped + kTwoPi * static_cast<double>(m);
  const double delta = value - previous_unwrapped;
  if (std::abs(delta) >= kPi) return TrackingLost{delta};
  return UnwrappedPhase{value, m, delta};
}

void AmbiguityTracker::seed(double raw, std::int64_t m) {
  seeded_ = true;
  lost_ = false;
  m_ = m;
  unwrapped_ = raw + kTwoPi * static_cast<double>(m);
}

UnwrapResult AmbiguityTracker::observe(double raw, double expected_delta) {
  if (!seeded_) throw InvalidArgument("AmbiguityTracker: observe before seed");
  if (lost_) return TrackingLost{0.0};
  UnwrapResult r = unwrap_phase(unwrapped_, raw, expected_delta);
  if (const auto* u = std::get_if<UnwrappedPhase>(&r)) {
    m_ = u->m;
    unwrapped_ = u->value;
  } else {
    lost_ = true;
  }
  return r;
}

std::int64_t ambiguity_for(double raw, double true_unwrapped) {
  return std::llround((true_unwrapped - raw) / kTwoPi);
}

void PidController::validate() const {
  if (!(interval_s > 0.0)) throw InvalidArgument("pid: interval must be positive");
  if (!std::isfinite(kp) || !std::isfinite(ki) || !std::isfinite(kd)) {
    throw InvalidArgument("pid: gains must be finite");
  }
  if (!(output_limit > 0.0)) throw InvalidArgument("pid: output_limit must be positive");
}

DisciplineOutput discipline_step(PidController pid, double measured_t_c) {
  if (!std::isfinite(measured_t_c)) {
    pid.warning = true;
    return DisciplineOutput{pid.output, pid};
  }
  const double e = measured_t_c;
  const double derivative = pid.has_previous ? (e - pid.previous_error) / pid.interval_s : 0.0;
  const double integral = pid.integral + e * pid.interval_s;
  double out = pid.kp * e + pid.ki * integral + pid.kd * derivative;
  const bool saturated = std::abs(out) > pid.output_limit;
  // Conditional integration: freeze the integrator while it would push
  // further into saturation.
  if (!saturated || (out > 0.0) != (e > 0.0)) pid.integral = integral;
  if (saturated) {
    out = std::copysign(pid.output_limit, out);
  }
  pid.previous_error = e;
  pid.has_previous = true;
  pid.output = out;
  return DisciplineOutput{out, pid};
}

void WiWiLinkConfig::validate() const {
  if (!(wavelength_m > 0.0)) throw InvalidArgument("wiwi: wavelength must be positive");
  if (!(revision_interval_s > 0.0)) throw InvalidArgument("wiwi: revision interval must be positive");
  if (!(carrier_frequency_hz > 0.0)) throw InvalidArgument("wiwi: carrier frequency must be positive");
}

double max_tracking_speed(const WiWiLinkConfig& cfg) {
  return cfg.wavelength_m / (4.0 * cfg.revision_interval_s);
}

double link_power_dbm(double distance_m, const WiWiLinkConfig& cfg, phy::PathLossModel model) {
  if (!(distance_m >= 0.0)) throw InvalidArgument("link_power: distance must be non-negative");
  if (distance_m == 0.0) return cfg.tx_power_dbm;
  const double gain = phy::path_gain(distance_m, cfg.carrier_frequency_hz, model, 2.0, -1.0);
  return cfg.tx_power_dbm + 10.0 * std::log10(gain);
}

bool link_power_ok(double distance_m, const WiWiLinkConfig& cfg, phy::PathLossModel model) {
  return link_power_dbm(distance_m, cfg, model) > cfg.sync_loss_power_threshold_dbm;
}

}  // namespace csmaap::timesync
