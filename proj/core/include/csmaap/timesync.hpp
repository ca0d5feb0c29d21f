#pragma once

#include <cstdint>
#include <optional>
#include <variant>

#include "csmaap/common.hpp"
#include "csmaap/phy.hpp"

/// Two-way time and carrier-phase transfer, ambiguity tracking and PID disciplining.
namespace csmaap::timesync {

/// Timestamps of one exchange between sites A and B. T_XY is the instant at
/// which the signal from X is handled at Y, read on Y's clock: T_AA and T_BB
/// are departures, T_AB and T_BA arrivals.
struct TimestampExchange {
  double t_aa = 0.0;
  double t_ab = 0.0;
  double t_ba = 0.0;
  double t_bb = 0.0;
};

struct TwttOffsets {
  double t_a = 0.0;  // T_BA - T_BB
  double t_b = 0.0;  // T_AB - T_AA
};

TwttOffsets twtt_offsets(const TimestampExchange& ex);

struct OffsetDelay {
  double t_c = 0.0;
  double t_d = 0.0;
  bool non_physical = false;  // t_d < 0: the route is not symmetric
};

OffsetDelay solve_offset_delay(double t_a, double t_b);

/// Forward model: B's clock reads t_c ahead of A's, the one-way delay is t_d,
/// A transmits at `start` on its own clock and B answers on receipt.
/// Timestamps are rounded to multiples of `quantum_s` when it is positive.
TimestampExchange simulate_exchange(double t_c, double t_d, double start = 0.0,
                                    double quantum_s = 0.0);

/// Wraps an angle into (-pi, pi].
double wrap_phase(double radians);

/// Carrier phases measured at A and B, wrapped on construction.
struct PhaseExchange {
  double phi_a = 0.0;
  double phi_b = 0.0;
  double f0_hz = 920e6;

  PhaseExchange() = default;
  PhaseExchange(double phi_a_raw, double phi_b_raw, double f0 = 920e6);

  double difference() const { return phi_b - phi_a; }
  double sum() const { return phi_a + phi_b; }
};

/// Noiseless phases for clock offset t_c and delay t_d:
/// phi_A = -2 pi f0 (t_c + t_d), phi_B = 2 pi f0 (t_c - t_d).
PhaseExchange simulate_phase_exchange(double t_c, double t_d, double f0 = 920e6);

/// t_c = (phi_B - phi_A + 2 pi M_c) / (4 pi f0)
double twcp_offset(const PhaseExchange& px, std::int64_t m_c);

/// l_d = -(c / (4 pi f0)) (phi_A + phi_B + 2 pi M)
double estimate_distance(const PhaseExchange& px, std::int64_t m);

struct UnwrappedPhase {
  double value = 0.0;    // raw + 2 pi m
  std::int64_t m = 0;
  double delta = 0.0;    // change against the previous unwrapped value
};

struct TrackingLost {
  double delta = 0.0;
};

using UnwrapResult = std::variant<UnwrappedPhase, TrackingLost>;

/// Picks the integer m placing raw + 2 pi m nearest to previous + expected_delta,
/// where expected_delta is a prediction of the change from an independent
/// phase-rate measurement (zero when none is available). Reports TrackingLost
/// when the resulting change between successive observations reaches pi.
UnwrapResult unwrap_phase(double previous_unwrapped, double new_wrapped,
                          double expected_delta = 0.0);

/// Stateful wrapper around unwrap_phase. Once lost it stays lost until reseeded.
class AmbiguityTracker {
 public:
  /// Anchors the tracker on a raw phase with a known integer.
  void seed(double raw, std::int64_t m);
  UnwrapResult observe(double raw, double expected_delta = 0.0);

  bool seeded() const { return seeded_; }
  bool lost() const { return lost_; }
  std::int64_t m() const { return m_; }
  double unwrapped() const { return unwrapped_; }

 private:
  bool seeded_ = false;
  bool lost_ = false;
  std::int64_t m_ = 0;
  double unwrapped_ = 0.0;
};

/// Integer that brings a raw phase to the phase implied by ground truth.
std::int64_t ambiguity_for(double raw, double true_unwrapped);

/// Positional PID on the measured clock offset; the output is a fractional
/// frequency correction that the follower subtracts from its rate.
struct PidController {
  double kp = 8.0;            // 1/s
  double ki = 16.0;           // 1/s^2
  double kd = 0.0;            // dimensionless
  double interval_s = 0.05;
  double output_limit = 1e-4;
  double integral = 0.0;      // s^2
  double previous_error = 0.0;
  double output = 0.0;
  bool has_previous = false;
  bool warning = false;       // set when a non-finite measurement was held over

  void validate() const;
};

struct DisciplineOutput {
  double frequency_correction = 0.0;
  PidController pid;
};

DisciplineOutput discipline_step(PidController pid, double measured_t_c);

struct WiWiLinkConfig {
  double carrier_frequency_hz = 920e6;
  double wavelength_m = 0.32;
  double revision_interval_s = 0.05;
  double tx_power_dbm = 0.0;
  double sync_loss_power_threshold_dbm = -54.65;

  void validate() const;
};

double max_tracking_speed(const WiWiLinkConfig& cfg);

/// Received Wi-Wi power over `distance_m` (antennas 2 m above the floor for the
/// two-ray option).
double link_power_dbm(double distance_m, const WiWiLinkConfig& cfg, phy::PathLossModel model);

bool link_power_ok(double distance_m, const WiWiLinkConfig& cfg,
                   phy::PathLossModel model = phy::PathLossModel::FreeSpace);

}  // namespace csmaap::timesync
