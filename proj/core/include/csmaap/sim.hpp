#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "csmaap/mac.hpp"
#include "csmaap/phy.hpp"
#include "csmaap/timebase.hpp"
#include "csmaap/timesync.hpp"
#include "csmaap/wiwi_link.hpp"

/// Discrete-event simulation of a CSMA/AP-T star network over Wi-Wi clocks.
namespace csmaap::sim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(Vec2 a, Vec2 b);

enum class TrajectoryKind { Static, LinearBackAndForth, Circular, Waypoints };

/// Ground-truth motion of one terminal. Before `start_time_s` every kind
/// rests at its starting point.
struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::Static;
  Vec2 origin;               // static position, linear start, or circle centre
  Vec2 end;                  // far endpoint of a linear path
  double radius_m = 0.0;
  double start_angle_rad = 0.0;
  double speed_mps = 0.0;    // along the path; circular uses speed / radius
  std::vector<Vec2> waypoints;  // polyline walked back and forth
  double start_time_s = 0.0;

  static Trajectory fixed(Vec2 p);
  static Trajectory linear(Vec2 a, Vec2 b, double speed, double start_time = 0.0);
  static Trajectory circular(Vec2 centre, double radius, double speed, double start_angle = 0.0,
                             double start_time = 0.0);
  void validate() const;
};

Vec2 trajectory_position(const Trajectory& traj, double t);

enum class Role { BaseStation, Station };
enum class SyncMode { Synchronized, Desynchronized };

const char* to_string(Role r);
const char* to_string(SyncMode m);

struct TerminalConfig {
  std::string name;
  Role role = Role::Station;
  int source_id = 1;
  int ap_slot = 0;
  Trajectory trajectory;
  timebase::OscillatorParams oscillator;
  double initial_time_offset_s = 0.0;  // local minus true time at t = 0
  double tx_power_dbm = 0.0;
  bool saturated = true;               // always has a packet waiting
};

/// Opens the Wi-Wi loop of one terminal (or all when empty) for a while.
struct SyncLossInjection {
  bool enabled = false;
  std::string terminal;
  double at_s = 0.0;
  double duration_s = std::numeric_limits<double>::infinity();
};

/// Floor-reflection stand-in: the measured phase sum is ramped by 2 pi k over
/// `ramp_s` and then the bias disappears in one step, leaving the distance
/// tracker k cycles off (a distance error of k c / (2 f0)).
struct ReflectionInjection {
  bool enabled = false;
  std::string terminal;
  double at_s = 0.0;
  double ramp_s = 4.0;
  int cycles = 8;

  double expected_error_m(double f0_hz) const;
};

struct Scenario {
  std::string name = "scenario";
  std::vector<TerminalConfig> terminals;
  SyncMode sync_mode = SyncMode::Synchronized;
  double run_duration_s = 300.0;
  std::uint64_t seed = 1;
  double period_s = 1.0;
  double ap_duration_s = 5e-6;
  double ap_offset_s = 5e-6;
  int slots_per_cycle = 0;             // 0: highest AP slot + 1
  double tx_turnaround_s = 3e-6;       // AP end to first transmitted symbol
  double pps_jitter_sigma_s = timebase::PpsJitter::kDefaultSigma;
  phy::ChannelConfig channel;
  timesync::WiWiLinkConfig wiwi;
  phy::PathLossModel wiwi_path_loss = phy::PathLossModel::FreeSpace;
  timesync::PidController pid;
  timesync::LinkNoise link_noise;
  bool start_locked = true;
  mac::CarrierSenseConfig carrier_sense;
  double calibration_time_s = 0.25;    // idle sensing window before the first PPS
  double telemetry_interval_s = 1.0;
  int regime_window_cycles = 6;
  double warmup_s = 10.0;              // excluded from post-warm-up BER
  bool record_sync_series = true;
  SyncLossInjection sync_loss;
  ReflectionInjection reflection;

  /// Throws InvalidArgument with a message naming the offending field.
  void validate() const;
  int effective_slots() const;
  int base_station_index() const;
};

struct PacketRecord {
  std::uint64_t tx_id = 0;
  int source = 0;
  std::string terminal;
  std::uint16_t packet_id = 0;
  std::int64_t round = 0;          // local second of the AP that granted access
  double pending_since = 0.0;
  double start = 0.0;              // first symbol leaves the antenna, true time
  double end = 0.0;
  double arrival_start = 0.0;      // at the base station
  double arrival_end = 0.0;
  double snr = 0.0;
  double cfo_hz = 0.0;
  bool collided = false;
  bool header_valid = false;
  std::uint32_t body_errors = 0;
  double ber = 0.0;
};

struct LinkTelemetry {
  std::string terminal;
  timesync::LinkMode mode = timesync::LinkMode::Lost;
  double t_c = 0.0;
  double l_d_wiwi = 0.0;
  double l_d_truth = 0.0;
  bool tracking_lost = false;
};

struct TelemetryRecord {
  double time = 0.0;
  /// PPS of the second reference station minus the first (positive when
  /// the first station's PPS leads); NaN with fewer than two stations.
  double pps_difference_s = std::numeric_limits<double>::quiet_NaN();
  std::vector<LinkTelemetry> links;
};

enum class RegimeLabel { CorrectOrder, Simultaneous, ReversedOrder, Unclassified };

const char* to_string(RegimeLabel r);

struct RegimeRecord {
  double t_start = 0.0;
  double t_end = 0.0;
  RegimeLabel label = RegimeLabel::Unclassified;
  int packets = 0;
  int collided_packets = 0;
  double mean_pps_difference_s = std::numeric_limits<double>::quiet_NaN();
};

struct DecisionRecord {
  double time = 0.0;
  std::int64_t round = 0;
  std::string terminal;
  mac::Verdict verdict = mac::Verdict::Defer;
  double i_acc = 0.0;
  double q_acc = 0.0;
  double i_thresh = 0.0;
  double q_thresh = 0.0;
  std::string diagnostic;
};

struct SyncSample {
  double time = 0.0;
  std::string terminal;
  timesync::SyncEstimate estimate;
  timesync::LinkMode mode = timesync::LinkMode::Acquiring;
  bool tracking_lost = false;
  double t_c_truth = 0.0;
  double l_d_truth = 0.0;
};

struct TerminalSummary {
  std::string name;
  int source = 0;
  int packets = 0;
  int collided = 0;
  double mean_ber = std::numeric_limits<double>::quiet_NaN();
  double post_warmup_mean_ber = std::numeric_limits<double>::quiet_NaN();
  double max_access_delay_rounds = 0.0;
};

struct SimulationResult {
  Scenario scenario;
  std::vector<PacketRecord> packets;
  std::vector<TelemetryRecord> telemetry;
  std::vector<RegimeRecord> regimes;
  std::vector<DecisionRecord> decisions;
  std::vector<SyncSample> sync_series;
  std::vector<TerminalSummary> terminals;
  int collision_pairs = 0;
  double max_access_delay_rounds = 0.0;
};

SimulationResult run_scenario(const Scenario& s);

/// Access delay of one packet in rounds (PPS periods).
double access_delay_rounds(const PacketRecord& p, double period_s);

/// Per-window transmission-order label from packets whose start falls in the
/// window. `slot_of_source` maps a source id to its AP slot.
///
/// Simultaneous if any two transmissions overlap; otherwise packets are
/// grouped into rotations separated by gaps above 1.5 periods, and a rotation
/// whose slots are not increasing marks ReversedOrder. Fewer than two
/// packets is Unclassified.
RegimeLabel classify_regime(std::span<const PacketRecord> window, double period_s,
                            std::span<const int> slot_of_source);

struct DistanceError {
  double time = 0.0;
  double error_m = 0.0;
};

struct DistanceErrorSeries {
  std::vector<DistanceError> samples;
  double max_abs_error_m = 0.0;
  bool truncated = false;      // tracking was lost; the series stops there
  double lost_at_s = std::numeric_limits<double>::quiet_NaN();
};

/// l_d(Wi-Wi) - l_d(truth) for one terminal from the per-revision series.
DistanceErrorSeries distance_error_series(const SimulationResult& result,
                                          const std::string& terminal);

}  // namespace csmaap::sim
