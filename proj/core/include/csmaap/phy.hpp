#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "csmaap/common.hpp"

/// Data-channel physics: path loss, collisions, carrier-sense samples, DBPSK errors.
namespace csmaap::phy {

enum class PathLossModel { FreeSpace, TwoRayGround };

struct ChannelConfig {
  double carrier_frequency_hz = 2.4e9;
  double symbol_rate = 500e3;
  double noise_floor_dbm = -80.0;
  PathLossModel path_loss_model = PathLossModel::FreeSpace;
  double antenna_height_m = 2.0;
  double reflection_coefficient = -1.0;  // ground reflection, two-ray only
  // Carrier-sense observable. See synthesize_iq for the sign convention.
  double idle_pilot_level = 1.0;
  double iq_noise_rms = 0.1;
  double sample_rate_hz = 10e6;
  double sensing_dead_time_s = 0.0;  // blind interval at the start of every window

  void validate() const;
  double wavelength() const;
};

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw);

/// Ratio of received to transmitted power between isotropic antennas at equal
/// height. Two-ray sums the direct and ground-reflected fields coherently, so
/// reflection_coefficient 0 reproduces the free-space (Friis) value exactly.
double path_gain(double distance_m, double frequency_hz, PathLossModel model,
                 double antenna_height_m, double reflection_coefficient);

/// Throws InvalidArgument for distance <= 0.
double received_power_mw(double distance_m, const ChannelConfig& cfg, double tx_power_mw);

/// Linear SNR of a data transmission over `distance_m`.
double link_snr(double distance_m, const ChannelConfig& cfg, double tx_power_dbm);

struct TransmissionRecord {
  std::uint64_t id = 0;
  int source = 0;
  double true_start = 0.0;
  double duration = 1.0;
  double tx_power_dbm = 0.0;
  std::uint16_t packet_id = 0;

  double true_end() const { return true_start + duration; }
};

/// All pairs of records whose half-open intervals [start, end) intersect, as
/// (smaller id, larger id) sorted ascending. Independent of input order.
std::vector<std::pair<std::uint64_t, std::uint64_t>> detect_collisions(
    std::span<const TransmissionRecord> transmissions);

/// Carrier frequency offset between a transmitter and a receiver.
struct CfoState {
  double delta_f_hz = 0.0;

  /// Both carriers are synthesized from 10 MHz references with fractional
  /// frequency errors y_tx and y_rx; the mismatch scales with the carrier.
  static CfoState from_references(double y_tx, double y_rx, double carrier_hz);
};

/// Differential phase rotation between consecutive symbols.
double differential_rotation(const CfoState& cfo, const ChannelConfig& cfg);

/// Per-bit error probability of a DBPSK decision.
///
/// The rotation theta attenuates the decision statistic to snr*cos^2(theta);
/// once cos(theta) < 0 the decisions are systematically inverted. A collided
/// frame is jammed and decodes at 0.5.
double dbpsk_error_probability(double snr, const CfoState& cfo, const ChannelConfig& cfg,
                               bool collided = false);

/// Sorted positions in [0, frame_bits) of independent errors with the
/// probability above. Deterministic for a given seed.
std::vector<std::uint32_t> dbpsk_bit_errors(std::size_t frame_bits, double snr,
                                            const CfoState& cfo, const ChannelConfig& cfg,
                                            std::uint64_t seed, bool collided = false);

/// Energy arriving at a sensing terminal over [start, end) in true time.
struct Emission {
  double start = 0.0;
  double end = 0.0;
  double amplitude = 0.0;
};

/// Uniform I/Q samples of the carrier-sense front end. Sample k sits at
/// t_first + k * dt.
struct IqSamples {
  double t_first = 0.0;
  double dt = 0.0;
  std::vector<double> i;
  std::vector<double> q;

  std::size_t size() const { return i.size(); }
};

/// Samples the carrier-sense observable over the window [t_s, t_e).
///
/// An idle channel reads -idle_pilot_level on both rails (the pilot sits
/// below the DC reference). Each active emission drives the rails further
/// negative by its amplitude. Samples sit at mid-interval points; a
/// sensing dead time removes the samples it covers, and a window shorter
/// than the dead time yields no samples at all.
IqSamples synthesize_iq(double t_s, double t_e, std::span<const Emission> active,
                        const ChannelConfig& cfg, std::uint64_t seed);

/// Amplitude of a transmission on the sensing rails, relative to the pilot.
double sensed_amplitude(double snr, const ChannelConfig& cfg);

}  // namespace csmaap::phy
