#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "csmaap/common.hpp"

/// Oscillator models, PPS generation and Allan deviation.
namespace csmaap::timebase {

/// Noise and offset description of one oscillator.
///
/// The noise model has three independent components: white phase noise
/// (readout noise on the output signal, not integrated), white frequency
/// noise (integrates into a random walk of phase) and random-walk frequency
/// noise (integrates into a random walk of the fractional frequency).
struct OscillatorParams {
  double nominal_frequency_hz = 10e6;
  double initial_fractional_offset = 0.0;
  double white_phase_noise_s = 0.0;  // std of the readout time error per sample
  double white_fm_sigma = 0.0;       // per sqrt(second)
  double random_walk_fm_sigma = 0.0;  // per sqrt(second)
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Crystal reference of a Wi-Wi module (free running).
OscillatorParams crystal_preset(std::uint64_t seed);
/// Rubidium standard, represented purely by its noise parameters.
OscillatorParams rubidium_preset(std::uint64_t seed);

/// Instantaneous state of one oscillator against the global simulation time.
///
/// The phase is kept as accumulated time error versus an ideal reference
/// rather than absolute cycles, so long runs at 10 MHz lose no precision.
struct ClockState {
  double true_time_s = 0.0;
  double time_error_s = 0.0;        // integrated error, excludes readout noise
  double readout_noise_s = 0.0;     // current white phase noise sample
  double fractional_frequency = 0.0;  // intrinsic y: offset plus random walk
  double frequency_correction = 0.0;  // steering applied by a disciplining loop
  Rng rng;

  double effective_frequency() const { return fractional_frequency + frequency_correction; }
  /// Output time error including readout noise.
  double output_time_error() const { return time_error_s + readout_noise_s; }
  double local_time() const { return true_time_s + time_error_s; }
  /// Phase difference Phi versus the ideal reference, radians.
  double local_phase(const OscillatorParams& params) const {
    return kTwoPi * params.nominal_frequency_hz * output_time_error();
  }
};

ClockState make_clock(const OscillatorParams& params, double start_time_s = 0.0,
                      double initial_time_error_s = 0.0);

/// Advances the clock by dt seconds of true time. Throws SimulationError on a
/// non-finite result and InvalidArgument when dt <= 0.
ClockState advance_clock(ClockState state, const OscillatorParams& params, double dt);

/// True time at which local time next crosses an integer second, assuming the
/// current effective frequency holds until then.
double next_pps_edge(const ClockState& state, const OscillatorParams& params);

/// True time at which local time reaches `local_second`.
double pps_edge_for(const ClockState& state, double local_second);

/// Additive Gaussian PPS output jitter. The default sigma puts 3 sigma at 400 ns.
struct PpsJitter {
  static constexpr double kDefaultSigma = 400e-9 / 3.0;
  double sigma_s = kDefaultSigma;

  double apply(double edge_true_time, Rng& rng) const;
};

/// Uniformly sampled phase difference record.
struct PhaseRecord {
  double sample_interval_s = 1.0;
  double nominal_frequency_hz = 10e6;
  std::vector<double> samples_rad;

  static PhaseRecord from_time_errors(double sample_interval_s, double nominal_frequency_hz,
                                      std::span<const double> time_errors_s);
};

struct AllanResult {
  std::vector<double> taus_s;
  std::vector<double> deviations;
};

/// Overlapping Allan deviation,
///   sigma_y(tau) = sqrt(< (ybar(t + tau; tau) - ybar(t; tau))^2 >),
/// with ybar the tau-average of y = (1 / 2 pi nu0) dPhi/dt. Note there is no
/// 1/2 factor: values are sqrt(2) above the IEEE 1139 convention.
///
/// Every tau must be an integer multiple of the sample interval, strictly
/// increasing, and leave at least two second differences in the record.
AllanResult allan_deviation(const PhaseRecord& record, std::span<const double> taus);

/// Least-squares slope of log10(sigma) against log10(tau) over [tau_min, tau_max].
double loglog_slope(const AllanResult& result, double tau_min, double tau_max);

/// CSV with header `tau_s,adev`.
void write_allan_csv(std::ostream& out, const AllanResult& result);

}  // namespace csmaap::timebase
