#include "csmaap/timebase.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "csmaap/format.hpp"

namespace csmaap::timebase {

void OscillatorParams::validate() const {
  if (!(nominal_frequency_hz > 0.0) || !std::isfinite(nominal_frequency_hz)) {
    throw InvalidArgument("oscillator nominal frequency must be positive");
  }
  if (!std::isfinite(initial_fractional_offset)) {
    throw InvalidArgument("oscillator fractional offset must be finite");
  }
  if (!(white_phase_noise_s >= 0.0) || !(white_fm_sigma >= 0.0) || !(random_walk_fm_sigma >= 0.0)) {
    throw InvalidArgument("oscillator noise sigmas must be non-negative");
  }
}

OscillatorParams crystal_preset(std::uint64_t seed) {
  OscillatorParams p;
  p.white_phase_noise_s = 1e-12;
  p.white_fm_sigma = 1e-11;
  p.random_walk_fm_sigma = 1e-10;
  p.rng_seed = seed;
  return p;
}

OscillatorParams rubidium_preset(std::uint64_t seed) {
  OscillatorParams p;
  p.white_phase_noise_s = 1e-12;
  p.white_fm_sigma = 3e-12;
  p.random_walk_fm_sigma = 5e-14;
  p.rng_seed = seed;
  return p;
}

ClockState make_clock(const OscillatorParams& params, double start_time_s,
                      double initial_time_error_s) {
  params.validate();
  ClockState s;
  s.true_time_s = start_time_s;
  s.time_error_s = initial_time_error_s;
  s.fractional_frequency = params.initial_fractional_offset;
  s.rng = make_rng(params.rng_seed, 0x0C10C);
  return s;
}

ClockState advance_clock(ClockState state, const OscillatorParams& params, double dt) {
  if (!(dt > 0.0)) {
    throw InvalidArgument("advance_clock: dt must be positive");
  }
  double increment = state.effective_frequency() * dt;
  if (params.white_fm_sigma > 0.0) {
    increment += params.white_fm_sigma * std::sqrt(dt) * standard_normal(state.rng);
  }
  state.time_error_s += increment;
  if (params.random_walk_fm_sigma > 0.0) {
    state.fractional_frequency +=
        params.random_walk_fm_sigma * std::sqrt(dt) * standard_normal(state.rng);
  }
  if (params.white_phase_noise_s > 0.0) {
    state.readout_noise_s = params.white_phase_noise_s * standard_normal(state.rng);
  }
  state.true_time_s += dt;
  if (!std::isfinite(state.time_error_s) || !std::isfinite(state.fractional_frequency) ||
      !std::isfinite(state.true_time_s)) {
    throw SimulationError("advance_clock: non-finite clock state");
  }
  return state;
}

double pps_edge_for(const ClockState& state, double local_second) {
  return state.true_time_s + (local_second - state.local_time()) / (1.0 + state.effective_frequency());
}

double next_pps_edge(const ClockState& state, const OscillatorParams& params) {
  (void)params;
  return pps_edge_for(state, std::floor(state.local_time()) + 1.0);
}

double PpsJitter::apply(double edge_true_time, Rng& rng) const {
  if (sigma_s <= 0.0) return edge_true_time;
  return edge_true_time + sigma_s * standard_normal(rng);
}

PhaseRecord PhaseRecord::from_time_errors(double sample_interval_s, double nominal_frequency_hz,
                                          std::span<const double> time_errors_s) {
  PhaseRecord r;
  r.sample_interval_s = sample_interval_s;
  r.nominal_frequency_hz = nominal_frequency_hz;
  r.samples_rad.reserve(time_errors_s.size());
  for (double x : time_errors_s) r.samples_rad.push_back(kTwoPi * nominal_frequency_hz * x);
  return r;
}

AllanResult allan_deviation(const PhaseRecord& record, std::span<const double> taus) {
  if (!(record.sample_interval_s > 0.0)) {
    throw InvalidArgument("allan_deviation: sample interval must be positive");
  }
  if (!(record.nominal_frequency_hz > 0.0)) {
    throw InvalidArgument("allan_deviation: nominal frequency must be positive");
  }
  const std::size_t n = record.samples_rad.size();
  if (n < 3) {
    throw InvalidArgument("allan_deviation: at least 3 phase samples are required");
  }

  // Work in time units: x = Phi / (2 pi nu0).
  std::vector<double> x(n);
  const double to_time = 1.0 / (kTwoPi * record.nominal_frequency_hz);
  for (std::size_t k = 0; k < n; ++k) x[k] = record.samples_rad[k] * to_time;

  AllanResult result;
  double previous_tau = 0.0;
  for (double tau : taus) {
    if (!(tau > previous_tau)) {
      throw InvalidArgument("allan_deviation: taus must be positive and strictly increasing");
    }
    previous_tau = tau;
    const double ratio = tau / record.sample_interval_s;
    const double m_real = std::round(ratio);
    if (m_real < 1.0 || std::abs(ratio - m_real) > 1e-9 * std::max(1.0, ratio)) {
      std::ostringstream msg;
      msg << "allan_deviation: tau " << tau << " s is not a multiple of the sample interval "
          << record.sample_interval_s << " s";
      throw InvalidArgument(msg.str());
    }
    const auto m = static_cast<std::size_t>(m_real);
    if (n < 2 * m + 2) {
      std::ostringstream msg;
      msg << "allan_deviation: record of " << n << " samples is too short for tau " << tau << " s";
      throw InvalidArgument(msg.str());
    }
    const std::size_t terms = n - 2 * m;
    double sum = 0.0;
    for (std::size_t k = 0; k < terms; ++k) {
      const double d2 = x[k + 2 * m] - 2.0 * x[k + m] + x[k];
      sum += d2 * d2;
    }
    const double tau_exact = m_real * record.sample_interval_s;
    result.taus_s.push_back(tau_exact);
    result.deviations.push_back(std::sqrt(sum / static_cast<double>(terms)) / tau_exact);
  }
  return result;
}

double loglog_slope(const AllanResult& result, double tau_min, double tau_max) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 0; i < result.taus_s.size(); ++i) {
    const double tau = result.taus_s[i];
    if (tau < tau_min * (1 - 1e-12) || tau > tau_max * (1 + 1e-12)) continue;
    if (!(result.deviations[i] > 0.0)) continue;
    const double lx = std::log10(tau);
    const double ly = std::log10(result.deviations[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  if (count < 2) {
    throw InvalidArgument("loglog_slope: need at least two positive points in range");
  }
  const double denom = count * sxx - sx * sx;
  return (count * sxy - sx * sy) / denom;
}

void write_allan_csv(std::ostream& out, const AllanResult& result) {
  out << "tau_s,adev\n";
  for (std::size_t i = 0; i < result.taus_s.size(); ++i) {
    out << fmt_double(result.taus_s[i]) << ',' << fmt_double(result.deviations[i]) << '\n';
  }
}

}  // namespace csmaap::timebase
