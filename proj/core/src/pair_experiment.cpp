#include "csmaap/pair_experiment.hpp"

#include <cmath>
#include <optional>

namespace csmaap::pair {

const char* to_string(PairKind kind) {
  switch (kind) {
    case PairKind::FreeRubidium: return "free-pair";
    case PairKind::DisciplinedWiWi: return "disciplined-pair";
    case PairKind::RubidiumCrystal: return "mixed-pair";
  }
  return "?";
}

void PairConfig::validate() const {
  if (!(clock_step_s > 0.0)) throw InvalidArgument("pair: clock_step must be positive");
  if (!(sample_interval_s >= clock_step_s)) {
    throw InvalidArgument("pair: sample_interval must be at least one clock step");
  }
  const double ratio = sample_interval_s / clock_step_s;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw InvalidArgument("pair: sample_interval must be a whole number of clock steps");
  }
  if (!(duration_s > 0.0) || !(settle_s >= 0.0)) {
    throw InvalidArgument("pair: duration must be positive and settle non-negative");
  }
  if (!std::isfinite(follower_offset) || !(distance_m > 0.0)) {
    throw InvalidArgument("pair: follower offset must be finite and distance positive");
  }
  wiwi.validate();
  pid.validate();
}

PairSeries simulate_pair(const PairConfig& cfg) {
  cfg.validate();
  using timebase::crystal_preset;
  using timebase::rubidium_preset;
  const auto seed_a = mix_seed(cfg.seed, 0xA);
  const auto seed_b = mix_seed(cfg.seed, 0xB);
  timebase::OscillatorParams pa;
  timebase::OscillatorParams pb;
  switch (cfg.kind) {
    case PairKind::FreeRubidium:
      pa = rubidium_preset(seed_a);
      pb = rubidium_preset(seed_b);
      break;
    case PairKind::DisciplinedWiWi:
      pa = crystal_preset(seed_a);
      pb = crystal_preset(seed_b);
      pb.initial_fractional_offset = cfg.follower_offset;
      break;
    case PairKind::RubidiumCrystal:
      pa = rubidium_preset(seed_a);
      pb = crystal_preset(seed_b);
      break;
  }
  auto a = timebase::make_clock(pa);
  auto b = timebase::make_clock(pb);

  std::optional<timesync::WiWiLink> link;
  if (cfg.kind == PairKind::DisciplinedWiWi) {
    timesync::WiWiLinkConfig wiwi = cfg.wiwi;
    wiwi.revision_interval_s = cfg.clock_step_s;
    timesync::PidController pid = cfg.pid;
    pid.interval_s = cfg.clock_step_s;
    link.emplace(wiwi, pid, cfg.noise, mix_seed(cfg.seed, 0x1171), true);
    link->start_locked(pb.initial_fractional_offset - pa.initial_fractional_offset);
    b.frequency_correction = -(pb.initial_fractional_offset - pa.initial_fractional_offset);
  }

  const auto steps_per_sample = static_cast<std::int64_t>(std::llround(cfg.sample_interval_s / cfg.clock_step_s));
  const auto total_steps = static_cast<std::int64_t>(std::llround((cfg.settle_s + cfg.duration_s) / cfg.clock_step_s));
  const auto settle_steps = static_cast<std::int64_t>(std::llround(cfg.settle_s / cfg.clock_step_s));

  PairSeries out;
  out.sample_interval_s = cfg.sample_interval_s;
  out.time_difference_s.reserve(static_cast<std::size_t>((total_steps - settle_steps) / steps_per_sample + 1));
  for (std::int64_t n = 1; n <= total_steps; ++n) {
    a = timebase::advance_clock(std::move(a), pa, cfg.clock_step_s);
    b = timebase::advance_clock(std::move(b), pb, cfg.clock_step_s);
    if (link) {
      timesync::LinkTruth truth;
      truth.t_c = b.time_error_s - a.time_error_s;
      truth.distance_m = cfg.distance_m;
      truth.frequency_difference = b.effective_frequency() - a.effective_frequency();
      const auto obs = link->revise(truth, true);
      b.frequency_correction = -obs.correction;
    }
    if (n > settle_steps && (n - settle_steps) % steps_per_sample == 0) {
      out.time_difference_s.push_back(b.output_time_error() - a.output_time_error());
    }
  }
  return out;
}

std::vector<double> default_taus(double sample_interval_s, double record_s) {
  if (!(sample_interval_s > 0.0) || !(record_s > 0.0)) {
    throw InvalidArgument("default_taus: interval and record length must be positive");
  }
  std::vector<double> taus;
  const double limit = record_s / 10.0;
  for (double decade = sample_interval_s; decade <= limit * (1 + 1e-9); decade *= 10.0) {
    for (double step : {1.0, 2.0, 5.0}) {
      const double tau = decade * step;
      if (tau <= limit * (1 + 1e-9)) taus.push_back(tau);
    }
  }
  return taus;
}

timebase::AllanResult pair_allan(const PairSeries& series, std::span<const double> taus) {
  const auto record = timebase::PhaseRecord::from_time_errors(series.sample_interval_s,
                                                              10e6, series.time_difference_s);
  return timebase::allan_deviation(record, taus);
}

}  // namespace csmaap::pair
