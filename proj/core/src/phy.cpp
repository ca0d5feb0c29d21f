#include "csmaap/phy.hpp"

#include <algorithm>
#include <complex>
#include <limits>
#include <random>

namespace csmaap::phy {

void ChannelConfig::validate() const {
  if (!(carrier_frequency_hz > 0.0)) throw InvalidArgument("channel: carrier_frequency must be positive");
  if (!(symbol_rate > 0.0)) throw InvalidArgument("channel: symbol_rate must be positive");
  if (!(antenna_height_m > 0.0)) throw InvalidArgument("channel: antenna_height must be positive");
  if (!(sample_rate_hz > 0.0)) throw InvalidArgument("channel: sample_rate must be positive");
  if (!(iq_noise_rms >= 0.0)) throw InvalidArgument("channel: iq_noise_rms must be non-negative");
  if (!(idle_pilot_level > 0.0)) throw InvalidArgument("channel: idle_pilot_level must be positive");
  if (!(sensing_dead_time_s >= 0.0)) throw InvalidArgument("channel: sensing_dead_time must be non-negative");
  if (!std::isfinite(noise_floor_dbm)) throw InvalidArgument("channel: noise_floor must be finite");
  if (!(std::abs(reflection_coefficient) <= 1.0)) {
    throw InvalidArgument("channel: |reflection_coefficient| must not exceed 1");
  }
}

double ChannelConfig::wavelength() const { return kSpeedOfLight / carrier_frequency_hz; }

double mw_to_dbm(double mw) {
  if (mw <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(mw);
}

double path_gain(double distance_m, double frequency_hz, PathLossModel model,
                 double antenna_height_m, double reflection_coefficient) {
  if (!(distance_m > 0.0)) throw InvalidArgument("path_gain: distance must be positive");
  const double lambda = kSpeedOfLight / frequency_hz;
  const double scale = lambda / (4.0 * kPi);
  if (model == PathLossModel::FreeSpace || reflection_coefficient == 0.0) {
    return scale * scale / (distance_m * distance_m);
  }
  const double k = kTwoPi / lambda;
  const double d1 = distance_m;
  const double d2 = std::hypot(distance_m, 2.0 * antenna_height_m);
  const std::complex<double> field =
      std::polar(1.0 / d1, -k * d1) + reflection_coefficient * std::polar(1.0 / d2, -k * d2);
  return scale * scale * std::norm(field);
}

double received_power_mw(double distance_m, const ChannelConfig& cfg, double tx_power_mw) {
  return tx_power_mw * path_gain(distance_m, cfg.carrier_frequency_hz, cfg.path_loss_model,
                                 cfg.antenna_height_m, cfg.reflection_coefficient);
}

double link_snr(double distance_m, const ChannelConfig& cfg, double tx_power_dbm) {
  return received_power_mw(distance_m, cfg, dbm_to_mw(tx_power_dbm)) / dbm_to_mw(cfg.noise_floor_dbm);
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> detect_collisions(
    std::span<const TransmissionRecord> transmissions) {
  std::vector<const TransmissionRecord*> order;
  order.reserve(transmissions.size());
  for (const auto& t : transmissions) order.push_back(&t);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return a->true_start != b->true_start ? a->true_start < b->true_start : a->id < b->id;
  });
  std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      if (order[b]->true_start >= order[a]->true_end()) break;
      if (order[a]->true_end() <= order[a]->true_start) break;  // empty interval
      if (order[b]->true_end() <= order[b]->true_start) continue;
      pairs.emplace_back(std::min(order[a]->id, order[b]->id), std::max(order[a]->id, order[b]->id));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

CfoState CfoState::from_references(double y_tx, double y_rx, double carrier_hz) {
  return CfoState{(y_tx - y_rx) * carrier_hz};
}

double differential_rotation(const CfoState& cfo, const ChannelConfig& cfg) {
  return kTwoPi * cfo.delta_f_hz / cfg.symbol_rate;
}

double dbpsk_error_probability(double snr, const CfoState& cfo, const ChannelConfig& cfg,
                               bool collided) {
  if (collided) return 0.5;
  if (!(snr >= 0.0)) throw InvalidArgument("dbpsk_error_probability: snr must be non-negative");
  const double c = std::cos(differential_rotation(cfo, cfg));
  const double gain = c * c;
  // Guard inf * 0 when the rotation lands exactly on pi/2.
  const double snr_eff = gain == 0.0 ? 0.0 : snr * gain;
  const double tail = 0.5 * std::exp(-snr_eff);
  return c >= 0.0 ? tail : 1.0 - tail;
}

namespace {

// Positions where an independent Bernoulli(p) event fires, by geometric skips.
void bernoulli_positions(std::size_t n, double p, Rng& rng, std::vector<std::uint32_t>& out) {
  if (p <= 0.0 || n == 0) return;
  if (p >= 1.0) {
    for (std::size_t k = 0; k < n; ++k) out.push_back(static_cast<std::uint32_t>(k));
    return;
  }
  std::geometric_distribution<std::uint64_t> gap(p);
  std::uint64_t pos = gap(rng);
  while (pos < n) {
    out.push_back(static_cast<std::uint32_t>(pos));
    pos += 1 + gap(rng);
  }
}

}  // namespace

std::vector<std::uint32_t> dbpsk_bit_errors(std::size_t frame_bits, double snr,
                                            const CfoState& cfo, const ChannelConfig& cfg,
                                            std::uint64_t seed, bool collided) {
  if (frame_bits > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("dbpsk_bit_errors: frame too long");
  }
  const double p = dbpsk_error_probability(snr, cfo, cfg, collided);
  Rng rng = make_rng(seed, 0xB1E);
  std::vector<std::uint32_t> errors;
  if (p <= 0.5) {
    bernoulli_positions(frame_bits, p, rng, errors);
    return errors;
  }
  // Dense case: draw the correct bits and return the complement.
  std::vector<std::uint32_t> correct;
  bernoulli_positions(frame_bits, 1.0 - p, rng, correct);
  errors.reserve(frame_bits - correct.size());
  std::size_t next = 0;
  for (std::size_t k = 0; k < frame_bits; ++k) {
    if (next < correct.size() && correct[next] == k) {
      ++next;
      continue;
    }
    errors.push_back(static_cast<std::uint32_t>(k));
  }
  return errors;
}

double sensed_amplitude(double snr, const ChannelConfig& cfg) {
  return cfg.idle_pilot_level * std::sqrt(std::max(snr, 0.0));
}

IqSamples synthesize_iq(double t_s, double t_e, std::span<const Emission> active,
                        const ChannelConfig& cfg, std::uint64_t seed) {
  if (!(t_e >= t_s)) throw InvalidArgument("synthesize_iq: window end precedes start");
  IqSamples out;
  out.dt = 1.0 / cfg.sample_rate_hz;
  const double first = t_s + cfg.sensing_dead_time_s;
  out.t_first = first + 0.5 * out.dt;
  const double span_s = t_e - first;
  if (span_s <= 0.0) return out;
  const auto n = static_cast<std::size_t>(std::floor(span_s * cfg.sample_rate_hz + 1e-6));
  out.i.resize(n);
  out.q.resize(n);
  Rng rng = make_rng(seed, 0x1C);
  const bool noisy = cfg.iq_noise_rms > 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = out.t_first + static_cast<double>(k) * out.dt;
    double level = -cfg.idle_pilot_level;
    for (const auto& e : active) {
      if (t >= e.start && t < e.end) level -= e.amplitude;
    }
    out.i[k] = level + (noisy ? cfg.iq_noise_rms * standard_normal(rng) : 0.0);
    out.q[k] = level + (noisy ? cfg.iq_noise_rms * standard_normal(rng) : 0.0);
  }
  return out;
}

}  // namespace csmaap::phy
