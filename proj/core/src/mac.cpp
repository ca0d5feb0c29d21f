#include "csmaap/mac.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace csmaap::mac {

void ApSchedule::validate() const {
  if (!(period > 0.0)) throw InvalidArgument("ap schedule: period must be positive");
  if (!(ap_duration > 0.0)) throw InvalidArgument("ap schedule: ap_duration must be positive");
  if (!(ap_offset >= 0.0)) throw InvalidArgument("ap schedule: ap_offset must be non-negative");
  if (terminals_per_cycle < 1) throw InvalidArgument("ap schedule: need at least one slot");
  if (terminal_index < 0 || terminal_index >= terminals_per_cycle) {
    throw InvalidArgument("ap schedule: terminal_index out of range");
  }
  if (terminals_per_cycle * (ap_duration + ap_offset) >= period) {
    throw InvalidArgument("ap schedule: slots do not fit in one period");
  }
}

ApWindow ap_window(const ApSchedule& sched, double local_pps_edge) {
  const double t_s = local_pps_edge + sched.terminal_index * (sched.ap_duration + sched.ap_offset);
  return ApWindow{t_s, t_s + sched.ap_duration};
}

void CarrierSenseConfig::validate() const {
  if (n_cs < 1) throw InvalidArgument("carrier sense: N must be at least 1");
  if (!std::isfinite(scale_factor)) throw InvalidArgument("carrier sense: a must be finite");
  if (!std::isfinite(calibration_factor)) {
    throw InvalidArgument("carrier sense: calibration_factor must be finite");
  }
}

CarrierSenseState make_carrier_sense(const CarrierSenseConfig& cfg, double calibration_i_acc,
                                     double calibration_q_acc) {
  cfg.validate();
  CarrierSenseState cs;
  cs.i_rec.assign(static_cast<std::size_t>(cfg.n_cs), 0.0);
  cs.q_rec.assign(static_cast<std::size_t>(cfg.n_cs), 0.0);
  cs.i_thresh = cfg.calibration_factor * calibration_i_acc;
  cs.q_thresh = cfg.calibration_factor * calibration_q_acc;
  cs.scale_factor = cfg.scale_factor;
  return cs;
}

const char* to_string(Verdict v) { return v == Verdict::Transmit ? "transmit" : "defer"; }

std::pair<double, double> accumulate(const CarrierSenseState& cs, const phy::IqSamples& samples) {
  double i_acc = 0.0;
  double q_acc = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    i_acc += samples.i[k] - cs.i_0;
    q_acc += samples.q[k] - cs.q_0;
  }
  return {i_acc * samples.dt, q_acc * samples.dt};
}

namespace {
void shift_in(std::vector<double>& rec, double value) {
  if (rec.empty()) return;
  std::rotate(rec.begin(), rec.begin() + 1, rec.end());
  rec.back() = value;
}
}  // namespace

SenseOutcome carrier_sense(CarrierSenseState cs, const phy::IqSamples& samples, std::int64_t round) {
  MacDecision d;
  d.round = round;
  if (samples.size() == 0) {
    d.verdict = Verdict::Defer;
    d.diagnostic = "no carrier-sense samples in window";
    return {d, std::move(cs)};
  }
  const auto [i_acc, q_acc] = accumulate(cs, samples);
  d.i_acc = i_acc;
  d.q_acc = q_acc;
  if (i_acc > cs.i_thresh && q_acc > cs.q_thresh) {
    d.verdict = Verdict::Transmit;
    shift_in(cs.i_rec, i_acc);
    shift_in(cs.q_rec, q_acc);
    cs = update_thresholds(std::move(cs));
    ++cs.packets_sent;
  } else {
    d.verdict = Verdict::Defer;
  }
  return {d, std::move(cs)};
}

CarrierSenseState update_thresholds(CarrierSenseState cs) {
  const auto n = static_cast<std::uint64_t>(cs.i_rec.size());
  if (n == 0 || cs.packets_sent + 1 < n) return cs;
  const double scale = cs.scale_factor / static_cast<double>(n);
  cs.i_thresh = scale * std::accumulate(cs.i_rec.begin(), cs.i_rec.end(), 0.0);
  cs.q_thresh = scale * std::accumulate(cs.q_rec.begin(), cs.q_rec.end(), 0.0);
  return cs;
}

int delay_bound(int n_terminals, const ApSchedule& sched) {
  (void)sched;
  if (n_terminals < 1) throw InvalidArgument("delay_bound: need at least one terminal");
  return n_terminals + 1;
}

}  // namespace csmaap::mac
