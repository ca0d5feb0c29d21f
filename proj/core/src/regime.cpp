#include "csmaap/sim.hpp"

#include <algorithm>
#include <cmath>

namespace csmaap::sim {

const char* to_string(Role r) { return r == Role::BaseStation ? "bs" : "sta"; }

const char* to_string(SyncMode m) {
  return m == SyncMode::Synchronized ? "synchronized" : "desynchronized";
}

const char* to_string(RegimeLabel r) {
  switch (r) {
    case RegimeLabel::CorrectOrder: return "correct_order";
    case RegimeLabel::Simultaneous: return "simultaneous";
    case RegimeLabel::ReversedOrder: return "reversed_order";
    case RegimeLabel::Unclassified: return "unclassified";
  }
  return "?";
}

double ReflectionInjection::expected_error_m(double f0_hz) const {
  return cycles * kSpeedOfLight / (2.0 * f0_hz);
}

double access_delay_rounds(const PacketRecord& p, double period_s) {
  return (p.start - p.pending_since) / period_s;
}

RegimeLabel classify_regime(std::span<const PacketRecord> window, double period_s,
                            std::span<const int> slot_of_source) {
  if (window.size() < 2) return RegimeLabel::Unclassified;
  std::vector<const PacketRecord*> order;
  order.reserve(window.size());
  for (const auto& p : window) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->start < b->start; });

  // Sorted by start, any overlap shows up between neighbours.
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (order[k]->start < order[k - 1]->end) return RegimeLabel::Simultaneous;
  }

  const auto slot = [&](int source) {
    return source >= 0 && static_cast<std::size_t>(source) < slot_of_source.size()
               ? slot_of_source[static_cast<std::size_t>(source)]
               : -1;
  };
  int lowest = -1;
  for (int s : slot_of_source) {
    if (s >= 0 && (lowest < 0 || s < lowest)) lowest = s;
  }

  // Rotations are runs of back-to-back transmissions separated by a vacant
  // period. The first one may be cut by the window start, so it only counts
  // towards overlap detection above.
  std::vector<std::vector<int>> rotations(1);
  rotations.back().push_back(slot(order.front()->source));
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (order[k]->start - order[k - 1]->start > 1.5 * period_s) rotations.emplace_back();
    rotations.back().push_back(slot(order[k]->source));
  }
  if (rotations.size() < 2) return RegimeLabel::Unclassified;
  for (std::size_t r = 1; r < rotations.size(); ++r) {
    const auto& rot = rotations[r];
    if (rot.front() != lowest) return RegimeLabel::ReversedOrder;
    for (std::size_t k = 1; k < rot.size(); ++k) {
      if (rot[k] <= rot[k - 1]) return RegimeLabel::ReversedOrder;
    }
  }
  return RegimeLabel::CorrectOrder;
}

DistanceErrorSeries distance_error_series(const SimulationResult& result,
                                          const std::string& terminal) {
  DistanceErrorSeries out;
  for (const auto& s : result.sync_series) {
    if (s.terminal != terminal) continue;
    if (s.tracking_lost) {
      out.truncated = true;
      out.lost_at_s = s.time;
      break;
    }
    if (!std::isfinite(s.estimate.l_d)) continue;  // loop open, no measurement
    const double err = s.estimate.l_d - s.l_d_truth;
    out.samples.push_back({s.time, err});
    out.max_abs_error_m = std::max(out.max_abs_error_m, std::abs(err));
  }
  return out;
}

}  // namespace csmaap::sim
