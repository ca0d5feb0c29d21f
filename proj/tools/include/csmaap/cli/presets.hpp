#pragma once

#include <string>
#include <vector>

#include "csmaap/pair_experiment.hpp"
#include "csmaap/sim.hpp"

namespace csmaap::cli {

/// Names accepted by `run --preset`.
const std::vector<std::string>& preset_names();
bool is_preset(const std::string& name);

/// BS and two stations on a 5 m equilateral triangle, AP 5/5 us, three slots
/// (the third stays vacant), 300 s.
sim::Scenario triangle_scenario(std::uint64_t seed = 1);

/// Free-running references: the station PPS difference drifts from +30 us to
/// -60 us over 1200 s.
sim::Scenario desync_scenario(std::uint64_t seed = 1);

struct ApSweepPoint {
  std::string axis;  // "duration" or "offset"
  double ap_duration_s = 0.0;
  double ap_offset_s = 0.0;
};

/// AP duration 1..4096 us at offset 100 us, then offset 1..1024 us at duration 900 us.
std::vector<ApSweepPoint> ap_sweep_points();
sim::Scenario ap_sweep_scenario(const ApSweepPoint& point, std::uint64_t seed = 1);

/// Heights of station 1 above the BS-station 2 baseline, 0..18 m.
std::vector<double> distance_sweep_heights();
/// Two-ray data channel; Wi-Wi power is raised 10 dB once the link would
/// otherwise fall below its threshold.
sim::Scenario distance_sweep_scenario(double height_m, std::uint64_t seed = 1);

sim::Scenario mobility_linear_scenario(std::uint64_t seed = 1);
sim::Scenario mobility_circular_scenario(std::uint64_t seed = 1);

pair::PairConfig allan_config(pair::PairKind kind, std::uint64_t seed = 1);

}  // namespace csmaap::cli
