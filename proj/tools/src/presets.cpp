#include "csmaap/cli/presets.hpp"

#include <algorithm>
#include <cmath>

namespace csmaap::cli {

namespace {

constexpr double kStationOffset = 52e-6;         // station references against the BS
constexpr double kStationSpread = 0.075e-6;      // station 2 relative to station 1
constexpr double kRaisedWiWiPowerDb = 10.0;

sim::TerminalConfig terminal(const std::string& name, sim::Role role, int source, int slot, sim::Vec2 at,
                             std::uint64_t osc_seed, double y) {
  sim::TerminalConfig t;
  t.name = name;
  t.role = role;
  t.source_id = source;
  t.ap_slot = slot;
  t.trajectory = sim::Trajectory::fixed(at);
  t.oscillator = timebase::crystal_preset(osc_seed);
  t.oscillator.initial_fractional_offset = y;
  t.saturated = role == sim::Role::Station;
  return t;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"ap-sweep",          "distance-sweep", "mobility-linear",
                                                 "mobility-circular", "sync-compare",   "allan"};
  return names;
}

bool is_preset(const std::string& name) {
  const auto& n = preset_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

sim::Scenario triangle_scenario(std::uint64_t seed) {
  sim::Scenario s;
  s.name = "triangle";
  s.seed = seed;
  s.run_duration_s = 300.0;
  s.ap_duration_s = 5e-6;
  s.ap_offset_s = 5e-6;
  s.slots_per_cycle = 3;
  const double side = 5.0;
  s.terminals.push_back(terminal("bs", sim::Role::BaseStation, 3, 2, {0.0, 0.0}, 1, 0.0));
  s.terminals.push_back(terminal("sta1", sim::Role::Station, 1, 0, {side, 0.0}, 2, kStationOffset));
  s.terminals.push_back(terminal("sta2", sim::Role::Station, 2, 1, {side / 2, side * std::sqrt(3.0) / 2}, 3,
                                 kStationOffset + kStationSpread));
  return s;
}

sim::Scenario desync_scenario(std::uint64_t seed) {
  sim::Scenario s = triangle_scenario(seed);
  s.name = "desync";
  s.sync_mode = sim::SyncMode::Desynchronized;
  s.run_duration_s = 1200.0;
  s.terminals[2].initial_time_offset_s = -30e-6;
  s.record_sync_series = false;
  return s;
}

std::vector<ApSweepPoint> ap_sweep_points() {
  std::vector<ApSweepPoint> points;
  for (double us = 1; us <= 4096; us *= 2) points.push_back({"duration", us * 1e-6, 100e-6});
  for (double us = 1; us <= 1024; us *= 2) points.push_back({"offset", 900e-6, us * 1e-6});
  return points;
}

sim::Scenario ap_sweep_scenario(const ApSweepPoint& point, std::uint64_t seed) {
  sim::Scenario s = triangle_scenario(seed);
  s.name = "ap-sweep-" + point.axis;
  s.ap_duration_s = point.ap_duration_s;
  s.ap_offset_s = point.ap_offset_s;
  s.channel.sensing_dead_time_s = 3e-6;
  s.record_sync_series = false;
  return s;
}

std::vector<double> distance_sweep_heights() {
  std::vector<double> h;
  for (int i = 0; i <= 18; i += 2) h.push_back(i);
  return h;
}

sim::Scenario distance_sweep_scenario(double height_m, std::uint64_t seed) {
  sim::Scenario s = triangle_scenario(seed);
  s.name = "distance-sweep";
  s.channel.path_loss_model = phy::PathLossModel::TwoRayGround;
  s.terminals[1].trajectory = sim::Trajectory::fixed({2.5, height_m});
  s.terminals[2].trajectory = sim::Trajectory::fixed({5.0, 0.0});
  const double d = std::hypot(2.5, height_m);
  if (!timesync::link_power_ok(d, s.wiwi, s.wiwi_path_loss)) s.wiwi.tx_power_dbm += kRaisedWiWiPowerDb;
  s.record_sync_series = false;
  return s;
}

sim::Scenario mobility_linear_scenario(std::uint64_t seed) {
  sim::Scenario s = triangle_scenario(seed);
  s.name = "mobility-linear";
  s.run_duration_s = 120.0;
  s.ap_duration_s = 10e-6;
  s.ap_offset_s = 10e-6;
  s.carrier_sense = mac::CarrierSenseConfig::mobility();
  s.terminals[1].trajectory = sim::Trajectory::linear({2.5, 2.0}, {2.5, 10.0}, 1.0, 5.0);
  s.reflection.enabled = true;
  s.reflection.terminal = "sta1";
  s.reflection.at_s = 60.0;
  return s;
}

sim::Scenario mobility_circular_scenario(std::uint64_t seed) {
  sim::Scenario s = triangle_scenario(seed);
  s.name = "mobility-circular";
  s.run_duration_s = 180.0;
  s.ap_duration_s = 10e-6;
  s.ap_offset_s = 10e-6;
  s.carrier_sense = mac::CarrierSenseConfig::mobility();
  s.terminals[1].trajectory = sim::Trajectory::circular({2.5, 4.0}, 3.0, 1.0, 0.0, 5.0);
  s.sync_loss.enabled = true;
  s.sync_loss.terminal = "sta1";
  s.sync_loss.at_s = 90.0;
  return s;
}

pair::PairConfig allan_config(pair::PairKind kind, std::uint64_t seed) {
  pair::PairConfig c;
  c.kind = kind;
  c.seed = seed;
  return c;
}

}  // namespace csmaap::cli
