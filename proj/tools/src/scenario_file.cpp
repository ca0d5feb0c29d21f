#include "csmaap/cli/scenario_file.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "csmaap/format.hpp"

namespace csmaap::cli {

namespace {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct Section {
  std::string kind;  // scenario, channel, ..., terminal
  std::string name;  // terminal name
  std::size_t line = 0;
  std::vector<Entry> entries;
};

const std::vector<std::string> kTopSections = {"scenario", "channel",   "wiwi",      "pid",
                                               "carrier_sense", "sync_loss", "reflection"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v) {
  double out = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (!v.empty() && v[0] == '+') ++first;
  const auto [p, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || p != last || std::isnan(out)) {
    throw std::invalid_argument("expected a number, got '" + v + "'");
  }
  return out;
}

template <typename T>
T to_integer(const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw std::invalid_argument("expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

sim::Vec2 to_vec2(const std::string& v) {
  const auto comma = v.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("expected 'x, y', got '" + v + "'");
  return {to_double(trim(v.substr(0, comma))), to_double(trim(v.substr(comma + 1)))};
}

std::vector<sim::Vec2> to_waypoints(const std::string& v) {
  std::vector<sim::Vec2> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_vec2(item));
  }
  return out;
}

phy::PathLossModel to_path_loss(const std::string& v) {
  if (v == "free_space") return phy::PathLossModel::FreeSpace;
  if (v == "two_ray") return phy::PathLossModel::TwoRayGround;
  throw std::invalid_argument("path loss model must be free_space or two_ray, got '" + v + "'");
}

const char* path_loss_name(phy::PathLossModel m) {
  return m == phy::PathLossModel::FreeSpace ? "free_space" : "two_ray";
}

const char* trajectory_name(sim::TrajectoryKind k) {
  switch (k) {
    case sim::TrajectoryKind::Static: return "static";
    case sim::TrajectoryKind::LinearBackAndForth: return "linear";
    case sim::TrajectoryKind::Circular: return "circular";
    case sim::TrajectoryKind::Waypoints: return "waypoints";
  }
  return "static";
}

sim::TrajectoryKind to_trajectory(const std::string& v) {
  for (auto k : {sim::TrajectoryKind::Static, sim::TrajectoryKind::LinearBackAndForth,
                 sim::TrajectoryKind::Circular, sim::TrajectoryKind::Waypoints}) {
    if (v == trajectory_name(k)) return k;
  }
  throw std::invalid_argument("trajectory must be static, linear, circular or waypoints, got '" + v + "'");
}

using Setter = std::function<void(const std::string&)>;
using Table = std::map<std::string, Setter>;

Setter num(double& field) {
  return [&field](const std::string& v) { field = to_double(v); };
}
Setter flag(bool& field) {
  return [&field](const std::string& v) { field = to_bool(v); };
}
template <typename T>
Setter whole(T& field) {
  return [&field](const std::string& v) { field = to_integer<T>(v); };
}
Setter text(std::string& field) {
  return [&field](const std::string& v) { field = v; };
}
Setter microseconds(double& field) {
  return [&field](const std::string& v) { field = to_double(v) * 1e-6; };
}

Table scenario_table(sim::Scenario& s) {
  return {
      {"name", text(s.name)},
      {"sync_mode",
       [&s](const std::string& v) {
         if (v == "synchronized") {
           s.sync_mode = sim::SyncMode::Synchronized;
         } else if (v == "desynchronized") {
           s.sync_mode = sim::SyncMode::Desynchronized;
         } else {
           throw std::invalid_argument("sync_mode must be synchronized or desynchronized, got '" + v + "'");
         }
       }},
      {"run_duration_s", num(s.run_duration_s)},
      {"seed", whole(s.seed)},
      {"period_s", num(s.period_s)},
      {"ap_duration_s", num(s.ap_duration_s)},
      {"ap_duration_us", microseconds(s.ap_duration_s)},
      {"ap_offset_s", num(s.ap_offset_s)},
      {"ap_offset_us", microseconds(s.ap_offset_s)},
      {"slots_per_cycle", whole(s.slots_per_cycle)},
      {"tx_turnaround_s", num(s.tx_turnaround_s)},
      {"pps_jitter_sigma_s", num(s.pps_jitter_sigma_s)},
      {"start_locked", flag(s.start_locked)},
      {"calibration_time_s", num(s.calibration_time_s)},
      {"telemetry_interval_s", num(s.telemetry_interval_s)},
      {"regime_window_cycles", whole(s.regime_window_cycles)},
      {"warmup_s", num(s.warmup_s)},
      {"record_sync_series", flag(s.record_sync_series)},
  };
}

Table channel_table(phy::ChannelConfig& c) {
  return {
      {"carrier_frequency_hz", num(c.carrier_frequency_hz)},
      {"symbol_rate", num(c.symbol_rate)},
      {"noise_floor_dbm", num(c.noise_floor_dbm)},
      {"path_loss_model", [&c](const std::string& v) { c.path_loss_model = to_path_loss(v); }},
      {"antenna_height_m", num(c.antenna_height_m)},
      {"reflection_coefficient", num(c.reflection_coefficient)},
      {"idle_pilot_level", num(c.idle_pilot_level)},
      {"iq_noise_rms", num(c.iq_noise_rms)},
      {"sample_rate_hz", num(c.sample_rate_hz)},
      {"sensing_dead_time_s", num(c.sensing_dead_time_s)},
  };
}

Table wiwi_table(sim::Scenario& s) {
  return {
      {"carrier_frequency_hz", num(s.wiwi.carrier_frequency_hz)},
      {"wavelength_m", num(s.wiwi.wavelength_m)},
      {"revision_interval_s", num(s.wiwi.revision_interval_s)},
      {"tx_power_dbm", num(s.wiwi.tx_power_dbm)},
      {"sync_loss_power_threshold_dbm", num(s.wiwi.sync_loss_power_threshold_dbm)},
      {"path_loss_model", [&s](const std::string& v) { s.wiwi_path_loss = to_path_loss(v); }},
      {"timestamp_quantum_s", num(s.link_noise.timestamp_quantum_s)},
      {"phase_noise_rad", num(s.link_noise.phase_noise_rad)},
  };
}

Table pid_table(timesync::PidController& p) {
  return {
      {"kp", num(p.kp)},
      {"ki", num(p.ki)},
      {"kd", num(p.kd)},
      {"output_limit", num(p.output_limit)},
  };
}

Table carrier_sense_table(mac::CarrierSenseConfig& c) {
  return {
      {"n_cs", whole(c.n_cs)},
      {"scale_factor", num(c.scale_factor)},
      {"calibration_factor", num(c.calibration_factor)},
  };
}

Table sync_loss_table(sim::SyncLossInjection& i) {
  return {
      {"enabled", flag(i.enabled)},
      {"terminal", text(i.terminal)},
      {"at_s", num(i.at_s)},
      {"duration_s", num(i.duration_s)},
  };
}

Table reflection_table(sim::ReflectionInjection& i) {
  return {
      {"enabled", flag(i.enabled)},
      {"terminal", text(i.terminal)},
      {"at_s", num(i.at_s)},
      {"ramp_s", num(i.ramp_s)},
      {"cycles", whole(i.cycles)},
  };
}

Table terminal_table(sim::TerminalConfig& t, bool& noise_set) {
  auto noise = [&noise_set](double& field) -> Setter {
    return [&field, &noise_set](const std::string& v) {
      field = to_double(v);
      noise_set = true;
    };
  };
  auto& o = t.oscillator;
  auto& tr = t.trajectory;
  return {
      {"role",
       [&t](const std::string& v) {
         if (v == "bs") {
           t.role = sim::Role::BaseStation;
           t.saturated = false;
         } else if (v == "sta") {
           t.role = sim::Role::Station;
         } else {
           throw std::invalid_argument("role must be bs or sta, got '" + v + "'");
         }
       }},
      {"source", whole(t.source_id)},
      {"ap_slot", whole(t.ap_slot)},
      {"saturated", flag(t.saturated)},
      {"tx_power_dbm", num(t.tx_power_dbm)},
      {"initial_time_offset_s", num(t.initial_time_offset_s)},
      {"oscillator",
       [&o, &noise_set](const std::string& v) {
         if (noise_set) throw std::invalid_argument("oscillator preset must come before osc_* noise keys");
         timebase::OscillatorParams p;
         if (v == "crystal") {
           p = timebase::crystal_preset(o.rng_seed);
         } else if (v == "rubidium") {
           p = timebase::rubidium_preset(o.rng_seed);
         } else {
           throw std::invalid_argument("oscillator must be crystal or rubidium, got '" + v + "'");
         }
         o.white_phase_noise_s = p.white_phase_noise_s;
         o.white_fm_sigma = p.white_fm_sigma;
         o.random_walk_fm_sigma = p.random_walk_fm_sigma;
       }},
      {"osc_nominal_frequency_hz", num(o.nominal_frequency_hz)},
      {"osc_fractional_offset", num(o.initial_fractional_offset)},
      {"osc_white_phase_noise_s", noise(o.white_phase_noise_s)},
      {"osc_white_fm_sigma", noise(o.white_fm_sigma)},
      {"osc_random_walk_fm_sigma", noise(o.random_walk_fm_sigma)},
      {"osc_seed", whole(o.rng_seed)},
      {"trajectory", [&tr](const std::string& v) { tr.kind = to_trajectory(v); }},
      {"position", [&tr](const std::string& v) { tr.origin = to_vec2(v); }},
      {"end", [&tr](const std::string& v) { tr.end = to_vec2(v); }},
      {"radius_m", num(tr.radius_m)},
      {"start_angle_rad", num(tr.start_angle_rad)},
      {"speed_mps", num(tr.speed_mps)},
      {"start_time_s", num(tr.start_time_s)},
      {"waypoints", [&tr](const std::string& v) { tr.waypoints = to_waypoints(v); }},
  };
}

std::vector<Section> read_sections(std::istream& in, const std::string& source) {
  std::vector<Section> sections;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ScenarioError(source, line_no, "unterminated section header");
      const std::string inner = trim(line.substr(1, line.size() - 2));
      Section sec;
      sec.line = line_no;
      if (inner.rfind("terminal", 0) == 0 && inner.size() > 8 && (inner[8] == ' ' || inner[8] == '\t')) {
        sec.kind = "terminal";
        sec.name = trim(inner.substr(9));
        if (sec.name.empty()) throw ScenarioError(source, line_no, "terminal section needs a name");
        for (const auto& top : kTopSections) {
          if (sec.name == top) throw ScenarioError(source, line_no, "terminal name '" + top + "' is reserved");
        }
        for (const auto& other : sections) {
          if (other.kind == "terminal" && other.name == sec.name) {
            throw ScenarioError(source, line_no, "duplicate terminal '" + sec.name + "'");
          }
        }
      } else {
        if (std::find(kTopSections.begin(), kTopSections.end(), inner) == kTopSections.end()) {
          throw ScenarioError(source, line_no, "unknown section [" + inner + "]");
        }
        for (const auto& other : sections) {
          if (other.kind == inner) throw ScenarioError(source, line_no, "duplicate section [" + inner + "]");
        }
        sec.kind = inner;
      }
      sections.push_back(std::move(sec));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ScenarioError(source, line_no, "expected 'key = value'");
    if (sections.empty()) throw ScenarioError(source, line_no, "key outside of any section");
    Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (e.key.empty()) throw ScenarioError(source, line_no, "missing key before '='");
    for (const auto& prev : sections.back().entries) {
      if (prev.key == e.key) {
        throw ScenarioError(source, line_no,
                            "duplicate key '" + e.key + "' (first set on line " + std::to_string(prev.line) + ")");
      }
    }
    sections.back().entries.push_back(std::move(e));
  }
  return sections;
}

void apply_overrides(std::vector<Section>& sections, const std::vector<Override>& overrides,
                     const std::string& source) {
  for (const auto& o : overrides) {
    auto it = std::find_if(sections.begin(), sections.end(), [&](const Section& s) {
      return s.kind == "terminal" ? s.name == o.section : s.kind == o.section;
    });
    if (it == sections.end()) {
      if (std::find(kTopSections.begin(), kTopSections.end(), o.section) == kTopSections.end()) {
        throw ScenarioError(source, 0, "override names unknown section or terminal '" + o.section + "'");
      }
      sections.push_back(Section{o.section, "", 0, {}});
      it = sections.end() - 1;
    }
    auto e = std::find_if(it->entries.begin(), it->entries.end(), [&](const Entry& x) { return x.key == o.key; });
    if (e != it->entries.end()) {
      e->value = o.value;
    } else {
      it->entries.push_back({o.key, o.value, 0});
    }
  }
}

void apply(const Table& table, const Section& sec, const std::string& source) {
  for (const auto& e : sec.entries) {
    const auto it = table.find(e.key);
    const std::string where = sec.kind == "terminal" ? "terminal " + sec.name : "[" + sec.kind + "]";
    if (it == table.end()) throw ScenarioError(source, e.line, "unknown key '" + e.key + "' in " + where);
    try {
      it->second(e.value);
    } catch (const std::invalid_argument& ex) {
      throw ScenarioError(source, e.line, e.key + ": " + ex.what());
    }
  }
}

}  // namespace

ScenarioError::ScenarioError(const std::string& source, std::size_t line, const std::string& message)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + message
                                  : source + ": " + message),
      line_(line) {}

Override parse_override(const std::string& dotted, const std::string& value) {
  const auto dot = dotted.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted.size()) {
    throw ScenarioError(dotted, 0, "parameter must look like section.key");
  }
  return {dotted.substr(0, dot), dotted.substr(dot + 1), value};
}

sim::Scenario parse_scenario(std::istream& in, const std::string& source, const std::vector<Override>& overrides) {
  std::vector<Section> sections = read_sections(in, source);
  apply_overrides(sections, overrides, source);

  sim::Scenario s;
  s.terminals.clear();
  std::map<std::string, std::size_t> lines;
  for (const auto& sec : sections) {
    if (sec.kind == "scenario") {
      apply(scenario_table(s), sec, source);
    } else if (sec.kind == "channel") {
      apply(channel_table(s.channel), sec, source);
    } else if (sec.kind == "wiwi") {
      apply(wiwi_table(s), sec, source);
    } else if (sec.kind == "pid") {
      apply(pid_table(s.pid), sec, source);
    } else if (sec.kind == "carrier_sense") {
      apply(carrier_sense_table(s.carrier_sense), sec, source);
    } else if (sec.kind == "sync_loss") {
      apply(sync_loss_table(s.sync_loss), sec, source);
    } else if (sec.kind == "reflection") {
      apply(reflection_table(s.reflection), sec, source);
    } else {
      sim::TerminalConfig t;
      t.name = sec.name;
      t.oscillator = timebase::crystal_preset(0);
      bool noise_set = false;
      apply(terminal_table(t, noise_set), sec, source);
      s.terminals.push_back(std::move(t));
    }
    lines[sec.kind == "terminal" ? "terminal " + sec.name : sec.kind] = sec.line;
  }

  if (s.terminals.empty()) {
    throw ScenarioError(source, sections.empty() ? 1 : sections.front().line,
                        "no [terminal NAME] sections; a scenario needs one bs and at least one sta");
  }
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    // Anchor the message on the section it concerns.
    const std::string msg = e.what();
    std::size_t line = lines.count("scenario") ? lines["scenario"] : 0;
    for (const auto& [key, l] : lines) {
      if (msg.rfind(key + ":", 0) == 0 || msg.rfind(key + " ", 0) == 0) line = l;
    }
    throw ScenarioError(source, line, msg);
  }
  return s;
}

sim::Scenario load_scenario(const std::filesystem::path& path, const std::vector<Override>& overrides) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path.string(), 0, "cannot open scenario file");
  return parse_scenario(in, path.string(), overrides);
}

void write_scenario(std::ostream& out, const sim::Scenario& s) {
  auto kv = [&out](const char* key, const std::string& value) { out << key << " = " << value << '\n'; };
  auto d = [](double v) { return fmt_double(v); };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  auto vec = [&d](sim::Vec2 p) { return d(p.x) + ", " + d(p.y); };

  out << "[scenario]\n";
  kv("name", s.name);
  kv("sync_mode", sim::to_string(s.sync_mode));
  kv("run_duration_s", d(s.run_duration_s));
  kv("seed", std::to_string(s.seed));
  kv("period_s", d(s.period_s));
  kv("ap_duration_s", d(s.ap_duration_s));
  kv("ap_offset_s", d(s.ap_offset_s));
  kv("slots_per_cycle", std::to_string(s.slots_per_cycle));
  kv("tx_turnaround_s", d(s.tx_turnaround_s));
  kv("pps_jitter_sigma_s", d(s.pps_jitter_sigma_s));
  kv("start_locked", b(s.start_locked));
  kv("calibration_time_s", d(s.calibration_time_s));
  kv("telemetry_interval_s", d(s.telemetry_interval_s));
  kv("regime_window_cycles", std::to_string(s.regime_window_cycles));
  kv("warmup_s", d(s.warmup_s));
  kv("record_sync_series", b(s.record_sync_series));

  const auto& c = s.channel;
  out << "\n[channel]\n";
  kv("carrier_frequency_hz", d(c.carrier_frequency_hz));
  kv("symbol_rate", d(c.symbol_rate));
  kv("noise_floor_dbm", d(c.noise_floor_dbm));
  kv("path_loss_model", path_loss_name(c.path_loss_model));
  kv("antenna_height_m", d(c.antenna_height_m));
  kv("reflection_coefficient", d(c.reflection_coefficient));
  kv("idle_pilot_level", d(c.idle_pilot_level));
  kv("iq_noise_rms", d(c.iq_noise_rms));
  kv("sample_rate_hz", d(c.sample_rate_hz));
  kv("sensing_dead_time_s", d(c.sensing_dead_time_s));

  out << "\n[wiwi]\n";
  kv("carrier_frequency_hz", d(s.wiwi.carrier_frequency_hz));
  kv("wavelength_m", d(s.wiwi.wavelength_m));
  kv("revision_interval_s", d(s.wiwi.revision_interval_s));
  kv("tx_power_dbm", d(s.wiwi.tx_power_dbm));
  kv("sync_loss_power_threshold_dbm", d(s.wiwi.sync_loss_power_threshold_dbm));
  kv("path_loss_model", path_loss_name(s.wiwi_path_loss));
  kv("timestamp_quantum_s", d(s.link_noise.timestamp_quantum_s));
  kv("phase_noise_rad", d(s.link_noise.phase_noise_rad));

  out << "\n[pid]\n";
  kv("kp", d(s.pid.kp));
  kv("ki", d(s.pid.ki));
  kv("kd", d(s.pid.kd));
  kv("output_limit", d(s.pid.output_limit));

  out << "\n[carrier_sense]\n";
  kv("n_cs", std::to_string(s.carrier_sense.n_cs));
  kv("scale_factor", d(s.carrier_sense.scale_factor));
  kv("calibration_factor", d(s.carrier_sense.calibration_factor));

  out << "\n[sync_loss]\n";
  kv("enabled", b(s.sync_loss.enabled));
  kv("terminal", s.sync_loss.terminal);
  kv("at_s", d(s.sync_loss.at_s));
  kv("duration_s", d(s.sync_loss.duration_s));

  out << "\n[reflection]\n";
  kv("enabled", b(s.reflection.enabled));
  kv("terminal", s.reflection.terminal);
  kv("at_s", d(s.reflection.at_s));
  kv("ramp_s", d(s.reflection.ramp_s));
  kv("cycles", std::to_string(s.reflection.cycles));

  for (const auto& t : s.terminals) {
    out << "\n[terminal " << t.name << "]\n";
    kv("role", sim::to_string(t.role));
    kv("source", std::to_string(t.source_id));
    kv("ap_slot", std::to_string(t.ap_slot));
    kv("saturated", b(t.saturated));
    kv("tx_power_dbm", d(t.tx_power_dbm));
    kv("initial_time_offset_s", d(t.initial_time_offset_s));
    const auto& o = t.oscillator;
    kv("osc_nominal_frequency_hz", d(o.nominal_frequency_hz));
    kv("osc_fractional_offset", d(o.initial_fractional_offset));
    kv("osc_white_phase_noise_s", d(o.white_phase_noise_s));
    kv("osc_white_fm_sigma", d(o.white_fm_sigma));
    kv("osc_random_walk_fm_sigma", d(o.random_walk_fm_sigma));
    kv("osc_seed", std::to_string(o.rng_seed));
    const auto& tr = t.trajectory;
    kv("trajectory", trajectory_name(tr.kind));
    kv("position", vec(tr.origin));
    switch (tr.kind) {
      case sim::TrajectoryKind::Static:
        break;
      case sim::TrajectoryKind::LinearBackAndForth:
        kv("end", vec(tr.end));
        break;
      case sim::TrajectoryKind::Circular:
        kv("radius_m", d(tr.radius_m));
        kv("start_angle_rad", d(tr.start_angle_rad));
        break;
      case sim::TrajectoryKind::Waypoints: {
        std::string w;
        for (std::size_t i = 0; i < tr.waypoints.size(); ++i) w += (i ? "; " : "") + vec(tr.waypoints[i]);
        kv("waypoints", w);
        break;
      }
    }
    if (tr.kind != sim::TrajectoryKind::Static) {
      kv("speed_mps", d(tr.speed_mps));
      kv("start_time_s", d(tr.start_time_s));
    }
  }
}

}  // namespace csmaap::cli
