#include "csmaap/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "csmaap/format.hpp"

namespace csmaap::trace {

namespace {

using json = nlohmann::ordered_json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double num(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw std::out_of_range(std::string("missing field '") + key + "'");
  if (it->is_null()) return kNan;
  if (!it->is_number()) throw std::out_of_range(std::string("field '") + key + "' is not a number");
  return it->get<double>();
}

template <typename T>
T integer(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw std::out_of_range(std::string("missing field '") + key + "'");
  if (!it->is_number_integer()) {
    throw std::out_of_range(std::string("field '") + key + "' is not an integer");
  }
  return it->get<T>();
}

std::string str(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw std::out_of_range(std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

bool flag(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_boolean()) {
    throw std::out_of_range(std::string("missing boolean field '") + key + "'");
  }
  return it->get<bool>();
}

timesync::LinkMode parse_mode(const std::string& s) {
  if (s == "acquiring") return timesync::LinkMode::Acquiring;
  if (s == "locked") return timesync::LinkMode::Fine;
  if (s == "lost") return timesync::LinkMode::Lost;
  throw std::out_of_range("unknown link status '" + s + "'");
}

sim::RegimeLabel parse_label(const std::string& s) {
  for (auto l : {sim::RegimeLabel::CorrectOrder, sim::RegimeLabel::Simultaneous,
                 sim::RegimeLabel::ReversedOrder, sim::RegimeLabel::Unclassified}) {
    if (s == sim::to_string(l)) return l;
  }
  throw std::out_of_range("unknown regime label '" + s + "'");
}

json header_json(const TraceHeader& h) {
  json j;
  j["type"] = "header";
  j["format"] = h.format;
  j["scenario"] = h.scenario;
  j["sync_mode"] = h.sync_mode;
  j["seed"] = h.seed;
  j["run_duration_s"] = h.run_duration_s;
  j["period_s"] = h.period_s;
  j["slots"] = h.slots;
  j["delay_bound_rounds"] = h.delay_bound_rounds;
  j["expected_violations_after_s"] = h.expected_violations_after_s;
  json sources = json::array();
  for (const auto& s : h.sources) {
    sources.push_back(json{{"source", s.source}, {"terminal", s.terminal}, {"slot", s.slot}});
  }
  j["sources"] = std::move(sources);
  return j;
}

json packet_json(const sim::PacketRecord& p) {
  json j;
  j["type"] = "packet";
  j["time"] = p.start;
  j["tx_id"] = p.tx_id;
  j["source"] = p.source;
  j["terminal"] = p.terminal;
  j["packet_id"] = p.packet_id;
  j["round"] = p.round;
  j["pending_since"] = p.pending_since;
  j["start"] = p.start;
  j["end"] = p.end;
  j["arrival_start"] = p.arrival_start;
  j["arrival_end"] = p.arrival_end;
  j["snr"] = p.snr;
  j["cfo_hz"] = p.cfo_hz;
  j["collided"] = p.collided;
  j["header_valid"] = p.header_valid;
  j["body_errors"] = p.body_errors;
  j["ber"] = p.ber;
  return j;
}

json telemetry_json(const sim::TelemetryRecord& t) {
  json j;
  j["type"] = "telemetry";
  j["time"] = t.time;
  j["pps_difference_s"] = t.pps_difference_s;
  json links = json::array();
  for (const auto& l : t.links) {
    links.push_back(json{{"terminal", l.terminal},
                         {"status", timesync::to_string(l.mode)},
                         {"t_c_s", l.t_c},
                         {"l_d_wiwi_m", l.l_d_wiwi},
                         {"l_d_truth_m", l.l_d_truth},
                         {"tracking_lost", l.tracking_lost}});
  }
  j["links"] = std::move(links);
  return j;
}

json regime_json(const sim::RegimeRecord& r) {
  json j;
  j["type"] = "regime";
  j["time"] = r.t_start;
  j["t_end"] = r.t_end;
  j["label"] = sim::to_string(r.label);
  j["packets"] = r.packets;
  j["collided_packets"] = r.collided_packets;
  j["mean_pps_difference_s"] = r.mean_pps_difference_s;
  return j;
}

TraceHeader parse_header(const json& j) {
  TraceHeader h;
  h.format = str(j, "format");
  if (h.format != kTraceFormat) throw std::out_of_range("unsupported trace format '" + h.format + "'");
  h.scenario = str(j, "scenario");
  h.sync_mode = str(j, "sync_mode");
  h.seed = integer<std::uint64_t>(j, "seed");
  h.run_duration_s = num(j, "run_duration_s");
  h.period_s = num(j, "period_s");
  h.slots = integer<int>(j, "slots");
  h.delay_bound_rounds = num(j, "delay_bound_rounds");
  h.expected_violations_after_s = num(j, "expected_violations_after_s");
  const auto it = j.find("sources");
  if (it == j.end() || !it->is_array()) throw std::out_of_range("missing array field 'sources'");
  for (const auto& s : *it) {
    h.sources.push_back({integer<int>(s, "source"), str(s, "terminal"), integer<int>(s, "slot")});
  }
  if (!(h.period_s > 0.0)) throw std::out_of_range("period_s must be positive");
  return h;
}

sim::PacketRecord parse_packet(const json& j) {
  sim::PacketRecord p;
  p.tx_id = integer<std::uint64_t>(j, "tx_id");
  p.source = integer<int>(j, "source");
  p.terminal = str(j, "terminal");
  p.packet_id = integer<std::uint16_t>(j, "packet_id");
  p.round = integer<std::int64_t>(j, "round");
  p.pending_since = num(j, "pending_since");
  p.start = num(j, "start");
  p.end = num(j, "end");
  p.arrival_start = num(j, "arrival_start");
  p.arrival_end = num(j, "arrival_end");
  p.snr = num(j, "snr");
  p.cfo_hz = num(j, "cfo_hz");
  p.collided = flag(j, "collided");
  p.header_valid = flag(j, "header_valid");
  p.body_errors = integer<std::uint32_t>(j, "body_errors");
  p.ber = num(j, "ber");
  for (double v : {p.pending_since, p.start, p.end, p.arrival_start, p.arrival_end}) {
    if (!std::isfinite(v)) throw std::out_of_range("packet times must be finite");
  }
  return p;
}

sim::TelemetryRecord parse_telemetry(const json& j) {
  sim::TelemetryRecord t;
  t.time = num(j, "time");
  t.pps_difference_s = num(j, "pps_difference_s");
  const auto it = j.find("links");
  if (it == j.end() || !it->is_array()) throw std::out_of_range("missing array field 'links'");
  for (const auto& l : *it) {
    sim::LinkTelemetry lt;
    lt.terminal = str(l, "terminal");
    lt.mode = parse_mode(str(l, "status"));
    lt.t_c = num(l, "t_c_s");
    lt.l_d_wiwi = num(l, "l_d_wiwi_m");
    lt.l_d_truth = num(l, "l_d_truth_m");
    lt.tracking_lost = flag(l, "tracking_lost");
    t.links.push_back(lt);
  }
  return t;
}

sim::RegimeRecord parse_regime(const json& j) {
  sim::RegimeRecord r;
  r.t_start = num(j, "time");
  r.t_end = num(j, "t_end");
  r.label = parse_label(str(j, "label"));
  r.packets = integer<int>(j, "packets");
  r.collided_packets = integer<int>(j, "collided_packets");
  r.mean_pps_difference_s = num(j, "mean_pps_difference_s");
  return r;
}

// Transmission order recomputed from scratch: every pair is checked for
// overlap, then each rotation after the first must open with the lowest slot
// and visit slots in increasing order.
sim::RegimeLabel brute_force_regime(std::vector<sim::PacketRecord> w, double period,
                                    const std::vector<int>& slot_of_source) {
  if (w.size() < 2) return sim::RegimeLabel::Unclassified;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      if (std::max(w[i].start, w[j].start) < std::min(w[i].end, w[j].end)) {
        return sim::RegimeLabel::Simultaneous;
      }
    }
  }
  std::stable_sort(w.begin(), w.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  std::vector<int> rotation(w.size(), 0);
  for (std::size_t k = 1; k < w.size(); ++k) {
    rotation[k] = rotation[k - 1] + (w[k].start - w[k - 1].start > 1.5 * period ? 1 : 0);
  }
  if (rotation.back() == 0) return sim::RegimeLabel::Unclassified;
  int lowest = std::numeric_limits<int>::max();
  for (int s : slot_of_source) {
    if (s >= 0) lowest = std::min(lowest, s);
  }
  const auto slot = [&](int source) {
    return source >= 0 && static_cast<std::size_t>(source) < slot_of_source.size()
               ? slot_of_source[static_cast<std::size_t>(source)]
               : -1;
  };
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (rotation[i] == 0) continue;
    const bool opens = rotation[i - 1] != rotation[i];
    if (opens && slot(w[i].source) != lowest) return sim::RegimeLabel::ReversedOrder;
    for (std::size_t j = i + 1; j < w.size() && rotation[j] == rotation[i]; ++j) {
      if (slot(w[j].source) <= slot(w[i].source)) return sim::RegimeLabel::ReversedOrder;
    }
  }
  return sim::RegimeLabel::CorrectOrder;
}

}  // namespace

TraceHeader make_header(const sim::SimulationResult& result) {
  const sim::Scenario& s = result.scenario;
  TraceHeader h;
  h.scenario = s.name;
  h.sync_mode = sim::to_string(s.sync_mode);
  h.seed = s.seed;
  h.run_duration_s = s.run_duration_s;
  h.period_s = s.period_s;
  h.slots = s.effective_slots();
  mac::ApSchedule sched{s.period_s, s.ap_duration_s, s.ap_offset_s, 0, h.slots};
  h.delay_bound_rounds = mac::delay_bound(h.slots, sched);
  if (s.sync_mode == sim::SyncMode::Desynchronized) {
    h.expected_violations_after_s = 0.0;
  } else if (s.sync_loss.enabled) {
    h.expected_violations_after_s = s.sync_loss.at_s;
  }
  for (const auto& t : s.terminals) {
    if (t.role == sim::Role::Station && t.saturated && t.ap_slot >= 0) {
      h.sources.push_back({t.source_id, t.name, t.ap_slot});
    }
  }
  return h;
}

void write_trace(std::ostream& out, const sim::SimulationResult& result) {
  out << header_json(make_header(result)).dump() << '\n';
  struct Line {
    double time;
    int rank;
    std::size_t index;
  };
  std::vector<Line> order;
  order.reserve(result.packets.size() + result.telemetry.size() + result.regimes.size());
  for (std::size_t i = 0; i < result.packets.size(); ++i) order.push_back({result.packets[i].start, 0, i});
  for (std::size_t i = 0; i < result.telemetry.size(); ++i) order.push_back({result.telemetry[i].time, 1, i});
  for (std::size_t i = 0; i < result.regimes.size(); ++i) order.push_back({result.regimes[i].t_start, 2, i});
  std::stable_sort(order.begin(), order.end(), [](const Line& a, const Line& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.index < b.index;
  });
  for (const auto& l : order) {
    switch (l.rank) {
      case 0: out << packet_json(result.packets[l.index]).dump() << '\n'; break;
      case 1: out << telemetry_json(result.telemetry[l.index]).dump() << '\n'; break;
      default: out << regime_json(result.regimes[l.index]).dump() << '\n'; break;
    }
  }
}

void write_decisions(std::ostream& out, const sim::SimulationResult& result) {
  for (const auto& d : result.decisions) {
    json j;
    j["time"] = d.time;
    j["round"] = d.round;
    j["terminal"] = d.terminal;
    j["verdict"] = mac::to_string(d.verdict);
    j["i_acc"] = d.i_acc;
    j["q_acc"] = d.q_acc;
    j["i_thresh"] = d.i_thresh;
    j["q_thresh"] = d.q_thresh;
    if (!d.diagnostic.empty()) j["diagnostic"] = d.diagnostic;
    out << j.dump() << '\n';
  }
}

void write_summary_csv(std::ostream& out, const sim::SimulationResult& result) {
  out << "terminal,source,packets,collided,mean_ber,post_warmup_mean_ber,max_access_delay_rounds\n";
  for (const auto& t : result.terminals) {
    out << t.name << ',' << t.source << ',' << t.packets << ',' << t.collided << ','
        << fmt_double(t.mean_ber) << ',' << fmt_double(t.post_warmup_mean_ber) << ','
        << fmt_double(t.max_access_delay_rounds) << '\n';
  }
}

void write_sync_csv(std::ostream& out, const sim::SimulationResult& result, const std::string& terminal) {
  out << "true_time_s,mode,t_c_s,t_c_truth_s,t_d_s,l_d_m,l_d_truth_m,m_c,m_d,tracking_lost\n";
  for (const auto& s : result.sync_series) {
    if (s.terminal != terminal) continue;
    out << fmt_double(s.time) << ',' << timesync::to_string(s.mode) << ',' << fmt_double(s.estimate.t_c)
        << ',' << fmt_double(s.t_c_truth) << ',' << fmt_double(s.estimate.t_d) << ','
        << fmt_double(s.estimate.l_d) << ',' << fmt_double(s.l_d_truth) << ',' << s.estimate.m_c << ','
        << s.estimate.m_d << ',' << (s.tracking_lost ? 1 : 0) << '\n';
  }
}

TraceFormatError::TraceFormatError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

Trace read_trace(std::istream& in) {
  Trace trace;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw TraceFormatError(line_no, std::string("not valid JSON: ") + e.what());
    }
    try {
      if (!j.is_object()) throw std::out_of_range("record is not an object");
      const std::string type = str(j, "type");
      if (!have_header) {
        if (type != "header") throw std::out_of_range("first record must be the header");
        trace.header = parse_header(j);
        have_header = true;
      } else if (type == "packet") {
        trace.packets.push_back(parse_packet(j));
      } else if (type == "telemetry") {
        trace.telemetry.push_back(parse_telemetry(j));
      } else if (type == "regime") {
        trace.regimes.push_back(parse_regime(j));
      } else {
        throw std::out_of_range("unknown record type '" + type + "'");
      }
    } catch (const std::out_of_range& e) {
      throw TraceFormatError(line_no, e.what());
    } catch (const json::exception& e) {
      throw TraceFormatError(line_no, e.what());
    }
  }
  if (!have_header) throw TraceFormatError(line_no, "trace has no header");
  return trace;
}

const char* to_string(VerifyStatus s) {
  switch (s) {
    case VerifyStatus::Pass: return "PASS";
    case VerifyStatus::Fail: return "FAIL";
    case VerifyStatus::ExpectedFail: return "EXPECTED-FAIL";
    case VerifyStatus::Malformed: return "MALFORMED";
  }
  return "?";
}

VerifyReport verify_trace(const Trace& trace) {
  VerifyReport report;
  const TraceHeader& h = trace.header;
  report.packets = trace.packets.size();
  report.regimes = trace.regimes.size();
  const double expected_after = h.expected_violations_after_s;
  auto add = [&](Violation v) {
    v.expected = v.kind != "regime_label" && v.kind != "collision_flag" && std::isfinite(expected_after) &&
                 v.time >= expected_after;
    report.violations.push_back(std::move(v));
  };

  for (const auto& p : trace.packets) {
    const double rounds = sim::access_delay_rounds(p, h.period_s);
    report.worst_delay_rounds = std::max(report.worst_delay_rounds, rounds);
    if (rounds > h.delay_bound_rounds + 1e-9) {
      std::ostringstream d;
      d << "access delay " << fmt_double(rounds) << " rounds exceeds " << fmt_double(h.delay_bound_rounds);
      add({"delay_bound", p.start, p.tx_id, p.source, p.packet_id, d.str()});
    }
  }

  // Brute-force pairwise overlap of the intervals as received at the base station.
  std::vector<bool> overlapped(trace.packets.size(), false);
  for (std::size_t a = 0; a < trace.packets.size(); ++a) {
    for (std::size_t b = a + 1; b < trace.packets.size(); ++b) {
      const auto& pa = trace.packets[a];
      const auto& pb = trace.packets[b];
      if (pa.arrival_start < pb.arrival_end && pb.arrival_start < pa.arrival_end) {
        overlapped[a] = overlapped[b] = true;
        const auto& later = pa.arrival_start >= pb.arrival_start ? pa : pb;
        const auto& other = &later == &pa ? pb : pa;
        add({"collision", later.arrival_start, later.tx_id, later.source, later.packet_id,
             "overlaps tx " + std::to_string(other.tx_id) + " from source " + std::to_string(other.source)});
      }
    }
  }
  for (std::size_t i = 0; i < trace.packets.size(); ++i) {
    const auto& p = trace.packets[i];
    if (p.collided != overlapped[i]) {
      add({"collision_flag", p.start, p.tx_id, p.source, p.packet_id,
           p.collided ? "marked collided without an overlap" : "overlap not marked as collided"});
    }
  }

  int highest_source = -1;
  for (const auto& s : h.sources) highest_source = std::max(highest_source, s.source);
  std::vector<int> slot_of_source(static_cast<std::size_t>(highest_source + 1), -1);
  for (const auto& s : h.sources) slot_of_source[static_cast<std::size_t>(s.source)] = s.slot;
  for (const auto& r : trace.regimes) {
    std::vector<sim::PacketRecord> in;
    for (const auto& p : trace.packets) {
      if (p.start >= r.t_start && p.start < r.t_end) in.push_back(p);
    }
    const sim::RegimeLabel oracle = brute_force_regime(std::move(in), h.period_s, slot_of_source);
    if (oracle != r.label) {
      add({"regime_label", r.t_start, 0, 0, 0,
           std::string("recorded ") + sim::to_string(r.label) + ", recomputed " + sim::to_string(oracle)});
    }
  }

  const bool unexpected = std::any_of(report.violations.begin(), report.violations.end(),
                                      [](const Violation& v) { return !v.expected; });
  if (unexpected) {
    report.status = VerifyStatus::Fail;
  } else if (!report.violations.empty()) {
    report.status = VerifyStatus::ExpectedFail;
  }
  return report;
}

VerifyReport verify_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  VerifyReport report;
  if (!in) {
    report.status = VerifyStatus::Malformed;
    report.diagnostic = "cannot open " + path.string();
    return report;
  }
  try {
    return verify_trace(read_trace(in));
  } catch (const TraceFormatError& e) {
    report.status = VerifyStatus::Malformed;
    report.diagnostic = path.string() + ":" + e.what();
  }
  return report;
}

std::string VerifyReport::text() const {
  std::ostringstream out;
  out << to_string(status);
  if (status == VerifyStatus::Malformed) {
    out << ": " << diagnostic << '\n';
    return out.str();
  }
  const auto expected = std::count_if(violations.begin(), violations.end(),
                                      [](const Violation& v) { return v.expected; });
  out << ": " << packets << " packets, " << regimes << " regime windows, worst delay "
      << fmt_double(worst_delay_rounds) << " rounds, " << violations.size() << " violations ("
      << expected << " expected)\n";
  std::map<std::string, int> by_kind;
  for (const auto& v : violations) ++by_kind[v.kind];
  for (const auto& [kind, n] : by_kind) out << "  " << kind << ": " << n << '\n';
  std::size_t shown = 0;
  for (const auto& v : violations) {
    if (v.expected && shown >= 20) continue;
    if (shown++ >= 50) break;
    out << "  " << (v.expected ? "expected " : "") << v.kind << " t=" << fmt_double(v.time);
    if (v.tx_id != 0) {
      out << " tx=" << v.tx_id << " source=" << v.source << " packet_id=" << v.packet_id;
    }
    out << ": " << v.detail << '\n';
  }
  return out.str();
}

}  // namespace csmaap::trace
