#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <queue>
#include <sstream>
#include <unordered_set>

#include "csmaap/packet.hpp"
#include "csmaap/sim.hpp"

namespace csmaap::sim {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string field_error(const std::string& where, const std::string& what) {
  return where + ": " + what;
}

}  // namespace

int Scenario::effective_slots() const {
  if (slots_per_cycle > 0) return slots_per_cycle;
  int highest = -1;
  for (const auto& t : terminals) highest = std::max(highest, t.ap_slot);
  return highest + 1;
}

int Scenario::base_station_index() const {
  for (std::size_t i = 0; i < terminals.size(); ++i) {
    if (terminals[i].role == Role::BaseStation) return static_cast<int>(i);
  }
  return -1;
}

void Scenario::validate() const {
  if (terminals.empty()) throw InvalidArgument("scenario: no terminals defined");
  int base_stations = 0;
  std::unordered_set<std::string> names;
  std::unordered_set<int> sources;
  std::unordered_set<int> slots;
  const int n_slots = effective_slots();
  for (const auto& t : terminals) {
    const std::string where = "terminal " + t.name;
    if (t.name.empty()) throw InvalidArgument("terminal: name must not be empty");
    if (!names.insert(t.name).second) throw InvalidArgument(field_error(where, "duplicate name"));
    if (t.role == Role::BaseStation) ++base_stations;
    if (t.role == Role::Station) {
      if (t.source_id < 0 || t.source_id > 0xFFFF) {
        throw InvalidArgument(field_error(where, "source must fit in 16 bits"));
      }
      if (!sources.insert(t.source_id).second) {
        throw InvalidArgument(field_error(where, "duplicate source id"));
      }
    }
    if (t.ap_slot >= 0) {
      if (!slots.insert(t.ap_slot).second) throw InvalidArgument(field_error(where, "duplicate ap_slot"));
      if (t.ap_slot >= n_slots) throw InvalidArgument(field_error(where, "ap_slot beyond slots_per_cycle"));
    } else if (t.role == Role::Station && t.saturated) {
      throw InvalidArgument(field_error(where, "a transmitting station needs an ap_slot"));
    }
    if (t.role == Role::BaseStation && t.saturated) {
      throw InvalidArgument(field_error(where, "the base station does not originate traffic"));
    }
    if (!std::isfinite(t.initial_time_offset_s) || !std::isfinite(t.tx_power_dbm)) {
      throw InvalidArgument(field_error(where, "offsets and powers must be finite"));
    }
    try {
      t.oscillator.validate();
      t.trajectory.validate();
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(field_error(where, e.what()));
    }
  }
  if (base_stations != 1) throw InvalidArgument("scenario: exactly one base station is required");
  if (!(run_duration_s > 0.0) || !std::isfinite(run_duration_s)) {
    throw InvalidArgument("scenario: run_duration must be positive");
  }
  if (n_slots < 1) throw InvalidArgument("scenario: no AP slots assigned");
  mac::ApSchedule sched{period_s, ap_duration_s, ap_offset_s, 0, n_slots};
  sched.validate();
  if (!(tx_turnaround_s >= 0.0)) throw InvalidArgument("scenario: tx_turnaround must be non-negative");
  if (!(pps_jitter_sigma_s >= 0.0)) throw InvalidArgument("scenario: pps_jitter must be non-negative");
  if (!(telemetry_interval_s > 0.0)) throw InvalidArgument("scenario: telemetry_interval must be positive");
  if (regime_window_cycles < 1) throw InvalidArgument("scenario: regime_window_cycles must be >= 1");
  if (!(calibration_time_s >= 0.0)) throw InvalidArgument("scenario: calibration_time must be non-negative");
  channel.validate();
  wiwi.validate();
  pid.validate();
  carrier_sense.validate();
  if (sync_loss.enabled) {
    if (!sync_loss.terminal.empty() && !names.count(sync_loss.terminal)) {
      throw InvalidArgument("sync_loss: unknown terminal " + sync_loss.terminal);
    }
    if (!(sync_loss.duration_s > 0.0)) throw InvalidArgument("sync_loss: duration must be positive");
  }
  if (reflection.enabled) {
    if (!reflection.terminal.empty() && !names.count(reflection.terminal)) {
      throw InvalidArgument("reflection: unknown terminal " + reflection.terminal);
    }
    if (!(reflection.ramp_s > 0.0)) throw InvalidArgument("reflection: ramp must be positive");
  }
}

namespace {

enum EventKind : int { kClockTick = 0, kTxEnd = 1, kPps = 2, kApEnd = 3, kTelemetry = 4 };

struct Event {
  std::int64_t tick = 0;
  int kind = 0;
  std::uint64_t seq = 0;
  double t = 0.0;
  int terminal = -1;
  std::int64_t k = 0;
  std::uint64_t tx = 0;
  double t_s = 0.0;
  double t_e = 0.0;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    if (a.tick != b.tick) return a.tick > b.tick;
    if (a.kind != b.kind) return a.kind > b.kind;
    return a.seq > b.seq;
  }
};

struct TxInfo {
  PacketRecord rec;
  int terminal = 0;
  double tx_power_dbm = 0.0;
  bool done = false;
};

struct Runtime {
  const TerminalConfig* cfg = nullptr;
  timebase::OscillatorParams osc;
  timebase::ClockState clock;
  Rng jitter_rng;
  std::optional<timesync::WiWiLink> link;
  std::optional<timesync::LinkObservation> last_obs;
  mac::CarrierSenseState cs;
  double busy_until = -std::numeric_limits<double>::infinity();
  double pending_since = 0.0;
  std::uint32_t next_packet_id = 0;
  std::int64_t next_pps_k = 1;
  std::deque<std::pair<std::int64_t, double>> recent_pps;
  double previous_distance = kNan;
};

class Engine {
 public:
  explicit Engine(const Scenario& s) : s_(s) {}

  SimulationResult run() {
    s_.validate();
    result_.scenario = s_;
    setup();
    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      if (ev.t > s_.run_duration_s && ev.kind != kTxEnd) continue;
      switch (ev.kind) {
        case kClockTick: on_tick(ev); break;
        case kTxEnd: on_tx_end(ev); break;
        case kPps: on_pps(ev); break;
        case kApEnd: on_ap_end(ev); break;
        case kTelemetry: on_telemetry(ev); break;
      }
    }
    finish();
    return std::move(result_);
  }

 private:
  void push(Event ev) {
    ev.tick = std::llround(ev.t * 1e9);
    ev.seq = seq_++;
    queue_.push(ev);
  }

  Vec2 position(int i, double t) const { return trajectory_position(rt_[i].cfg->trajectory, t); }

  double link_distance(int a, int b, double t) const {
    return std::max(distance(position(a, t), position(b, t)), 1e-3);
  }

  void setup() {
    bs_ = s_.base_station_index();
    const std::size_t n = s_.terminals.size();
    rt_.resize(n);
    const bool synced = s_.sync_mode == SyncMode::Synchronized;
    for (std::size_t i = 0; i < n; ++i) {
      Runtime& r = rt_[i];
      r.cfg = &s_.terminals[i];
      r.osc = r.cfg->oscillator;
      r.osc.rng_seed = mix_seed(s_.seed, mix_seed(0xC10C + i, r.cfg->oscillator.rng_seed));
      r.clock = timebase::make_clock(r.osc, 0.0, r.cfg->initial_time_offset_s);
      r.jitter_rng = make_rng(s_.seed, 0x7177E + i);
    }
    if (synced) {
      const Runtime& leader = rt_[bs_];
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<int>(i) == bs_) continue;
        Runtime& r = rt_[i];
        timesync::PidController pid = s_.pid;
        pid.interval_s = s_.wiwi.revision_interval_s;
        r.link.emplace(s_.wiwi, pid, s_.link_noise, mix_seed(s_.seed, 0x5000 + i), true);
        if (s_.start_locked) {
          const double rate_offset = r.clock.fractional_frequency - leader.clock.fractional_frequency;
          r.clock.time_error_s = leader.clock.time_error_s;
          r.link->start_locked(rate_offset);
          r.clock.frequency_correction = -rate_offset;
        }
      }
    }
    // Idle calibration window for the carrier-sense thresholds.
    for (std::size_t i = 0; i < n; ++i) {
      Runtime& r = rt_[i];
      const double t0 = s_.calibration_time_s;
      const auto iq = phy::synthesize_iq(t0, t0 + s_.ap_duration_s, {}, s_.channel,
                                         mix_seed(s_.seed, mix_seed(0xCA1, i)));
      const auto [i_acc, q_acc] = mac::accumulate(mac::CarrierSenseState{}, iq);
      r.cs = mac::make_carrier_sense(s_.carrier_sense, i_acc, q_acc);
      r.next_pps_k = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(r.clock.local_time())) + 1);
    }
    schedule_pps(0.0);
    const double T = s_.wiwi.revision_interval_s;
    for (std::int64_t m = 1; m * T <= s_.run_duration_s + 1e-12; ++m) {
      push(Event{.kind = kClockTick, .t = static_cast<double>(m) * T});
    }
    for (std::int64_t m = 0; m * s_.telemetry_interval_s <= s_.run_duration_s + 1e-12; ++m) {
      push(Event{.kind = kTelemetry, .t = static_cast<double>(m) * s_.telemetry_interval_s});
    }
  }

  bool transmits(int i) const {
    const auto& c = *rt_[i].cfg;
    return c.role == Role::Station && c.saturated && c.ap_slot >= 0;
  }

  // Schedules every PPS edge falling before the next clock tick, using the
  // clock state that will hold until then.
  void schedule_pps(double now) {
    const double horizon = now + s_.wiwi.revision_interval_s;
    for (std::size_t i = 0; i < rt_.size(); ++i) {
      if (!transmits(static_cast<int>(i))) continue;
      Runtime& r = rt_[i];
      while (true) {
        const double edge = timebase::pps_edge_for(r.clock, static_cast<double>(r.next_pps_k));
        if (edge > horizon) break;
        Event ev;
        ev.kind = kPps;
        ev.t = std::max(edge, now);
        ev.t_s = edge;
        ev.terminal = static_cast<int>(i);
        ev.k = r.next_pps_k++;
        push(ev);
      }
    }
  }

  double reflection_bias(int i, double t) const {
    const auto& inj = s_.reflection;
    if (!inj.enabled) return 0.0;
    if (!inj.terminal.empty() && inj.terminal != rt_[i].cfg->name) return 0.0;
    if (t < inj.at_s || t >= inj.at_s + inj.ramp_s) return 0.0;
    return kTwoPi * inj.cycles * (t - inj.at_s) / inj.ramp_s;
  }

  bool sync_loss_active(int i, double t) const {
    const auto& inj = s_.sync_loss;
    if (!inj.enabled) return false;
    if (!inj.terminal.empty() && inj.terminal != rt_[i].cfg->name) return false;
    return t >= inj.at_s && t < inj.at_s + inj.duration_s;
  }

  void on_tick(const Event& ev) {
    const double T = s_.wiwi.revision_interval_s;
    for (auto& r : rt_) r.clock = timebase::advance_clock(std::move(r.clock), r.osc, T);
    // advance_clock accumulates dt; pin true time to the grid to avoid drift.
    for (auto& r : rt_) r.clock.true_time_s = ev.t;

    const Runtime& leader = rt_[bs_];
    for (std::size_t i = 0; i < rt_.size(); ++i) {
      Runtime& r = rt_[i];
      if (!r.link) continue;
      const int ii = static_cast<int>(i);
      const double d = link_distance(ii, bs_, ev.t);
      timesync::LinkTruth truth;
      truth.t_c = r.clock.time_error_s - leader.clock.time_error_s;
      truth.distance_m = d;
      truth.radial_speed_mps = std::isfinite(r.previous_distance) ? (d - r.previous_distance) / T : 0.0;
      truth.frequency_difference = r.clock.effective_frequency() - leader.clock.effective_frequency();
      truth.phase_sum_bias_rad = reflection_bias(ii, ev.t);
      r.previous_distance = d;
      if (sync_loss_active(ii, ev.t)) {
        r.link->force_loss();
      } else {
        r.link->restore();
      }
      const bool power_ok = timesync::link_power_ok(d, s_.wiwi, s_.wiwi_path_loss);
      const timesync::LinkObservation obs = r.link->revise(truth, power_ok);
      r.clock.frequency_correction = -obs.correction;
      r.last_obs = obs;
      if (s_.record_sync_series) {
        SyncSample sample;
        sample.time = ev.t;
        sample.terminal = r.cfg->name;
        sample.estimate = obs.estimate;
        sample.mode = obs.mode;
        sample.tracking_lost = obs.tracking_lost;
        sample.t_c_truth = truth.t_c;
        sample.l_d_truth = d;
        result_.sync_series.push_back(sample);
      }
    }
    schedule_pps(ev.t);
  }

  void on_pps(const Event& ev) {
    Runtime& r = rt_[ev.terminal];
    const double edge = ev.t_s;
    timebase::PpsJitter jitter{s_.pps_jitter_sigma_s};
    const double pps_out = jitter.apply(edge, r.jitter_rng);
    r.recent_pps.emplace_back(ev.k, pps_out);
    if (r.recent_pps.size() > 4) r.recent_pps.pop_front();

    mac::ApSchedule sched{s_.period_s, s_.ap_duration_s, s_.ap_offset_s, r.cfg->ap_slot,
                          s_.effective_slots()};
    const mac::ApWindow local = mac::ap_window(sched, 0.0);
    const double rate = 1.0 + r.clock.effective_frequency();
    Event ap;
    ap.kind = kApEnd;
    ap.terminal = ev.terminal;
    ap.k = ev.k;
    ap.t_s = pps_out + local.t_s / rate;
    ap.t_e = pps_out + local.t_e / rate;
    ap.t = std::max(ap.t_e, ev.t);
    push(ap);
  }

  void on_ap_end(const Event& ev) {
    const int i = ev.terminal;
    Runtime& r = rt_[i];
    DecisionRecord rec;
    rec.time = ev.t_e;
    rec.round = ev.k;
    rec.terminal = r.cfg->name;
    rec.i_thresh = r.cs.i_thresh;
    rec.q_thresh = r.cs.q_thresh;
    if (ev.t_e < r.busy_until) {
      rec.verdict = mac::Verdict::Defer;
      rec.diagnostic = "own transmission in progress";
      result_.decisions.push_back(rec);
      return;
    }
    std::vector<phy::Emission> emissions;
    for (const auto& tx : txs_) {
      if (tx.terminal == i) continue;
      if (tx.rec.start > ev.t_e || tx.rec.end + 1e-3 < ev.t_s) continue;
      const double d = link_distance(i, tx.terminal, tx.rec.start);
      const double delay = d / kSpeedOfLight;
      const double snr = phy::link_snr(d, s_.channel, tx.tx_power_dbm);
      emissions.push_back({tx.rec.start + delay, tx.rec.end + delay, phy::sensed_amplitude(snr, s_.channel)});
    }
    const auto seed = mix_seed(s_.seed, mix_seed(static_cast<std::uint64_t>(i) + 0x100,
                                                 static_cast<std::uint64_t>(ev.k)));
    const auto iq = phy::synthesize_iq(ev.t_s, ev.t_e, emissions, s_.channel, seed);
    auto outcome = mac::carrier_sense(std::move(r.cs), iq, ev.k);
    r.cs = std::move(outcome.state);
    rec.verdict = outcome.decision.verdict;
    rec.i_acc = outcome.decision.i_acc;
    rec.q_acc = outcome.decision.q_acc;
    rec.diagnostic = outcome.decision.diagnostic;
    result_.decisions.push_back(rec);
    if (rec.verdict != mac::Verdict::Transmit) return;

    TxInfo tx;
    tx.terminal = i;
    tx.tx_power_dbm = r.cfg->tx_power_dbm;
    PacketRecord& p = tx.rec;
    p.tx_id = next_tx_id_++;
    p.source = r.cfg->source_id;
    p.terminal = r.cfg->name;
    p.packet_id = static_cast<std::uint16_t>(r.next_packet_id & 0xFFFFu);
    r.next_packet_id = (r.next_packet_id + 1) & 0xFFFFu;
    p.round = ev.k;
    p.pending_since = r.pending_since;
    p.start = ev.t_e + s_.tx_turnaround_s;
    const double duration = static_cast<double>(packet::kFrameBits) / s_.channel.symbol_rate /
                            (1.0 + r.clock.effective_frequency());
    p.end = p.start + duration;
    const double prop = link_distance(i, bs_, p.start) / kSpeedOfLight;
    p.arrival_start = p.start + prop;
    p.arrival_end = p.end + prop;
    p.cfo_hz = phy::CfoState::from_references(r.clock.effective_frequency(),
                                              rt_[bs_].clock.effective_frequency(),
                                              s_.channel.carrier_frequency_hz)
                   .delta_f_hz;
    r.busy_until = p.end;
    r.pending_since = p.end;
    Event end;
    end.kind = kTxEnd;
    end.t = p.arrival_end;
    end.tx = p.tx_id;
    push(end);
    txs_.push_back(std::move(tx));
  }

  void on_tx_end(const Event& ev) {
    auto it = std::find_if(txs_.begin(), txs_.end(), [&](const TxInfo& t) { return t.rec.tx_id == ev.tx; });
    if (it == txs_.end()) throw SimulationError("transmission end without a start");
    TxInfo& tx = *it;
    PacketRecord& p = tx.rec;
    for (const auto& other : txs_) {
      if (other.rec.tx_id == p.tx_id) continue;
      const bool overlap = other.rec.arrival_start < p.arrival_end && p.arrival_start < other.rec.arrival_end;
      if (!overlap) continue;
      p.collided = true;
      if (other.done) ++result_.collision_pairs;
    }
    const double mid = 0.5 * (p.start + p.end);
    p.snr = phy::link_snr(link_distance(tx.terminal, bs_, mid), s_.channel, tx.tx_power_dbm);
    const auto errors = phy::dbpsk_bit_errors(packet::kFrameBits, p.snr, phy::CfoState{p.cfo_hz},
                                              s_.channel, mix_seed(s_.seed, 0xE000000 + p.tx_id),
                                              p.collided);
    packet::Frame frame = packet::encode_frame(static_cast<std::uint32_t>(p.source), p.packet_id);
    packet::apply_errors(frame, errors);
    const packet::DecodedFrame decoded = packet::decode_frame(frame);
    p.header_valid = decoded.header_valid;
    p.body_errors = decoded.body_error_count;
    p.ber = packet::packet_ber(decoded);
    tx.done = true;
    result_.packets.push_back(p);
    // Drop finished transmissions that can no longer overlap anything new.
    while (!txs_.empty() && txs_.front().done && txs_.front().rec.arrival_end < ev.t - 2.0 * s_.period_s) {
      txs_.pop_front();
    }
  }

  // Latest local second that both stations have emitted a PPS for.
  double pps_difference() const {
    if (ref_a_ < 0 || ref_b_ < 0) return kNan;
    const auto& a = rt_[ref_a_].recent_pps;
    const auto& b = rt_[ref_b_].recent_pps;
    for (auto ia = a.rbegin(); ia != a.rend(); ++ia) {
      for (auto ib = b.rbegin(); ib != b.rend(); ++ib) {
        if (ia->first == ib->first) return ib->second - ia->second;
      }
    }
    return kNan;
  }

  void pick_reference_pair() {
    std::vector<int> stations;
    for (std::size_t i = 0; i < rt_.size(); ++i) {
      if (transmits(static_cast<int>(i))) stations.push_back(static_cast<int>(i));
    }
    std::sort(stations.begin(), stations.end(),
              [&](int a, int b) { return rt_[a].cfg->ap_slot < rt_[b].cfg->ap_slot; });
    if (stations.size() >= 2) {
      ref_a_ = stations[0];
      ref_b_ = stations[1];
    }
  }

  void on_telemetry(const Event& ev) {
    if (ref_a_ < 0 && ref_b_ < 0) pick_reference_pair();
    TelemetryRecord rec;
    rec.time = ev.t;
    rec.pps_difference_s = pps_difference();
    for (std::size_t i = 0; i < rt_.size(); ++i) {
      const Runtime& r = rt_[i];
      if (static_cast<int>(i) == bs_ || r.cfg->role != Role::Station) continue;
      LinkTelemetry lt;
      lt.terminal = r.cfg->name;
      lt.l_d_truth = distance(position(static_cast<int>(i), ev.t), position(bs_, ev.t));
      if (r.last_obs) {
        lt.mode = r.last_obs->mode;
        lt.t_c = r.last_obs->estimate.t_c;
        lt.l_d_wiwi = r.last_obs->estimate.l_d;
        lt.tracking_lost = r.last_obs->tracking_lost;
      } else {
        lt.mode = r.link ? timesync::LinkMode::Fine : timesync::LinkMode::Lost;
        lt.t_c = kNan;
        lt.l_d_wiwi = kNan;
      }
      rec.links.push_back(lt);
    }
    result_.telemetry.push_back(std::move(rec));
  }

  void finish() {
    auto& packets = result_.packets;
    std::stable_sort(packets.begin(), packets.end(),
                     [](const PacketRecord& a, const PacketRecord& b) { return a.start < b.start; });

    std::vector<int> slot_of_source;
    for (std::size_t i = 0; i < rt_.size(); ++i) {
      if (!transmits(static_cast<int>(i))) continue;
      const auto src = static_cast<std::size_t>(rt_[i].cfg->source_id);
      if (slot_of_source.size() <= src) slot_of_source.resize(src + 1, -1);
      slot_of_source[src] = rt_[i].cfg->ap_slot;
    }
    const double width = s_.regime_window_cycles * s_.period_s;
    for (double t0 = s_.period_s; t0 + width <= s_.run_duration_s + 1e-9; t0 += width) {
      RegimeRecord reg;
      reg.t_start = t0;
      reg.t_end = t0 + width;
      std::vector<PacketRecord> in;
      for (const auto& p : packets) {
        if (p.start >= reg.t_start && p.start < reg.t_end) {
          in.push_back(p);
          if (p.collided) ++reg.collided_packets;
        }
      }
      reg.packets = static_cast<int>(in.size());
      reg.label = classify_regime(in, s_.period_s, slot_of_source);
      double sum = 0.0;
      int count = 0;
      for (const auto& tr : result_.telemetry) {
        if (tr.time >= reg.t_start && tr.time < reg.t_end && std::isfinite(tr.pps_difference_s)) {
          sum += tr.pps_difference_s;
          ++count;
        }
      }
      if (count > 0) reg.mean_pps_difference_s = sum / count;
      result_.regimes.push_back(reg);
    }

    for (std::size_t i = 0; i < rt_.size(); ++i) {
      if (!transmits(static_cast<int>(i))) continue;
      TerminalSummary ts;
      ts.name = rt_[i].cfg->name;
      ts.source = rt_[i].cfg->source_id;
      double ber_sum = 0.0;
      double post_sum = 0.0;
      int post = 0;
      for (const auto& p : packets) {
        if (p.terminal != ts.name) continue;
        ++ts.packets;
        if (p.collided) ++ts.collided;
        ber_sum += p.ber;
        if (p.start >= s_.warmup_s) {
          post_sum += p.ber;
          ++post;
        }
        ts.max_access_delay_rounds = std::max(ts.max_access_delay_rounds, access_delay_rounds(p, s_.period_s));
      }
      if (ts.packets > 0) ts.mean_ber = ber_sum / ts.packets;
      if (post > 0) ts.post_warmup_mean_ber = post_sum / post;
      result_.max_access_delay_rounds = std::max(result_.max_access_delay_rounds, ts.max_access_delay_rounds);
      result_.terminals.push_back(ts);
    }
  }

  Scenario s_;
  SimulationResult result_;
  std::vector<Runtime> rt_;
  int bs_ = -1;
  int ref_a_ = -1;
  int ref_b_ = -1;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t seq_ = 0;
  std::uint64_t next_tx_id_ = 1;
  std::deque<TxInfo> txs_;
};

}  // namespace

SimulationResult run_scenario(const Scenario& s) { return Engine(s).run(); }

}  // namespace csmaap::sim
