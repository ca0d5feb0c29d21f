// End-to-end acceptance checks. Prints one line per criterion and exits
// non-zero when any of them fails. Tolerances are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "csmaap/cli/commands.hpp"
#include "csmaap/cli/presets.hpp"
#include "csmaap/packet.hpp"
#include "csmaap/pair_experiment.hpp"
#include "csmaap/sim.hpp"
#include "csmaap/timesync.hpp"
#include "csmaap/trace_io.hpp"
#include "support/oracles.hpp"

using namespace csmaap;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double kCodecSeconds = 10.0;
constexpr int kCodecPairs = 1000;
constexpr int kTwttExchanges = 10000;
constexpr double kTwttTolerance = 1e-17;  // seconds; double round-off at ms magnitudes
constexpr double kTwttSeconds = 5.0;
constexpr double kDelaySeconds = 60.0;
constexpr double kDelayRounds = 1000.0;
constexpr double kSyncCycles = 1e4;
constexpr double kSyncApSeconds = 4e-6;
constexpr double kCfoBerFloor = 1e-3;
constexpr double kCfoSeparationDecades = 1.0;
constexpr double kAllanSlope = -1.0;
constexpr double kAllanSlopeTolerance = 0.2;
constexpr double kAllanSeconds = 120.0;
constexpr double kAllanRiseDecades = 1.0;
constexpr double kSlowFraction = 0.8;
constexpr double kFastFactor = 2.0;
constexpr double kReflectionTolerance = 0.01;  // metres

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

std::string trace_text(const sim::SimulationResult& r) {
  std::ostringstream os;
  trace::write_trace(os, r);
  return os.str();
}

trace::Trace reread(const sim::SimulationResult& r) {
  std::istringstream in(trace_text(r));
  return trace::read_trace(in);
}

// 1. Frame codec.
Outcome codec() {
  const auto t0 = Clock::now();
  const packet::Frame f = packet::encode_frame(1, 0);
  auto field = [&](std::size_t off, std::size_t width) {
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < width; ++k) v = (v << 1) | (f.bit(off + k) ? 1u : 0u);
    return v;
  };
  bool golden = f.size_bits() == 500000 && f.bit(0) && field(1, 16) == 0xE98A && field(17, 16) == 0xFFAA &&
                field(33, 32) == 499887 && field(65, 16) == 1 && field(81, 16) == 3 && field(97, 16) == 0;
  const auto body = oracle::prbs9(1022);
  for (std::size_t k = 0; k < body.size(); ++k) golden = golden && f.bit(113 + k) == (body[k] != 0);

  std::mt19937 rng(20240601);
  std::uniform_int_distribution<std::uint32_t> u16(0, 0xFFFF);
  int lossless = 0;
  for (int i = 0; i < kCodecPairs; ++i) {
    const std::uint32_t s = u16(rng);
    const std::uint32_t id = u16(rng);
    const packet::Frame e = packet::encode_frame(s, id);
    const packet::DecodedFrame d = packet::decode_frame(e);
    lossless += e.size_bits() == packet::kFrameBits && d.header_valid && d.source == s && d.packet_id == id &&
                d.destination == 3 && d.body_length == 499887 && d.body_error_count == 0;
  }
  const double secs = seconds_since(t0);
  return {golden && lossless == kCodecPairs && secs < kCodecSeconds,
          std::string("golden ") + (golden ? "ok" : "mismatch") + ", " + std::to_string(lossless) + "/" +
              std::to_string(kCodecPairs) + " round trips, " + num(secs, 3) + " s (limit " + num(kCodecSeconds) + " s)"};
}

// 2. Two-way time transfer against the forward model.
Outcome twtt() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> tc(-1e-3, 1e-3);
  std::uniform_real_distribution<double> td(0.0, 1e-3);
  double worst = 0.0;
  for (int i = 0; i < kTwttExchanges; ++i) {
    const double c = tc(rng);
    const double d = td(rng);
    // A's clock is true time; B reads c ahead; B answers on receipt.
    timesync::TimestampExchange ex;
    ex.t_aa = 0.0;
    ex.t_ab = d + c;
    ex.t_bb = d + c;
    ex.t_ba = 2.0 * d;
    const auto o = timesync::twtt_offsets(ex);
    const auto r = timesync::solve_offset_delay(o.t_a, o.t_b);
    worst = std::max({worst, std::abs(r.t_c - c), std::abs(r.t_d - d)});
  }
  const double secs = seconds_since(t0);
  return {worst <= kTwttTolerance && secs < kTwttSeconds,
          std::to_string(kTwttExchanges) + " exchanges, worst error " + num(worst, 3) + " s (tolerance " +
              num(kTwttTolerance) + " s), " + num(secs, 3) + " s"};
}

sim::Scenario star(int n) {
  const sim::Scenario base = cli::triangle_scenario(100 + static_cast<std::uint64_t>(n));
  sim::Scenario s = base;
  s.name = "star" + std::to_string(n);
  s.terminals.clear();
  sim::TerminalConfig bs = base.terminals[0];
  bs.ap_slot = -1;
  s.terminals.push_back(bs);
  for (int k = 0; k < n; ++k) {
    sim::TerminalConfig t = base.terminals[1];
    const double a = kTwoPi * k / n;
    t.name = "sta" + std::to_string(k + 1);
    t.source_id = k + 1;
    t.ap_slot = k;
    t.trajectory = sim::Trajectory::fixed({5.0 * std::cos(a), 5.0 * std::sin(a)});
    t.oscillator.initial_fractional_offset = 52e-6 + 0.075e-6 * k;
    t.oscillator.rng_seed = 10 + static_cast<std::uint64_t>(k);
    s.terminals.push_back(t);
  }
  if (s.terminals[0].source_id <= n) s.terminals[0].source_id = n + 1;
  s.slots_per_cycle = n;
  s.run_duration_s = kDelayRounds * s.period_s + 10.0;
  s.record_sync_series = false;
  return s;
}

// 3. Delay bound for 1..6 saturated stations.
Outcome delay_bound() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (int n = 1; n <= 6; ++n) {
    const sim::SimulationResult r = sim::run_scenario(star(n));
    const trace::VerifyReport rep = trace::verify_trace(reread(r));
    std::set<int> sources;
    for (const auto& p : r.packets) sources.insert(p.source);
    const bool good = rep.status == trace::VerifyStatus::Pass && rep.worst_delay_rounds <= n + 1 &&
                      static_cast<int>(sources.size()) == n;
    ok = ok && good;
    detail += (n > 1 ? ", " : "") + std::string("N=") + std::to_string(n) + " worst " + num(rep.worst_delay_rounds, 4) +
              "/" + std::to_string(n + 1) + (good ? "" : " [" + std::string(trace::to_string(rep.status)) + "]");
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < kDelaySeconds;
  return {ok, detail + " over " + num(kDelayRounds) + " rounds each (brute-force verifier), " + num(secs, 3) + " s"};
}

// 4. No collisions and no post-warm-up errors under sync.
Outcome sync_clean(sim::SimulationResult& keep) {
  sim::Scenario s = cli::triangle_scenario();
  s.ap_duration_s = kSyncApSeconds;
  s.ap_offset_s = kSyncApSeconds;
  s.run_duration_s = kSyncCycles * s.period_s;
  s.record_sync_series = false;
  keep = sim::run_scenario(s);
  int collided = 0;
  int dirty = 0;
  int post = 0;
  for (const auto& p : keep.packets) {
    collided += p.collided;
    if (p.start >= s.warmup_s) {
      ++post;
      dirty += p.ber != 0.0;
    }
  }
  const bool ok = keep.collision_pairs == 0 && collided == 0 && dirty == 0 && post > 0;
  return {ok, std::to_string(keep.collision_pairs) + " collisions, " + std::to_string(dirty) + " of " +
                  std::to_string(post) + " post-warm-up packets with errors, jitter 3 sigma " +
                  num(3 * s.pps_jitter_sigma_s * 1e9) + " ns, AP " + num(kSyncApSeconds * 1e6) + "/" +
                  num(kSyncApSeconds * 1e6) + " us, " + num(kSyncCycles) + " cycles"};
}

// 5. Regime taxonomy under drifting clocks.
Outcome taxonomy(const sim::SimulationResult& r) {
  std::map<sim::RegimeLabel, int> count;
  std::map<sim::RegimeLabel, std::pair<double, double>> band;  // min, max of mean PPS difference
  bool sim_have_collisions = true;
  bool rev_clean = true;
  bool collisions_only_in_sim = true;
  for (const auto& w : r.regimes) {
    ++count[w.label];
    if (std::isfinite(w.mean_pps_difference_s)) {
      auto [it, fresh] = band.try_emplace(w.label, w.mean_pps_difference_s, w.mean_pps_difference_s);
      if (!fresh) {
        it->second.first = std::min(it->second.first, w.mean_pps_difference_s);
        it->second.second = std::max(it->second.second, w.mean_pps_difference_s);
      }
    }
    if (w.label == sim::RegimeLabel::Simultaneous && w.collided_packets == 0) sim_have_collisions = false;
    if (w.label == sim::RegimeLabel::ReversedOrder && w.collided_packets != 0) rev_clean = false;
    if (w.label != sim::RegimeLabel::Simultaneous && w.collided_packets != 0) collisions_only_in_sim = false;
  }
  const int c = count[sim::RegimeLabel::CorrectOrder];
  const int si = count[sim::RegimeLabel::Simultaneous];
  const int rv = count[sim::RegimeLabel::ReversedOrder];
  bool ordered = c > 0 && si > 0 && rv > 0;
  if (ordered) {
    const auto& bc = band[sim::RegimeLabel::CorrectOrder];
    const auto& bs = band[sim::RegimeLabel::Simultaneous];
    const auto& br = band[sim::RegimeLabel::ReversedOrder];
    // Table ordering: correct order above, simultaneous at or below zero, reversed lowest.
    ordered = bs.second <= 0.0 && bs.second < bc.first && br.second < bs.first;
  }
  const bool ok = c > 0 && si > 0 && rv > 0 && sim_have_collisions && rev_clean && collisions_only_in_sim && ordered;
  auto us = [&](sim::RegimeLabel l) {
    const auto it = band.find(l);
    if (it == band.end()) return std::string("none");
    return "[" + num(it->second.first * 1e6, 3) + ", " + num(it->second.second * 1e6, 3) + "] us";
  };
  return {ok, "windows correct " + std::to_string(c) + " " + us(sim::RegimeLabel::CorrectOrder) + ", simultaneous " +
                  std::to_string(si) + " " + us(sim::RegimeLabel::Simultaneous) + ", reversed " + std::to_string(rv) +
                  " " + us(sim::RegimeLabel::ReversedOrder) + "; simultaneous windows all collide: " +
                  (sim_have_collisions ? "yes" : "no") + ", reversed collision-free: " + (rev_clean ? "yes" : "no") +
                  ", collisions outside simultaneous: " + (collisions_only_in_sim ? "none" : "some")};
}

// 6. Frequency offset degradation in correct-order windows.
Outcome cfo(const sim::SimulationResult& desync, const sim::SimulationResult& sync) {
  double min_desync = std::numeric_limits<double>::infinity();
  int n_desync = 0;
  for (const auto& w : desync.regimes) {
    if (w.label != sim::RegimeLabel::CorrectOrder) continue;
    for (const auto& p : desync.packets) {
      if (p.start >= w.t_start && p.start < w.t_end) {
        min_desync = std::min(min_desync, p.ber);
        ++n_desync;
      }
    }
  }
  double max_sync = 0.0;
  for (const auto& p : sync.packets) {
    if (p.start >= sync.scenario.warmup_s) max_sync = std::max(max_sync, p.ber);
  }
  const bool floor_ok = n_desync > 0 && min_desync > kCfoBerFloor;
  const bool separated = max_sync == 0.0 || std::log10(min_desync / max_sync) >= kCfoSeparationDecades;
  return {floor_ok && separated, std::to_string(n_desync) + " correct-order desynchronized packets, lowest BER " +
                                     num(min_desync) + " (floor " + num(kCfoBerFloor) + "); synchronized highest BER " +
                                     num(max_sync)};
}

// 7. Allan deviation slopes.
Outcome allan() {
  const auto t0 = Clock::now();
  const pair::PairSeries d = pair::simulate_pair(cli::allan_config(pair::PairKind::DisciplinedWiWi));
  const pair::PairSeries m = pair::simulate_pair(cli::allan_config(pair::PairKind::RubidiumCrystal));
  const double record = static_cast<double>(d.time_difference_s.size()) * d.sample_interval_s;
  const auto taus = pair::default_taus(d.sample_interval_s, record);
  const auto ad = pair::pair_allan(d, taus);
  const auto am = pair::pair_allan(m, taus);
  const double slope = timebase::loglog_slope(ad, 1.0, 100.0);

  // Longest monotone rise of the mixed pair starting at the first tau >= 1 s.
  std::size_t i0 = 0;
  while (i0 < am.taus_s.size() && am.taus_s[i0] < 1.0 - 1e-9) ++i0;
  std::size_t i1 = i0;
  while (i1 + 1 < am.taus_s.size() && am.deviations[i1 + 1] > am.deviations[i1]) ++i1;
  const double rise = i0 < am.taus_s.size() ? std::log10(am.taus_s[i1] / am.taus_s[i0]) : 0.0;
  const double secs = seconds_since(t0);
  const bool ok = std::abs(slope - kAllanSlope) <= kAllanSlopeTolerance && rise >= kAllanRiseDecades &&
                  secs < kAllanSeconds;
  return {ok, "disciplined slope " + num(slope) + " on [1, 100] s (target " + num(kAllanSlope) + " +- " +
                  num(kAllanSlopeTolerance) + "); mixed pair rises monotonically from " +
                  (i0 < am.taus_s.size() ? num(am.taus_s[i0]) : std::string("-")) + " s to " +
                  (i0 < am.taus_s.size() ? num(am.taus_s[i1]) : std::string("-")) + " s (" + num(rise, 3) +
                  " decades); " + num(record) + " s simulated at " + num(d.sample_interval_s) + " s sampling, " +
                  num(secs, 3) + " s"};
}

sim::Scenario radial(double speed) {
  sim::Scenario s = cli::triangle_scenario(5);
  s.name = "radial";
  s.run_duration_s = 60.0;
  s.terminals[1].trajectory = sim::Trajectory::linear({3.0, 0.0}, {11.0, 0.0}, speed, 1.0);
  return s;
}

// 8. Tracking below and above the speed bound.
Outcome mobility() {
  const timesync::WiWiLinkConfig cfg;
  const double bound = timesync::max_tracking_speed(cfg);
  const double quarter = cfg.wavelength_m / 4.0;
  const sim::Scenario slow_s = radial(kSlowFraction * bound);
  const auto slow = sim::distance_error_series(sim::run_scenario(slow_s), "sta1");
  const sim::Scenario fast_s = radial(kFastFactor * bound);
  const auto fast = sim::distance_error_series(sim::run_scenario(fast_s), "sta1");
  const double start = fast_s.terminals[1].trajectory.start_time_s;
  const double latency = fast.truncated ? fast.lost_at_s - start : std::numeric_limits<double>::infinity();
  const bool ok = !slow.truncated && slow.max_abs_error_m < quarter && fast.truncated &&
                  latency <= cfg.revision_interval_s + 1e-9;
  return {ok, "bound " + num(bound) + " m/s; at " + num(kSlowFraction * bound) + " m/s " +
                  (slow.truncated ? "lost" : "locked") + " for " + num(slow_s.run_duration_s) + " s, max error " +
                  num(slow.max_abs_error_m, 3) + " m (limit " + num(quarter) + " m); at " +
                  num(kFastFactor * bound) + " m/s lost " + num(latency, 3) + " s after motion began (limit " +
                  num(cfg.revision_interval_s) + " s)"};
}

// 9. Reflection-induced distance error, read back from the trace.
Outcome reflection() {
  const sim::Scenario s = cli::mobility_linear_scenario();
  const trace::Trace t = reread(sim::run_scenario(s));
  double worst = 0.0;
  for (const auto& rec : t.telemetry) {
    for (const auto& l : rec.links) {
      if (l.terminal != s.reflection.terminal) continue;
      if (std::isfinite(l.l_d_wiwi) && std::isfinite(l.l_d_truth)) {
        worst = std::max(worst, std::abs(l.l_d_wiwi - l.l_d_truth));
      }
    }
  }
  const double expected = s.reflection.expected_error_m(s.wiwi.carrier_frequency_hz);
  const bool ok = std::abs(worst - expected) <= kReflectionTolerance;
  return {ok, "max |l_d error| in trace " + num(worst, 5) + " m, closed form " + std::to_string(s.reflection.cycles) +
                  " c/(2 f0) = " + num(expected, 5) + " m (tolerance " + num(kReflectionTolerance) + " m)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 10. Every preset twice, all artifacts compared byte for byte.
Outcome determinism() {
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / "csmaap_acceptance_determinism";
  fs::remove_all(root);
  bool ok = true;
  std::size_t files = 0;
  std::string detail;
  for (const auto& preset : cli::preset_names()) {
    std::vector<fs::path> dirs;
    for (const char* run : {"a", "b"}) {
      cli::RunOptions o;
      o.preset = preset;
      o.out = root / run / preset;
      std::ostringstream out;
      std::ostringstream err;
      if (cli::cmd_run(o, out, err) != 0) {
        ok = false;
        detail += " " + preset + " failed: " + err.str();
      }
      dirs.push_back(o.out);
    }
    bool same = fs::exists(dirs[0]);
    std::size_t n = 0;
    if (same) {
      for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
        if (!e.is_regular_file()) continue;
        const fs::path rel = fs::relative(e.path(), dirs[0]);
        same = same && fs::exists(dirs[1] / rel) && slurp(e.path()) == slurp(dirs[1] / rel);
        ++n;
      }
      for (const auto& e : fs::recursive_directory_iterator(dirs[1])) {
        if (e.is_regular_file()) same = same && fs::exists(dirs[0] / fs::relative(e.path(), dirs[1]));
      }
    }
    files += n;
    ok = ok && same && n > 0;
    if (!same) detail += " " + preset + " differs";
  }
  fs::remove_all(root);
  return {ok, std::to_string(cli::preset_names().size()) + " presets run twice, " + std::to_string(files) +
                  " files compared byte for byte" + (detail.empty() ? "" : ";" + detail) + ", " +
                  num(seconds_since(t0), 3) + " s"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const char* name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2d %-22s %s  %s\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  };

  sim::SimulationResult sync;
  sim::SimulationResult desync;
  report(1, "frame codec", codec);
  report(2, "two-way time transfer", twtt);
  report(3, "delay bound", delay_bound);
  report(4, "sync collision-free", [&] { return sync_clean(sync); });
  report(5, "regime taxonomy", [&] {
    desync = sim::run_scenario(cli::desync_scenario());
    return taxonomy(desync);
  });
  report(6, "cfo degradation", [&] { return cfo(desync, sync); });
  report(7, "allan slopes", allan);
  report(8, "mobility tracking", mobility);
  report(9, "reflection error", reflection);
  report(10, "determinism", determinism);
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
