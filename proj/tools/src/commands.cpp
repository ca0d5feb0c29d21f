#include "csmaap/cli/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "csmaap/cli/presets.hpp"
#include "csmaap/cli/scenario_file.hpp"
#include "csmaap/format.hpp"
#include "csmaap/pair_experiment.hpp"
#include "csmaap/trace_io.hpp"

namespace csmaap::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes into a hidden sibling directory and renames it into place on commit.
class StagedDir {
 public:
  explicit StagedDir(fs::path target) : target_(std::move(target)) {
    if (target_.filename().empty()) target_ = target_.parent_path();
    staging_ = target_.parent_path() / ("." + target_.filename().string() + ".partial");
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;
  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  const fs::path& path() const { return staging_; }

  void commit() {
    fs::remove_all(target_);
    fs::rename(staging_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string us(double seconds) { return fmt_double(seconds * 1e6); }

std::string point_name(const std::string& prefix, double value, int width) {
  std::ostringstream o;
  o << prefix << std::setfill('0') << std::setw(width) << static_cast<long long>(std::llround(value));
  return o.str();
}

/// Mean BER over packets started after warm-up, NaN without packets.
double post_warmup_ber(const sim::SimulationResult& r) {
  double sum = 0.0;
  int n = 0;
  for (const auto& p : r.packets) {
    if (p.start >= r.scenario.warmup_s) {
      sum += p.ber;
      ++n;
    }
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

int collided_packets(const sim::SimulationResult& r) {
  int n = 0;
  for (const auto& p : r.packets) n += p.collided ? 1 : 0;
  return n;
}

sim::Scenario adjust(sim::Scenario s, const RunOptions& opts) {
  if (opts.seed) s.seed = *opts.seed;
  if (opts.duration_s) s.run_duration_s = *opts.duration_s;
  return s;
}

sim::SimulationResult run_and_write(const sim::Scenario& s, const fs::path& dir, std::ostream& log) {
  sim::SimulationResult r = sim::run_scenario(s);
  write_run_artifacts(dir, r);
  log << s.name << ": " << r.packets.size() << " packets, " << r.collision_pairs << " collisions, post-warm-up BER "
      << fmt_double(post_warmup_ber(r)) << '\n';
  return r;
}

void run_sync_compare(const RunOptions& opts, const fs::path& dir, std::ostream& log) {
  const std::uint64_t seed = opts.seed.value_or(1);
  std::vector<std::pair<std::string, sim::SimulationResult>> runs;
  sim::Scenario sync = adjust(triangle_scenario(seed), opts);
  sync.name = "sync-compare-synchronized";
  runs.emplace_back("synchronized", run_and_write(sync, dir / "synchronized", log));
  sim::Scenario desync = adjust(desync_scenario(seed), opts);
  desync.name = "sync-compare-desynchronized";
  runs.emplace_back("desynchronized", run_and_write(desync, dir / "desynchronized", log));
  write_file(dir / "summary.csv", [&](std::ostream& o) {
    o << "mode,terminal,packets,collided,mean_ber,post_warmup_mean_ber,max_access_delay_rounds\n";
    for (const auto& [mode, r] : runs) {
      for (const auto& t : r.terminals) {
        o << mode << ',' << t.name << ',' << t.packets << ',' << t.collided << ',' << fmt_double(t.mean_ber) << ','
          << fmt_double(t.post_warmup_mean_ber) << ',' << fmt_double(t.max_access_delay_rounds) << '\n';
      }
    }
  });
  write_file(dir / "plotdata" / "regime_counts.csv", [&](std::ostream& o) {
    o << "mode,label,windows,collided_packets\n";
    for (const auto& [mode, r] : runs) {
      std::map<std::string, std::pair<int, int>> counts;
      for (const auto& g : r.regimes) {
        auto& c = counts[sim::to_string(g.label)];
        ++c.first;
        c.second += g.collided_packets;
      }
      for (const auto& [label, c] : counts) o << mode << ',' << label << ',' << c.first << ',' << c.second << '\n';
    }
  });
}

void run_ap_sweep(const RunOptions& opts, const fs::path& dir, std::ostream& log) {
  struct Row {
    ApSweepPoint point;
    std::size_t packets;
    int collided;
    double ber;
  };
  std::vector<Row> rows;
  for (const auto& point : ap_sweep_points()) {
    sim::Scenario s = adjust(ap_sweep_scenario(point, opts.seed.value_or(1)), opts);
    const double axis_value = point.axis == "duration" ? point.ap_duration_s : point.ap_offset_s;
    const auto r = run_and_write(s, dir / "points" / point_name(point.axis + "_", axis_value * 1e6, 4), log);
    rows.push_back({point, r.packets.size(), collided_packets(r), post_warmup_ber(r)});
  }
  write_file(dir / "summary.csv", [&](std::ostream& o) {
    o << "axis,ap_duration_us,ap_offset_us,packets,collided_packets,mean_ber\n";
    for (const auto& row : rows) {
      o << row.point.axis << ',' << us(row.point.ap_duration_s) << ',' << us(row.point.ap_offset_s) << ','
        << row.packets << ',' << row.collided << ',' << fmt_double(row.ber) << '\n';
    }
  });
  for (const std::string axis : {"duration", "offset"}) {
    write_file(dir / "plotdata" / ("ber_vs_ap_" + axis + ".csv"), [&](std::ostream& o) {
      o << "ap_" << axis << "_us,mean_ber,packets\n";
      for (const auto& row : rows) {
        if (row.point.axis != axis) continue;
        const double v = axis == "duration" ? row.point.ap_duration_s : row.point.ap_offset_s;
        o << us(v) << ',' << fmt_double(row.ber) << ',' << row.packets << '\n';
      }
    });
  }
}

void run_distance_sweep(const RunOptions& opts, const fs::path& dir, std::ostream& log) {
  struct Row {
    double height;
    double distance;
    double wiwi_tx_dbm;
    double snr;
    std::size_t packets;
    double ber;
  };
  std::vector<Row> rows;
  for (double h : distance_sweep_heights()) {
    sim::Scenario s = adjust(distance_sweep_scenario(h, opts.seed.value_or(1)), opts);
    const auto r = run_and_write(s, dir / "points" / point_name("h_", h, 2), log);
    const double d = std::hypot(2.5, h);
    rows.push_back({h, d, s.wiwi.tx_power_dbm, phy::link_snr(d, s.channel, s.terminals[1].tx_power_dbm),
                    r.packets.size(), [&] {
                      double sum = 0.0;
                      int n = 0;
                      for (const auto& p : r.packets) {
                        if (p.terminal == "sta1" && p.start >= s.warmup_s) {
                          sum += p.ber;
                          ++n;
                        }
                      }
                      return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
                    }()});
  }
  write_file(dir / "summary.csv", [&](std::ostream& o) {
    o << "height_m,distance_m,wiwi_tx_power_dbm,sta1_snr_db,packets,sta1_mean_ber\n";
    for (const auto& row : rows) {
      o << fmt_double(row.height) << ',' << fmt_double(row.distance) << ',' << fmt_double(row.wiwi_tx_dbm) << ','
        << fmt_double(10.0 * std::log10(row.snr)) << ',' << row.packets << ',' << fmt_double(row.ber) << '\n';
    }
  });
  write_file(dir / "plotdata" / "ber_vs_distance.csv", [&](std::ostream& o) {
    o << "distance_m,sta1_mean_ber\n";
    for (const auto& row : rows) o << fmt_double(row.distance) << ',' << fmt_double(row.ber) << '\n';
  });
}

void run_allan(const RunOptions& opts, const fs::path& dir, std::ostream& log) {
  const std::vector<pair::PairKind> kinds = {pair::PairKind::FreeRubidium, pair::PairKind::DisciplinedWiWi,
                                             pair::PairKind::RubidiumCrystal};
  std::vector<timebase::AllanResult> results;
  std::vector<double> taus;
  for (auto kind : kinds) {
    pair::PairConfig cfg = allan_config(kind, opts.seed.value_or(1));
    if (opts.duration_s) cfg.duration_s = *opts.duration_s;
    const auto series = pair::simulate_pair(cfg);
    taus = pair::default_taus(cfg.sample_interval_s, cfg.duration_s);
    results.push_back(pair::pair_allan(series, taus));
    write_file(dir / "plotdata" / (std::string("adev_") + pair::to_string(kind) + ".csv"),
               [&](std::ostream& o) { timebase::write_allan_csv(o, results.back()); });
    log << pair::to_string(kind) << ": " << taus.size() << " tau points\n";
  }
  write_file(dir / "plotdata" / "adev.csv", [&](std::ostream& o) {
    o << "tau_s";
    for (auto kind : kinds) o << ',' << pair::to_string(kind);
    o << '\n';
    for (std::size_t i = 0; i < taus.size(); ++i) {
      o << fmt_double(taus[i]);
      for (const auto& r : results) o << ',' << fmt_double(r.deviations[i]);
      o << '\n';
    }
  });
  write_file(dir / "summary.csv", [&](std::ostream& o) {
    o << "pair,slope_1_to_100s,adev_1s,adev_100s\n";
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      const auto& r = results[k];
      auto at = [&](double tau) {
        for (std::size_t i = 0; i < r.taus_s.size(); ++i) {
          if (std::abs(r.taus_s[i] - tau) < 1e-9) return r.deviations[i];
        }
        return std::numeric_limits<double>::quiet_NaN();
      };
      double slope = std::numeric_limits<double>::quiet_NaN();
      if (!r.taus_s.empty() && r.taus_s.back() >= 100.0) slope = timebase::loglog_slope(r, 1.0, 100.0);
      o << pair::to_string(kinds[k]) << ',' << fmt_double(slope) << ',' << fmt_double(at(1.0)) << ','
        << fmt_double(at(100.0)) << '\n';
    }
  });
}

void run_preset(const RunOptions& opts, const fs::path& dir, std::ostream& log) {
  const std::uint64_t seed = opts.seed.value_or(1);
  if (opts.preset == "sync-compare") {
    run_sync_compare(opts, dir, log);
  } else if (opts.preset == "ap-sweep") {
    run_ap_sweep(opts, dir, log);
  } else if (opts.preset == "distance-sweep") {
    run_distance_sweep(opts, dir, log);
  } else if (opts.preset == "mobility-linear") {
    run_and_write(adjust(mobility_linear_scenario(seed), opts), dir, log);
  } else if (opts.preset == "mobility-circular") {
    run_and_write(adjust(mobility_circular_scenario(seed), opts), dir, log);
  } else if (opts.preset == "allan") {
    run_allan(opts, dir, log);
  } else {
    std::string names;
    for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
    throw UsageError("unknown preset '" + opts.preset + "' (known: " + names + ")");
  }
}

fs::path output_dir(const fs::path& requested, const std::string& name) {
  return requested.empty() ? default_output_root() / name : requested;
}

}  // namespace

fs::path default_output_root() {
  const char* env = std::getenv("CSMAAP_OUT");
  return env && *env ? fs::path(env) : fs::path("csmaap-out");
}

void write_run_artifacts(const fs::path& dir, const sim::SimulationResult& r) {
  write_file(dir / "scenario.ini", [&](std::ostream& o) { write_scenario(o, r.scenario); });
  write_file(dir / "trace.jsonl", [&](std::ostream& o) { trace::write_trace(o, r); });
  write_file(dir / "decisions.jsonl", [&](std::ostream& o) { trace::write_decisions(o, r); });
  write_file(dir / "summary.csv", [&](std::ostream& o) { trace::write_summary_csv(o, r); });

  write_file(dir / "plotdata" / "pps_difference.csv", [&](std::ostream& o) {
    o << "time_s,pps_difference_us\n";
    for (const auto& t : r.telemetry) o << fmt_double(t.time) << ',' << us(t.pps_difference_s) << '\n';
  });
  write_file(dir / "plotdata" / "ber.csv", [&](std::ostream& o) {
    o << "time_s,terminal,packet_id,ber,collided,header_valid\n";
    for (const auto& p : r.packets) {
      o << fmt_double(p.start) << ',' << p.terminal << ',' << p.packet_id << ',' << fmt_double(p.ber) << ','
        << (p.collided ? 1 : 0) << ',' << (p.header_valid ? 1 : 0) << '\n';
    }
  });
  write_file(dir / "plotdata" / "regimes.csv", [&](std::ostream& o) {
    o << "t_start_s,t_end_s,label,packets,collided_packets,mean_pps_difference_us\n";
    for (const auto& g : r.regimes) {
      o << fmt_double(g.t_start) << ',' << fmt_double(g.t_end) << ',' << sim::to_string(g.label) << ','
        << g.packets << ',' << g.collided_packets << ',' << us(g.mean_pps_difference_s) << '\n';
    }
  });
  if (r.scenario.sync_mode == sim::SyncMode::Synchronized && r.scenario.record_sync_series) {
    for (const auto& t : r.scenario.terminals) {
      if (t.role != sim::Role::Station) continue;
      write_file(dir / "sync" / (t.name + ".csv"), [&](std::ostream& o) { trace::write_sync_csv(o, r, t.name); });
      const auto err = sim::distance_error_series(r, t.name);
      write_file(dir / "plotdata" / ("distance_error_" + t.name + ".csv"), [&](std::ostream& o) {
        o << "time_s,l_d_error_m\n";
        for (const auto& e : err.samples) o << fmt_double(e.time) << ',' << fmt_double(e.error_m) << '\n';
        if (err.truncated) o << "# tracking lost at " << fmt_double(err.lost_at_s) << " s\n";
      });
    }
  }
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.scenario_path.empty() == opts.preset.empty()) {
      throw UsageError("give either a scenario file or --preset");
    }
    if (opts.duration_s && !(*opts.duration_s > 0.0)) throw UsageError("--duration must be positive");
    if (!opts.preset.empty()) {
      if (!is_preset(opts.preset)) {
        std::string names;
        for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
        throw UsageError("unknown preset '" + opts.preset + "' (known: " + names + ")");
      }
      const fs::path dir = output_dir(opts.out, opts.preset);
      StagedDir staged(dir);
      run_preset(opts, staged.path(), out);
      staged.commit();
      out << "wrote " << dir.string() << '\n';
      return 0;
    }
    const sim::Scenario s = adjust(load_scenario(opts.scenario_path), opts);
    const fs::path dir = output_dir(opts.out, fs::path(opts.scenario_path).stem().string());
    StagedDir staged(dir);
    run_and_write(s, staged.path(), out);
    staged.commit();
    out << "wrote " << dir.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.values.empty()) throw UsageError("--values needs at least one value");
    const fs::path dir = output_dir(opts.out, fs::path(opts.scenario_path).stem().string() + "-sweep");
    struct Row {
      std::string value;
      sim::SimulationResult result;
    };
    std::vector<Row> rows;
    StagedDir staged(dir);
    for (const auto& v : opts.values) {
      sim::Scenario s = load_scenario(opts.scenario_path, {parse_override(opts.param, v)});
      if (opts.seed) s.seed = *opts.seed;
      std::string safe = v;
      for (char& c : safe) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '+') c = '_';
      }
      rows.push_back({v, run_and_write(s, staged.path() / "points" / (opts.param + "=" + safe), out)});
    }
    write_file(staged.path() / "summary.csv", [&](std::ostream& o) {
      o << "param,value,terminal,packets,collided,mean_ber,post_warmup_mean_ber,max_access_delay_rounds\n";
      for (const auto& row : rows) {
        for (const auto& t : row.result.terminals) {
          o << opts.param << ',' << row.value << ',' << t.name << ',' << t.packets << ',' << t.collided << ','
            << fmt_double(t.mean_ber) << ',' << fmt_double(t.post_warmup_mean_ber) << ','
            << fmt_double(t.max_access_delay_rounds) << '\n';
        }
      }
    });
    staged.commit();
    out << "wrote " << dir.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_verify(const fs::path& trace_path, std::ostream& out, std::ostream& err) {
  const trace::VerifyReport report = trace::verify_trace_file(trace_path);
  (report.status == trace::VerifyStatus::Malformed ? err : out) << report.text();
  return trace::exit_code(report.status);
}

}  // namespace csmaap::cli
