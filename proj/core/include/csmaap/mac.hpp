#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "csmaap/common.hpp"
#include "csmaap/phy.hpp"

/// CSMA/AP-T arbitration: AP windows, adaptive carrier sense, delay bound.
namespace csmaap::mac {

struct ApSchedule {
  double period = 1.0;
  double ap_duration = 5e-6;
  double ap_offset = 5e-6;
  int terminal_index = 0;
  int terminals_per_cycle = 3;

  void validate() const;
};

struct ApWindow {
  double t_s = 0.0;
  double t_e = 0.0;
};

/// Window of `sched.terminal_index` in the terminal's local time.
ApWindow ap_window(const ApSchedule& sched, double local_pps_edge);

struct CarrierSenseConfig {
  int n_cs = 10;
  double scale_factor = 2.0;
  /// Initial thresholds are this multiple of an idle calibration accumulation.
  double calibration_factor = 1.5;

  static CarrierSenseConfig fixed_position() { return {10, 2.0, 1.5}; }
  static CarrierSenseConfig mobility() { return {3, 5.0, 1.5}; }
  void validate() const;
};

struct CarrierSenseState {
  std::vector<double> i_rec;
  std::vector<double> q_rec;
  double i_0 = 0.0;
  double q_0 = 0.0;
  double i_thresh = 0.0;
  double q_thresh = 0.0;
  double scale_factor = 2.0;
  std::uint64_t packets_sent = 0;

  int n_cs() const { return static_cast<int>(i_rec.size()); }
};

/// Zeroed record queues and thresholds from an idle calibration window.
CarrierSenseState make_carrier_sense(const CarrierSenseConfig& cfg, double calibration_i_acc,
                                     double calibration_q_acc);

enum class Verdict { Transmit, Defer };

const char* to_string(Verdict v);

struct MacDecision {
  Verdict verdict = Verdict::Defer;
  double i_acc = 0.0;
  double q_acc = 0.0;
  std::int64_t round = 0;
  std::string diagnostic;
};

struct SenseOutcome {
  MacDecision decision;
  CarrierSenseState state;
};

/// Riemann sums of (i - i_0) and (q - q_0) over the samples.
std::pair<double, double> accumulate(const CarrierSenseState& cs, const phy::IqSamples& samples);

/// One pass of the arbitration loop. Transmit iff i_acc > i_thresh and
/// q_acc > q_thresh; on Transmit the records shift, thresholds update and the
/// packet counter advances. An empty sample set is a Defer.
SenseOutcome carrier_sense(CarrierSenseState cs, const phy::IqSamples& samples,
                           std::int64_t round = 0);

/// thresh <- (a / N_cs) * sum(rec) once N_cs - 1 or more packets have been sent.
CarrierSenseState update_thresholds(CarrierSenseState cs);

/// Worst-case rounds before a pending terminal transmits: N + 1.
int delay_bound(int n_terminals, const ApSchedule& sched);

}  // namespace csmaap::mac
