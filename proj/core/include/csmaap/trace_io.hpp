#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "csmaap/sim.hpp"

/// Serialized simulation output: the JSONL trace, decision log, CSV summaries,
/// and the trace verifier.
namespace csmaap::trace {

inline constexpr const char* kTraceFormat = "csmaap-trace/1";

struct SourceSlot {
  int source = 0;
  std::string terminal;
  int slot = 0;
};

struct TraceHeader {
  std::string format = kTraceFormat;
  std::string scenario;
  std::string sync_mode;
  std::uint64_t seed = 0;
  double run_duration_s = 0.0;
  double period_s = 1.0;
  int slots = 0;
  double delay_bound_rounds = 0.0;
  /// Violations at or after this time are anticipated by the scenario
  /// (free-running clocks, scripted sync loss). NaN: none are.
  double expected_violations_after_s = std::numeric_limits<double>::quiet_NaN();
  std::vector<SourceSlot> sources;
};

TraceHeader make_header(const sim::SimulationResult& result);

/// One JSON object per line: the header first, then packet, telemetry and
/// regime records in time order.
void write_trace(std::ostream& out, const sim::SimulationResult& result);
void write_decisions(std::ostream& out, const sim::SimulationResult& result);
void write_summary_csv(std::ostream& out, const sim::SimulationResult& result);
/// Per-revision Wi-Wi estimates of one terminal.
void write_sync_csv(std::ostream& out, const sim::SimulationResult& result,
                    const std::string& terminal);

class TraceFormatError : public std::runtime_error {
 public:
  TraceFormatError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Trace {
  TraceHeader header;
  std::vector<sim::PacketRecord> packets;
  std::vector<sim::TelemetryRecord> telemetry;
  std::vector<sim::RegimeRecord> regimes;
};

/// Throws TraceFormatError naming the first bad line.
Trace read_trace(std::istream& in);

enum class VerifyStatus { Pass = 0, Fail = 1, ExpectedFail = 2, Malformed = 3 };

const char* to_string(VerifyStatus s);
inline int exit_code(VerifyStatus s) { return static_cast<int>(s); }

struct Violation {
  std::string kind;  // delay_bound, collision, collision_flag, regime_label
  double time = 0.0;
  std::uint64_t tx_id = 0;
  int source = 0;
  std::uint16_t packet_id = 0;
  std::string detail;
  bool expected = false;
};

struct VerifyReport {
  VerifyStatus status = VerifyStatus::Pass;
  std::size_t packets = 0;
  std::size_t regimes = 0;
  double worst_delay_rounds = 0.0;
  std::vector<Violation> violations;
  std::string diagnostic;  // set for malformed traces

  std::string text() const;
};

VerifyReport verify_trace(const Trace& trace);
VerifyReport verify_trace_file(const std::filesystem::path& path);

}  // namespace csmaap::trace
