#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "csmaap/sim.hpp"

namespace csmaap::cli {

/// $CSMAAP_OUT when set, otherwise ./csmaap-out.
std::filesystem::path default_output_root();

struct RunOptions {
  std::string scenario_path;  // exactly one of scenario_path and preset
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_s;
  std::filesystem::path out;  // empty: default_output_root() / name
};

struct SweepOptions {
  std::string scenario_path;
  std::string param;  // section.key
  std::vector<std::string> values;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;
};

/// Exit status 0 on success, 1 on bad input. Output directories appear
/// complete or not at all.
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);

/// Exit status: 0 pass, 1 unexpected violations, 2 only anticipated
/// violations, 3 unreadable or malformed trace.
int cmd_verify(const std::filesystem::path& trace_path, std::ostream& out, std::ostream& err);

/// scenario.ini, trace.jsonl, decisions.jsonl, summary.csv, sync/ and plotdata/.
void write_run_artifacts(const std::filesystem::path& dir, const sim::SimulationResult& result);

}  // namespace csmaap::cli
