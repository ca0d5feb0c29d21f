#include <iostream>

#include <CLI11.hpp>

#include "csmaap/cli/commands.hpp"
#include "csmaap/cli/presets.hpp"

int main(int argc, char** argv) {
  using namespace csmaap::cli;
  CLI::App app{"CSMA/AP-T network simulator over Wi-Wi synchronized clocks"};
  app.require_subcommand(1);

  RunOptions run;
  std::uint64_t run_seed = 0;
  double run_duration = 0.0;
  std::string run_out;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario file or a preset experiment");
  run_cmd->add_option("scenario", run.scenario_path, "Scenario file");
  run_cmd->add_option("--preset", run.preset, "Preset experiment")->check(CLI::IsMember(preset_names()));
  auto* run_seed_opt = run_cmd->add_option("--seed", run_seed, "Override the scenario seed");
  auto* run_duration_opt = run_cmd->add_option("--duration", run_duration, "Override the simulated duration (s)");
  run_cmd->add_option("--out", run_out, "Output directory (default: $CSMAAP_OUT/<name>)");

  std::string trace_path;
  auto* verify_cmd = app.add_subcommand("verify", "Check a trace against the MAC guarantees");
  verify_cmd->add_option("trace", trace_path, "trace.jsonl")->required();

  SweepOptions sweep;
  std::uint64_t sweep_seed = 0;
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a scenario once per value of one parameter");
  sweep_cmd->add_option("scenario", sweep.scenario_path, "Scenario file")->required();
  sweep_cmd->add_option("--param", sweep.param, "Parameter as section.key, e.g. scenario.ap_duration_us")
      ->required();
  sweep_cmd->add_option("--values", sweep.values, "Values to substitute")->required();
  auto* sweep_seed_opt = sweep_cmd->add_option("--seed", sweep_seed, "Override the scenario seed");
  sweep_cmd->add_option("--out", sweep_out, "Output directory");

  app.add_subcommand("presets", "List preset experiments");

  CLI11_PARSE(app, argc, argv);

  if (*run_cmd) {
    if (*run_seed_opt) run.seed = run_seed;
    if (*run_duration_opt) run.duration_s = run_duration;
    run.out = run_out;
    return cmd_run(run, std::cout, std::cerr);
  }
  if (*verify_cmd) return cmd_verify(trace_path, std::cout, std::cerr);
  if (*sweep_cmd) {
    if (*sweep_seed_opt) sweep.seed = sweep_seed;
    sweep.out = sweep_out;
    return cmd_sweep(sweep, std::cout, std::cerr);
  }
  for (const auto& name : preset_names()) std::cout << name << '\n';
  return 0;
}
