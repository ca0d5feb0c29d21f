#include <benchmark/benchmark.h>

#include <cstdint>
#include <limits>

#include "csmaap/packet.hpp"
#include "csmaap/phy.hpp"
#include "csmaap/sim.hpp"
#include "csmaap/timesync.hpp"

using namespace csmaap;

static void BM_EncodeFrame(benchmark::State& state) {
  std::uint32_t id = 0;
  for (auto _ : state) {
    auto f = packet::encode_frame(1, id++ & 0xFFFF);
    benchmark::DoNotOptimize(f.bytes.data());
  }
}
BENCHMARK(BM_EncodeFrame);

static void BM_DecodeFrame(benchmark::State& state) {
  const auto f = packet::encode_frame(2, 7);
  for (auto _ : state) benchmark::DoNotOptimize(packet::decode_frame(f));
}
BENCHMARK(BM_DecodeFrame);

// Bit-error generation at the two extremes the engine meets: a clean link
// and a jammed frame.
static void BM_BitErrors(benchmark::State& state) {
  const phy::ChannelConfig cfg;
  const bool collided = state.range(0) != 0;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto e = phy::dbpsk_bit_errors(packet::kFrameBits, 400.0, phy::CfoState{}, cfg, seed++, collided);
    benchmark::DoNotOptimize(e.data());
  }
}
BENCHMARK(BM_BitErrors)->Arg(0)->Arg(1);

static void BM_Unwrap(benchmark::State& state) {
  timesync::AmbiguityTracker t;
  t.seed(0.0, 0);
  double truth = 0.0;
  for (auto _ : state) {
    truth += 0.7;
    benchmark::DoNotOptimize(t.observe(timesync::wrap_phase(truth)));
  }
}
BENCHMARK(BM_Unwrap);

static sim::Scenario bench_scenario(double duration) {
  sim::Scenario s;
  s.name = "bench";
  s.run_duration_s = duration;
  s.record_sync_series = false;
  auto add = [&](const char* name, sim::Role role, int source, int slot, sim::Vec2 p, double y) {
    sim::TerminalConfig t;
    t.name = name;
    t.role = role;
    t.source_id = source;
    t.ap_slot = slot;
    t.saturated = role == sim::Role::Station;
    t.trajectory = sim::Trajectory::fixed(p);
    t.oscillator.initial_fractional_offset = y;
    t.oscillator.rng_seed = static_cast<std::uint64_t>(source);
    s.terminals.push_back(t);
  };
  add("bs", sim::Role::BaseStation, 3, -1, {0, 0}, 0.0);
  add("sta1", sim::Role::Station, 1, 0, {5, 0}, 52e-6);
  add("sta2", sim::Role::Station, 2, 1, {2.5, 4.33}, 52.075e-6);
  return s;
}

static void BM_RunScenario(benchmark::State& state) {
  const sim::Scenario s = bench_scenario(static_cast<double>(state.range(0)));
  for (auto _ : state) {
    auto r = sim::run_scenario(s);
    benchmark::DoNotOptimize(r.packets.data());
  }
  state.SetLabel(std::to_string(state.range(0)) + " simulated s");
}
BENCHMARK(BM_RunScenario)->Arg(60)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
