#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <variant>
#include <vector>

#include "csmaap/cli/presets.hpp"
#include "csmaap/mac.hpp"
#include "csmaap/packet.hpp"
#include "csmaap/phy.hpp"
#include "csmaap/sim.hpp"
#include "csmaap/timebase.hpp"
#include "csmaap/timesync.hpp"
#include "csmaap/trace_io.hpp"
#include "support/oracles.hpp"

using namespace csmaap;

// --- timebase ---------------------------------------------------------------

TEST(TimebaseProperty, AllanIgnoresConstantAndLinearPhase) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1e-9);
  std::vector<double> x;
  for (int k = 0; k < 3000; ++k) x.push_back(n(rng));
  std::vector<double> shifted = x;
  for (std::size_t k = 0; k < x.size(); ++k) shifted[k] += 5e-6 + 3e-8 * static_cast<double>(k);
  const std::vector<double> taus{1, 2, 5, 10, 20, 50, 100};
  const auto a = timebase::allan_deviation(timebase::PhaseRecord::from_time_errors(1.0, 10e6, x), taus);
  const auto b = timebase::allan_deviation(timebase::PhaseRecord::from_time_errors(1.0, 10e6, shifted), taus);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    EXPECT_GE(a.deviations[i], 0.0);
    EXPECT_NEAR(a.deviations[i], b.deviations[i], 1e-6 * a.deviations[i]);
  }
  const std::vector<double> zero(500, 0.0);
  for (double d : timebase::allan_deviation(timebase::PhaseRecord::from_time_errors(1.0, 10e6, zero), taus).deviations) {
    EXPECT_EQ(d, 0.0);
  }
}

TEST(TimebaseProperty, IdealPpsAtIntegerSeconds) {
  const timebase::OscillatorParams p;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1e4);
  for (int k = 0; k < 1000; ++k) {
    const double t = u(rng);
    if (t == std::floor(t)) continue;
    EXPECT_EQ(timebase::next_pps_edge(timebase::make_clock(p, t), p), std::ceil(t));
  }
}

TEST(TimebaseProperty, DeterministicPath) {
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const timebase::OscillatorParams p = timebase::crystal_preset(seed);
    timebase::ClockState a = timebase::make_clock(p);
    timebase::ClockState b = timebase::make_clock(p);
    for (int k = 0; k < 500; ++k) {
      a = timebase::advance_clock(a, p, 0.01 * (1 + k % 3));
      b = timebase::advance_clock(b, p, 0.01 * (1 + k % 3));
      ASSERT_EQ(a.output_time_error(), b.output_time_error());
    }
  }
}

// --- timesync ---------------------------------------------------------------

TEST(TimesyncProperty, TwttRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> tc(-1e-3, 1e-3);
  std::uniform_real_distribution<double> td(0.0, 1e-3);
  for (int i = 0; i < 10000; ++i) {
    const double c = tc(rng);
    const double d = td(rng);
    const auto o = timesync::twtt_offsets(timesync::simulate_exchange(c, d, 0.0));
    const auto r = timesync::solve_offset_delay(o.t_a, o.t_b);
    ASSERT_NEAR(r.t_c, c, 1e-17);
    ASSERT_NEAR(r.t_d, d, 1e-17);
  }
}

TEST(TimesyncProperty, CarrierPhaseAgreesWithTimestamps) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> tc(-50e-9, 50e-9);
  std::uniform_real_distribution<double> dist(1.0, 14.0);
  const double f0 = 920e6;
  for (int i = 0; i < 1000; ++i) {
    const double c = tc(rng);
    const double d = dist(rng) / kSpeedOfLight;
    const auto o = timesync::twtt_offsets(timesync::simulate_exchange(c, d));
    const double t_c_twtt = timesync::solve_offset_delay(o.t_a, o.t_b).t_c;
    const auto px = timesync::simulate_phase_exchange(c, d, f0);
    // The integer the tracker would settle on: the one nearest the coarse estimate.
    const auto m = timesync::ambiguity_for(px.difference(), 4.0 * kPi * f0 * t_c_twtt);
    EXPECT_LT(std::abs(timesync::twcp_offset(px, m) - t_c_twtt), 1.0 / f0);
    // l_d = c t_d from the same exchange.
    const auto md = timesync::ambiguity_for(px.sum(), -4.0 * kPi * f0 * d);
    EXPECT_NEAR(timesync::estimate_distance(px, md), kSpeedOfLight * d, 1e-9);
  }
}

TEST(TimesyncProperty, TrackerMatchesBruteForceBelowPi) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> step(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    double truth = 0.0;
    timesync::AmbiguityTracker tracker;
    tracker.seed(timesync::wrap_phase(truth), 0);
    for (int k = 0; k < 400; ++k) {
      truth += step(rng);
      const double raw = timesync::wrap_phase(truth);
      const auto r = tracker.observe(raw);
      ASSERT_TRUE(std::holds_alternative<timesync::UnwrappedPhase>(r));
      // Brute force: the integer placing raw + 2 pi m on the true unwrapped phase.
      std::int64_t best = 0;
      double best_err = 1e300;
      for (std::int64_t m = -400; m <= 400; ++m) {
        const double err = std::abs(raw + kTwoPi * static_cast<double>(m) - truth);
        if (err < best_err) {
          best_err = err;
          best = m;
        }
      }
      ASSERT_EQ(tracker.m(), best);
    }
  }
}

// --- mac --------------------------------------------------------------------

TEST(MacProperty, ThresholdUpdateIdempotent) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    mac::CarrierSenseState cs = mac::make_carrier_sense({5, 2.0, 1.5}, u(rng), u(rng));
    for (auto& v : cs.i_rec) v = u(rng);
    for (auto& v : cs.q_rec) v = u(rng);
    cs.packets_sent = static_cast<std::uint64_t>(trial % 8);
    const auto once = mac::update_thresholds(cs);
    const auto twice = mac::update_thresholds(once);
    EXPECT_EQ(once.i_thresh, twice.i_thresh);
    EXPECT_EQ(once.q_thresh, twice.q_thresh);
  }
}

// --- phy --------------------------------------------------------------------

TEST(PhyProperty, OccupancyConsistentOverSeeds) {
  const phy::ChannelConfig cfg;
  const double ap = 5e-6;
  const double amp = phy::sensed_amplitude(phy::link_snr(5.0, cfg, 0.0), cfg);
  const std::vector<phy::Emission> busy{{-1.0, 1.0, amp}};
  const mac::CarrierSenseConfig cs_cfg = mac::CarrierSenseConfig::fixed_position();
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto calib = phy::synthesize_iq(0.0, ap, {}, cfg, seed + 5000);
    const auto [ci, cq] = mac::accumulate(mac::CarrierSenseState{}, calib);
    mac::CarrierSenseState cs = mac::make_carrier_sense(cs_cfg, ci, cq);
    const auto idle = phy::synthesize_iq(0.0, ap, {}, cfg, seed);
    const auto occupied = phy::synthesize_iq(0.0, ap, busy, cfg, seed);
    ASSERT_EQ(mac::carrier_sense(cs, idle).decision.verdict, mac::Verdict::Transmit) << seed;
    ASSERT_EQ(mac::carrier_sense(cs, occupied).decision.verdict, mac::Verdict::Defer) << seed;
    // The same after the record queue has filled with idle accumulations.
    for (int k = 0; k < cs_cfg.n_cs; ++k) {
      cs = mac::carrier_sense(cs, phy::synthesize_iq(0.0, ap, {}, cfg, seed * 31 + k)).state;
    }
    ASSERT_EQ(mac::carrier_sense(cs, occupied).decision.verdict, mac::Verdict::Defer) << seed;
  }
}

TEST(PhyProperty, BerMonotone) {
  const phy::ChannelConfig cfg;
  const std::vector<double> snrs{0.0, 0.1, 0.5, 1, 2, 5, 10, 30, 100};
  for (double theta = 0.0; theta <= kPi / 2 + 1e-12; theta += kPi / 64) {
    const phy::CfoState cfo{theta * cfg.symbol_rate / kTwoPi};
    for (std::size_t k = 1; k < snrs.size(); ++k) {
      EXPECT_LE(phy::dbpsk_error_probability(snrs[k], cfo, cfg), phy::dbpsk_error_probability(snrs[k - 1], cfo, cfg));
    }
  }
  for (double snr : snrs) {
    double prev = 0.0;
    for (double theta = 0.0; theta <= kPi + 1e-12; theta += kPi / 64) {
      const double p = phy::dbpsk_error_probability(snr, phy::CfoState{theta * cfg.symbol_rate / kTwoPi}, cfg);
      EXPECT_GE(p, prev - 1e-15) << snr << " " << theta;
      prev = p;
    }
  }
}

// --- packet -----------------------------------------------------------------

TEST(PacketProperty, RoundTripAndLength) {
  std::mt19937 rng(6);
  std::uniform_int_distribution<std::uint32_t> u16(0, 0xFFFF);
  for (int i = 0; i < 200; ++i) {
    const std::uint32_t s = u16(rng);
    const std::uint32_t id = u16(rng);
    const auto f = packet::encode_frame(s, id);
    ASSERT_EQ(f.size_bits(), packet::kFrameBits);
    const auto d = packet::decode_frame(f);
    ASSERT_EQ(d.source, s);
    ASSERT_EQ(d.packet_id, id);
  }
}

TEST(PacketProperty, BerDependsOnlyOnErrorCount) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<std::uint32_t> pos(packet::kBodyOffset, packet::kFrameBits - 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint32_t> a;
    std::vector<std::uint32_t> b;
    while (a.size() < 40) {
      const auto p = pos(rng);
      if (std::find(a.begin(), a.end(), p) == a.end()) a.push_back(p);
    }
    while (b.size() < 40) {
      const auto p = pos(rng);
      if (std::find(b.begin(), b.end(), p) == b.end()) b.push_back(p);
    }
    auto fa = packet::encode_frame(1, 1);
    auto fb = packet::encode_frame(1, 1);
    packet::apply_errors(fa, a);
    std::shuffle(b.begin(), b.end(), rng);
    packet::apply_errors(fb, b);
    EXPECT_EQ(packet::packet_ber(packet::decode_frame(fa)), packet::packet_ber(packet::decode_frame(fb)));
  }
}

// --- sim --------------------------------------------------------------------

TEST(SimProperty, ClassifierMatchesOracle) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> jitter(0.0, 2e-5);
  std::uniform_int_distribution<int> src(1, 2);
  std::uniform_int_distribution<int> count(0, 7);
  std::uniform_real_distribution<double> len(0.3, 1.2);
  const std::vector<int> slots{-1, 0, 1, -1};
  int labels[4] = {0, 0, 0, 0};
  for (int trial = 0; trial < 5000; ++trial) {
    std::vector<sim::PacketRecord> w;
    double t = 1.0;
    const int n = count(rng);
    for (int k = 0; k < n; ++k) {
      sim::PacketRecord p;
      p.source = src(rng);
      p.start = t + jitter(rng);
      p.end = p.start + len(rng);
      w.push_back(p);
      t += (trial % 3 == 0) ? 1.0 : 1.0 + static_cast<double>(k % 2);
    }
    std::shuffle(w.begin(), w.end(), rng);
    const auto got = sim::classify_regime(w, 1.0, slots);
    ASSERT_EQ(got, oracle::regime(w, 1.0, slots)) << trial;
    ++labels[static_cast<int>(got)];
  }
  for (int l : labels) EXPECT_GT(l, 0);
}

TEST(SimProperty, DeterministicTrace) {
  sim::Scenario s = cli::desync_scenario(4);
  s.run_duration_s = 60.0;
  std::ostringstream a;
  std::ostringstream b;
  trace::write_trace(a, sim::run_scenario(s));
  trace::write_trace(b, sim::run_scenario(s));
  EXPECT_EQ(a.str(), b.str());
  s.seed = 5;
  std::ostringstream c;
  trace::write_trace(c, sim::run_scenario(s));
  EXPECT_NE(a.str(), c.str());
}

TEST(SimProperty, EveryTransmissionIsAccountedFor) {
  for (auto make : {cli::triangle_scenario, cli::desync_scenario}) {
    sim::Scenario s = make(2);
    s.run_duration_s = 120.0;
    const auto r = sim::run_scenario(s);
    std::size_t transmits = 0;
    for (const auto& d : r.decisions) transmits += d.verdict == mac::Verdict::Transmit;
    EXPECT_EQ(transmits, r.packets.size());
    std::vector<std::uint64_t> ids;
    for (const auto& p : r.packets) {
      ids.push_back(p.tx_id);
      EXPECT_TRUE(p.collided || p.header_valid || p.body_errors > 0);
      EXPECT_GE(p.ber, 0.0);
      EXPECT_LE(p.ber, 1.0);
    }
    std::sort(ids.begin(), ids.end());
    EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());
  }
}

TEST(SimProperty, SynchronizedNeverSimultaneousOrReversed) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    sim::Scenario s = cli::triangle_scenario(seed);
    s.ap_duration_s = 4e-6;
    s.ap_offset_s = 4e-6;
    s.run_duration_s = 600.0;
    const auto r = sim::run_scenario(s);
    EXPECT_EQ(r.collision_pairs, 0);
    for (const auto& w : r.regimes) {
      EXPECT_TRUE(w.label == sim::RegimeLabel::CorrectOrder || w.label == sim::RegimeLabel::Unclassified)
          << seed << " " << w.t_start;
    }
  }
}
