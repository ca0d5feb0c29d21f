#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "csmaap/mac.hpp"
#include "csmaap/phy.hpp"

using namespace csmaap;
using namespace csmaap::mac;

namespace {

constexpr double kUs = 1e-6;

phy::ChannelConfig quiet_channel() {
  phy::ChannelConfig cfg;
  cfg.iq_noise_rms = 0.0;
  return cfg;
}

phy::IqSamples constant_samples(double i, double q, std::size_t n, double dt) {
  phy::IqSamples s;
  s.dt = dt;
  s.i.assign(n, i);
  s.q.assign(n, q);
  return s;
}

CarrierSenseState state_with_thresholds(double it, double qt) {
  CarrierSenseState cs = make_carrier_sense(CarrierSenseConfig::fixed_position(), 0.0, 0.0);
  cs.i_thresh = it;
  cs.q_thresh = qt;
  return cs;
}

}  // namespace

TEST(ApWindow, FirstSlot) {
  const ApSchedule s{1.0, 5 * kUs, 5 * kUs, 0, 3};
  const ApWindow w = ap_window(s, 100.0);
  EXPECT_DOUBLE_EQ(w.t_s, 100.0);
  EXPECT_DOUBLE_EQ(w.t_e, 100.0 + 5 * kUs);
}

TEST(ApWindow, SecondSlot) {
  const ApSchedule s{1.0, 5 * kUs, 5 * kUs, 1, 3};
  const ApWindow w = ap_window(s, 0.0);
  EXPECT_NEAR(w.t_s, 10 * kUs, 1e-18);
  EXPECT_NEAR(w.t_e, 15 * kUs, 1e-18);
}

TEST(ApWindow, LaggingPpsMakesWindowsOverlap) {
  const ApWindow a = ap_window({1.0, 5 * kUs, 5 * kUs, 0, 3}, 0.0);
  const ApWindow b = ap_window({1.0, 5 * kUs, 5 * kUs, 1, 3}, -12 * kUs);
  EXPECT_LT(std::max(a.t_s, b.t_s), std::min(a.t_e, b.t_e));
  const ApWindow c = ap_window({1.0, 5 * kUs, 5 * kUs, 1, 3}, -40 * kUs);
  EXPECT_LT(c.t_e, a.t_s);
}

TEST(ApSchedule, Validation) {
  EXPECT_THROW((ApSchedule{1.0, 0.0, 5 * kUs, 0, 3}.validate()), InvalidArgument);
  EXPECT_THROW((ApSchedule{1.0, 5 * kUs, 5 * kUs, 3, 3}.validate()), InvalidArgument);
  EXPECT_THROW((ApSchedule{1.0, 0.2, 0.2, 0, 3}.validate()), InvalidArgument);
  EXPECT_NO_THROW((ApSchedule{1.0, 5 * kUs, 5 * kUs, 2, 3}.validate()));
}

TEST(CarrierSense, BothAboveTransmits) {
  const SenseOutcome o = carrier_sense(state_with_thresholds(-1.0, -1.0), constant_samples(0.0, 0.0, 10, 0.1));
  EXPECT_EQ(o.decision.verdict, Verdict::Transmit);
  EXPECT_EQ(o.state.packets_sent, 1u);
  EXPECT_EQ(o.state.i_rec.back(), 0.0);
}

TEST(CarrierSense, QBelowDefers) {
  const SenseOutcome o = carrier_sense(state_with_thresholds(-1.0, -1.0), constant_samples(0.0, -2.0, 10, 0.1));
  EXPECT_EQ(o.decision.verdict, Verdict::Defer);
  EXPECT_NEAR(o.decision.q_acc, -2.0, 1e-12);
  EXPECT_EQ(o.state.packets_sent, 0u);
}

TEST(CarrierSense, NoSamplesIsFailSafeDefer) {
  const SenseOutcome o = carrier_sense(state_with_thresholds(-1e9, -1e9), phy::IqSamples{});
  EXPECT_EQ(o.decision.verdict, Verdict::Defer);
  EXPECT_FALSE(o.decision.diagnostic.empty());
}

TEST(CarrierSense, IdleAccumulationIsPilotTimesDuration) {
  const phy::ChannelConfig cfg = quiet_channel();
  const double d = 5 * kUs;
  const phy::IqSamples s = phy::synthesize_iq(0.0, d, {}, cfg, 1);
  const CarrierSenseState cs = make_carrier_sense(CarrierSenseConfig::fixed_position(), 0.0, 0.0);
  const auto [i_acc, q_acc] = accumulate(cs, s);
  // The idle pilot sits below the DC reference.
  EXPECT_NEAR(i_acc, -cfg.idle_pilot_level * d, 1e-18);
  EXPECT_NEAR(q_acc, -cfg.idle_pilot_level * d, 1e-18);
}

TEST(UpdateThresholds, Arithmetic) {
  CarrierSenseState cs = make_carrier_sense({3, 5.0, 1.5}, 0.0, 0.0);
  cs.i_rec = {2, 2, 2};
  cs.q_rec = {1, 1, 1};
  cs.packets_sent = 2;
  cs = update_thresholds(cs);
  EXPECT_DOUBLE_EQ(cs.i_thresh, 10.0);
  EXPECT_DOUBLE_EQ(cs.q_thresh, 5.0);
}

TEST(UpdateThresholds, GuardBeforeEnoughPackets) {
  CarrierSenseState cs = make_carrier_sense(CarrierSenseConfig::fixed_position(), -3.0, -4.0);
  cs.i_rec.assign(10, 7.0);
  cs.packets_sent = 0;
  const CarrierSenseState out = update_thresholds(cs);
  EXPECT_EQ(out.i_thresh, cs.i_thresh);
  EXPECT_EQ(out.q_thresh, cs.q_thresh);
  EXPECT_DOUBLE_EQ(out.i_thresh, -4.5);
}

TEST(DelayBound, Examples) {
  const ApSchedule s;
  EXPECT_EQ(delay_bound(3, s), 4);
  EXPECT_EQ(delay_bound(1, s), 2);
  EXPECT_THROW(delay_bound(0, s), InvalidArgument);
}

TEST(CarrierSense, RaisingThresholdsNeverEnablesTransmit) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    phy::IqSamples s;
    s.dt = 0.1;
    for (int k = 0; k < 8; ++k) {
      s.i.push_back(n(rng));
      s.q.push_back(n(rng));
    }
    const double it = n(rng);
    const double qt = n(rng);
    const double di = std::abs(n(rng));
    const double dq = std::abs(n(rng));
    const Verdict lo = carrier_sense(state_with_thresholds(it, qt), s).decision.verdict;
    const Verdict hi = carrier_sense(state_with_thresholds(it + di, qt + dq), s).decision.verdict;
    if (lo == Verdict::Defer) {
      EXPECT_EQ(hi, Verdict::Defer);
    }
  }
}

TEST(CarrierSense, OccupiedWindowDefersAfterCalibration) {
  const phy::ChannelConfig cfg = quiet_channel();
  const double d = 5 * kUs;
  const phy::IqSamples idle = phy::synthesize_iq(0.0, d, {}, cfg, 1);
  CarrierSenseState cs0 = make_carrier_sense(CarrierSenseConfig::fixed_position(), 0.0, 0.0);
  const auto [ci, cq] = accumulate(cs0, idle);
  const CarrierSenseState cs = make_carrier_sense(CarrierSenseConfig::fixed_position(), ci, cq);
  EXPECT_EQ(carrier_sense(cs, idle).decision.verdict, Verdict::Transmit);
  const std::vector<phy::Emission> busy{{-1.0, 1.0, 20.0}};
  const phy::IqSamples occupied = phy::synthesize_iq(0.0, d, busy, cfg, 1);
  EXPECT_EQ(carrier_sense(cs, occupied).decision.verdict, Verdict::Defer);
}
