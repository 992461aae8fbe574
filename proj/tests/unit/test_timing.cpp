#include <gtest/gtest.h>

#include <vector>

#include "korra/prob/rng.hpp"
#include "korra/timing/timing.hpp"

using namespace korra::timing;
using korra::prob::RngStream;

namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double min = 0.0;
};

Moments draw(IntervalKind kind, const TimingParams& p, std::uint64_t seed, int n) {
  RngStream rng(seed, "timing");
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(sample_interval(kind, p, rng));
  Moments m{0.0, 0.0, xs.front()};
  for (double x : xs) {
    m.mean += x;
    m.min = std::min(m.min, x);
  }
  m.mean /= n;
  for (double x : xs) m.variance += (x - m.mean) * (x - m.mean);
  m.variance /= n - 1;
  return m;
}

}  // namespace

TEST(SampleInterval, SmileMoments) {
  const auto m = draw(IntervalKind::smile, {}, 7, 10000);
  EXPECT_NEAR(m.mean, 12.0, 0.1);
  EXPECT_NEAR(m.variance, 3.0, 0.3);
  EXPECT_GE(m.min, 0.1);
}

TEST(SampleInterval, GazeMoments) {
  const auto m = draw(IntervalKind::gaze_hold, {}, 7, 10000);
  EXPECT_NEAR(m.mean, 7.0, 0.1);
  EXPECT_NEAR(m.variance, 1.2, 0.15);
}

TEST(SampleInterval, PauseMoments) {
  const auto m = draw(IntervalKind::pause_new, {}, 7, 10000);
  EXPECT_NEAR(m.mean, 3.7, 0.05);
  EXPECT_NEAR(m.variance, 0.25, 0.05);
}

TEST(SampleInterval, VarianceIsNotStandardDeviation) {
  // With sd = variance the spread of smile draws would be 9, not 3.
  const auto m = draw(IntervalKind::smile, {}, 11, 10000);
  EXPECT_LT(m.variance, 4.0);
}

TEST(SampleInterval, ZeroVarianceIsDeterministicAndDrawsNothing) {
  TimingParams p;
  p.pause_new = {3.7, 0.0};
  RngStream rng(1, "timing");
  EXPECT_DOUBLE_EQ(sample_interval(IntervalKind::pause_new, p, rng), 3.7);
  EXPECT_EQ(rng.draws(), 0u);
}

TEST(SampleInterval, FloorHoldsForWideDistributions) {
  TimingParams p;
  p.pause_new = {0.2, 4.0};
  p.floor = 0.1;
  RngStream rng(3, "timing");
  for (int i = 0; i < 5000; ++i) EXPECT_GE(sample_interval(IntervalKind::pause_new, p, rng), 0.1);
}

TEST(SampleInterval, ClampsAfterRedraws) {
  TimingParams p;
  p.smile = {-100.0, 1.0};
  RngStream rng(3, "timing");
  EXPECT_DOUBLE_EQ(sample_interval(IntervalKind::smile, p, rng), p.floor);
  EXPECT_EQ(rng.draws(), 2u * kMaxRedraws);
}

TEST(SampleInterval, SameSeedSameSequence) {
  TimingParams p;
  RngStream a(99, "timing"), b(99, "timing");
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample_interval(IntervalKind::response_timeout, p, a),
              sample_interval(IntervalKind::response_timeout, p, b));
  }
}

TEST(Gate, ExtremesConsumeNothing) {
  GateParams g{1.0, 0.0};
  RngStream rng(5, "gates");
  EXPECT_TRUE(gate(GateKind::address_by_name, g, rng));
  EXPECT_FALSE(gate(GateKind::joke_clarify, g, rng));
  EXPECT_EQ(rng.draws(), 0u);
}

TEST(Gate, FrequencyMatchesProbability) {
  GateParams g{0.25, 0.5};
  RngStream rng(5, "gates");
  int hits = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) hits += gate(GateKind::address_by_name, g, rng);
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.25, 0.015);
}
