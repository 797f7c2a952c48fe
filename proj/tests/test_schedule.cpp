#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "freecure/schedule.hpp"

using namespace freecure;

namespace {

LatentState scalar(double z, int t) { return {Tensor({1}, std::vector<double>{z}), t}; }
Tensor scalar_eps(double e) { return Tensor({1}, std::vector<double>{e}); }

// Two-step schedule with alpha_bar(1) = 0.81, alpha_bar(2) = 0.25.
NoiseSchedule two_step() { return NoiseSchedule::from_alpha_bar({0.81, 0.25}); }

}  // namespace

TEST(Schedule, SingleStepProduct) {
  const auto s = build_schedule(ScheduleKind::linear, 1);
  ASSERT_EQ(s.alpha_bar().size(), 1u);
  EXPECT_DOUBLE_EQ(s.alpha_bar()[0], 1.0 - 1e-4);
}

TEST(Schedule, LinearFiftyMatchesCumulativeProduct) {
  const auto s = build_schedule(ScheduleKind::linear, 50);
  ASSERT_EQ(s.steps(), 50);
  for (std::size_t i = 1; i < 50; ++i) EXPECT_LT(s.alpha_bar()[i], s.alpha_bar()[i - 1]);
  EXPECT_DOUBLE_EQ(s.alpha_bar()[0], 1.0 - 1e-4);
  // Independent product in long double.
  long double prod = 1.0L;
  for (int i = 0; i < 50; ++i) prod *= 1.0L - (1e-4L + (0.02L - 1e-4L) * i / 49.0L);
  EXPECT_NEAR(s.alpha_bar()[49], static_cast<double>(prod), 1e-14);
  EXPECT_DOUBLE_EQ(s.alpha_bar_at(0), 1.0);
  EXPECT_DOUBLE_EQ(s.alpha_bar_at(50), s.alpha_bar()[49]);
}

TEST(Schedule, RejectsNonPositiveSteps) {
  for (int t : {0, -3}) {
    try {
      build_schedule(ScheduleKind::linear, t);
      FAIL() << "expected error";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
    }
  }
  EXPECT_THROW(NoiseSchedule::from_alpha_bar({0.5, 0.6}), Error);
}

TEST(Ddim, SameTimestepIsIdentity) {
  const auto s = build_schedule(ScheduleKind::linear, 10);
  const auto st = scalar(0.37, 4);
  EXPECT_EQ(ddim_step(st, scalar_eps(0.9), 4, s), st);
}

TEST(Ddim, ScalarExamples) {
  const auto s = two_step();
  // alpha_bar 0.25 -> 1.0, eps 0: x0 = z / 0.5.
  EXPECT_DOUBLE_EQ(ddim_step(scalar(2.0, 2), scalar_eps(0.0), 0, s).z[0], 4.0);
  // 0.25 -> 0.81 with eps 1.
  const double x0 = (2.0 - std::sqrt(0.75)) / 0.5;
  const double want = 0.9 * x0 + std::sqrt(0.19);
  const double got = ddim_step(scalar(2.0, 2), scalar_eps(1.0), 1, s).z[0];
  EXPECT_NEAR(got, want, 1e-12);
  EXPECT_NEAR(got, 2.4770, 5e-5);
  EXPECT_DOUBLE_EQ(ddim_invert_step(scalar(4.0, 0), scalar_eps(0.0), 2, s).z[0], 2.0);
}

TEST(Ddim, Errors) {
  const auto s = two_step();
  try {
    ddim_step(scalar(1.0, 2), Tensor({2}), 1, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
  try {
    ddim_step(scalar(1.0, 2), scalar_eps(std::nan("")), 1, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
  }
  EXPECT_THROW(ddim_step(scalar(1.0, 1), scalar_eps(0.0), 2, s), Error);
  EXPECT_THROW(ddim_invert_step(scalar(1.0, 2), scalar_eps(0.0), 1, s), Error);
}

TEST(Ddim, InvertThenStepRoundTrip) {
  const auto s = build_schedule(ScheduleKind::linear, 50);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int c = 0; c < 1000; ++c) {
    Tensor z({4, 4}), eps({4, 4});
    for (auto& v : z.values()) v = n(rng);
    for (auto& v : eps.values()) v = n(rng);
    const int t0 = static_cast<int>(rng() % 50);
    const int t1 = t0 + 1 + static_cast<int>(rng() % static_cast<unsigned>(50 - t0));
    const LatentState start{z, t0};
    const auto up = ddim_invert_step(start, eps, t1, s);
    const auto back = ddim_step(up, eps, t0, s);
    ASSERT_LE(max_abs_diff(back.z.values(), z.values()), 1e-6) << "case " << c;
  }
}

TEST(Ddim, ZeroToTwentyFiveAndBack) {
  const auto s = build_schedule(ScheduleKind::linear, 50);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor z({4, 4}), eps({4, 4});
  for (auto& v : z.values()) v = n(rng);
  for (auto& v : eps.values()) v = n(rng);
  LatentState st{z, 0};
  for (int t = 1; t <= 25; ++t) st = ddim_invert_step(st, eps, t, s);
  for (int t = 24; t >= 0; --t) st = ddim_step(st, eps, t, s);
  EXPECT_LE(max_abs_diff(st.z.values(), z.values()), 1e-5);
}

TEST(Ddim, Deterministic) {
  const auto s = build_schedule(ScheduleKind::linear, 50);
  const LatentState st = sample_initial_latent(5, {3, 3}, s);
  const Tensor eps({3, 3}, 0.25);
  EXPECT_EQ(ddim_step(st, eps, 10, s), ddim_step(st, eps, 10, s));
}

TEST(InitialLatent, DeterministicPerSeed) {
  const auto s = build_schedule(ScheduleKind::linear, 50);
  const auto a = sample_initial_latent(42, {4, 8, 8}, s);
  EXPECT_EQ(a, sample_initial_latent(42, {4, 8, 8}, s));
  EXPECT_NE(a.z, sample_initial_latent(43, {4, 8, 8}, s).z);
  EXPECT_EQ(a.t, 50);
}

TEST(InitialLatent, StandardNormalMoments) {
  const auto s = build_schedule(ScheduleKind::linear, 50);
  const auto z = sample_initial_latent(0, {10000}, s).z;
  double mean = 0.0;
  for (double v : z.values()) mean += v;
  mean /= 1e4;
  double var = 0.0;
  for (double v : z.values()) var += (v - mean) * (v - mean);
  var /= 1e4;
  EXPECT_NEAR(mean, 0.0, 0.05);
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(GammaToStep, Floors) {
  EXPECT_EQ(gamma_to_step(0.45, 50), 22);
  EXPECT_EQ(gamma_to_step(0.3, 50), 15);
  EXPECT_EQ(gamma_to_step(0.0, 50), 0);
  EXPECT_EQ(gamma_to_step(1.0, 50), 50);
  EXPECT_THROW(gamma_to_step(1.01, 50), Error);
  EXPECT_THROW(gamma_to_step(-0.1, 50), Error);
}
