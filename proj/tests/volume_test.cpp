#include <gtest/gtest.h>

#include <cmath>

#include "ient/volume.hpp"
#include "testbeds.hpp"

using Eigen::MatrixXd;
using ient::bowen_ball_volume;
using ient::ControlSignal;
using testbeds::vec;

namespace {

MatrixXd basis_e1() {
  MatrixXd b(2, 1);
  b << 1.0, 0.0;
  return b;
}

}  // namespace

TEST(BowenVolume, ScalarClosedForm) {
  // dx/dt = x with u = 0: the ball is [-eps e^-tau, eps e^-tau], so the
  // volume is 2 eps e^-tau and the hit fraction e^-tau.
  auto sys = testbeds::scalar_unstable();
  ControlSignal u = ControlSignal::constant(vec(0.0), 0.25);
  for (double tau : {0.5, 1.0, 2.0}) {
    auto est = bowen_ball_volume(sys, u, vec(0.0), tau, 0.2, 40000, 99);
    double exact = 2.0 * 0.2 * std::exp(-tau);
    EXPECT_LE(est.lo, exact) << "tau " << tau;
    EXPECT_GE(est.hi, exact) << "tau " << tau;
    EXPECT_NEAR(est.value, exact, 0.05 * exact) << "tau " << tau;
  }
}

TEST(BowenVolume, SaddleBracketedByAlignedBoxes) {
  // Est must land between the inscribed and circumscribed boxes of the
  // exact ball {max(|y|, |diag(e^1.5t, e^-0.7t) y|) <= eps}.
  auto sys = testbeds::saddle();
  ControlSignal u = ControlSignal::constant(vec(0.0, 0.0), 0.25);
  const double eps = 0.1, tau = 1.0;
  auto est = bowen_ball_volume(sys, u, vec(0.0, 0.0), tau, eps, 60000, 7);
  double lo_box = 2.0 * eps * eps * std::exp(-1.5 * tau);
  double hi_box = 4.0 * eps * eps * std::exp(-1.5 * tau);
  EXPECT_GE(est.hi, lo_box);
  EXPECT_LE(est.lo, hi_box);
  EXPECT_GT(est.hits, 0u);
}

TEST(BowenVolume, ZeroHitsUseRuleOfThree) {
  auto sys = testbeds::saddle();
  ControlSignal u = ControlSignal::constant(vec(0.0, 0.0), 0.25);
  auto est = bowen_ball_volume(sys, u, vec(0.0, 0.0), 12.0, 0.1, 20000, 61);
  ASSERT_EQ(est.hits, 0u);
  EXPECT_DOUBLE_EQ(est.lo, 0.0);
  EXPECT_DOUBLE_EQ(est.hi, 3.0 / 20000 * est.box_volume);
  EXPECT_DOUBLE_EQ(est.value, 0.0);
}

TEST(BowenVolume, DeterministicPerSeed) {
  auto sys = testbeds::scalar_unstable();
  ControlSignal u = ControlSignal::constant(vec(0.0), 0.25);
  auto a = bowen_ball_volume(sys, u, vec(0.0), 1.0, 0.2, 5000, 42);
  auto b = bowen_ball_volume(sys, u, vec(0.0), 1.0, 0.2, 5000, 42);
  auto c = bowen_ball_volume(sys, u, vec(0.0), 1.0, 0.2, 5000, 43);
  EXPECT_EQ(a.hits, b.hits);
  EXPECT_NE(a.hits, c.hits);
}

TEST(VolumeLemma, HyperbolicProductsStayBounded) {
  auto sys = testbeds::saddle();
  ControlSignal u = ControlSignal::constant(vec(0.0, 0.0), 0.25);
  auto rep = ient::volume_lemma_check(sys, u, vec(0.0, 0.0), basis_e1(),
                                      {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}, 0.1,
                                      20000, 11, 3.0);
  EXPECT_TRUE(rep.bounded);
  EXPECT_LE(rep.ratio, 3.0);
  ASSERT_EQ(rep.rows.size(), 6u);
  for (const auto& row : rep.rows) {
    EXPECT_GT(row.lo, 0.0);
    EXPECT_LT(row.lo, row.hi);
  }
  EXPECT_NEAR(rep.rows[3].log_jplus, 1.5 * 2.0, 1e-6);
}

TEST(VolumeLemma, ShearDriftIsFlagged) {
  // Phi = [[1, t], [0, 1]] has no expansion along e1 (J+ = 1) while the
  // ball volume decays like 1/tau, so the product series drifts.
  auto sys = testbeds::shear();
  ControlSignal u = ControlSignal::constant(vec(0.0, 0.0), 0.25);
  auto rep = ient::volume_lemma_check(sys, u, vec(0.0, 0.0), basis_e1(),
                                      {0.5, 2.0, 4.0, 8.0}, 0.1, 20000, 19,
                                      3.0);
  EXPECT_FALSE(rep.bounded);
  EXPECT_GT(rep.ratio, 3.0);
  for (const auto& row : rep.rows) EXPECT_NEAR(row.log_jplus, 0.0, 1e-9);
}

TEST(VolumeLemma, RejectsBadInputs) {
  auto sys = testbeds::scalar_unstable();
  ControlSignal u = ControlSignal::constant(vec(0.0), 0.25);
  MatrixXd b(1, 1);
  b << 1.0;
  EXPECT_THROW(bowen_ball_volume(sys, u, vec(0.0), 1.0, -0.1, 100, 1),
               ient::ConfigError);
  EXPECT_THROW(bowen_ball_volume(sys, u, vec(0.0), 1.0, 0.1, 0, 1),
               ient::ConfigError);
  EXPECT_THROW(
      ient::volume_lemma_check(sys, u, vec(0.0), b, {}, 0.1, 100, 1),
      ient::ConfigError);
  EXPECT_THROW(ient::volume_lemma_check(sys, u, vec(0.0), b, {1.0}, 0.1, 100,
                                        1, 0.5),
               ient::ConfigError);
  EXPECT_THROW(ient::volume_lemma_check(sys, u, vec(0.0), basis_e1(), {1.0},
                                        0.1, 100, 1),
               ient::ConfigError);
}
