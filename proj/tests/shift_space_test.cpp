#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ient/shift_space.hpp"
#include "testbeds.hpp"

using Eigen::VectorXd;
using ient::Rng;
using ient::SeqWindow;
using ient::seq_distance;
using testbeds::vec;

namespace {

SeqWindow random_window(Rng& rng, long radius) {
  std::vector<VectorXd> items;
  for (long i = -radius; i <= radius; ++i)
    items.push_back(vec(rng.uniform(-1.0, 1.0)));
  return SeqWindow(std::move(items));
}

// window of the shifted periodic base: entry j = base[(pos + j) mod p]
SeqWindow orbit_window(const std::vector<double>& base, long pos, long radius,
                       Rng* noise = nullptr, double amp = 0.0) {
  const long p = static_cast<long>(base.size());
  std::vector<VectorXd> items;
  for (long j = -radius; j <= radius; ++j) {
    long k = (((pos + j) % p) + p) % p;
    double v = base[static_cast<std::size_t>(k)];
    if (noise) v += noise->uniform(-amp, amp);
    items.push_back(vec(v));
  }
  return SeqWindow(std::move(items));
}

}  // namespace

TEST(SeqWindow, BasicsAndShift) {
  SeqWindow w({vec(1.0), vec(2.0), vec(3.0), vec(4.0), vec(5.0)});
  EXPECT_EQ(w.radius(), 2);
  EXPECT_DOUBLE_EQ(w.at(-2)[0], 1.0);
  EXPECT_DOUBLE_EQ(w.at(0)[0], 3.0);
  EXPECT_DOUBLE_EQ(w.at(2)[0], 5.0);
  EXPECT_THROW(w.at(3), ient::ConfigError);

  SeqWindow s = w.shifted_left();
  EXPECT_EQ(s.radius(), 1);
  for (long i = -1; i <= 1; ++i)
    EXPECT_DOUBLE_EQ(s.at(i)[0], w.at(i + 1)[0]);
  EXPECT_THROW(s.shifted_left().shifted_left(), ient::ConfigError);
  EXPECT_THROW(SeqWindow({vec(1.0), vec(2.0)}), ient::ConfigError);
}

TEST(SeqMetric, MatchesBruteForceAndTriangle) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    SeqWindow a = random_window(rng, 8);
    SeqWindow b = random_window(rng, 8);
    SeqWindow c = random_window(rng, 8);
    double d = 0.0;
    for (long i = -8; i <= 8; ++i) {
      double term = (a.at(i) - b.at(i)).norm();
      if (i != 0) term = std::min(term, 1.0 / std::abs(static_cast<double>(i)));
      d = std::max(d, term);
    }
    EXPECT_DOUBLE_EQ(seq_distance(a, b), d);
    EXPECT_DOUBLE_EQ(seq_distance(b, a), d);
    EXPECT_DOUBLE_EQ(seq_distance(a, a), 0.0);
    EXPECT_LE(seq_distance(a, c),
              seq_distance(a, b) + seq_distance(b, c) + 1e-15);
  }
}

TEST(SeqMetric, SmallBallEquivalence) {
  // D(a,b) <= eps exactly when entries within |i| < 1/eps are eps-close
  Rng rng(77);
  const long radius = 16;
  for (int trial = 0; trial < 500; ++trial) {
    SeqWindow a = random_window(rng, radius);
    SeqWindow b = random_window(rng, radius);
    double d = seq_distance(a, b);
    for (double eps : {1.0 / 16, 0.1, 0.2, 0.35, 0.5, 0.8, 1.3}) {
      bool entrywise = true;
      for (long i = -radius; i <= radius; ++i) {
        if (std::abs(i) * eps < 1.0 && (a.at(i) - b.at(i)).norm() > eps)
          entrywise = false;
      }
      EXPECT_EQ(d <= eps, entrywise) << "eps " << eps << " D " << d;
    }
  }
}

TEST(SeqMetric, FarEntriesAreCapped) {
  Rng rng(5);
  SeqWindow a = random_window(rng, 10);
  SeqWindow b = a;
  b.at(7) = vec(1000.0);
  b.at(-9) = vec(-1000.0);
  EXPECT_LE(seq_distance(a, b), 1.0 / 7 + 1e-15);
  EXPECT_NEAR(seq_distance(a, b), 1.0 / 7, 1e-15);
}

TEST(Chains, ExactOrbitHasZeroDefect) {
  Rng rng(31);
  std::vector<double> base;
  for (int i = 0; i < 11; ++i) base.push_back(rng.uniform(-1.0, 1.0));
  std::vector<SeqWindow> chain;
  for (long i = 0; i < 11; ++i) chain.push_back(orbit_window(base, i, 20));
  EXPECT_DOUBLE_EQ(ient::chain_defect(chain, true), 0.0);
  EXPECT_DOUBLE_EQ(ient::shadowing_deviation(chain, true), 0.0);
}

TEST(Chains, NoisyOrbitDefectWithinNoiseBudget) {
  Rng rng(32);
  const double delta = 1e-3;
  std::vector<double> base;
  for (int i = 0; i < 7; ++i) base.push_back(rng.uniform(-1.0, 1.0));
  std::vector<SeqWindow> chain;
  for (long i = 0; i < 7; ++i)
    chain.push_back(orbit_window(base, i, 32, &rng, delta / 2));
  EXPECT_LE(ient::chain_defect(chain, true), delta);
  EXPECT_GT(ient::chain_defect(chain, true), 0.0);
}

TEST(Shadowing, SqrtBoundOnNoisyPeriodicChains) {
  Rng rng(404);
  const long W = 64;
  for (double delta : {1e-2, 1e-4, 1e-6}) {
    for (int trial = 0; trial < 60; ++trial) {
      long p = 3 + static_cast<long>(rng.index(20));
      std::vector<double> base;
      for (long i = 0; i < p; ++i) base.push_back(rng.uniform(-1.0, 1.0));
      std::vector<SeqWindow> chain;
      for (long i = 0; i < p; ++i)
        chain.push_back(orbit_window(base, i, W, &rng, delta / 2));
      ASSERT_LE(ient::chain_defect(chain, true), delta);
      double dev = ient::shadowing_deviation(chain, true);
      EXPECT_LE(dev, std::sqrt(delta) + 1.0 / (W + 1))
          << "period " << p << " delta " << delta;
    }
  }
}

TEST(Shadowing, SpliceBetweenOrbitsIsShadowed) {
  // Chain that rides orbit A, then hops onto orbit B which agrees with A
  // on a block of half-width M around the splice: a (1/(M+1))-chain.
  Rng rng(71);
  const long W = 48, n = 40, k = 19;
  for (long M : {4L, 9L, 24L}) {
    std::vector<double> a, b;
    for (long i = 0; i < n + 2 * W; ++i) {
      a.push_back(rng.uniform(-1.0, 1.0));
      b.push_back(rng.uniform(-1.0, 1.0));
    }
    for (long j = k + 1 - M; j <= k + 1 + M; ++j)
      b[static_cast<std::size_t>(j + W)] = a[static_cast<std::size_t>(j + W)];
    auto window_of = [&](const std::vector<double>& s, long pos) {
      std::vector<VectorXd> items;
      for (long j = -W; j <= W; ++j)
        items.push_back(vec(s[static_cast<std::size_t>(pos + j + W)]));
      return SeqWindow(std::move(items));
    };
    std::vector<SeqWindow> chain;
    for (long i = 0; i < n; ++i)
      chain.push_back(window_of(i <= k ? a : b, i));
    double delta = 1.0 / (M + 1);
    EXPECT_LE(ient::chain_defect(chain, false), delta + 1e-15);
    double dev = ient::shadowing_deviation(chain, false);
    EXPECT_LE(dev, std::sqrt(delta) + 1.0 / (W + 1)) << "M " << M;
  }
}

TEST(Spectrum, DriftFreeBilinearEndpoints) {
  // dx/dt = u x over letters {-1, 0, 1}: growth interval [-1, 1]
  ient::SystemSpec sys(1, 1,
                       {{ient::parse_expr("0", 1)},
                        {ient::parse_expr("x1", 1)}},
                       {{-1.0, 1.0}});
  auto letters = ient::quantize_controls(sys.control_box(), 3);
  auto ladder =
      ient::morse_spectrum(sys, vec(1.0), letters, {0.75, 0.3}, 1);
  ASSERT_EQ(ladder.size(), 2u);
  for (const auto& band : ladder) {
    EXPECT_NEAR(band.lo, -1.0, 1e-6);
    EXPECT_NEAR(band.hi, 1.0, 1e-6);
  }
  EXPECT_GE(ladder[1].lo, ladder[0].lo - 1e-12);
  EXPECT_LE(ladder[1].hi, ladder[0].hi + 1e-12);
}

TEST(Spectrum, MinMatchesPeriodicWordScan) {
  // dx/dt = (A + u I) x with A = diag(1.5, -0.7): top exponent 1.5 + u,
  // so both ends shift with the letter range
  ient::SystemSpec sys(2, 1,
                       {{ient::parse_expr("1.5*x1", 2),
                         ient::parse_expr("-0.7*x2", 2)},
                        {ient::parse_expr("x1", 2),
                         ient::parse_expr("x2", 2)}},
                       {{-1.0, 1.0}});
  auto letters = ient::quantize_controls(sys.control_box(), 3);
  auto ladder =
      ient::morse_spectrum(sys, vec(0.3, 0.4), letters, {0.5}, 1, 0.01);
  ASSERT_EQ(ladder.size(), 1u);
  EXPECT_NEAR(ladder[0].lo, 0.5, 1e-6);
  EXPECT_NEAR(ladder[0].hi, 2.5, 1e-6);
  double lyap =
      ient::min_lyapunov_via_periodic(sys, vec(0.3, 0.4), letters, 3, 0.01);
  EXPECT_NEAR(lyap, ladder[0].lo, 1e-6);
}

TEST(Spectrum, ScalarDriftMinimum) {
  auto sys = testbeds::bilinear();
  auto letters = ient::quantize_controls(sys.control_box(), 5);
  double m1 = ient::min_lyapunov_via_periodic(sys, vec(1.0), letters, 1);
  double m3 = ient::min_lyapunov_via_periodic(sys, vec(1.0), letters, 3);
  EXPECT_NEAR(m1, -0.5, 1e-6);
  EXPECT_NEAR(m3, -0.5, 1e-6);
}

TEST(Spectrum, CycleMeanHandGraph) {
  std::vector<std::vector<std::uint32_t>> succ{{1}, {0}, {2}};
  std::vector<double> w{0.0, 4.0, 3.0};
  EXPECT_DOUBLE_EQ(ient::detail::max_cycle_mean(succ, w), 3.0);
  std::vector<double> neg{0.0, -4.0, -3.0};
  EXPECT_DOUBLE_EQ(-ient::detail::max_cycle_mean(succ, neg), 2.0);
  std::vector<std::vector<std::uint32_t>> dag{{1}, {2}, {}};
  EXPECT_THROW(ient::detail::max_cycle_mean(dag, w), ient::NumericalError);
}

TEST(Spectrum, RejectsBadInputs) {
  auto sys = testbeds::bilinear();
  auto letters = ient::quantize_controls(sys.control_box(), 3);
  EXPECT_THROW(ient::morse_spectrum(sys, vec(1.0), {}, {0.5}, 1),
               ient::ConfigError);
  EXPECT_THROW(ient::morse_spectrum(sys, vec(1.0), letters, {}, 1),
               ient::ConfigError);
  EXPECT_THROW(ient::morse_spectrum(sys, vec(1.0), letters, {-0.1}, 1),
               ient::ConfigError);
  EXPECT_THROW(ient::morse_spectrum(sys, vec(1.0), letters, {0.5}, 0),
               ient::ConfigError);
  auto big = ient::quantize_controls(sys.control_box(), 11);
  EXPECT_THROW(ient::morse_spectrum(sys, vec(1.0), big, {0.5}, 2),
               ient::ConfigError);
}
