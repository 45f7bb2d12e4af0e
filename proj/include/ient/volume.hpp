// Monte Carlo volume of Bowen balls and the bounded-product consistency
// check against the unstable determinant.
//
// B(x, tau, eps) = { y : |phi(t, y, u) - phi(t, x, u)| <= eps on [0, tau] }
// is sampled hit-or-miss from the box x + [-eps, eps]^d, which contains it.
// Along a uniformly hyperbolic trajectory the products
// vol(B(x, tau, eps)) * J+(tau) stay within constants of each other over
// tau; the report flags series whose interval ratio exceeds a threshold.
#pragma once

#include <cstdint>
#include <vector>

#include "ient/cocycle.hpp"
#include "ient/flow.hpp"
#include "ient/system.hpp"
#include "ient/util.hpp"

namespace ient {

struct VolumeEstimate {
  double tau = 0.0;
  double eps = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t hits = 0;
  double box_volume = 0.0;
  double value = 0.0;  // hit fraction times box volume
  double lo = 0.0;     // two-standard-error band; rule of three at 0 hits
  double hi = 0.0;
};

inline VolumeEstimate bowen_ball_volume(const SystemSpec& sys,
                                        const ControlSignal& u,
                                        const VectorXd& x, double tau,
                                        double eps, std::uint64_t samples,
                                        std::uint64_t seed, double h = 0.0) {
  if (eps <= 0.0) throw ConfigError("tube radius must be positive");
  if (samples == 0) throw ConfigError("volume estimate needs samples");
  const int d = sys.dim();
  FlowSegment ref = integrate(sys, x, u, tau, false, h);

  VolumeEstimate est;
  est.tau = tau;
  est.eps = eps;
  est.samples = samples;
  est.box_volume = std::pow(2.0 * eps, d);
  Rng rng(seed);
  VectorXd y(d);
  for (std::uint64_t n = 0; n < samples; ++n) {
    for (int i = 0; i < d; ++i) y[i] = x[i] + rng.uniform(-eps, eps);
    if (!bowen_exceeds(sys, u, ref, y, eps)) ++est.hits;
  }
  const double N = static_cast<double>(samples);
  const double p = static_cast<double>(est.hits) / N;
  est.value = p * est.box_volume;
  if (est.hits == 0) {
    est.lo = 0.0;
    est.hi = 3.0 / N * est.box_volume;  // rule of three
  } else {
    double se = std::sqrt(p * (1.0 - p) / N);
    est.lo = std::max(0.0, p - 2.0 * se) * est.box_volume;
    est.hi = std::min(1.0, p + 2.0 * se) * est.box_volume;
  }
  return est;
}

struct VolumeLemmaRow {
  VolumeEstimate vol;
  double log_jplus = 0.0;  // unstable log determinant over [0, tau]
  double lo = 0.0;         // vol interval scaled by J+
  double hi = 0.0;
};

struct VolumeLemmaReport {
  std::vector<VolumeLemmaRow> rows;
  double ratio = 1.0;  // max(1, largest lower bound / smallest upper bound)
  double threshold = 0.0;
  bool bounded = false;
};

// Checks that vol(B(x, tau, eps)) * J+(tau) is bounded above and below by
// a common constant across the tau grid, up to Monte Carlo error: the
// two-standard-error intervals must not force a spread beyond `threshold`.
inline VolumeLemmaReport volume_lemma_check(
    const SystemSpec& sys, const ControlSignal& u, const VectorXd& x,
    const MatrixXd& plus_basis, const std::vector<double>& taus, double eps,
    std::uint64_t samples, std::uint64_t seed, double threshold = 10.0,
    double h = 0.0) {
  if (taus.empty()) throw ConfigError("volume series needs horizons");
  if (threshold < 1.0) throw ConfigError("spread threshold must be >= 1");
  if (plus_basis.rows() != sys.dim())
    throw ConfigError("subspace basis has wrong row count");
  VolumeLemmaReport rep;
  rep.threshold = threshold;
  double max_lo = 0.0;
  double min_hi = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < taus.size(); ++i) {
    VolumeLemmaRow row;
    row.vol = bowen_ball_volume(sys, u, x, taus[i], eps, samples,
                                mix_seed(seed, i), h);
    row.log_jplus = unstable_log_det(sys, x, u, taus[i], plus_basis, h);
    double j = std::exp(row.log_jplus);
    row.lo = row.vol.lo * j;
    row.hi = row.vol.hi * j;
    max_lo = std::max(max_lo, row.lo);
    min_hi = std::min(min_hi, row.hi);
    rep.rows.push_back(std::move(row));
  }
  rep.ratio = min_hi > 0.0 ? std::max(1.0, max_lo / min_hi)
                           : std::numeric_limits<double>::infinity();
  rep.bounded = rep.ratio <= threshold;
  return rep;
}

}  // namespace ient
