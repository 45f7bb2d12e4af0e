// Numerical continuous splittings E+ / E- along a controlled trajectory.
//
// E+(t) is approximated by pushing a generic frame forward from t - T and
// re-orthonormalizing step by step; E-(t) by pulling a frame backward from
// t + T through the inverse step maps.  For a uniformly hyperbolic
// trajectory both iterations converge exponentially in T, which is probed
// by comparing against the half-horizon estimate.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "ient/cocycle.hpp"
#include "ient/flow.hpp"
#include "ient/system.hpp"
#include "ient/util.hpp"

namespace ient {

struct Splitting {
  std::vector<double> times;           // control-grid nodes spanning [0, tau]
  std::vector<MatrixXd> plus, minus;   // orthonormal bases per node
  std::vector<MatrixXd> step_mats;     // flow maps between consecutive nodes
  std::vector<VectorXd> states;        // trajectory at the nodes
  int dim_plus = 0, dim_minus = 0;
  double horizon = 0.0;                // T actually used
  double convergence = 0.0;            // max subspace gap vs the T/2 estimate
  double angle_floor = 0.0;            // min principal angle between E+ and E-
  double invariance_defect = 0.0;      // one-step pushforward mismatch
  // back references
  std::optional<ControlSignal> control;
  VectorXd anchor;

  const MatrixXd& plus_at(double t) const { return plus[node(t)]; }
  const MatrixXd& minus_at(double t) const { return minus[node(t)]; }

  std::size_t node(double t) const {
    double step = times.size() > 1 ? times[1] - times[0] : 1.0;
    long k = std::lround(t / step);
    if (k < 0 || k >= static_cast<long>(times.size()) ||
        std::abs(t - k * step) > 1e-6 * step)
      throw ConfigError("time off the splitting grid");
    return static_cast<std::size_t>(k);
  }
};

namespace detail {

// Deterministic generic frame: orthonormalized pseudo-random d x k matrix.
inline MatrixXd generic_frame(int d, int k, std::uint64_t salt) {
  MatrixXd g(d, k);
  std::uint64_t s = 0x9042f1e8c2a9bb4dULL ^ salt;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < k; ++j) {
      s = splitmix64(s);
      g(i, j) = static_cast<double>(s >> 11) * 0x1.0p-53 - 0.5;
    }
  Eigen::HouseholderQR<MatrixXd> qr(g);
  return qr.householderQ() * MatrixXd::Identity(d, k);
}

inline MatrixXd orthonormalize(const MatrixXd& m) {
  Eigen::HouseholderQR<MatrixXd> qr(m);
  return qr.householderQ() * MatrixXd::Identity(m.rows(), m.cols());
}

// Largest principal angle gap between equal-dimensional subspaces, as
// sigma_max(Q2 - Q1 Q1^T Q2) = sin(theta_max).  The projection residual
// stays accurate near alignment, where 1 - cos^2 would cancel.
inline double subspace_gap(const MatrixXd& q1, const MatrixXd& q2) {
  if (q1.cols() == 0 || q2.cols() == 0) return 0.0;
  MatrixXd resid = q2 - q1 * (q1.transpose() * q2);
  Eigen::JacobiSVD<MatrixXd> svd(resid);
  return std::min(1.0, svd.singularValues().maxCoeff());
}

// Smallest principal angle between two subspaces (radians).
inline double min_principal_angle(const MatrixXd& q1, const MatrixXd& q2) {
  if (q1.cols() == 0 || q2.cols() == 0) return M_PI / 2.0;
  Eigen::JacobiSVD<MatrixXd> svd(q1.transpose() * q2);
  double c = std::min(1.0, svd.singularValues().maxCoeff());
  return std::acos(c);
}

}  // namespace detail

// Estimates the splitting along the trajectory through x0 (at time 0) under
// u, on the nodes {0, dt, ..., tau}.  The control must be defined over
// [-T, tau + T]; periodic and constant signals always are.  When `confine`
// is given, the trajectory is required to stay inside it over the whole
// window.
inline Splitting estimate_splitting(const SystemSpec& sys, const VectorXd& x0,
                                    const ControlSignal& u, double tau,
                                    int dim_plus, int dim_minus, double T,
                                    const Region* confine = nullptr,
                                    double h = 0.0) {
  const int d = sys.dim();
  if (dim_plus < 0 || dim_minus < 0 || dim_plus + dim_minus != d)
    throw ConfigError("splitting dimensions must partition the state space");
  if (T <= 0.0) throw ConfigError("iteration horizon must be positive");
  const double step = u.dt();
  const long n_tau = std::lround(tau / step);
  if (n_tau < 0 || std::abs(n_tau * step - tau) > 1e-9 * std::max(1.0, tau))
    throw ConfigError("tau must be a multiple of the control grid step");
  const long n_T = static_cast<long>(std::ceil(T / step - 1e-9));

  // Window [-T, tau + T] around the anchored trajectory.  The part before
  // time 0 is integrated backward from x0 (reintegrating it forward would
  // amplify the backward error exponentially); forward step maps there are
  // the inverses of the backward ones.
  const long n_total = n_T + n_tau + n_T;
  std::vector<VectorXd> states_g(n_total + 1);
  std::vector<MatrixXd> mats_g(n_total);
  StepTransitions fwd =
      step_transitions(sys, x0, u, 0.0, n_tau + n_T, step, h);
  for (long i = n_T; i <= n_total; ++i) states_g[i] = fwd.states[i - n_T];
  for (long i = n_T; i < n_total; ++i) mats_g[i] = fwd.mats[i - n_T];
  if (n_T > 0) {
    StepTransitions bwd = step_transitions(sys, x0, u, 0.0, n_T, -step, h);
    for (long i = 0; i < n_T; ++i) {
      states_g[i] = bwd.states[n_T - i];
      mats_g[i] = Eigen::PartialPivLU<MatrixXd>(bwd.mats[n_T - i - 1])
                      .inverse();
    }
  }
  if (confine) {
    for (const auto& x : states_g)
      if (!confine->contains(x))
        throw NumericalError("trajectory leaves the confinement region "
                             "inside the splitting window");
  }

  Splitting s;
  s.dim_plus = dim_plus;
  s.dim_minus = dim_minus;
  s.horizon = n_T * step;
  s.control = u;
  s.anchor = x0;
  s.times.reserve(n_tau + 1);
  for (long k = 0; k <= n_tau; ++k) s.times.push_back(k * step);
  s.states.assign(states_g.begin() + n_T, states_g.begin() + n_T + n_tau + 1);
  s.step_mats.assign(mats_g.begin() + n_T, mats_g.begin() + n_T + n_tau);

  // forward sweep from -T and from -T/2 for E+
  auto forward_sweep = [&](long start_index) {
    std::vector<MatrixXd> rec(n_tau + 1);
    if (dim_plus == 0) {
      for (auto& m : rec) m = MatrixXd(d, 0);
      return rec;
    }
    MatrixXd q = detail::generic_frame(d, dim_plus, 17);
    for (long k = start_index; k < n_tau; ++k) {
      if (k >= 0) rec[k] = q;
      q = detail::orthonormalize(mats_g[k + n_T] * q);
    }
    rec[n_tau] = q;
    return rec;
  };
  // backward sweep from tau + T and from tau + T/2 for E-
  auto backward_sweep = [&](long start_index) {
    std::vector<MatrixXd> rec(n_tau + 1);
    if (dim_minus == 0) {
      for (auto& m : rec) m = MatrixXd(d, 0);
      return rec;
    }
    MatrixXd q = detail::generic_frame(d, dim_minus, 71);
    for (long k = start_index; k > 0; --k) {
      if (k <= n_tau) rec[k] = q;
      q = detail::orthonormalize(
          Eigen::PartialPivLU<MatrixXd>(mats_g[k - 1 + n_T]).solve(q));
    }
    rec[0] = q;
    return rec;
  };

  s.plus = forward_sweep(-n_T);
  s.minus = backward_sweep(n_tau + n_T);
  auto plus_half = forward_sweep(-((n_T + 1) / 2));
  auto minus_half = backward_sweep(n_tau + (n_T + 1) / 2);

  s.convergence = 0.0;
  for (long k = 0; k <= n_tau; ++k) {
    s.convergence = std::max(
        s.convergence, detail::subspace_gap(s.plus[k], plus_half[k]));
    s.convergence = std::max(
        s.convergence, detail::subspace_gap(s.minus[k], minus_half[k]));
  }

  s.angle_floor = M_PI / 2.0;
  for (long k = 0; k <= n_tau; ++k)
    s.angle_floor = std::min(
        s.angle_floor, detail::min_principal_angle(s.plus[k], s.minus[k]));

  s.invariance_defect = 0.0;
  for (long k = 0; k < n_tau; ++k) {
    if (dim_minus > 0) {
      MatrixXd pushed = detail::orthonormalize(s.step_mats[k] * s.minus[k]);
      s.invariance_defect = std::max(
          s.invariance_defect, detail::subspace_gap(pushed, s.minus[k + 1]));
    }
    if (dim_plus > 0) {
      MatrixXd pulled = detail::orthonormalize(
          Eigen::PartialPivLU<MatrixXd>(s.step_mats[k]).solve(s.plus[k + 1]));
      s.invariance_defect = std::max(
          s.invariance_defect, detail::subspace_gap(pulled, s.plus[k]));
    }
  }
  return s;
}

// Doubles the iteration horizon until the half-horizon probe agrees within
// tol (subspace gap), starting from T0 and capped at T_max.  Throws
// NumericalError when the cap is reached without convergence.
inline Splitting estimate_splitting_auto(const SystemSpec& sys,
                                         const VectorXd& x0,
                                         const ControlSignal& u, double tau,
                                         int dim_plus, int dim_minus,
                                         double tol = 1e-9, double T0 = 12.5,
                                         double T_max = 200.0,
                                         const Region* confine = nullptr,
                                         double h = 0.0) {
  double T = T0;
  Splitting best;
  for (;;) {
    best = estimate_splitting(sys, x0, u, tau, dim_plus, dim_minus, T,
                              confine, h);
    if (best.convergence <= tol) return best;
    if (T >= T_max)
      throw NumericalError("splitting iteration did not converge by T = " +
                           std::to_string(T));
    T = std::min(T_max, 2.0 * T);
  }
}

// ------------------------------------------------------- dimension scan

struct DimScan {
  std::vector<double> exponents;  // finite-time Lyapunov spectrum, descending
  int dim_plus = 0;
  double gap = 0.0;  // spectral gap at the chosen split
};

// Finite-time Lyapunov exponents via the QR method over [0, T]; the split
// is placed at the largest gap, preferring gaps that straddle zero.
inline DimScan detect_dims(const SystemSpec& sys, const VectorXd& x0,
                           const ControlSignal& u, double T, double h = 0.0) {
  const int d = sys.dim();
  long n = std::lround(T / u.dt());
  if (n < 1) throw ConfigError("horizon too short for the dimension scan");
  StepTransitions st = step_transitions(sys, x0, u, 0.0, n, u.dt(), h);
  MatrixXd q = MatrixXd::Identity(d, d);
  VectorXd sums = VectorXd::Zero(d);
  for (const auto& m : st.mats) {
    MatrixXd a = m * q;
    Eigen::HouseholderQR<MatrixXd> qr(a);
    MatrixXd r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i) sums[i] += safe_log(std::abs(r(i, i)));
    q = qr.householderQ() * MatrixXd::Identity(d, d);
  }
  DimScan scan;
  scan.exponents.resize(d);
  for (int i = 0; i < d; ++i) scan.exponents[i] = sums[i] / (n * u.dt());
  std::sort(scan.exponents.begin(), scan.exponents.end(),
            std::greater<double>());
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= d; ++k) {
    double lo = k == d ? -std::numeric_limits<double>::infinity()
                       : scan.exponents[k];
    double hi = k == 0 ? std::numeric_limits<double>::infinity()
                       : scan.exponents[k - 1];
    double gap = k == 0 ? -scan.exponents[0]
               : k == d ? scan.exponents[d - 1]
                        : scan.exponents[k - 1] - scan.exponents[k];
    double score = gap + (lo < 0.0 && 0.0 < hi ? 1e-9 + gap : 0.0);
    if (score > best_score) {
      best_score = score;
      scan.dim_plus = k;
      scan.gap = gap;
    }
  }
  return scan;
}

// ------------------------------------------------ hyperbolicity check

struct HyperbolicityReport {
  bool ok = false;
  double lambda_hat = 0.0;   // min(expansion rate, contraction rate)
  double c_hat = 0.0;        // worst-case constant for the fitted rate
  double lambda_plus = 0.0;  // weakest fitted expansion slope on E+
  double lambda_minus = 0.0; // weakest fitted contraction slope on E-
  // offending (t, v) samples: fitted slope on the wrong side of zero
  std::vector<std::pair<double, VectorXd>> violations;
};

// Probes exponential expansion on E+(0) and contraction on E-(0) along the
// stored trajectory by propagating sample unit vectors and fitting
// log-growth lines.  Sample set: the basis columns plus `extra` seeded
// random unit combinations per subspace.
inline HyperbolicityReport verify_hyperbolicity(const Splitting& s,
                                                double probe_horizon = 0.0,
                                                int extra = 3) {
  HyperbolicityReport rep;
  const std::size_t n = s.step_mats.size();
  if (n == 0) throw ConfigError("splitting carries no step maps to probe");
  const double step = s.times[1] - s.times[0];
  std::size_t n_probe = probe_horizon <= 0.0
      ? n
      : std::min<std::size_t>(n, static_cast<std::size_t>(
            std::lround(probe_horizon / step)));

  auto samples = [&](const MatrixXd& basis, std::uint64_t salt) {
    std::vector<VectorXd> out;
    for (int j = 0; j < basis.cols(); ++j) out.push_back(basis.col(j));
    if (basis.cols() > 1) {
      Rng rng(mix_seed(0xabcdef12, salt));
      for (int e = 0; e < extra; ++e) {
        VectorXd w = VectorXd::Zero(basis.cols());
        for (int j = 0; j < basis.cols(); ++j) w[j] = rng.uniform(-1.0, 1.0);
        if (w.norm() == 0.0) w[0] = 1.0;
        out.push_back((basis * w).normalized());
      }
    }
    return out;
  };

  struct Fit { double slope, intercept; std::vector<double> logs; };
  auto propagate_fit = [&](const VectorXd& v0) {
    Fit f;
    VectorXd v = v0;
    double log_norm = 0.0;
    f.logs.push_back(0.0);
    for (std::size_t k = 0; k < n_probe; ++k) {
      v = s.step_mats[k] * v;
      double nn = v.norm();
      log_norm += safe_log(nn);
      if (nn > 0) v /= nn;
      f.logs.push_back(log_norm);
    }
    // least squares log|v(t)| = intercept + slope t on the probe nodes
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = f.logs.size();
    for (std::size_t k = 0; k < m; ++k) {
      double t = k * step;
      sx += t; sy += f.logs[k]; sxx += t * t; sxy += t * f.logs[k];
    }
    double denom = m * sxx - sx * sx;
    f.slope = denom == 0.0 ? 0.0 : (m * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / m;
    return f;
  };

  std::vector<std::pair<VectorXd, Fit>> plus_fits, minus_fits;
  for (const auto& v : samples(s.plus[0], 1))
    plus_fits.emplace_back(v, propagate_fit(v));
  for (const auto& v : samples(s.minus[0], 2))
    minus_fits.emplace_back(v, propagate_fit(v));

  double lp = std::numeric_limits<double>::infinity();
  double lm = std::numeric_limits<double>::infinity();
  for (auto& [v, f] : plus_fits) {
    lp = std::min(lp, f.slope);
    if (f.slope <= 0.0)
      rep.violations.emplace_back(n_probe * step, v);
  }
  for (auto& [v, f] : minus_fits) {
    lm = std::min(lm, -f.slope);
    if (-f.slope <= 0.0)
      rep.violations.emplace_back(n_probe * step, v);
  }
  rep.lambda_plus = plus_fits.empty() ? std::numeric_limits<double>::infinity() : lp;
  rep.lambda_minus = minus_fits.empty() ? std::numeric_limits<double>::infinity() : lm;
  rep.lambda_hat = std::min(rep.lambda_plus, rep.lambda_minus);
  if (!std::isfinite(rep.lambda_hat)) rep.lambda_hat = 0.0;  // no directions

  // worst-case constant for |Phi v| >= c e^(lambda t) on E+ and
  // |Phi v| <= c^-1 e^(-lambda t) on E-
  double log_c = 0.0;
  for (auto& [v, f] : plus_fits)
    for (std::size_t k = 0; k < f.logs.size(); ++k)
      log_c = std::min(log_c, f.logs[k] - rep.lambda_hat * (k * step));
  for (auto& [v, f] : minus_fits)
    for (std::size_t k = 0; k < f.logs.size(); ++k)
      log_c = std::min(log_c, -(f.logs[k] + rep.lambda_hat * (k * step)));
  rep.c_hat = std::exp(log_c);
  rep.ok = rep.violations.empty() && rep.lambda_hat > 0.0;
  return rep;
}

}  // namespace ient
