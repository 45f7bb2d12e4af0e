// Growth cocycles along controlled trajectories.
//
// exterior_norm(M) is max_{1<=j<=d} sigma_1(M) ... sigma_j(M): the largest
// operator norm among the induced maps on the exterior powers of R^d.  The
// trace alpha(t) = log+ exterior_norm(Phi(t)) is subadditive along the flow
// and drives the upper entropy route; the determinant cocycle restricted to
// an unstable subspace drives the lower route.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "ient/flow.hpp"
#include "ient/system.hpp"
#include "ient/util.hpp"

namespace ient {

// ---------------------------------------------------------- exterior norm

struct ExteriorNorm {
  double value = 0.0;     // the norm itself (may overflow to inf)
  double log_value = 0.0; // exact log of the norm
  int order = 0;          // smallest j attaining the maximum
};

inline ExteriorNorm exterior_norm(const MatrixXd& m) {
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  ExteriorNorm out;
  double acc = 0.0, best = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < s.size(); ++j) {
    acc += safe_log(s[j]);
    if (acc > best) {  // ties keep the smallest order
      best = acc;
      out.order = j + 1;
    }
  }
  out.log_value = best;
  out.value = std::exp(best);
  return out;
}

// ------------------------------------------------------------- trace type

struct CocycleTrace {
  std::vector<double> times;
  std::vector<double> values;

  double back() const { return values.back(); }
  // Average slope over the final node, values(b)/t(b).
  double rate() const {
    return times.back() == 0.0 ? 0.0 : values.back() / times.back();
  }
};

// -------------------------------------------------------------- alpha

// alpha(t_k) = log+ ||Phi(t_k)^wedge|| at every integrator node.
inline CocycleTrace alpha_trace(const SystemSpec& sys, const VectorXd& x0,
                                const ControlSignal& u, double tau,
                                double h = 0.0) {
  FlowSegment seg = integrate(sys, x0, u, tau, true, h);
  CocycleTrace tr;
  tr.times = seg.times;
  tr.values.reserve(seg.fundamentals.size());
  for (const auto& phi : seg.fundamentals)
    tr.values.push_back(std::max(0.0, exterior_norm(phi).log_value));
  return tr;
}

inline double alpha(const SystemSpec& sys, const VectorXd& x0,
                    const ControlSignal& u, double tau, double h = 0.0) {
  if (tau == 0.0) return 0.0;
  return alpha_trace(sys, x0, u, tau, h).back();
}

// Long-horizon growth rate alpha(T)/T computed from per-control-step
// fundamental matrices with running rescaling, so it stays finite for
// horizons where the fundamental matrix itself would overflow.
inline double exterior_growth_rate(const SystemSpec& sys, const VectorXd& x0,
                                   const ControlSignal& u, double T,
                                   double h = 0.0) {
  if (T <= 0.0) throw ConfigError("horizon must be positive");
  long n = std::lround(T / u.dt());
  if (n < 1 || std::abs(n * u.dt() - T) > 1e-9 * T)
    throw ConfigError("horizon must be a multiple of the control grid step");
  StepTransitions st = step_transitions(sys, x0, u, 0.0, n, u.dt(), h);
  MatrixXd m = MatrixXd::Identity(sys.dim(), sys.dim());
  double log_scale = 0.0;
  for (const auto& mk : st.mats) {
    m = mk * m;
    double nrm = m.norm();
    if (nrm > 1e100 || (nrm > 0 && nrm < 1e-100)) {
      m /= nrm;
      log_scale += std::log(nrm);
    }
  }
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  double acc = 0.0, best = 0.0;  // j = 0 term realizes the log+ clamp
  for (int j = 0; j < s.size(); ++j) {
    acc += safe_log(s[j]) + log_scale;
    best = std::max(best, acc);
  }
  return best / T;
}

// ----------------------------------------------------------- determinant

// log |det| of the flow restricted to the subspace spanned by basis (or the
// whole space when basis is empty), accumulated one integrator step at a
// time through QR re-orthonormalization.  values[k] is exactly additive
// across concatenation by construction.
inline CocycleTrace det_trace(const SystemSpec& sys, const VectorXd& x0,
                              const ControlSignal& u, double tau,
                              const std::optional<MatrixXd>& basis = {},
                              double h = 0.0) {
  if (h == 0.0) h = u.dt() / 10.0;
  long n = std::lround(tau / h);
  if (n < 0 || std::abs(n * h - tau) > 1e-9 * std::max(1.0, tau))
    throw ConfigError("horizon must be a multiple of the integrator step");
  MatrixXd q;
  if (basis) {
    if (basis->rows() != sys.dim() || basis->cols() > sys.dim() ||
        basis->cols() < 0)
      throw ConfigError("subspace basis has wrong shape");
    Eigen::HouseholderQR<MatrixXd> qr(*basis);
    q = qr.householderQ() * MatrixXd::Identity(sys.dim(), basis->cols());
  } else {
    q = MatrixXd::Identity(sys.dim(), sys.dim());
  }
  CocycleTrace tr;
  tr.times.reserve(n + 1);
  tr.values.reserve(n + 1);
  tr.times.push_back(0.0);
  tr.values.push_back(0.0);
  double acc = 0.0;
  VectorXd x = x0;
  for (long k = 0; k < n; ++k) {
    FlowSegment step = integrate_steps(sys, x, u, k * h, h, 1, true);
    x = step.back_state();
    if (q.cols() > 0) {
      MatrixXd pushed = step.fundamentals.back() * q;
      Eigen::HouseholderQR<MatrixXd> qr(pushed);
      MatrixXd r = qr.matrixQR().topRows(q.cols()).triangularView<Eigen::Upper>();
      for (int i = 0; i < q.cols(); ++i) acc += safe_log(std::abs(r(i, i)));
      q = qr.householderQ() * MatrixXd::Identity(sys.dim(), q.cols());
    }
    tr.times.push_back((k + 1) * h);
    tr.values.push_back(acc);
  }
  return tr;
}

// Final value of det_trace; empty-dimensional subspaces give 0.
inline double unstable_log_det(const SystemSpec& sys, const VectorXd& x0,
                               const ControlSignal& u, double tau,
                               const MatrixXd& basis, double h = 0.0) {
  if (basis.cols() == 0) return 0.0;
  return det_trace(sys, x0, u, tau, basis, h).back();
}

// ----------------------------------------------------------------- Floquet

// Lyapunov exponents (1/tau_p) log |mu_i| of a monodromy matrix, sorted in
// descending order and clustered into (exponent, multiplicity) pairs.
inline std::vector<std::pair<double, int>> floquet_exponents(
    const MatrixXd& monodromy_matrix, double tau_p) {
  if (tau_p <= 0.0) throw ConfigError("period must be positive");
  Eigen::EigenSolver<MatrixXd> es(monodromy_matrix);
  std::vector<double> exps;
  for (int i = 0; i < monodromy_matrix.rows(); ++i) {
    double a = std::abs(es.eigenvalues()[i]);
    if (a <= 0.0)
      throw NumericalError("monodromy matrix is singular");
    exps.push_back(std::log(a) / tau_p);
  }
  std::sort(exps.begin(), exps.end(), std::greater<double>());
  std::vector<std::pair<double, int>> out;
  for (double e : exps) {
    if (!out.empty() &&
        std::abs(e - out.back().first) <= 1e-6 * (1.0 + std::abs(e))) {
      // cluster mean keeps the representative stable
      auto& [v, c] = out.back();
      v = (v * c + e) / (c + 1);
      ++c;
    } else {
      out.emplace_back(e, 1);
    }
  }
  return out;
}

inline double sum_positive_exponents(
    const std::vector<std::pair<double, int>>& exps) {
  double s = 0.0;
  for (const auto& [v, c] : exps)
    if (v > 0.0) s += v * c;
  return s;
}

// ----------------------------------------------------------------- Gramian

struct GramianReport {
  MatrixXd w;
  VectorXd singular_values;
  int rank = 0;
  bool regular = false;  // rank == state dimension
};

// Controllability Gramian of the linearization along the trajectory from
// x0, over the window [t1, t2]:
//   W = int_t1^t2 Phi(t2, s) B(x(s)) B(x(s))^T Phi(t2, s)^T ds
// with B(x) = [f_1(x) ... f_m(x)], trapezoidal quadrature on integrator
// nodes.  Rank is counted relative to the largest singular value.
inline GramianReport gramian_rank(const SystemSpec& sys, const VectorXd& x0,
                                  const ControlSignal& u, double t1, double t2,
                                  double tol_rank = 1e-8, double h = 0.0) {
  if (!(0.0 <= t1 && t1 < t2))
    throw ConfigError("need 0 <= t1 < t2 for the Gramian window");
  FlowSegment seg = integrate(sys, x0, u, t2, true, h);
  std::size_t k1 = seg.node(t1), k2 = seg.node(t2);
  const int d = sys.dim(), m = sys.inputs();
  GramianReport rep;
  rep.w = MatrixXd::Zero(d, d);
  if (m > 0) {
    MatrixXd acc = MatrixXd::Zero(d, d);  // int Phi(s)^-1 B B^T Phi(s)^-T
    MatrixXd prev;
    for (std::size_t k = k1; k <= k2; ++k) {
      MatrixXd y = Eigen::PartialPivLU<MatrixXd>(seg.fundamentals[k])
                       .solve(sys.input_matrix(seg.states[k]));
      MatrixXd g = y * y.transpose();
      if (k > k1) acc += 0.5 * std::abs(seg.h) * (prev + g);
      prev = std::move(g);
    }
    const MatrixXd& phi2 = seg.fundamentals[k2];
    rep.w = phi2 * acc * phi2.transpose();
  }
  Eigen::JacobiSVD<MatrixXd> svd(rep.w);
  rep.singular_values = svd.singularValues();
  double top = rep.singular_values.size() ? rep.singular_values[0] : 0.0;
  if (top > 0.0)
    for (int i = 0; i < rep.singular_values.size(); ++i)
      if (rep.singular_values[i] >= tol_rank * top) ++rep.rank;
  rep.regular = rep.rank == d;
  return rep;
}

}  // namespace ient
