// Fixed-step RK4 integration of controlled trajectories together with the
// variational (fundamental-matrix) equation
//   dx/dt   = F(x, u(t))
//   dPhi/dt = DF(x, u(t)) Phi,   Phi(t0) = I.
//
// The integrator step h must divide the control grid step, so u is constant
// on every step; the control value is looked up at the step midpoint.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "ient/system.hpp"
#include "ient/util.hpp"

namespace ient {

struct FlowSegment {
  double t0 = 0.0;
  double h = 0.0;                    // signed integrator step
  std::vector<double> times;         // t0 + k h
  std::vector<VectorXd> states;
  std::vector<MatrixXd> fundamentals;  // empty unless requested

  double duration() const { return times.empty() ? 0.0 : times.back() - t0; }
  const VectorXd& back_state() const { return states.back(); }

  // Node index for time t (t must sit on the step grid within 1e-6 h).
  std::size_t node(double t) const {
    double f = (t - t0) / h;
    long k = std::lround(f);
    if (k < 0 || k >= static_cast<long>(times.size()) ||
        std::abs(f - k) > 1e-6)
      throw ConfigError("time off the integration grid");
    return static_cast<std::size_t>(k);
  }
};

namespace detail {

inline void check_grid(double dt, double h, double t0) {
  if (h == 0.0) throw ConfigError("integrator step must be nonzero");
  double ah = std::abs(h);
  double sub = dt / ah;
  long n = std::lround(sub);
  if (n < 1 || std::abs(sub - n) > 1e-9 * sub)
    throw ConfigError("integrator step must divide the control grid step");
  // steps cannot straddle a control switch as long as the start time sits
  // on the integrator grid (switches are multiples of dt = n h)
  double align = t0 / ah;
  if (std::abs(align - std::llround(align)) > 1e-6)
    throw ConfigError("integration start must sit on the integrator grid");
}

// One RK4 step for the joint system; u is constant across the step.
inline void rk4_step(const SystemSpec& sys, const VectorXd& u, double h,
                     VectorXd& x, MatrixXd* phi) {
  const VectorXd k1 = sys.rhs(x, u);
  const VectorXd k2 = sys.rhs(x + 0.5 * h * k1, u);
  const VectorXd k3 = sys.rhs(x + 0.5 * h * k2, u);
  const VectorXd k4 = sys.rhs(x + h * k3, u);
  if (phi) {
    const MatrixXd a1 = sys.jacobian(x, u) * *phi;
    const MatrixXd a2 =
        sys.jacobian(x + 0.5 * h * k1, u) * (*phi + 0.5 * h * a1);
    const MatrixXd a3 =
        sys.jacobian(x + 0.5 * h * k2, u) * (*phi + 0.5 * h * a2);
    const MatrixXd a4 = sys.jacobian(x + h * k3, u) * (*phi + h * a3);
    *phi += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  }
  x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

constexpr double kBlowupNorm = 1e6;

// Integrates over [t0, t0 + n h] (h may be negative for backward runs).
// Throws BlowupError when |x| exceeds kBlowupNorm or turns non-finite.
inline FlowSegment integrate_steps(const SystemSpec& sys, const VectorXd& x0,
                                   const ControlSignal& u, double t0, double h,
                                   long n, bool with_variational) {
  detail::check_grid(u.dt(), h, t0);
  if (n < 0) throw ConfigError("negative step count");
  FlowSegment seg;
  seg.t0 = t0;
  seg.h = h;
  seg.times.reserve(n + 1);
  seg.states.reserve(n + 1);
  VectorXd x = x0;
  MatrixXd phi;
  if (with_variational) {
    phi = MatrixXd::Identity(sys.dim(), sys.dim());
    seg.fundamentals.reserve(n + 1);
  }
  seg.times.push_back(t0);
  seg.states.push_back(x);
  if (with_variational) seg.fundamentals.push_back(phi);
  for (long j = 0; j < n; ++j) {
    double t = t0 + h * j;
    const VectorXd& uv = u.value(t + 0.5 * h);
    detail::rk4_step(sys, uv, h, x, with_variational ? &phi : nullptr);
    if (!x.allFinite() || x.norm() > kBlowupNorm)
      throw BlowupError(t + h, x.allFinite() ? x.norm() :
                            std::numeric_limits<double>::infinity());
    seg.times.push_back(t0 + h * (j + 1));
    seg.states.push_back(x);
    if (with_variational) seg.fundamentals.push_back(phi);
  }
  return seg;
}

// Integrates over [0, tau].  h = 0 picks the default dt/10.
inline FlowSegment integrate(const SystemSpec& sys, const VectorXd& x0,
                             const ControlSignal& u, double tau,
                             bool with_variational = false, double h = 0.0) {
  if (tau < 0.0) throw ConfigError("horizon must be nonnegative");
  if (h == 0.0) h = u.dt() / 10.0;
  long n = std::lround(tau / h);
  if (std::abs(n * h - tau) > 1e-9 * std::max(1.0, tau))
    throw ConfigError("horizon must be a multiple of the integrator step");
  return integrate_steps(sys, x0, u, 0.0, h, n, with_variational);
}

// Trajectory distance in the maximum-over-time metric, sampled at the
// integrator nodes shared by both trajectories.
inline double bowen_distance(const SystemSpec& sys, const ControlSignal& u,
                             const VectorXd& x, const VectorXd& y, double tau,
                             double h = 0.0) {
  FlowSegment a = integrate(sys, x, u, tau, false, h);
  FlowSegment b = integrate(sys, y, u, tau, false, h);
  double d = 0.0;
  for (std::size_t k = 0; k < a.states.size(); ++k)
    d = std::max(d, (a.states[k] - b.states[k]).norm());
  return d;
}

// Early-exit predicate: does the trajectory from y leave the eps-tube
// around the reference segment?  Equivalent to bowen_distance >= eps but
// stops at the first violating node, and treats blow-up as an exit.
inline bool bowen_exceeds(const SystemSpec& sys, const ControlSignal& u,
                          const FlowSegment& ref, const VectorXd& y,
                          double eps) {
  if ((ref.states[0] - y).norm() >= eps) return true;
  VectorXd x = y;
  const double h = ref.h;
  for (std::size_t j = 1; j < ref.states.size(); ++j) {
    double t = ref.times[j - 1];
    const VectorXd& uv = u.value(t + 0.5 * h);
    detail::rk4_step(sys, uv, h, x, nullptr);
    if (!x.allFinite() || x.norm() > kBlowupNorm) return true;
    if ((ref.states[j] - x).norm() >= eps) return true;
  }
  return false;
}

// Fundamental matrix over one period of u along the closed trajectory
// through x0.  Throws NumericalError when the trajectory fails to close
// within tol.
inline MatrixXd monodromy(const SystemSpec& sys, const VectorXd& x0,
                          const ControlSignal& u, double tol_closure = 1e-6,
                          double h = 0.0) {
  if (!u.periodic()) throw ConfigError("monodromy requires a periodic control");
  FlowSegment seg = integrate(sys, x0, u, u.period(), true, h);
  double defect = (seg.back_state() - x0).norm();
  if (defect > tol_closure)
    throw NumericalError("trajectory does not close over the period: defect " +
                         std::to_string(defect));
  return seg.fundamentals.back();
}

// Per-step transitions along a trajectory: states[k] at t0 + k step_len and
// mats[k] = fundamental matrix of the flow across step k alone.  Built from
// per-step variational runs, so products over many steps can be rescaled by
// the caller without overflowing.
struct StepTransitions {
  double t0 = 0.0;
  double step = 0.0;
  std::vector<VectorXd> states;
  std::vector<MatrixXd> mats;
};

inline StepTransitions step_transitions(const SystemSpec& sys,
                                        const VectorXd& x0,
                                        const ControlSignal& u, double t0,
                                        long n_steps, double step_len,
                                        double h = 0.0) {
  if (h == 0.0) h = u.dt() / 10.0;
  double dir = step_len < 0 ? -1.0 : 1.0;
  long sub = std::lround(std::abs(step_len) / std::abs(h));
  if (sub < 1 || std::abs(sub * std::abs(h) - std::abs(step_len)) >
                     1e-9 * std::abs(step_len))
    throw ConfigError("integrator step must divide the transition step");
  StepTransitions out;
  out.t0 = t0;
  out.step = step_len;
  out.states.reserve(n_steps + 1);
  out.mats.reserve(n_steps);
  VectorXd x = x0;
  out.states.push_back(x);
  for (long k = 0; k < n_steps; ++k) {
    FlowSegment seg = integrate_steps(sys, x, u, t0 + k * step_len,
                                      dir * std::abs(h), sub, true);
    x = seg.back_state();
    out.states.push_back(x);
    out.mats.push_back(seg.fundamentals.back());
  }
  return out;
}

// Newton refinement of a fixed point of the period map x -> phi(T, x, u)
// for periodic u (T = the period).  Equilibria are the period-one case.
// Returns the refined point; throws NumericalError if the residual fails
// to reach tol.
inline VectorXd find_periodic_point(const SystemSpec& sys, const VectorXd& guess,
                                    const ControlSignal& u, double tol = 1e-10,
                                    int max_iters = 30, double h = 0.0) {
  if (!u.periodic()) throw ConfigError("periodic point needs a periodic control");
  VectorXd x = guess;
  const MatrixXd eye = MatrixXd::Identity(sys.dim(), sys.dim());
  for (int it = 0; it < max_iters; ++it) {
    FlowSegment seg = integrate(sys, x, u, u.period(), true, h);
    VectorXd r = seg.back_state() - x;
    if (r.norm() <= tol) return x;
    MatrixXd j = seg.fundamentals.back() - eye;
    VectorXd step = Eigen::PartialPivLU<MatrixXd>(j).solve(-r);
    // damp wild steps far from the orbit
    double cap = 1.0 + x.norm();
    if (step.norm() > cap) step *= cap / step.norm();
    x += step;
  }
  throw NumericalError("periodic point iteration did not converge");
}

// RK4 self-convergence order from three step sizes (h, h/2, h/4).
inline double empirical_order(const SystemSpec& sys, const VectorXd& x0,
                              const ControlSignal& u, double tau, double h) {
  VectorXd a = integrate(sys, x0, u, tau, false, h).back_state();
  VectorXd b = integrate(sys, x0, u, tau, false, h / 2).back_state();
  VectorXd c = integrate(sys, x0, u, tau, false, h / 4).back_state();
  double e1 = (a - b).norm(), e2 = (b - c).norm();
  if (e2 == 0.0) return 16.0;
  return std::log2(e1 / e2);
}

}  // namespace ient
