// Control-affine system descriptions, piecewise-constant control signals,
// and gridded box regions of state space.
//
// A system is  dx/dt = f0(x) + sum_i u_i f_i(x)  with u(t) constrained to a
// compact box U.  The (m+1) vector fields are expression trees so that the
// state Jacobian is available exactly.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ient/expr.hpp"
#include "ient/util.hpp"

namespace ient {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ------------------------------------------------------------- SystemSpec

class SystemSpec {
 public:
  // fields[i][j] is component j of vector field i; i = 0 is the drift.
  SystemSpec(int dim, int inputs, std::vector<std::vector<Expr>> fields,
             std::vector<std::pair<double, double>> control_box)
      : dim_(dim), inputs_(inputs), fields_(std::move(fields)),
        control_box_(std::move(control_box)) {
    if (dim_ < 1) throw ConfigError("dimension must be positive");
    if (inputs_ < 0) throw ConfigError("input count must be nonnegative");
    if (fields_.size() != static_cast<std::size_t>(inputs_ + 1))
      throw ConfigError("expected " + std::to_string(inputs_ + 1) +
                        " vector fields, got " + std::to_string(fields_.size()));
    for (const auto& f : fields_) {
      if (f.size() != static_cast<std::size_t>(dim_))
        throw ConfigError("vector field with wrong component count");
      for (const auto& c : f)
        if (max_var_index(c) > dim_)
          throw ConfigError("field component references variable beyond x" +
                            std::to_string(dim_));
    }
    if (control_box_.size() != static_cast<std::size_t>(inputs_))
      throw ConfigError("control box must have one interval per input");
    for (const auto& [lo, hi] : control_box_)
      if (!(lo < hi)) throw ConfigError("control interval needs lo < hi");
    jac_.resize(fields_.size());
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      jac_[i].resize(dim_);
      for (int j = 0; j < dim_; ++j) {
        jac_[i][j].resize(dim_);
        for (int k = 0; k < dim_; ++k) jac_[i][j][k] = diff(fields_[i][j], k);
      }
    }
  }

  int dim() const { return dim_; }
  int inputs() const { return inputs_; }
  const std::vector<std::pair<double, double>>& control_box() const {
    return control_box_;
  }
  const std::vector<std::vector<Expr>>& fields() const { return fields_; }

  // Right-hand side F(x, u) = f0(x) + sum u_i f_i(x).
  VectorXd rhs(const VectorXd& x, const VectorXd& u) const {
    VectorXd out(dim_);
    for (int j = 0; j < dim_; ++j) {
      double v = eval(fields_[0][j], x.data());
      for (int i = 0; i < inputs_; ++i)
        v += u[i] * eval(fields_[i + 1][j], x.data());
      out[j] = v;
    }
    return out;
  }

  // State Jacobian dF/dx at (x, u), from the exact field derivatives.
  MatrixXd jacobian(const VectorXd& x, const VectorXd& u) const {
    MatrixXd a(dim_, dim_);
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) {
        double v = eval(jac_[0][j][k], x.data());
        for (int i = 0; i < inputs_; ++i)
          v += u[i] * eval(jac_[i + 1][j][k], x.data());
        a(j, k) = v;
      }
    return a;
  }

  // Input matrix dF/du = [f1(x) ... fm(x)], d x m.
  MatrixXd input_matrix(const VectorXd& x) const {
    MatrixXd b(dim_, inputs_);
    for (int i = 0; i < inputs_; ++i)
      for (int j = 0; j < dim_; ++j)
        b(j, i) = eval(fields_[i + 1][j], x.data());
    return b;
  }

  bool control_in_box(const VectorXd& u, double slack = 0.0) const {
    for (int i = 0; i < inputs_; ++i)
      if (u[i] < control_box_[i].first - slack ||
          u[i] > control_box_[i].second + slack)
        return false;
    return true;
  }

 private:
  int dim_;
  int inputs_;
  std::vector<std::vector<Expr>> fields_;
  std::vector<std::pair<double, double>> control_box_;
  std::vector<std::vector<std::vector<Expr>>> jac_;  // [field][row][col]
};

// The box U shrunk by factor eta about its center; eta = 1 is U itself.
inline std::vector<std::pair<double, double>> shrunk_box(
    const std::vector<std::pair<double, double>>& box, double eta) {
  if (eta <= 0.0 || eta > 1.0) throw ConfigError("shrink factor must be in (0,1]");
  std::vector<std::pair<double, double>> out;
  out.reserve(box.size());
  for (const auto& [lo, hi] : box) {
    double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo) * eta;
    out.emplace_back(c - r, c + r);
  }
  return out;
}

// Uniform lattice over the control box with `levels` values per axis,
// endpoints included.  levels = 2 gives the box corners.
inline std::vector<VectorXd> quantize_controls(
    const std::vector<std::pair<double, double>>& box, int levels) {
  if (levels < 2) throw ConfigError("quantization needs at least 2 levels");
  int m = static_cast<int>(box.size());
  std::size_t total = 1;
  for (int i = 0; i < m; ++i) {
    total *= static_cast<std::size_t>(levels);
    if (total > 10000000) throw ConfigError("quantization lattice too large");
  }
  std::vector<VectorXd> out;
  out.reserve(total);
  std::vector<int> idx(m, 0);
  for (std::size_t n = 0; n < total; ++n) {
    VectorXd u(m);
    std::size_t rem = n;
    for (int i = 0; i < m; ++i) {
      int k = static_cast<int>(rem % levels);
      rem /= levels;
      u[i] = box[i].first +
             (box[i].second - box[i].first) * k / (levels - 1);
    }
    out.push_back(std::move(u));
  }
  return out;
}

// ---------------------------------------------------------- ControlSignal

// Piecewise-constant control on the grid {k dt}: value frame[k] holds on
// [k dt, (k+1) dt) after the index shift.  Periodic signals repeat the
// frame; finite ones hold the first/last value outside their range.
class ControlSignal {
 public:
  ControlSignal(std::vector<VectorXd> frame, double dt, bool periodic = false)
      : frame_(std::move(frame)), dt_(dt), periodic_(periodic) {
    if (dt_ <= 0.0) throw ConfigError("control grid step must be positive");
    if (frame_.empty()) throw ConfigError("control signal needs at least one value");
    for (const auto& v : frame_)
      if (v.size() != frame_[0].size())
        throw ConfigError("control values with mixed sizes");
  }

  static ControlSignal constant(const VectorXd& u, double dt) {
    return ControlSignal({u}, dt, true);
  }

  double dt() const { return dt_; }
  bool periodic() const { return periodic_; }
  // Period in time units (periodic signals only).
  double period() const { return periodic_ ? dt_ * frame_.size() : 0.0; }
  int steps() const { return static_cast<int>(frame_.size()); }
  int dims() const { return static_cast<int>(frame_[0].size()); }
  double duration() const { return dt_ * frame_.size(); }
  const std::vector<VectorXd>& frame() const { return frame_; }

  const VectorXd& value_at_step(long k) const {
    long n = static_cast<long>(frame_.size());
    long i = k + offset_;
    if (periodic_) {
      i %= n;
      if (i < 0) i += n;
    } else {
      if (i < 0) i = 0;
      if (i >= n) i = n - 1;
    }
    return frame_[static_cast<std::size_t>(i)];
  }

  // Value of the piecewise-constant signal at time t.
  const VectorXd& value(double t) const {
    double s = t / dt_;
    long k = static_cast<long>(std::floor(s + 1e-9 * (1.0 + std::abs(s))));
    return value_at_step(k);
  }

  // Time shift: returns s -> u(s + t).  t must be a grid multiple; it is
  // rounded to one, ties toward minus infinity.
  ControlSignal shifted(double t) const {
    long k = static_cast<long>(std::ceil(t / dt_ - 0.5));
    ControlSignal out = *this;
    out.offset_ += k;
    if (!periodic_) {
      // re-anchor so the frame again starts at step 0
      out.normalize();
    }
    return out;
  }

  // Concatenation in time; with periodize set, the result repeats the
  // combined frame.  Grid steps must match.
  static ControlSignal concat(const ControlSignal& a, const ControlSignal& b,
                              bool periodize) {
    if (a.dt_ != b.dt_) throw ConfigError("concat needs matching grid steps");
    if (a.dims() != b.dims()) throw ConfigError("concat needs matching input counts");
    std::vector<VectorXd> frame = a.materialized();
    auto tail = b.materialized();
    frame.insert(frame.end(), tail.begin(), tail.end());
    return ControlSignal(std::move(frame), a.dt_, periodize);
  }

  // Frame with the current shift folded in (periodic: rotated copy).
  std::vector<VectorXd> materialized() const {
    std::vector<VectorXd> out;
    out.reserve(frame_.size());
    for (long k = 0; k < static_cast<long>(frame_.size()); ++k)
      out.push_back(value_at_step(k));
    return out;
  }

 private:
  void normalize() {
    if (offset_ != 0) {
      frame_ = materialized();
      offset_ = 0;
    }
  }

  std::vector<VectorXd> frame_;
  double dt_;
  bool periodic_;
  long offset_ = 0;
};

// ----------------------------------------------------------------- Region

// Axis-aligned box partitioned into uniform cells of width h_cell.  The
// cell counts must tile the box exactly.
class Region {
 public:
  Region(VectorXd lo, VectorXd hi, double h_cell)
      : lo_(std::move(lo)), hi_(std::move(hi)), h_(h_cell) {
    if (lo_.size() != hi_.size()) throw ConfigError("region bounds size mismatch");
    if (h_ <= 0.0) throw ConfigError("cell width must be positive");
    counts_.resize(lo_.size());
    std::size_t total = 1;
    for (int i = 0; i < lo_.size(); ++i) {
      double span = hi_[i] - lo_[i];
      if (span <= 0.0) throw ConfigError("region needs lo < hi per axis");
      double n = span / h_;
      long c = std::lround(n);
      if (c < 1 || std::abs(n - c) > 1e-9 * std::max(1.0, std::abs(n)))
        throw ConfigError("cells do not tile the region exactly on axis " +
                          std::to_string(i + 1));
      counts_[i] = c;
      total *= static_cast<std::size_t>(c);
      if (total > 50000000) throw ConfigError("region has too many cells");
    }
    size_ = total;
  }

  int dim() const { return static_cast<int>(lo_.size()); }
  double cell_width() const { return h_; }
  const VectorXd& lo() const { return lo_; }
  const VectorXd& hi() const { return hi_; }
  std::size_t size() const { return size_; }
  const std::vector<long>& counts() const { return counts_; }

  VectorXd center(std::size_t index) const {
    VectorXd c(dim());
    std::size_t rem = index;
    for (int i = 0; i < dim(); ++i) {
      long k = static_cast<long>(rem % counts_[i]);
      rem /= counts_[i];
      c[i] = lo_[i] + h_ * (k + 0.5);
    }
    return c;
  }

  bool contains(const VectorXd& x, double slack = 0.0) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo_[i] - slack || x[i] > hi_[i] + slack) return false;
    return true;
  }

  // Cell holding x, or nothing when x is outside the box.
  std::optional<std::size_t> locate(const VectorXd& x) const {
    std::size_t index = 0, stride = 1;
    for (int i = 0; i < dim(); ++i) {
      double f = (x[i] - lo_[i]) / h_;
      long k = static_cast<long>(std::floor(f));
      if (k == counts_[i] && f <= counts_[i] + 1e-12) k = counts_[i] - 1;
      if (k < 0 || k >= counts_[i]) return std::nullopt;
      index += stride * static_cast<std::size_t>(k);
      stride *= static_cast<std::size_t>(counts_[i]);
    }
    return index;
  }

  // Per-axis index ranges of cells whose center lies within radius r of p
  // (in the max metric), clamped to the region.
  std::vector<std::pair<long, long>> center_range(const VectorXd& p,
                                                  double r) const {
    std::vector<std::pair<long, long>> out(dim());
    for (int i = 0; i < dim(); ++i) {
      double fa = (p[i] - r - lo_[i]) / h_ - 0.5;
      double fb = (p[i] + r - lo_[i]) / h_ - 0.5;
      // pad against roundoff; callers re-check candidates exactly
      long a = static_cast<long>(std::ceil(fa - 1e-9 * (1.0 + std::abs(fa))));
      long b = static_cast<long>(std::floor(fb + 1e-9 * (1.0 + std::abs(fb))));
      out[i] = {std::max(0L, a), std::min(counts_[i] - 1, b)};
    }
    return out;
  }

  std::size_t index_of(const std::vector<long>& multi) const {
    std::size_t index = 0, stride = 1;
    for (int i = 0; i < dim(); ++i) {
      index += stride * static_cast<std::size_t>(multi[i]);
      stride *= static_cast<std::size_t>(counts_[i]);
    }
    return index;
  }

 private:
  VectorXd lo_, hi_;
  double h_;
  std::vector<long> counts_;
  std::size_t size_ = 0;
};

// Uniform grid of points over a box, endpoints included, per-axis counts.
inline std::vector<VectorXd> grid_points(const VectorXd& lo, const VectorXd& hi,
                                         const std::vector<long>& per_axis) {
  if (lo.size() != hi.size() ||
      per_axis.size() != static_cast<std::size_t>(lo.size()))
    throw ConfigError("grid bounds size mismatch");
  std::size_t total = 1;
  for (long c : per_axis) {
    if (c < 1) throw ConfigError("grid needs at least one point per axis");
    total *= static_cast<std::size_t>(c);
    if (total > 10000000) throw ConfigError("grid too large");
  }
  std::vector<VectorXd> out;
  out.reserve(total);
  for (std::size_t n = 0; n < total; ++n) {
    VectorXd p(lo.size());
    std::size_t rem = n;
    for (int i = 0; i < lo.size(); ++i) {
      long c = per_axis[i];
      long k = static_cast<long>(rem % c);
      rem /= static_cast<std::size_t>(c);
      p[i] = c == 1 ? 0.5 * (lo[i] + hi[i])
                    : lo[i] + (hi[i] - lo[i]) * k / (c - 1);
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace ient
