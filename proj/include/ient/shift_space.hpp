// Sequence-space tooling: finite windows of bi-infinite sequences, the
// weighted product metric, chain defects, shadowing, and growth spectra
// over periodic symbol chains.
//
// A window of radius W carries entries for offsets -W..W.  The metric
//   D(a, b) = sup_i min(|a_i - b_i|, 1/|i|)        (plain distance at i = 0)
// is evaluated over the stored offsets; entries beyond the radius can
// contribute at most 1/(W+1), which callers account for as truncation
// slack.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "ient/chain_graph.hpp"
#include "ient/flow.hpp"
#include "ient/system.hpp"
#include "ient/util.hpp"

namespace ient {

class SeqWindow {
 public:
  explicit SeqWindow(std::vector<VectorXd> items) : items_(std::move(items)) {
    if (items_.empty() || items_.size() % 2 == 0)
      throw ConfigError("sequence window needs an odd entry count");
    radius_ = (static_cast<long>(items_.size()) - 1) / 2;
  }

  long radius() const { return radius_; }

  const VectorXd& at(long i) const {
    if (i < -radius_ || i > radius_)
      throw ConfigError("sequence offset outside the window");
    return items_[static_cast<std::size_t>(i + radius_)];
  }

  VectorXd& at(long i) {
    if (i < -radius_ || i > radius_)
      throw ConfigError("sequence offset outside the window");
    return items_[static_cast<std::size_t>(i + radius_)];
  }

  // Left shift (sigma): entry i of the result is entry i+1 here, so the
  // radius shrinks by one and the first two stored entries drop off.
  SeqWindow shifted_left() const {
    if (radius_ == 0) throw ConfigError("cannot shift a radius-0 window");
    return SeqWindow({items_.begin() + 2, items_.end()});
  }

 private:
  std::vector<VectorXd> items_;
  long radius_ = 0;
};

// Product metric over the common stored offsets (or up to `r` if given).
inline double seq_distance(const SeqWindow& a, const SeqWindow& b,
                           long r = -1) {
  long reach = std::min(a.radius(), b.radius());
  if (r >= 0) reach = std::min(reach, r);
  double best = (a.at(0) - b.at(0)).norm();
  for (long i = 1; i <= reach; ++i) {
    double cap = 1.0 / static_cast<double>(i);
    best = std::max(best, std::min((a.at(i) - b.at(i)).norm(), cap));
    best = std::max(best, std::min((a.at(-i) - b.at(-i)).norm(), cap));
  }
  return best;
}

// Worst hop defect D(sigma xi_i, xi_{i+1}) along the chain, evaluated at
// the shifted radius; wraps around when periodic.
inline double chain_defect(const std::vector<SeqWindow>& chain,
                           bool periodic) {
  if (chain.size() < 2 && !(periodic && chain.size() == 1))
    throw ConfigError("chain needs at least two elements");
  double worst = 0.0;
  std::size_t hops = periodic ? chain.size() : chain.size() - 1;
  for (std::size_t i = 0; i < hops; ++i) {
    const SeqWindow& next = chain[(i + 1) % chain.size()];
    worst = std::max(worst,
                     seq_distance(chain[i].shifted_left(), next));
  }
  return worst;
}

// The shadow candidate: the middle entry of each chain element.
inline std::vector<VectorXd> shadow_trace(const std::vector<SeqWindow>& chain) {
  std::vector<VectorXd> out;
  out.reserve(chain.size());
  for (const auto& w : chain) out.push_back(w.at(0));
  return out;
}

// Deviation max_i D(sigma^i eta, xi_i) of the shadow eta against the chain,
// over the offsets the trace defines (all of them when periodic).
inline double shadowing_deviation(const std::vector<SeqWindow>& chain,
                                  bool periodic) {
  std::vector<VectorXd> eta = shadow_trace(chain);
  const long n = static_cast<long>(chain.size());
  double worst = 0.0;
  for (long i = 0; i < n; ++i) {
    const SeqWindow& w = chain[static_cast<std::size_t>(i)];
    for (long j = -w.radius(); j <= w.radius(); ++j) {
      long k = i + j;
      if (periodic)
        k = ((k % n) + n) % n;
      else if (k < 0 || k >= n)
        continue;
      double d = (eta[static_cast<std::size_t>(k)] - w.at(j)).norm();
      if (j != 0) d = std::min(d, 1.0 / static_cast<double>(std::abs(j)));
      worst = std::max(worst, d);
    }
  }
  return worst;
}

// ------------------------------------------------------- growth spectra
//
// Spectrum over periodic chains of unit-time hops.  Chain elements are
// symbol words (windows over the quantized control alphabet); a hop is
// admissible when the shifted word matches the next one within eps in the
// product metric.  The growth of a hop is log ||Phi_1|| for the word's
// middle letter, so chain growth is the per-hop sum, and the interval ends
// are min/max cycle means of the hop graph.  Exact for systems whose state
// Jacobian is state independent (linear and bilinear families); otherwise
// this is the spectrum of the linearization frozen at the anchor point.

struct MorseInterval {
  double eps = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

namespace detail {

// max cycle mean of an edge-weighted graph (weight of u->v = node weight
// of v), by Karp's theorem per strongly connected component
inline double max_cycle_mean(const std::vector<std::vector<std::uint32_t>>& succ,
                             const std::vector<double>& node_weight) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  SccResult scc = strongly_connected_components(succ);
  std::vector<std::vector<std::uint32_t>> members(scc.count);
  for (std::size_t v = 0; v < succ.size(); ++v)
    members[scc.comp[v]].push_back(static_cast<std::uint32_t>(v));
  double best = neg_inf;
  for (const auto& nodes : members) {
    const std::size_t m = nodes.size();
    bool has_cycle = m > 1;
    if (!has_cycle)
      for (std::uint32_t w : succ[nodes[0]])
        if (w == nodes[0]) has_cycle = true;
    if (!has_cycle) continue;
    std::vector<std::int64_t> local(succ.size(), -1);
    for (std::size_t i = 0; i < m; ++i) local[nodes[i]] = i;
    // D[k][v] = best weight of a k-edge path from nodes[0] to v
    std::vector<std::vector<double>> D(m + 1,
                                       std::vector<double>(m, neg_inf));
    D[0][0] = 0.0;
    for (std::size_t k = 1; k <= m; ++k)
      for (std::size_t i = 0; i < m; ++i) {
        if (D[k - 1][i] == neg_inf) continue;
        for (std::uint32_t w : succ[nodes[i]]) {
          if (local[w] < 0) continue;
          double cand = D[k - 1][i] + node_weight[w];
          if (cand > D[k][local[w]]) D[k][local[w]] = cand;
        }
      }
    for (std::size_t v = 0; v < m; ++v) {
      if (D[m][v] == neg_inf) continue;
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < m; ++k) {
        if (D[k][v] == neg_inf) continue;
        worst = std::min(worst, (D[m][v] - D[k][v]) /
                                    static_cast<double>(m - k));
      }
      best = std::max(best, worst);
    }
  }
  if (best == neg_inf)
    throw NumericalError("hop graph has no cycle at this jump size");
  return best;
}

}  // namespace detail

// log ||Phi(1)|| for each letter held constant over one time unit.
inline std::vector<double> letter_log_growth(const SystemSpec& sys,
                                             const VectorXd& anchor,
                                             const std::vector<VectorXd>& letters,
                                             double h = 0.0) {
  std::vector<double> out;
  out.reserve(letters.size());
  for (const auto& u : letters) {
    FlowSegment seg = integrate(sys, anchor, ControlSignal::constant(u, 1.0),
                                1.0, true, h);
    Eigen::JacobiSVD<MatrixXd> svd(seg.fundamentals.back());
    out.push_back(safe_log(svd.singularValues()[0]));
  }
  return out;
}

// Growth interval ladder over decreasing jump sizes.  Words have length
// 2 radius + 1; intervals are nested by construction since shrinking eps
// only removes hops.
inline std::vector<MorseInterval> morse_spectrum(
    const SystemSpec& sys, const VectorXd& anchor,
    const std::vector<VectorXd>& letters, std::vector<double> eps_ladder,
    long radius = 1, double h = 0.0) {
  if (letters.empty()) throw ConfigError("spectrum needs symbol letters");
  if (eps_ladder.empty()) throw ConfigError("spectrum needs jump sizes");
  if (radius < 1) throw ConfigError("word radius must be at least 1");
  const std::size_t a = letters.size();
  const long len = 2 * radius + 1;
  double n_words = std::pow(static_cast<double>(a), static_cast<double>(len));
  // the cycle-mean table is quadratic in the word count
  if (n_words > 1024) throw ConfigError("word alphabet too large");
  const std::size_t n = static_cast<std::size_t>(std::llround(n_words));

  std::vector<double> growth = letter_log_growth(sys, anchor, letters, h);
  auto letter_of = [&](std::size_t word, long offset) {
    // base-a digits, offset -radius..radius
    std::size_t idx = word;
    for (long p = 0; p < offset + radius; ++p) idx /= a;
    return idx % a;
  };
  std::vector<double> node_weight(n);
  for (std::size_t w = 0; w < n; ++w)
    node_weight[w] = growth[letter_of(w, 0)];

  std::sort(eps_ladder.begin(), eps_ladder.end(), std::greater<double>());
  std::vector<MorseInterval> out;
  for (double eps : eps_ladder) {
    if (eps <= 0.0) throw ConfigError("jump sizes must be positive");
    // hop w -> w' admissible iff the shifted word matches within eps:
    // min(|letter(w, j+1) - letter(w', j)|, 1/|j|) <= eps for |j| < radius
    std::vector<std::vector<std::uint32_t>> succ(n);
    for (std::size_t w = 0; w < n; ++w) {
      for (std::size_t v = 0; v < n; ++v) {
        bool ok = true;
        for (long j = -(radius - 1); j <= radius - 1 && ok; ++j) {
          double d =
              (letters[letter_of(w, j + 1)] - letters[letter_of(v, j)])
                  .norm();
          if (j != 0) d = std::min(d, 1.0 / std::abs(static_cast<double>(j)));
          ok = d <= eps;
        }
        if (ok) succ[w].push_back(static_cast<std::uint32_t>(v));
      }
    }
    MorseInterval band;
    band.eps = eps;
    band.hi = detail::max_cycle_mean(succ, node_weight);
    std::vector<double> neg(node_weight.size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -node_weight[i];
    band.lo = -detail::max_cycle_mean(succ, neg);
    out.push_back(band);
  }
  return out;
}

// Smallest Lyapunov exponent over periodic symbol words up to max_len:
// (1/n) log(spectral radius of the word's monodromy), minimized.  Same
// state-independence caveat as the spectrum above.
inline double min_lyapunov_via_periodic(const SystemSpec& sys,
                                        const VectorXd& anchor,
                                        const std::vector<VectorXd>& letters,
                                        long max_len, double h = 0.0) {
  if (letters.empty() || max_len < 1)
    throw ConfigError("periodic scan needs letters and a positive length");
  const std::size_t a = letters.size();
  double best = std::numeric_limits<double>::infinity();
  for (long len = 1; len <= max_len; ++len) {
    double n_words =
        std::pow(static_cast<double>(a), static_cast<double>(len));
    if (n_words > 1e5) throw ConfigError("periodic word scan too large");
    const std::size_t n = static_cast<std::size_t>(std::llround(n_words));
    for (std::size_t word = 0; word < n; ++word) {
      std::vector<VectorXd> frame;
      std::size_t rem = word;
      for (long p = 0; p < len; ++p) {
        frame.push_back(letters[rem % a]);
        rem /= a;
      }
      ControlSignal u(std::move(frame), 1.0, true);
      StepTransitions st =
          step_transitions(sys, anchor, u, 0.0, len, 1.0, h);
      MatrixXd prod = MatrixXd::Identity(sys.dim(), sys.dim());
      for (const auto& m : st.mats) prod = m * prod;
      double rho = prod.eigenvalues().cwiseAbs().maxCoeff();
      best = std::min(best, safe_log(rho) / static_cast<double>(len));
    }
  }
  return best;
}

}  // namespace ient
