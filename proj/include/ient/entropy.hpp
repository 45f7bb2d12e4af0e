// Invariance-entropy estimators.
//
// Three routes, kept deliberately independent so they can cross-check
// each other:
//   1. spanning_count / entropy_slope: brute-force minimal families of
//      quantized control words that keep every sampled start point inside
//      the containment box; the growth rate of the count over the horizon
//      approximates the entropy.
//   2. upper_bound_search: smallest clipped exterior-power growth rate
//      over periodic control witnesses; any single admissible witness
//      bounds the entropy from above, so the search minimizes.
//   3. lower_bound_search: smallest unstable-determinant rate over
//      periodic control witnesses; a lower estimate which is also the
//      formula value when the minimizer is the entropy-realizing control.
//
// Word searches anchor each candidate control on a periodic trajectory
// (Newton on the period map) so long-horizon rates stay finite; candidates
// whose anchor cannot be found, escapes the confinement region, or fails
// to integrate are skipped and counted.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ient/cocycle.hpp"
#include "ient/flow.hpp"
#include "ient/splitting.hpp"
#include "ient/system.hpp"
#include "ient/util.hpp"

namespace ient {

// ------------------------------------------------------- spanning counts

struct SpanningReport {
  double tau = 0.0;
  double dt = 0.0;
  long count = 0;                        // greedy cover size
  std::vector<std::vector<int>> chosen;  // letter indices per chosen word
  std::vector<VectorXd> letters;
  std::vector<long> cover_of;  // per point: position in `chosen`
};

namespace detail {

// trajectory from x under the letter word stays inside [lo, hi] at every
// integrator node over [0, tau]; early exit on the first violation
inline bool word_keeps_inside(const SystemSpec& sys, const VectorXd& x,
                              const std::vector<VectorXd>& letters,
                              const std::vector<int>& word, double dt,
                              double tau, const VectorXd& lo,
                              const VectorXd& hi, double h) {
  auto inside = [&](const VectorXd& p) {
    for (int i = 0; i < sys.dim(); ++i)
      if (p[i] < lo[i] || p[i] > hi[i]) return false;
    return true;
  };
  if (!inside(x)) return false;
  long sub = std::lround(dt / h);
  VectorXd y = x;
  long n_steps = std::lround(tau / dt);
  for (long k = 0; k < n_steps; ++k) {
    const VectorXd& u = letters[static_cast<std::size_t>(
        word[static_cast<std::size_t>(k)])];
    for (long j = 0; j < sub; ++j) {
      rk4_step(sys, u, h, y, nullptr);
      if (!y.allFinite() || y.norm() > kBlowupNorm) return false;
      if (!inside(y)) return false;
    }
  }
  return true;
}

inline std::string point_label(const VectorXd& x) {
  std::string s = "(";
  for (int i = 0; i < x.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(x[i]);
  }
  return s + ")";
}

}  // namespace detail

// Greedy cover of the start points by quantized control words.  Words are
// all length tau/dt sequences over the control lattice with `levels`
// values per input axis.  Throws when some point cannot be kept inside
// the box by any word (naming the point), and re-verifies every witness
// at half the integrator step before returning.
inline SpanningReport spanning_count(const SystemSpec& sys,
                                     const std::vector<VectorXd>& points,
                                     const VectorXd& q_lo, const VectorXd& q_hi,
                                     double tau, double dt, int levels,
                                     double h = 0.0, double max_words = 2e6) {
  if (points.empty()) throw ConfigError("spanning count needs start points");
  if (q_lo.size() != sys.dim() || q_hi.size() != sys.dim())
    throw ConfigError("containment box has wrong dimension");
  if (dt <= 0.0 || tau <= 0.0)
    throw ConfigError("horizon and step must be positive");
  long n_steps = std::lround(tau / dt);
  if (n_steps < 1 || std::abs(n_steps * dt - tau) > 1e-9 * tau)
    throw ConfigError("horizon must be a multiple of the word step");
  if (h == 0.0) h = dt / 10.0;
  long sub = std::lround(dt / h);
  if (sub < 1 || std::abs(sub * h - dt) > 1e-9 * dt)
    throw ConfigError("integrator step must divide the word step");

  SpanningReport rep;
  rep.tau = tau;
  rep.dt = dt;
  rep.letters = quantize_controls(sys.control_box(), levels);
  const std::size_t a = rep.letters.size();
  double words_d =
      std::pow(static_cast<double>(a), static_cast<double>(n_steps));
  if (words_d > max_words)
    throw ConfigError("word enumeration too large: " + std::to_string(words_d));
  const std::size_t n_words = static_cast<std::size_t>(std::llround(words_d));

  // coverage matrix
  std::vector<std::vector<char>> covers(n_words);
  std::vector<std::vector<int>> words(n_words);
  for (std::size_t w = 0; w < n_words; ++w) {
    std::vector<int>& word = words[w];
    word.resize(static_cast<std::size_t>(n_steps));
    std::size_t rem = w;
    for (long k = 0; k < n_steps; ++k) {
      word[static_cast<std::size_t>(k)] = static_cast<int>(rem % a);
      rem /= a;
    }
    covers[w].resize(points.size(), 0);
    for (std::size_t p = 0; p < points.size(); ++p)
      covers[w][p] = detail::word_keeps_inside(sys, points[p], rep.letters,
                                               word, dt, tau, q_lo, q_hi, h);
  }

  // admissibility: every point must be coverable by some word
  std::string bad;
  long n_bad = 0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    bool any = false;
    for (std::size_t w = 0; w < n_words && !any; ++w) any = covers[w][p];
    if (!any) {
      ++n_bad;
      if (n_bad <= 3) {
        if (!bad.empty()) bad += ", ";
        bad += "point " + std::to_string(p) + " = " +
               detail::point_label(points[p]);
      }
    }
  }
  if (n_bad > 0)
    throw NumericalError("no control word keeps " + std::to_string(n_bad) +
                         " start point(s) inside the box: " + bad);

  // greedy set cover
  rep.cover_of.assign(points.size(), -1);
  std::size_t uncovered = points.size();
  while (uncovered > 0) {
    std::size_t best = 0, best_gain = 0;
    for (std::size_t w = 0; w < n_words; ++w) {
      std::size_t gain = 0;
      for (std::size_t p = 0; p < points.size(); ++p)
        if (rep.cover_of[p] == -1 && covers[w][p]) ++gain;
      if (gain > best_gain) {
        best_gain = gain;
        best = w;
      }
    }
    long pos = static_cast<long>(rep.chosen.size());
    rep.chosen.push_back(words[best]);
    for (std::size_t p = 0; p < points.size(); ++p)
      if (rep.cover_of[p] == -1 && covers[best][p]) rep.cover_of[p] = pos;
    uncovered -= best_gain;
  }
  rep.count = static_cast<long>(rep.chosen.size());

  // witness re-verification at half the integrator step
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto& word = rep.chosen[static_cast<std::size_t>(rep.cover_of[p])];
    if (!detail::word_keeps_inside(sys, points[p], rep.letters, word, dt, tau,
                                   q_lo, q_hi, h / 2.0))
      throw NumericalError(
          "witness failed re-verification at half step for point " +
          std::to_string(p) + " = " + detail::point_label(points[p]));
  }
  return rep;
}

// Least-squares slope of log(count) against tau, fitted over the upper
// half of the horizon grid (the early counts carry transient effects).
inline double entropy_slope(const std::vector<double>& taus,
                            const std::vector<long>& counts) {
  if (taus.size() != counts.size() || taus.size() < 3)
    throw ConfigError("slope needs at least three matching horizons");
  double lo = *std::min_element(taus.begin(), taus.end());
  double hi = *std::max_element(taus.begin(), taus.end());
  double cut = 0.5 * (lo + hi);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long m = 0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (taus[i] < cut - 1e-12) continue;
    if (counts[i] < 1) throw ConfigError("slope needs positive counts");
    double y = std::log(static_cast<double>(counts[i]));
    sx += taus[i];
    sy += y;
    sxx += taus[i] * taus[i];
    sxy += taus[i] * y;
    ++m;
  }
  if (m < 2) throw ConfigError("not enough horizons past the midpoint");
  double denom = m * sxx - sx * sx;
  if (denom <= 0.0) throw ConfigError("degenerate horizon grid");
  return (m * sxy - sx * sy) / denom;
}

// ------------------------------------------------------- word searches

struct WordSearchReport {
  double rate = 0.0;        // objective of the best word at horizon T
  double rate_check = 0.0;  // same word at 2T
  bool stable = false;      // the two agree within the stability tolerance
  std::vector<int> word;    // letter indices
  std::vector<VectorXd> letters;
  VectorXd anchor;  // periodic point used for the best word
  long evaluations = 0;
  long skipped = 0;  // words without an admissible periodic anchor
};

namespace detail {

struct WordObjective {
  // value and anchor, or nothing when the word cannot be evaluated
  virtual std::optional<std::pair<double, VectorXd>> operator()(
      const std::vector<int>& word, double horizon) = 0;
  virtual ~WordObjective() = default;
};

// Coordinate descent with random restarts, minimizing the objective over
// words.  The agreement check re-evaluates the winner at twice the
// horizon.
inline WordSearchReport word_search(int word_len, std::size_t n_letters,
                                    int restarts, std::uint64_t seed, double T,
                                    double dt, double stability_tol,
                                    WordObjective& objective) {
  if (word_len < 1 || restarts < 1)
    throw ConfigError("word search needs a positive length and restarts");
  long n = std::lround(T / dt);
  if (n < 1 || std::abs(n * dt - T) > 1e-9 * T)
    throw ConfigError("horizon must be a multiple of the word step");
  WordSearchReport rep;
  std::map<std::vector<int>, std::optional<double>> memo;
  auto score = [&](const std::vector<int>& w) -> std::optional<double> {
    auto it = memo.find(w);
    if (it != memo.end()) return it->second;
    ++rep.evaluations;
    auto r = objective(w, T);
    std::optional<double> v;
    if (r) {
      v = r->first;
    } else {
      ++rep.skipped;
    }
    memo.emplace(w, v);
    return v;
  };

  bool have_best = false;
  double best_val = 0.0;
  std::vector<int> best_word;
  for (int r = 0; r < restarts; ++r) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<int> word(static_cast<std::size_t>(word_len));
    for (int i = 0; i < word_len; ++i)
      word[static_cast<std::size_t>(i)] = static_cast<int>(rng.index(n_letters));
    auto cur = score(word);
    // fall forward to any evaluable word
    for (std::size_t tries = 0; !cur && tries < 4 * n_letters; ++tries) {
      word[rng.index(static_cast<std::uint64_t>(word_len))] =
          static_cast<int>(rng.index(n_letters));
      cur = score(word);
    }
    if (!cur) continue;
    bool improved = true;
    while (improved) {
      improved = false;
      for (int pos = 0; pos < word_len; ++pos) {
        auto& slot = word[static_cast<std::size_t>(pos)];
        int keep = slot;
        for (std::size_t l = 0; l < n_letters; ++l) {
          if (static_cast<int>(l) == keep) continue;
          slot = static_cast<int>(l);
          auto v = score(word);
          if (v && *v < *cur - 1e-12) {
            cur = v;
            keep = static_cast<int>(l);
            improved = true;
          }
        }
        slot = keep;
      }
    }
    if (!have_best || *cur < best_val - 1e-12) {
      have_best = true;
      best_val = *cur;
      best_word = word;
    }
  }
  if (!have_best)
    throw NumericalError("no admissible word produced a finite estimate");

  rep.word = best_word;
  rep.rate = best_val;
  auto full = objective(best_word, T);
  auto twice = objective(best_word, 2.0 * T);
  if (full) rep.anchor = full->second;
  rep.rate_check =
      twice ? twice->first : std::numeric_limits<double>::quiet_NaN();
  rep.stable = twice && std::abs(rep.rate - rep.rate_check) <=
                            stability_tol * (1.0 + std::abs(rep.rate));
  return rep;
}

// periodic anchor whose one-period orbit stays inside the region (when
// one is given); integration nodes are checked with a small slack
inline std::optional<VectorXd> admissible_anchor(const SystemSpec& sys,
                                                 const VectorXd& guess,
                                                 const ControlSignal& u,
                                                 const Region* confine,
                                                 double h) {
  VectorXd anchor;
  try {
    anchor = find_periodic_point(sys, guess, u, 1e-10, 30, h);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
  if (confine) {
    double hh = h == 0.0 ? u.dt() / 10.0 : h;
    long n = std::lround(u.period() / hh);
    FlowSegment seg;
    try {
      seg = integrate_steps(sys, anchor, u, 0.0, hh, n, false);
    } catch (const NumericalError&) {
      return std::nullopt;
    }
    for (const VectorXd& x : seg.states)
      if (!confine->contains(x, 1e-9)) return std::nullopt;
  }
  return anchor;
}

}  // namespace detail

// Smallest clipped exterior-power growth rate over periodic control words
// of length word_len on the quantized control lattice.  Any admissible
// witness gives an upper estimate, so the best witness is the smallest.
// Candidates come from the control box shrunk by eta about its center:
// the bound needs witnesses with room to spare inside the constraint.
inline WordSearchReport upper_bound_search(
    const SystemSpec& sys, const VectorXd& guess, double dt, int levels,
    int word_len, double T, int restarts, std::uint64_t seed,
    double stability_tol = 0.02, const Region* confine = nullptr,
    double eta = 0.95, double h = 0.0) {
  std::vector<VectorXd> letters =
      quantize_controls(shrunk_box(sys.control_box(), eta), levels);
  struct Objective : detail::WordObjective {
    const SystemSpec& sys;
    const std::vector<VectorXd>& letters;
    const VectorXd& guess;
    const Region* confine;
    double dt, h;
    Objective(const SystemSpec& s, const std::vector<VectorXd>& l,
              const VectorXd& g, const Region* c, double dt_, double h_)
        : sys(s), letters(l), guess(g), confine(c), dt(dt_), h(h_) {}
    std::optional<std::pair<double, VectorXd>> operator()(
        const std::vector<int>& word, double horizon) override {
      std::vector<VectorXd> frame;
      frame.reserve(word.size());
      for (int l : word) frame.push_back(letters[static_cast<std::size_t>(l)]);
      ControlSignal u(std::move(frame), dt, true);
      auto anchor = detail::admissible_anchor(sys, guess, u, confine, h);
      if (!anchor) return std::nullopt;
      try {
        double rate = exterior_growth_rate(sys, *anchor, u, horizon, h);
        return std::make_pair(rate, *anchor);
      } catch (const NumericalError&) {
        return std::nullopt;
      }
    }
  } objective(sys, letters, guess, confine, dt, h);
  WordSearchReport rep = detail::word_search(
      word_len, letters.size(), restarts, seed, T, dt, stability_tol,
      objective);
  rep.letters = std::move(letters);
  return rep;
}

// Smallest unstable-determinant rate over periodic control words: the
// subspace comes from the splitting estimated along each word's periodic
// anchor trajectory.  The confinement region also restricts the whole
// splitting window, so escaping trajectories are rejected.
inline WordSearchReport lower_bound_search(
    const SystemSpec& sys, const VectorXd& guess, int dim_plus, int dim_minus,
    double dt, int levels, int word_len, double T, int restarts,
    std::uint64_t seed, double stability_tol = 0.02,
    const Region* confine = nullptr, double h = 0.0) {
  std::vector<VectorXd> letters = quantize_controls(sys.control_box(), levels);
  struct Objective : detail::WordObjective {
    const SystemSpec& sys;
    const std::vector<VectorXd>& letters;
    const VectorXd& guess;
    const Region* confine;
    int dp, dm;
    double dt, h;
    Objective(const SystemSpec& s, const std::vector<VectorXd>& l,
              const VectorXd& g, const Region* c, int dp_, int dm_, double dt_,
              double h_)
        : sys(s), letters(l), guess(g), confine(c), dp(dp_), dm(dm_), dt(dt_),
          h(h_) {}
    std::optional<std::pair<double, VectorXd>> operator()(
        const std::vector<int>& word, double horizon) override {
      std::vector<VectorXd> frame;
      frame.reserve(word.size());
      for (int l : word) frame.push_back(letters[static_cast<std::size_t>(l)]);
      ControlSignal u(std::move(frame), dt, true);
      auto anchor = detail::admissible_anchor(sys, guess, u, confine, h);
      if (!anchor) return std::nullopt;
      // no expanding directions: the determinant over the empty subspace
      // is 1 for every witness, no splitting window required
      if (dp == 0) return std::make_pair(0.0, *anchor);
      try {
        Splitting s = estimate_splitting(sys, *anchor, u, 0.0, dp, dm, horizon,
                                         confine, h);
        double logdet =
            unstable_log_det(sys, *anchor, u, horizon, s.plus[0], h);
        return std::make_pair(logdet / horizon, *anchor);
      } catch (const NumericalError&) {
        return std::nullopt;
      }
    }
  } objective(sys, letters, guess, confine, dim_plus, dim_minus, dt, h);
  WordSearchReport rep = detail::word_search(
      word_len, letters.size(), restarts, seed, T, dt, stability_tol,
      objective);
  rep.letters = std::move(letters);
  return rep;
}

// ------------------------------------------------------- combined report

struct EntropyConfig {
  std::vector<double> taus;  // spanning horizons, at least three
  double dt = 1.0;           // word step
  int levels = 3;            // quantization levels per input axis
  int word_len = 3;          // periodic witness length, in steps
  double horizon = 50.0;     // rate horizon T for both searches
  int restarts = 4;
  std::uint64_t seed = 0;
  int dim_plus = -1;  // -1: detect from the exponents at the guess
  double stability_tol = 0.02;
  double tol_sandwich = 1e-3;
  double eta = 0.95;  // interior shrink for upper-route candidates
  double h = 0.0;     // integrator step (0: dt/10)
  VectorXd guess;     // anchor guess; empty picks the box midpoint
};

struct EntropyReport {
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
  double slope = std::numeric_limits<double>::quiet_NaN();
  bool sandwich_ok = false;  // lower <= upper + tol_sandwich
  double tol_sandwich = 0.0;
  int dim_plus = 0;
  int dim_minus = 0;
  WordSearchReport lower_route;
  WordSearchReport upper_route;
  std::vector<double> taus;
  std::vector<long> counts;
};

// Runs all three routes on one containment box: spanning counts over the
// given horizons with the slope fit, and both witness searches (confined
// to `confine` when given).
inline EntropyReport formula_report(const SystemSpec& sys,
                                    const std::vector<VectorXd>& points,
                                    const VectorXd& q_lo, const VectorXd& q_hi,
                                    const Region* confine,
                                    const EntropyConfig& cfg) {
  if (cfg.taus.size() < 3)
    throw ConfigError("combined report needs at least three horizons");
  EntropyReport rep;
  rep.tol_sandwich = cfg.tol_sandwich;
  rep.taus = cfg.taus;
  for (double tau : cfg.taus) {
    auto sc = spanning_count(sys, points, q_lo, q_hi, tau, cfg.dt, cfg.levels,
                             cfg.h);
    rep.counts.push_back(sc.count);
  }
  rep.slope = entropy_slope(rep.taus, rep.counts);

  VectorXd guess = cfg.guess.size() ? cfg.guess
                                    : VectorXd(0.5 * (q_lo + q_hi));
  if (guess.size() != sys.dim())
    throw ConfigError("anchor guess has wrong dimension");

  int dp = cfg.dim_plus;
  if (dp < 0) {
    std::vector<VectorXd> letters =
        quantize_controls(sys.control_box(), cfg.levels);
    ControlSignal probe =
        ControlSignal::constant(letters[letters.size() / 2], cfg.dt);
    dp = detect_dims(sys, guess, probe, cfg.horizon, cfg.h).dim_plus;
  }
  if (dp > sys.dim()) throw ConfigError("unstable dimension exceeds the state");
  rep.dim_plus = dp;
  rep.dim_minus = sys.dim() - dp;

  rep.upper_route =
      upper_bound_search(sys, guess, cfg.dt, cfg.levels, cfg.word_len,
                         cfg.horizon, cfg.restarts, cfg.seed,
                         cfg.stability_tol, confine, cfg.eta, cfg.h);
  rep.lower_route =
      lower_bound_search(sys, guess, rep.dim_plus, rep.dim_minus, cfg.dt,
                         cfg.levels, cfg.word_len, cfg.horizon, cfg.restarts,
                         mix_seed(cfg.seed, 1), cfg.stability_tol, confine,
                         cfg.h);
  rep.upper = rep.upper_route.rate;
  rep.lower = rep.lower_route.rate;
  rep.sandwich_ok = rep.lower <= rep.upper + cfg.tol_sandwich;
  return rep;
}

}  // namespace ient
