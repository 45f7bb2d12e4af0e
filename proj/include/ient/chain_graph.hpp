// Cell-mapping approximation of controlled dynamics over a gridded region.
//
// Each cell center is advanced for tau_step under every sampled control
// value; an edge goes to every cell whose center lies strictly within
// eps + (half cell diagonal) of the image.  Strongly connected components
// of this graph that can recur (size > 1, or a self-loop) approximate the
// chain control sets; the approximation shrinks toward them as eps and the
// cell width go to zero.
#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include "ient/flow.hpp"
#include "ient/system.hpp"
#include "ient/util.hpp"

namespace ient {

struct ChainGraph {
  Region region;
  std::vector<VectorXd> controls;
  double tau_step = 0.0;
  double eps = 0.0;
  double inflate = 0.0;  // eps + half cell diagonal
  std::vector<std::vector<std::uint32_t>> succ;  // sorted, deduplicated
  std::size_t edge_count = 0;
  std::size_t escapes = 0;  // (cell, control) pairs with no successor
};

inline ChainGraph build_chain_graph(const SystemSpec& sys, const Region& region,
                                    const std::vector<VectorXd>& controls,
                                    double tau_step, double eps,
                                    double h = 0.0) {
  if (sys.dim() != region.dim())
    throw ConfigError("region dimension does not match the system");
  if (controls.empty()) throw ConfigError("cell mapping needs control values");
  for (const auto& u : controls)
    if (!sys.control_in_box(u))
      throw ConfigError("control sample outside the admissible box");
  if (tau_step <= 0.0) throw ConfigError("cell mapping step must be positive");
  if (eps < 0.0) throw ConfigError("chain jump size must be nonnegative");

  const int d = region.dim();
  ChainGraph g{region,
               controls,
               tau_step,
               eps,
               eps + 0.5 * std::sqrt(static_cast<double>(d)) *
                   region.cell_width(),
               {},
               0,
               0};
  g.succ.resize(region.size());

  std::vector<ControlSignal> signals;
  signals.reserve(controls.size());
  for (const auto& u : controls)
    signals.push_back(ControlSignal::constant(u, tau_step));

  for (std::size_t i = 0; i < region.size(); ++i) {
    VectorXd x = region.center(i);
    auto& out = g.succ[i];
    for (const auto& u : signals) {
      std::size_t before = out.size();
      VectorXd y;
      try {
        y = integrate(sys, x, u, tau_step, false, h).back_state();
      } catch (const BlowupError&) {
        ++g.escapes;
        continue;
      }
      auto ranges = region.center_range(y, g.inflate);
      std::vector<long> idx(d);
      bool empty = false;
      for (int a = 0; a < d; ++a) {
        if (ranges[a].first > ranges[a].second) empty = true;
        idx[a] = ranges[a].first;
      }
      while (!empty) {
        std::size_t j = region.index_of(idx);
        if ((region.center(j) - y).norm() < g.inflate)
          out.push_back(static_cast<std::uint32_t>(j));
        int a = 0;
        for (; a < d; ++a) {
          if (++idx[a] <= ranges[a].second) break;
          idx[a] = ranges[a].first;
        }
        if (a == d) break;
      }
      if (out.size() == before) ++g.escapes;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    g.edge_count += out.size();
  }
  return g;
}

// ------------------------------------------------------------ Tarjan SCC

struct SccResult {
  std::vector<std::int64_t> comp;  // per node
  std::int64_t count = 0;
};

inline SccResult strongly_connected_components(
    const std::vector<std::vector<std::uint32_t>>& succ) {
  const std::size_t n = succ.size();
  SccResult res;
  res.comp.assign(n, -1);
  std::vector<std::int64_t> disc(n, -1), low(n, 0);
  std::vector<std::uint32_t> stack;
  std::vector<char> on_stack(n, 0);
  std::vector<std::pair<std::uint32_t, std::size_t>> frames;
  std::int64_t timer = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (disc[root] != -1) continue;
    frames.emplace_back(static_cast<std::uint32_t>(root), 0);
    while (!frames.empty()) {
      auto& [v, child] = frames.back();
      if (child == 0) {
        disc[v] = low[v] = timer++;
        stack.push_back(v);
        on_stack[v] = 1;
      }
      if (child < succ[v].size()) {
        std::uint32_t w = succ[v][child++];
        // the frame reference dies on push; v and child are done this pass
        if (disc[w] == -1)
          frames.emplace_back(w, 0);
        else if (on_stack[w])
          low[v] = std::min(low[v], disc[w]);
      } else {
        if (low[v] == disc[v]) {
          std::int64_t id = res.count++;
          for (;;) {
            std::uint32_t w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            res.comp[w] = id;
            if (w == v) break;
          }
        }
        std::uint32_t finished = v;
        frames.pop_back();
        if (!frames.empty()) {
          auto& [p, pc] = frames.back();
          (void)pc;
          low[p] = std::min(low[p], low[finished]);
        }
      }
    }
  }
  return res;
}

// ---------------------------------------------------- chain control sets

struct ChainSets {
  std::vector<std::vector<std::uint32_t>> classes;  // sorted member cells
  std::vector<std::int64_t> class_of;               // -1 for transient cells
};

inline ChainSets chain_control_sets(const ChainGraph& g) {
  SccResult scc = strongly_connected_components(g.succ);
  std::vector<std::int64_t> comp_size(scc.count, 0);
  std::vector<char> recurrent(scc.count, 0);
  for (std::size_t i = 0; i < g.succ.size(); ++i) ++comp_size[scc.comp[i]];
  for (std::size_t i = 0; i < g.succ.size(); ++i) {
    if (comp_size[scc.comp[i]] > 1) {
      recurrent[scc.comp[i]] = 1;
      continue;
    }
    for (std::uint32_t w : g.succ[i])
      if (w == i) recurrent[scc.comp[i]] = 1;
  }
  ChainSets sets;
  sets.class_of.assign(g.succ.size(), -1);
  std::vector<std::int64_t> renumber(scc.count, -1);
  for (std::size_t i = 0; i < g.succ.size(); ++i) {
    std::int64_t c = scc.comp[i];
    if (!recurrent[c]) continue;
    if (renumber[c] == -1) {
      renumber[c] = static_cast<std::int64_t>(sets.classes.size());
      sets.classes.emplace_back();
    }
    sets.class_of[i] = renumber[c];
    sets.classes[renumber[c]].push_back(static_cast<std::uint32_t>(i));
  }
  return sets;
}

// Axis-aligned envelope of a cell collection (cell extent included).
inline std::pair<VectorXd, VectorXd> cells_envelope(
    const ChainGraph& g, const std::vector<std::uint32_t>& cells) {
  if (cells.empty()) throw ConfigError("envelope of an empty cell set");
  const double half = 0.5 * g.region.cell_width();
  VectorXd lo = g.region.center(cells.front());
  VectorXd hi = lo;
  for (std::uint32_t c : cells) {
    VectorXd p = g.region.center(c);
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {lo.array() - half, hi.array() + half};
}

// Minimum number of tau_step hops needed to enter `targets`, per cell
// (0 on the target set, -1 where it is unreachable).
inline std::vector<std::int64_t> hitting_steps(
    const ChainGraph& g, const std::vector<std::uint32_t>& targets) {
  const std::size_t n = g.succ.size();
  std::vector<std::vector<std::uint32_t>> pred(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint32_t w : g.succ[i]) pred[w].push_back(i);
  std::vector<std::int64_t> steps(n, -1);
  std::deque<std::uint32_t> queue;
  for (std::uint32_t t : targets) {
    if (t >= n) throw ConfigError("hitting target outside the region");
    if (steps[t] == 0) continue;
    steps[t] = 0;
    queue.push_back(t);
  }
  while (!queue.empty()) {
    std::uint32_t v = queue.front();
    queue.pop_front();
    for (std::uint32_t p : pred[v]) {
      if (steps[p] != -1) continue;
      steps[p] = steps[v] + 1;
      queue.push_back(p);
    }
  }
  return steps;
}

}  // namespace ient
