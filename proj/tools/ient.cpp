// Batch front end: wires key=value configs to the library modules and
// writes CSV/JSON reports plus a run manifest into the output directory.
//
// Exit codes: 0 on success, 1 on configuration errors (bad files, bad
// keys, inconsistent dimensions), 2 on numerical failures (blow-up,
// non-convergence), with a diagnostic error.json next to the outputs.
//
// Payload files are byte-identical across reruns of the same config and
// seed; the wall-clock timestamp lives only in manifest.json.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ient/ient.hpp"

using json = nlohmann::ordered_json;
using namespace ient;

namespace {

struct RunCtx {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int workers = 1;

  std::string path(const std::string& name) const {
    return (std::filesystem::path(out_dir) / name).string();
  }
};

json vec_json(const VectorXd& v) {
  json a = json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_json(const MatrixXd& m) {
  json rows = json::array();
  for (long r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

void require_dim(const VectorXd& v, int dim, const std::string& key) {
  if (v.size() != dim)
    throw ConfigError("key '" + key + "' must list " + std::to_string(dim) +
                      " value(s)");
}

void write_json(const RunCtx& ctx, const std::string& name, const json& j) {
  write_text_file(ctx.path(name), j.dump(2) + "\n");
}

// Smallest principal angle between the column spans of two orthonormal
// frames; pi/2 when either is empty.
double frame_angle(const MatrixXd& p, const MatrixXd& q) {
  if (p.cols() == 0 || q.cols() == 0) return std::acos(0.0);
  Eigen::JacobiSVD<MatrixXd> svd(p.transpose() * q);
  double c = std::min(1.0, svd.singularValues()[0]);
  return std::acos(c);
}

std::vector<long> get_counts(const KeyValues& kv, const std::string& key) {
  std::vector<long> out;
  for (double v : kv.get_list(key)) {
    long n = std::lround(v);
    if (std::abs(v - n) > 1e-9 || n < 1)
      throw ConfigError("key '" + key + "' must list positive integers");
    out.push_back(n);
  }
  return out;
}

// ----------------------------------------------------------- commands

void cmd_integrate(const KeyValues& kv, const SystemSpec& sys, RunCtx& ctx) {
  VectorXd x0 = kv.get_vec("x0");
  require_dim(x0, sys.dim(), "x0");
  ControlSignal u = load_control(kv, "control", sys.inputs());
  double tau = kv.get_double("tau");
  double h = kv.get_double("h", 0.0);
  FlowSegment seg = integrate(sys, x0, u, tau, true, h);

  std::vector<std::string> header{"t"};
  for (int i = 0; i < sys.dim(); ++i)
    header.push_back("x" + std::to_string(i + 1));
  for (int r = 0; r < sys.dim(); ++r)
    for (int c = 0; c < sys.dim(); ++c)
      header.push_back("phi" + std::to_string(r + 1) + std::to_string(c + 1));
  CsvWriter csv(ctx.path("flow.csv"), header);
  for (std::size_t k = 0; k < seg.times.size(); ++k) {
    std::vector<double> row{seg.times[k]};
    for (int i = 0; i < sys.dim(); ++i) row.push_back(seg.states[k][i]);
    const MatrixXd& phi = seg.fundamentals[k];
    for (int r = 0; r < sys.dim(); ++r)
      for (int c = 0; c < sys.dim(); ++c) row.push_back(phi(r, c));
    csv.row(row);
  }
}

void cmd_cocycle(const KeyValues& kv, const SystemSpec& sys, RunCtx& ctx) {
  VectorXd x0 = kv.get_vec("x0");
  require_dim(x0, sys.dim(), "x0");
  ControlSignal u = load_control(kv, "control", sys.inputs());
  double tau = kv.get_double("tau");
  double h = kv.get_double("h", 0.0);
  std::string kind = kv.get_string("kind", "exterior");
  CocycleTrace tr;
  if (kind == "exterior")
    tr = alpha_trace(sys, x0, u, tau, h);
  else if (kind == "det")
    tr = det_trace(sys, x0, u, tau, {}, h);
  else
    throw ConfigError("kind must be 'exterior' or 'det'");

  CsvWriter csv(ctx.path("cocycle.csv"), {"t", "value", "rate"});
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    double t = tr.times[k];
    csv.row({t, tr.values[k], t == 0.0 ? 0.0 : tr.values[k] / t});
  }
}

void cmd_floquet(const KeyValues& kv, const SystemSpec& sys, RunCtx& ctx) {
  VectorXd guess = kv.get_vec("guess");
  require_dim(guess, sys.dim(), "guess");
  ControlSignal u = load_control(kv, "control", sys.inputs());
  if (!u.periodic()) throw ConfigError("floquet needs a periodic control");
  double h = kv.get_double("h", 0.0);
  double tol_newton = kv.get_double("tol.newton", 1e-10);
  double tol_closure = kv.get_double("tol.closure", 1e-6);

  VectorXd anchor = find_periodic_point(sys, guess, u, tol_newton, 30, h);
  MatrixXd m = monodromy(sys, anchor, u, tol_closure, h);
  auto exps = floquet_exponents(m, u.period());

  json j;
  j["period"] = u.period();
  j["anchor"] = vec_json(anchor);
  json bands = json::array();
  for (const auto& [value, mult] : exps)
    bands.push_back({{"value", value}, {"multiplicity", mult}});
  j["exponents"] = std::move(bands);
  j["sum_positive"] = sum_positive_exponents(exps);
  write_json(ctx, "floquet.json", j);
}

void cmd_gramian(const KeyValues& kv, const SystemSpec& sys, RunCtx& ctx) {
  VectorXd x0 = kv.get_vec("x0");
  require_dim(x0, sys.dim(), "x0");
  ControlSignal u = load_control(kv, "control", sys.inputs());
  double t1 = kv.get_double("t1", 0.0);
  double t2 = kv.get_double("t2");
  double tol_rank = kv.get_double("tol.rank", 1e-8);
  double h = kv.get_double("h", 0.0);

  GramianReport rep = gramian_rank(sys, x0, u, t1, t2, tol_rank, h);
  json j;
  j["t1"] = t1;
  j["t2"] = t2;
  j["rank"] = rep.rank;
  j["regular"] = rep.regular;
  j["singular_values"] = vec_json(rep.singular_values);
  write_json(ctx, "gramian.json", j);
}

void cmd_splitting(const KeyValues& kv, const SystemSpec& sys, RunCtx& ctx) {
  VectorXd x0 = kv.get_vec("x0");
  require_dim(x0, sys.dim(), "x0");
  ControlSignal u = load_control(kv, "control", sys.inputs());
  double tau = kv.get_double("tau", 0.0);
  int dp = static_cast<int>(kv.get_long("dim.plus"));
  int dm = static_cast<int>(kv.get_long("dim.minus"));
  double T = kv.get_double("horizon");
  double h = kv.get_double("h", 0.0);
  std::optional<Region> confine;
  if (kv.has("region.lo")) confine = load_region(kv, "region", sys.dim());

  Splitting s = estimate_splitting(sys, x0, u, tau, dp, dm, T,
                                   confine ? &*confine : nullptr, h);

  std::vector<std::string> header{"t"};
  for (int c = 0; c < dp; ++c)
    for (int r = 0; r < sys.dim(); ++r)
      header.push_back("bplus" + std::to_string(r + 1) + std::to_string(c + 1));
  for (int c = 0; c < dm; ++c)
    for (int r = 0; r < sys.dim(); ++r)
      header.push_back("bminus" + std::to_string(r + 1) +
                       std::to_string(c + 1));
  header.push_back("angle");
  CsvWriter csv(ctx.path("splitting.csv"), header);
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    std::vector<double> row{s.times[k]};
    for (int c = 0; c < dp; ++c)
      for (int r = 0; r < sys.dim(); ++r) row.push_back(s.plus[k](r, c));
    for (int c = 0; c < dm; ++c)
      for (int r = 0; r < sys.dim(); ++r) row.push_back(s.minus[k](r, c));
    row.push_back(frame_angle(s.plus[k], s.minus[k]));
    csv.row(row);
  }

  HyperbolicityReport hyp =
      verify_hyperbolicity(s, kv.get_double("probe.horizon", 0.0));
  json j;
  j["dim_plus"] = s.dim_plus;
  j["dim_minus"] = s.dim_minus;
  j["horizon"] = s.horizon;
  j["convergence"] = s.convergence;
  j["angle_floor"] = s.angle_floor;
  j["invariance_defect"] = s.invariance_defect;
  j["hyperbolicity"] = {{"ok", hyp.ok},
                        {"lambda_hat", hyp.lambda_hat},
                        {"c_hat", hyp.c_hat},
                        {"lambda_plus", hyp.lambda_plus},
                        {"lambda_minus", hyp.lambda_minus},
                        {"violations", hyp.violations.size()}};
  write_json(ctx, "splitting.json", j);
}

void cmd_chainsets(const KeyValues& kv, const SystemSpec& sys, RunCtx& ctx) {
  Region region = load_region(kv, "region", sys.dim());
  int levels = static_cast<int>(kv.get_long("levels"));
  double tau_step = kv.get_double("tau.step");
  double eps = kv.get_double("eps");
  double h = kv.get_double("h", 0.0);
  std::vector<VectorXd> controls =
      quantize_controls(sys.control_box(), levels);

  ChainGraph g = build_chain_graph(sys, region, controls, tau_step, eps, h);
  ChainSets sets = chain_control_sets(g);

  CsvWriter csv(ctx.path("edges.csv"), {"from", "to"});
  for (std::size_t i = 0; i < g.succ.size(); ++i)
    for (std::uint32_t w : g.succ[i])
      csv.row_raw({std::to_string(i), std::to_string(w)});

  json j;
  j["cells"] = g.succ.size();
  j["edge_count"] = g.edge_count;
  j["escapes"] = g.escapes;
  json classes = json::array();
  for (const auto& cells : sets.classes) {
    auto [lo, hi] = cells_envelope(g, cells);
    json cls;
    cls["size"] = cells.size();
    cls["lo"] = vec_json(lo);
    cls["hi"] = vec_json(hi);
    if (cells.size() <= 10000) {
      json ids = json::array();
      for (std::uint32_t c : cells) ids.push_back(c);
      cls["cells"] = std::move(ids);
    }
    classes.push_back(std::move(cls));
  }
  j["classes"] = std::move(classes);
  write_json(ctx, "chainsets.json", j);
}

void write_spanning_csv(const RunCtx& ctx, const std::vector<double>& taus,
                        const std::vector<long>& counts) {
  CsvWriter csv(ctx.path("spanning.csv"), {"tau", "count", "rate"});
  for (std::size_t i = 0; i < taus.size(); ++i)
    csv.row({taus[i], static_cast<double>(counts[i]),
             std::log(static_cast<double>(counts[i])) / taus[i]});
}

void cmd_spanning(const KeyValues& kv, const SystemSpec& sys, RunCtx& ctx) {
  VectorXd k_lo = kv.get_vec("k.lo"), k_hi = kv.get_vec("k.hi");
  require_dim(k_lo, sys.dim(), "k.lo");
  require_dim(k_hi, sys.dim(), "k.hi");
  std::vector<VectorXd> points =
      grid_points(k_lo, k_hi, get_counts(kv, "k.count"));
  VectorXd q_lo = kv.get_vec("q.lo"), q_hi = kv.get_vec("q.hi");
  require_dim(q_lo, sys.dim(), "q.lo");
  require_dim(q_hi, sys.dim(), "q.hi");
  std::vector<double> taus = kv.get_list("taus");
  double delta = kv.get_double("delta");
  int levels = static_cast<int>(kv.get_long("levels"));
  double h = kv.get_double("h", 0.0);
  double max_words = kv.get_double("max.words", 2e6);

  std::vector<long> counts;
  for (double tau : taus)
    counts.push_back(spanning_count(sys, points, q_lo, q_hi, tau, delta,
                                    levels, h, max_words)
                         .count);
  write_spanning_csv(ctx, taus, counts);
}

json route_json(const WordSearchReport& rep) {
  json j;
  j["rate"] = rep.rate;
  j["rate_check"] = rep.rate_check;
  j["stable"] = rep.stable;
  j["word"] = rep.word;
  json letters = json::array();
  for (const auto& l : rep.letters) letters.push_back(vec_json(l));
  j["letters"] = std::move(letters);
  j["anchor"] = vec_json(rep.anchor);
  j["evaluations"] = rep.evaluations;
  j["skipped"] = rep.skipped;
  return j;
}

void cmd_entropy(const KeyValues& kv, const SystemSpec& sys, RunCtx& ctx) {
  VectorXd k_lo = kv.get_vec("k.lo"), k_hi = kv.get_vec("k.hi");
  require_dim(k_lo, sys.dim(), "k.lo");
  require_dim(k_hi, sys.dim(), "k.hi");
  std::vector<VectorXd> points =
      grid_points(k_lo, k_hi, get_counts(kv, "k.count"));
  VectorXd q_lo = kv.get_vec("q.lo"), q_hi = kv.get_vec("q.hi");
  require_dim(q_lo, sys.dim(), "q.lo");
  require_dim(q_hi, sys.dim(), "q.hi");
  std::optional<Region> confine;
  if (kv.has("q.cell"))
    confine = Region(q_lo, q_hi, kv.get_double("q.cell"));

  EntropyConfig cfg;
  cfg.taus = kv.get_list("taus");
  cfg.dt = kv.get_double("delta");
  cfg.levels = static_cast<int>(kv.get_long("levels"));
  cfg.word_len = static_cast<int>(kv.get_long("word.len", cfg.word_len));
  cfg.horizon = kv.get_double("horizon", cfg.horizon);
  cfg.restarts = static_cast<int>(kv.get_long("restarts", cfg.restarts));
  cfg.seed = ctx.seed;
  cfg.dim_plus = static_cast<int>(kv.get_long("dim.plus", -1));
  cfg.stability_tol = kv.get_double("stability.tol", cfg.stability_tol);
  cfg.tol_sandwich = kv.get_double("tol.sandwich", cfg.tol_sandwich);
  cfg.eta = kv.get_double("eta", cfg.eta);
  cfg.h = kv.get_double("h", 0.0);
  if (kv.has("guess")) {
    cfg.guess = kv.get_vec("guess");
    require_dim(cfg.guess, sys.dim(), "guess");
  }

  EntropyReport rep = formula_report(sys, points, q_lo, q_hi,
                                     confine ? &*confine : nullptr, cfg);

  write_spanning_csv(ctx, rep.taus, rep.counts);
  json j;
  j["lower"] = rep.lower;
  j["upper"] = rep.upper;
  j["slope"] = rep.slope;
  j["sandwich_ok"] = rep.sandwich_ok;
  j["tol_sandwich"] = rep.tol_sandwich;
  j["dim_plus"] = rep.dim_plus;
  j["dim_minus"] = rep.dim_minus;
  j["upper_route"] = route_json(rep.upper_route);
  j["lower_route"] = route_json(rep.lower_route);
  j["taus"] = rep.taus;
  j["counts"] = rep.counts;
  write_json(ctx, "entropy.json", j);
}

void cmd_shadow(const KeyValues& kv, const SystemSpec& sys, RunCtx& ctx) {
  if (sys.inputs() < 1) throw ConfigError("shadow needs at least one input");
  long n = kv.get_long("period");
  long w = kv.get_long("window");
  if (n < 1 || w < 1) throw ConfigError("period and window must be positive");
  double delta = kv.get_double("delta");
  if (delta <= 0.0) throw ConfigError("delta must be positive");
  int levels = static_cast<int>(kv.get_long("levels"));
  bool periodic = kv.get_bool("periodic", true);
  std::vector<VectorXd> letters =
      quantize_controls(sys.control_box(), levels);
  const auto& box = sys.control_box();
  const int m = sys.inputs();

  // Noisy windows over a random periodic base word: every stored entry is
  // its base letter plus noise of norm <= delta/2, clamped to the box, so
  // the chain defect stays within delta.
  Rng rng(ctx.seed);
  std::vector<std::size_t> base;
  for (long k = 0; k < n; ++k) base.push_back(rng.index(letters.size()));
  double comp = delta / (2.0 * std::sqrt(static_cast<double>(m)));
  auto noisy = [&](std::size_t idx) {
    VectorXd v = letters[idx];
    for (int i = 0; i < m; ++i) {
      v[i] += rng.uniform(-comp, comp);
      v[i] = std::min(std::max(v[i], box[i].first), box[i].second);
    }
    return v;
  };
  std::vector<SeqWindow> chain;
  for (long i = 0; i < n; ++i) {
    std::vector<VectorXd> items;
    for (long j = -w; j <= w; ++j)
      items.push_back(noisy(base[static_cast<std::size_t>(
          (((i + j) % n) + n) % n)]));
    chain.emplace_back(std::move(items));
  }

  std::vector<VectorXd> eta = shadow_trace(chain);
  double defect = chain_defect(chain, periodic);
  double max_dev = shadowing_deviation(chain, periodic);
  double bound = std::sqrt(delta) + 1.0 / (static_cast<double>(w) + 1.0);

  // Per-element deviation of the shadow against that element's window.
  std::vector<std::string> header{"i"};
  for (int i = 0; i < m; ++i) header.push_back("u" + std::to_string(i + 1));
  header.push_back("deviation");
  CsvWriter csv(ctx.path("shadow.csv"), header);
  for (long i = 0; i < n; ++i) {
    const SeqWindow& win = chain[static_cast<std::size_t>(i)];
    double dev = 0.0;
    for (long j = -win.radius(); j <= win.radius(); ++j) {
      long k = i + j;
      if (periodic)
        k = ((k % n) + n) % n;
      else if (k < 0 || k >= n)
        continue;
      double d = (eta[static_cast<std::size_t>(k)] - win.at(j)).norm();
      if (j != 0) d = std::min(d, 1.0 / static_cast<double>(std::abs(j)));
      dev = std::max(dev, d);
    }
    std::vector<double> row{static_cast<double>(i)};
    for (int c = 0; c < m; ++c) row.push_back(eta[i][c]);
    row.push_back(dev);
    csv.row(row);
  }

  json j;
  j["delta"] = delta;
  j["window"] = w;
  j["period"] = n;
  j["periodic"] = periodic;
  j["defect"] = defect;
  j["max_deviation"] = max_dev;
  j["bound"] = bound;
  j["ok"] = max_dev <= bound;
  write_json(ctx, "shadow.json", j);
}

void cmd_morse(const KeyValues& kv, const SystemSpec& sys, RunCtx& ctx) {
  VectorXd anchor = kv.get_vec("anchor");
  require_dim(anchor, sys.dim(), "anchor");
  int levels = static_cast<int>(kv.get_long("levels"));
  long radius = kv.get_long("radius", 1);
  std::vector<double> ladder = kv.get_list("eps");
  long lyap_len = kv.get_long("lyap.maxlen", 0);
  double h = kv.get_double("h", 0.0);
  std::vector<VectorXd> letters =
      quantize_controls(sys.control_box(), levels);

  std::vector<MorseInterval> bands =
      morse_spectrum(sys, anchor, letters, ladder, radius, h);
  json j;
  j["anchor"] = vec_json(anchor);
  j["radius"] = radius;
  j["levels"] = levels;
  json rows = json::array();
  for (const auto& b : bands)
    rows.push_back({{"eps", b.eps}, {"lo", b.lo}, {"hi", b.hi}});
  j["bands"] = std::move(rows);
  if (lyap_len >= 1)
    j["min_lyapunov"] =
        min_lyapunov_via_periodic(sys, anchor, letters, lyap_len, h);
  write_json(ctx, "morse.json", j);
}

void cmd_volcheck(const KeyValues& kv, const SystemSpec& sys, RunCtx& ctx) {
  VectorXd x0 = kv.get_vec("x0");
  require_dim(x0, sys.dim(), "x0");
  ControlSignal u = load_control(kv, "control", sys.inputs());
  std::vector<double> taus = kv.get_list("taus");
  double eps = kv.get_double("eps");
  long samples = kv.get_long("samples");
  if (samples < 1) throw ConfigError("samples must be positive");
  double threshold = kv.get_double("threshold", 10.0);
  int dp = static_cast<int>(kv.get_long("dim.plus", 0));
  double h = kv.get_double("h", 0.0);

  MatrixXd basis(sys.dim(), 0);
  if (dp > 0) {
    double T = kv.get_double("split.horizon", 12.0);
    Splitting s =
        estimate_splitting(sys, x0, u, 0.0, dp, sys.dim() - dp, T, nullptr, h);
    basis = s.plus[0];
  }

  VolumeLemmaReport rep =
      volume_lemma_check(sys, u, x0, basis, taus, eps,
                         static_cast<std::uint64_t>(samples), ctx.seed,
                         threshold, h);

  CsvWriter csv(ctx.path("volume.csv"),
                {"tau", "vol", "stderr", "jplus", "product"});
  for (const auto& row : rep.rows) {
    double jplus = std::exp(row.log_jplus);
    csv.row({row.vol.tau, row.vol.value, (row.vol.hi - row.vol.lo) / 4.0,
             jplus, row.vol.value * jplus});
  }
  json j;
  j["eps"] = eps;
  j["samples"] = samples;
  j["threshold"] = rep.threshold;
  j["ratio"] = rep.ratio;
  j["bounded"] = rep.bounded;
  j["basis"] = mat_json(basis);
  write_json(ctx, "volcheck.json", j);
}

// ----------------------------------------------------------- dispatch

void write_manifest(const RunCtx& ctx, const std::string& command,
                    const KeyValues& kv) {
  json j;
  j["command"] = command;
  j["config"] = kv.origin();
  j["config_hash"] = config_hash(kv.entries());
  j["seed"] = ctx.seed;
  j["workers"] = ctx.workers;
  j["versions"] = {{"toolkit", kToolkitVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)}};
  j["timestamp"] = utc_timestamp();
  write_json(ctx, "manifest.json", j);
}

using Handler = void (*)(const KeyValues&, const SystemSpec&, RunCtx&);

const std::map<std::string, std::pair<const char*, Handler>> kCommands = {
    {"integrate",
     {"integrate a trajectory with its fundamental matrix", cmd_integrate}},
    {"cocycle",
     {"exterior-power or determinant cocycle along a trajectory",
      cmd_cocycle}},
    {"floquet", {"exponents of a periodic orbit's monodromy", cmd_floquet}},
    {"gramian", {"controllability Gramian rank test", cmd_gramian}},
    {"splitting",
     {"hyperbolic splitting along a control trajectory", cmd_splitting}},
    {"chainsets",
     {"chain-transitive cell classes of the control flow", cmd_chainsets}},
    {"spanning", {"brute-force spanning-set counts", cmd_spanning}},
    {"entropy",
     {"all three entropy routes: counts, upper and lower bounds",
      cmd_entropy}},
    {"shadow", {"shadowing check on a noisy periodic symbol chain",
                cmd_shadow}},
    {"morse", {"growth spectrum over periodic symbol chains", cmd_morse}},
    {"volcheck", {"tube-volume versus unstable-determinant check",
                  cmd_volcheck}},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"invariance-entropy toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seed_str;
  RunCtx ctx;
  for (const auto& [name, entry] : kCommands) {
    CLI::App* sc = app.add_subcommand(name, entry.first);
    sc->add_option("config", config_path, "key=value config file")
        ->required();
    sc->add_option("--out", ctx.out_dir, "output directory");
    sc->add_option("--seed", seed_str, "override the config seed");
    sc->add_option("--workers", ctx.workers, "worker threads");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    KeyValues kv = KeyValues::parse_file(config_path);
    SystemSpec sys = load_system(kv);
    ctx.seed = kv.get_seed("seed", 0);
    if (!seed_str.empty()) {
      // stoull quietly wraps negative input, so require digits up front
      if (seed_str.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("--seed must be an unsigned integer");
      try {
        std::size_t used = 0;
        ctx.seed = std::stoull(seed_str, &used);
        if (used != seed_str.size()) throw std::invalid_argument(seed_str);
      } catch (const std::exception&) {
        throw ConfigError("--seed must be an unsigned integer");
      }
    }
    if (ctx.workers < 1) throw ConfigError("--workers must be positive");
    std::filesystem::create_directories(ctx.out_dir);

    kCommands.at(command).second(kv, sys, ctx);
    write_manifest(ctx, command, kv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    json diag{{"command", command}, {"kind", "numerical"},
              {"error", e.what()}};
    std::error_code ec;
    std::filesystem::create_directories(ctx.out_dir, ec);
    try {
      write_json(ctx, "error.json", diag);
    } catch (const Error&) {
    }
    return 2;
  } catch (const EvalDomainError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
