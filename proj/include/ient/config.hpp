// Key-value run configuration.
//
// Format: one `key = value` per line, `#` starts a comment, blank lines
// ignored.  Keys are dotted lowercase words; values are numbers, words,
// or space-separated numeric lists.  Duplicate keys are rejected so typos
// fail loudly instead of silently shadowing an earlier line.
//
// System schema:
//   dim = <state dimension>
//   inputs = <number of control inputs>
//   field.<i>.<j> = <expression in x1..xd>   i = 0 for the drift, then
//                                            1..inputs; j = 0..dim-1
//   u.lo = <inputs numbers>                  control box (omit when
//   u.hi = <inputs numbers>                  inputs = 0)
//
// Regions are three keys under one prefix:
//   <prefix>.lo / <prefix>.hi = <dim numbers>, <prefix>.cell = <width>
//
// Controls are either constant or a word of steps under one prefix:
//   <prefix>.delta = <step length>
//   <prefix>.const = <inputs numbers>
// or
//   <prefix>.steps = <n>, <prefix>.step.<k> = <inputs numbers>,
//   <prefix>.periodic = 0|1 (default 1)
#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ient/system.hpp"
#include "ient/util.hpp"

namespace ient {

class KeyValues {
 public:
  static KeyValues parse_text(const std::string& text,
                              const std::string& origin = "<inline>") {
    KeyValues kv;
    kv.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected key = value");
      std::string key = trim(trimmed.substr(0, eq));
      std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty() || value.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": empty key or value");
      for (char c : key)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' &&
            c != '_')
          throw ConfigError(origin + ":" + std::to_string(lineno) +
                            ": bad character in key '" + key + "'");
      if (!kv.kv_.emplace(key, value).second)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": duplicate key '" + key + "'");
    }
    return kv;
  }

  static KeyValues parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream body;
    body << in.rdbuf();
    return parse_text(body.str(), path);
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  const std::string& raw(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end())
      throw ConfigError(origin_ + ": missing key '" + key + "'");
    return it->second;
  }

  std::string get_string(const std::string& key) const { return raw(key); }
  std::string get_string(const std::string& key,
                         const std::string& dflt) const {
    return has(key) ? raw(key) : dflt;
  }

  double get_double(const std::string& key) const {
    return parse_double(key, raw(key));
  }
  double get_double(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
  }

  long get_long(const std::string& key) const {
    double v = get_double(key);
    long n = std::lround(v);
    if (std::abs(v - n) > 1e-9)
      throw ConfigError(origin_ + ": key '" + key + "' must be an integer");
    return n;
  }
  long get_long(const std::string& key, long dflt) const {
    return has(key) ? get_long(key) : dflt;
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t dflt) const {
    if (!has(key)) return dflt;
    const std::string& s = raw(key);
    try {
      std::size_t used = 0;
      std::uint64_t v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": key '" + key + "' must be a seed");
    }
  }

  bool get_bool(const std::string& key, bool dflt) const {
    if (!has(key)) return dflt;
    const std::string& s = raw(key);
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw ConfigError(origin_ + ": key '" + key + "' must be 0/1/true/false");
  }

  std::vector<double> get_list(const std::string& key) const {
    std::istringstream in(raw(key));
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_double(key, tok));
    if (out.empty())
      throw ConfigError(origin_ + ": key '" + key + "' has no values");
    return out;
  }

  VectorXd get_vec(const std::string& key) const {
    std::vector<double> v = get_list(key);
    VectorXd out(static_cast<long>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
      out[static_cast<long>(i)] = v[i];
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }
  const std::string& origin() const { return origin_; }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  double parse_double(const std::string& key, const std::string& s) const {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": key '" + key + "' is not a number: '" +
                        s + "'");
    }
  }

  std::map<std::string, std::string> kv_;
  std::string origin_;
};

inline SystemSpec load_system(const KeyValues& kv) {
  int dim = static_cast<int>(kv.get_long("dim"));
  int inputs = static_cast<int>(kv.get_long("inputs"));
  if (dim < 1) throw ConfigError("dim must be positive");
  if (inputs < 0) throw ConfigError("inputs must be nonnegative");
  std::vector<std::vector<Expr>> fields;
  for (int i = 0; i <= inputs; ++i) {
    std::vector<Expr> row;
    for (int j = 0; j < dim; ++j) {
      std::string key =
          "field." + std::to_string(i) + "." + std::to_string(j);
      row.push_back(parse_expr(kv.raw(key), dim));
    }
    fields.push_back(std::move(row));
  }
  std::vector<std::pair<double, double>> box;
  if (inputs > 0) {
    std::vector<double> lo = kv.get_list("u.lo");
    std::vector<double> hi = kv.get_list("u.hi");
    if (static_cast<int>(lo.size()) != inputs ||
        static_cast<int>(hi.size()) != inputs)
      throw ConfigError("u.lo / u.hi must list one value per input");
    for (int i = 0; i < inputs; ++i) box.emplace_back(lo[i], hi[i]);
  }
  return SystemSpec(dim, inputs, std::move(fields), std::move(box));
}

inline Region load_region(const KeyValues& kv, const std::string& prefix,
                          int dim) {
  VectorXd lo = kv.get_vec(prefix + ".lo");
  VectorXd hi = kv.get_vec(prefix + ".hi");
  if (lo.size() != dim || hi.size() != dim)
    throw ConfigError(prefix + " box must match the state dimension");
  return Region(lo, hi, kv.get_double(prefix + ".cell"));
}

inline ControlSignal load_control(const KeyValues& kv,
                                  const std::string& prefix, int inputs) {
  double delta = kv.get_double(prefix + ".delta");
  if (inputs == 0) return ControlSignal::constant(VectorXd(0), delta);
  auto check = [&](const VectorXd& v, const std::string& key) {
    if (v.size() != inputs)
      throw ConfigError(key + " must list one value per input");
  };
  if (kv.has(prefix + ".const")) {
    VectorXd v = kv.get_vec(prefix + ".const");
    check(v, prefix + ".const");
    return ControlSignal::constant(v, delta);
  }
  long n = kv.get_long(prefix + ".steps");
  if (n < 1) throw ConfigError(prefix + ".steps must be positive");
  std::vector<VectorXd> frame;
  for (long k = 0; k < n; ++k) {
    std::string key = prefix + ".step." + std::to_string(k);
    VectorXd v = kv.get_vec(key);
    check(v, key);
    frame.push_back(std::move(v));
  }
  return ControlSignal(std::move(frame), delta,
                       kv.get_bool(prefix + ".periodic", true));
}

}  // namespace ient
