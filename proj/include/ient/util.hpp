// Shared utilities: error types, deterministic RNG, worker pool helpers.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ient {

// ---------------------------------------------------------------- errors

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input data: malformed expression, inconsistent config, invalid arguments.
struct ConfigError : Error {
  using Error::Error;
};

// Expression syntax error with the byte offset where parsing failed.
struct ParseError : ConfigError {
  ParseError(const std::string& msg, std::size_t offset)
      : ConfigError(msg + " (offset " + std::to_string(offset) + ")"),
        offset(offset) {}
  std::size_t offset;
};

// Numeric-domain failure during evaluation (division by zero, 0^negative).
struct EvalDomainError : Error {
  using Error::Error;
};

// Runtime numerical failure: blow-up, non-convergence, closure defect, ...
struct NumericalError : Error {
  using Error::Error;
};

struct BlowupError : NumericalError {
  BlowupError(double t, double norm)
      : NumericalError("trajectory blow-up at t=" + std::to_string(t) +
                       ", |x|=" + std::to_string(norm)),
        time(t), norm(norm) {}
  double time;
  double norm;
};

// ------------------------------------------------------------------- rng

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Sub-seed for partition `idx` of a run seeded with `seed`.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t idx) {
  return splitmix64(seed ^ splitmix64(idx + 1));
}

// mt19937_64 with in-house double conversion.  The engine's integer output
// is pinned by the standard; the std distributions are not, so converting
// ourselves keeps streams identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n-1] via rejection-free modulo of a wide draw.
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) %
           n;
  }

 private:
  std::mt19937_64 eng_;
};

// ---------------------------------------------------------------- workers

// Runs fn(i) for i in [0, n).  Results must be written to per-index slots;
// the partition into blocks is fixed, so output does not depend on the
// worker count.  workers <= 0 picks the hardware concurrency.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         int workers = 0) {
  if (workers <= 0) {
    unsigned hc = std::thread::hardware_concurrency();
    workers = hc == 0 ? 1 : static_cast<int>(hc);
  }
  std::size_t w = static_cast<std::size_t>(workers);
  if (w <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (w > n) w = n;
  std::vector<std::thread> pool;
  pool.reserve(w);
  std::exception_ptr first_error;
  std::mutex err_mx;
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::size_t i = t; i < n; i += w) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mx);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------- numeric

inline double sqr(double x) { return x * x; }

// log(max(value, 0)) with log(0) mapped to -inf-free sentinel.
inline double safe_log(double x) {
  return x > 0 ? std::log(x) : -744.44007192138122;
}

}  // namespace ient
