#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fdpband {

// Error categories, mapped to CLI exit codes 2/3/4.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent substream seed for (seed, index); output does not depend on the
// order in which substreams are consumed.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51a75f4bd03f3c21ULL));
}

// Deterministic stream of uniforms strictly inside (0,1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // ((x >> 11) + 0.5) * 2^-53 lies in [2^-54, 1 - 2^-54]; never 0 or 1.
  double open_unit() {
    return static_cast<double>((eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on open-interval uniforms.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = open_unit();
    const double u2 = open_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t raw() { return eng_(); }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    return eng_() % bound;
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Worker count for trial-level parallelism; FDPBAND_THREADS overrides.
inline std::size_t max_threads() {
  static const std::size_t n = [] {
    if (const char* s = std::getenv("FDPBAND_THREADS")) {
      const long v = std::atol(s);
      if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<std::size_t>(hw == 0 ? 1 : (hw > 8 ? 8 : hw));
  }();
  return n;
}

// Runs fn(0..count-1); results must be written to slots indexed by i so the
// output does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min(max_threads(), count == 0 ? 1 : count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace fdpband
