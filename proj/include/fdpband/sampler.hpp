#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fdpband/common.hpp"

namespace fdpband {

enum class SampleMode { Conformal, IidUniform };

struct SamplerConfig {
  std::size_t n = 0;  // calibration size
  std::size_t m = 1;  // test size
  std::size_t B = 1;  // Monte Carlo replications
  std::uint64_t seed = 0;
  SampleMode mode = SampleMode::Conformal;

  void validate() const;
};

// B rows, each an exact draw of the m conformal uniform variables (or m
// i.i.d. uniforms). Immutable after construction; rows use independent
// substreams keyed by (seed, row), and within a row the per-test draws are
// ordered so the first r columns coincide bit-for-bit with a run at m = r.
class UniformSampleMatrix {
 public:
  UniformSampleMatrix(SamplerConfig config, std::vector<double> values);

  std::size_t rows() const { return config_.B; }
  std::size_t cols() const { return config_.m; }
  double at(std::size_t b, std::size_t j) const {
    return values_[b * config_.m + j];
  }
  std::span<const double> row(std::size_t b) const {
    return {values_.data() + b * config_.m, config_.m};
  }
  const SamplerConfig& config() const { return config_; }
  const std::vector<double>& values() const { return values_; }

 private:
  SamplerConfig config_;
  std::vector<double> values_;  // row-major B x m
};

// q_j = (#{i <= n : T_i < T_{n+j}} + U_j) / (n+1) with fresh i.i.d. uniforms
// per row. Requires mode == Conformal.
UniformSampleMatrix sample_conformal(const SamplerConfig& config);

// B x m matrix of i.i.d. uniforms on the open interval (0,1); the infinite
// calibration limit. Requires mode == IidUniform.
UniformSampleMatrix sample_iid(const SamplerConfig& config);

// Dispatch on config.mode.
UniformSampleMatrix sample(const SamplerConfig& config);

}  // namespace fdpband
