#include "fdpband/sampler.hpp"

#include <utility>

namespace fdpband {

namespace {
constexpr std::uint64_t kRowTag = 0x726f777374726d00ULL;
}

void SamplerConfig::validate() const {
  if (m < 1) throw config_error("sampler: m must be >= 1");
  if (B < 1) throw config_error("sampler: B must be >= 1");
}

UniformSampleMatrix::UniformSampleMatrix(SamplerConfig config,
                                         std::vector<double> values)
    : config_(config), values_(std::move(values)) {
  if (values_.size() != config_.B * config_.m)
    throw config_error("sample matrix: size does not match B x m");
}

UniformSampleMatrix sample_conformal(const SamplerConfig& config) {
  config.validate();
  if (config.mode != SampleMode::Conformal)
    throw config_error("sample_conformal: config mode is not Conformal");

  const std::size_t n = config.n, m = config.m, B = config.B;
  std::vector<double> values(B * m);
  std::vector<double> calib(n);
  for (std::size_t b = 0; b < B; ++b) {
    Rng rng(substream_seed(config.seed ^ kRowTag, b));
    for (std::size_t i = 0; i < n; ++i) calib[i] = rng.open_unit();
    for (std::size_t j = 0; j < m; ++j) {
      // Draw order (T_{n+j}, U_j) per test point keeps column prefixes
      // bit-identical across runs with smaller m.
      const double t_test = rng.open_unit();
      const double u = rng.open_unit();
      std::size_t rank = 0;
      for (std::size_t i = 0; i < n; ++i) rank += calib[i] < t_test ? 1 : 0;
      values[b * m + j] = (static_cast<double>(rank) + u) /
                          (static_cast<double>(n) + 1.0);
    }
  }
  return {config, std::move(values)};
}

UniformSampleMatrix sample_iid(const SamplerConfig& config) {
  config.validate();
  if (config.mode != SampleMode::IidUniform)
    throw config_error("sample_iid: config mode is not IidUniform");

  const std::size_t m = config.m, B = config.B;
  std::vector<double> values(B * m);
  for (std::size_t b = 0; b < B; ++b) {
    Rng rng(substream_seed(config.seed ^ kRowTag, b));
    for (std::size_t j = 0; j < m; ++j) values[b * m + j] = rng.open_unit();
  }
  return {config, std::move(values)};
}

UniformSampleMatrix sample(const SamplerConfig& config) {
  return config.mode == SampleMode::Conformal ? sample_conformal(config)
                                              : sample_iid(config);
}

}  // namespace fdpband
