#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdpband/sampler.hpp"
#include "fdpband/statistics.hpp"

namespace fdpband {

enum class Direction { Upper, Lower };
enum class Scale { Proportion, Count };

// Calibrated simultaneous envelope. Upper, proportion scale:
//   G(t) = min(ell + T sigma(ell), 1)  for t < ell,
//          min(t   + T sigma(t),   1)  on [ell, r],
//          1                           for t > r,
// with G == cap when the cutoff is the +inf atom. Lower direction mirrors the
// construction (floor 0, extrapolation flipped). Count scale multiplies by m
// and clips to [0, m]. Immutable once built; safe to evaluate concurrently.
class EnvelopeFunction {
 public:
  EnvelopeFunction() = default;
  EnvelopeFunction(SummaryStatisticSpec spec, double cutoff,
                   Direction direction, Scale scale, std::size_t n,
                   std::size_t m, SampleMode mode, double delta,
                   std::size_t B_used, std::uint64_t seed);

  double eval(double t) const;
  // Running maximum of eval over [0, t]; nondecreasing in t.
  double mono_eval(double t) const;
  double sigma(double t) const;
  double cap() const {
    return scale_ == Scale::Proportion ? 1.0 : static_cast<double>(m_);
  }

  const SummaryStatisticSpec& spec() const { return spec_; }
  double cutoff() const { return cutoff_; }
  Direction direction() const { return direction_; }
  Scale scale() const { return scale_; }
  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  SampleMode mode() const { return mode_; }
  double delta() const { return delta_; }
  std::size_t B_used() const { return B_used_; }
  std::uint64_t seed() const { return seed_; }

  EnvelopeFunction with_scale(Scale scale) const;

  nlohmann::json to_json() const;
  static EnvelopeFunction from_json(const nlohmann::json& j);

 private:
  double raw_line(double t) const;  // t +/- cutoff * sigma(t)
  double finish(double raw) const;  // cap/floor and scale

  SummaryStatisticSpec spec_{};
  double cutoff_ = kInf;
  Direction direction_ = Direction::Upper;
  Scale scale_ = Scale::Proportion;
  std::size_t n_ = 0;
  std::size_t m_ = 1;
  SampleMode mode_ = SampleMode::Conformal;
  double delta_ = 0.1;
  std::size_t B_used_ = 0;
  std::uint64_t seed_ = 0;
  double argmax_ = 0.0;  // interior maximizer of the concave branch
};

// Prefix-consistent family {G_r}, r = 1..m, all calibrated on the same sample
// matrix. member(r) is the proportion-scale envelope for prefix size r.
class EnvelopeFamily {
 public:
  EnvelopeFamily(SummaryStatisticSpec spec, std::vector<double> cutoffs,
                 Direction direction, std::size_t n, SampleMode mode,
                 double delta, std::size_t B_used, std::uint64_t seed);

  std::size_t m() const { return members_.size(); }
  std::size_t n() const { return n_; }
  double delta() const { return delta_; }
  std::size_t B_used() const { return B_used_; }
  std::uint64_t seed() const { return seed_; }
  SampleMode mode() const { return mode_; }
  const SummaryStatisticSpec& spec() const { return spec_; }
  const std::vector<double>& cutoffs() const { return cutoffs_; }

  const EnvelopeFunction& member(std::size_t r) const;  // r in 1..m

  // Count-scale bound r * min(g_r(t), 1) clipped to [0, r], and its running
  // maximum over [0, t].
  double count_bound(std::size_t r, double t) const;
  double count_bound_mono(std::size_t r, double t) const;

  nlohmann::json to_json() const;
  static EnvelopeFamily from_json(const nlohmann::json& j);

 private:
  SummaryStatisticSpec spec_{};
  std::vector<double> cutoffs_;
  std::vector<EnvelopeFunction> members_;
  Direction direction_ = Direction::Upper;
  std::size_t n_ = 0;
  SampleMode mode_ = SampleMode::Conformal;
  double delta_ = 0.1;
  std::size_t B_used_ = 0;
  std::uint64_t seed_ = 0;
};

// Monte Carlo cutoff: the (1-delta)-quantile of the per-row statistics plus a
// (B+1)^-1 atom at +infinity; returns the k-th smallest statistic with
// k = ceil((1-delta)(B+1)), or +inf when k > B.
double calibrate_cutoff(const UniformSampleMatrix& samples,
                        const SummaryStatisticSpec& spec, double delta,
                        Direction direction = Direction::Upper);

EnvelopeFunction build_envelope(double cutoff, const SummaryStatisticSpec& spec,
                                std::size_t n, std::size_t m, double delta,
                                Direction direction = Direction::Upper,
                                SampleMode mode = SampleMode::Conformal,
                                std::size_t B_used = 0, std::uint64_t seed = 0);

// Calibrates T_r on the first r columns for every r = 1..m in one pass over
// the rows (each row's prefix scan is done once).
EnvelopeFamily calibrate_family(const UniformSampleMatrix& samples,
                                const SummaryStatisticSpec& spec, double delta,
                                Direction direction = Direction::Upper);

std::string kind_to_string(StatKind kind);
StatKind kind_from_string(const std::string& s);

namespace detail {
// Smallest k >= 1 with k/(B+1) >= 1-delta; may return B+1 (the +inf atom).
std::size_t quantile_index(std::size_t B, double delta);
}  // namespace detail

}  // namespace fdpband
