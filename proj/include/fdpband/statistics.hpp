#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fdpband/common.hpp"

namespace fdpband {

enum class StatKind { KS, HC, THC, BJ, Pointwise };

// Template family for sup-type statistics: sup_{t in [ell,r]} (F(t) - t) / sigma(t),
// sigma(t) = (t(1-t))^beta. KS fixes (ell, r, beta) = (0, 1, 0) internally up
// to the sqrt(m) factor; HC uses the full window (0,1); THC requires a proper
// subwindow. Pointwise evaluates at a single t0.
struct SummaryStatisticSpec {
  StatKind kind = StatKind::THC;
  double ell = 0.01;
  double r = 0.99;
  double beta = 0.5;
  double t0 = 0.5;  // Pointwise only

  static SummaryStatisticSpec ks();
  static SummaryStatisticSpec hc(double beta = 0.5);
  static SummaryStatisticSpec thc(double ell = 0.01, double r = 0.99,
                                  double beta = 0.5);
  static SummaryStatisticSpec bj();
  static SummaryStatisticSpec pointwise(double t0, double beta = 0.5);

  void validate() const;
  // Effective supremum window for this kind.
  std::pair<double, double> window() const;
};

// Right-continuous empirical CDF over m points in [0,1]:
// F(t) = #{values <= t} / m, F(0-) = 0, F(1) = 1.
class EcdfCurve {
 public:
  explicit EcdfCurve(std::vector<double> values);
  static EcdfCurve from_sorted(std::vector<double> sorted_values);

  std::size_t size() const { return sorted_.size(); }
  std::span<const double> sorted_values() const { return sorted_; }
  double eval(double t) const;

 private:
  EcdfCurve() = default;
  std::vector<double> sorted_;
};

// sqrt(m) * max_j (j/m - u_(j)) = sqrt(m) * sup_t (F(t) - t).
double ks_statistic(const EcdfCurve& curve);

// sup_{t in [ell,r]} (F(t) - t) / (t(1-t))^beta, exact via candidate points
// t = ell and the jump points in (ell, r]. Accepts HC and THC specs.
double thc_statistic(const EcdfCurve& curve, const SummaryStatisticSpec& spec);

// m * max_{1 <= i <= floor(m/2)} D(p_(i), i/m) with the Bernoulli KL
// divergence D and conventions 0 log 0 = 0, D(0, q) = -log(1-q).
// The one_sided variant restricts the max to indices with p_(i) < i/m.
double bj_statistic(const EcdfCurve& curve, bool one_sided = false);

// (F(t0) - mu0) / sigma0.
double pointwise_statistic(const EcdfCurve& curve, double t0, double mu0,
                           double sigma0);

// Statistic used by envelope calibration; dispatches on spec.kind and applies
// the sign flip for lower bounds (sup of (t - F(t)) / sigma(t)).
double summary_statistic(const EcdfCurve& curve,
                         const SummaryStatisticSpec& spec);
double summary_statistic_lower(const EcdfCurve& curve,
                               const SummaryStatisticSpec& spec);

namespace detail {

// Candidate-scan statistics over an already-sorted span (the prefix path used
// by family calibration).
double sup_statistic_sorted(std::span<const double> sorted,
                            const SummaryStatisticSpec& spec, bool lower);

// (f - t)/(t(1-t))^beta with one-sided limit conventions at t in {0,1}.
double standardized_gap(double f, double t, double beta);

double sigma_template(double t, double beta);
double sigma_template_deriv(double t, double beta);

}  // namespace detail

}  // namespace fdpband
