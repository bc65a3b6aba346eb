#include "fdpband/statistics.hpp"

#include <algorithm>
#include <cmath>

namespace fdpband {

SummaryStatisticSpec SummaryStatisticSpec::ks() {
  return {StatKind::KS, 0.0, 1.0, 0.0, 0.5};
}
SummaryStatisticSpec SummaryStatisticSpec::hc(double beta) {
  return {StatKind::HC, 0.0, 1.0, beta, 0.5};
}
SummaryStatisticSpec SummaryStatisticSpec::thc(double ell, double r,
                                               double beta) {
  return {StatKind::THC, ell, r, beta, 0.5};
}
SummaryStatisticSpec SummaryStatisticSpec::bj() {
  return {StatKind::BJ, 0.0, 1.0, 0.0, 0.5};
}
SummaryStatisticSpec SummaryStatisticSpec::pointwise(double t0, double beta) {
  return {StatKind::Pointwise, t0, t0, beta, t0};
}

void SummaryStatisticSpec::validate() const {
  if (beta < 0.0 || beta > 1.0)
    throw config_error("statistic spec: beta must lie in [0,1]");
  switch (kind) {
    case StatKind::KS:
    case StatKind::BJ:
      break;
    case StatKind::HC:
      break;
    case StatKind::THC:
      if (!(ell < r)) throw config_error("statistic spec: requires ell < r");
      if (!(ell > 0.0 && r < 1.0))
        throw config_error("statistic spec: THC window must satisfy 0 < ell < r < 1");
      break;
    case StatKind::Pointwise:
      if (t0 < 0.0 || t0 > 1.0)
        throw config_error("statistic spec: t0 must lie in [0,1]");
      if (beta > 0.0 && (t0 <= 0.0 || t0 >= 1.0))
        throw config_error("statistic spec: pointwise t0 must lie in (0,1) when beta > 0");
      break;
  }
}

std::pair<double, double> SummaryStatisticSpec::window() const {
  switch (kind) {
    case StatKind::KS:
    case StatKind::HC:
    case StatKind::BJ:
      return {0.0, 1.0};
    case StatKind::THC:
      return {ell, r};
    case StatKind::Pointwise:
      return {t0, t0};
  }
  return {0.0, 1.0};
}

EcdfCurve::EcdfCurve(std::vector<double> values) {
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0))
      throw data_error("ecdf: values must lie in [0,1]");
  std::sort(values.begin(), values.end());
  sorted_ = std::move(values);
}

EcdfCurve EcdfCurve::from_sorted(std::vector<double> sorted_values) {
  EcdfCurve c;
  c.sorted_ = std::move(sorted_values);
  return c;
}

double EcdfCurve::eval(double t) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
  return static_cast<double>(it - sorted_.begin()) /
         static_cast<double>(sorted_.size());
}

namespace detail {

double sigma_template(double t, double beta) {
  if (beta == 0.0) return 1.0;
  return std::pow(t * (1.0 - t), beta);
}

double sigma_template_deriv(double t, double beta) {
  if (beta == 0.0) return 0.0;
  // beta (1-2t) (t(1-t))^{beta-1}; pow(0, beta-1) = +inf for beta < 1.
  return beta * (1.0 - 2.0 * t) * std::pow(t * (1.0 - t), beta - 1.0);
}

double standardized_gap(double f, double t, double beta) {
  if (beta == 0.0) return f - t;
  const double s = t * (1.0 - t);
  if (s > 0.0) return (f - t) / std::pow(s, beta);
  const double d = f - t;
  if (d > 0.0) return kInf;
  if (d < 0.0) return -kInf;
  // f == t at the boundary: one-sided limit of -(t)^{1-beta}(1-t)^{-beta}.
  if (beta < 1.0) return 0.0;
  return t == 0.0 ? -1.0 : 1.0;
}

namespace {

// Mirror convention for the flipped statistic (t - f)/sigma(t).
double standardized_gap_lower(double f, double t, double beta) {
  if (beta == 0.0) return t - f;
  const double s = t * (1.0 - t);
  if (s > 0.0) return (t - f) / std::pow(s, beta);
  const double d = t - f;
  if (d > 0.0) return kInf;
  if (d < 0.0) return -kInf;
  if (beta < 1.0) return 0.0;
  return t == 0.0 ? 1.0 : -1.0;
}

double sup_statistic_upper(std::span<const double> v, double lo, double hi,
                           double beta) {
  const double m = static_cast<double>(v.size());
  // F is constant between jumps and the integrand decreases in t within each
  // constant piece, so the supremum over [lo, hi] is attained among t = lo and
  // the jump points in (lo, hi].
  std::size_t count_le_lo = 0;
  while (count_le_lo < v.size() && v[count_le_lo] <= lo) ++count_le_lo;
  double best =
      standardized_gap(static_cast<double>(count_le_lo) / m, lo, beta);
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double t = v[j];
    if (t <= lo || t > hi) continue;
    if (j + 1 < v.size() && v[j + 1] == t) continue;  // top of a tied run
    if (t >= 1.0 && beta > 0.0) continue;  // piece limit is -inf there
    best = std::max(best,
                    standardized_gap(static_cast<double>(j + 1) / m, t, beta));
  }
  return best;
}

double sup_statistic_lower(std::span<const double> v, double lo, double hi,
                           double beta) {
  const double m = static_cast<double>(v.size());
  // Within a constant piece the flipped integrand increases in t, so the
  // supremum is approached at right endpoints: the jump points in (lo, hi]
  // (with the left-limit value of F) and t = hi itself.
  std::size_t count_le_hi = 0;
  while (count_le_hi < v.size() && v[count_le_hi] <= hi) ++count_le_hi;
  double best =
      standardized_gap_lower(static_cast<double>(count_le_hi) / m, hi, beta);
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double t = v[j];
    if (t <= lo || t > hi) continue;
    if (j > 0 && v[j - 1] == t) continue;  // bottom of a tied run
    best = std::max(best,
                    standardized_gap_lower(static_cast<double>(j) / m, t, beta));
  }
  return best;
}

}  // namespace

double sup_statistic_sorted(std::span<const double> sorted,
                            const SummaryStatisticSpec& spec, bool lower) {
  if (sorted.empty()) throw data_error("statistic: empty sample");
  const double m = static_cast<double>(sorted.size());
  const auto [lo, hi] = spec.window();
  switch (spec.kind) {
    case StatKind::KS: {
      double best = -kInf;
      if (!lower) {
        for (std::size_t j = 0; j < sorted.size(); ++j)
          best = std::max(best, static_cast<double>(j + 1) / m - sorted[j]);
      } else {
        for (std::size_t j = 0; j < sorted.size(); ++j)
          best = std::max(best, sorted[j] - static_cast<double>(j) / m);
      }
      return std::sqrt(m) * best;
    }
    case StatKind::HC:
    case StatKind::THC:
      return lower ? sup_statistic_lower(sorted, lo, hi, spec.beta)
                   : sup_statistic_upper(sorted, lo, hi, spec.beta);
    case StatKind::Pointwise: {
      const double sigma0 = sigma_template(spec.t0, spec.beta);
      if (!(sigma0 > 0.0))
        throw config_error("pointwise statistic: sigma(t0) must be positive");
      const auto it = std::upper_bound(sorted.begin(), sorted.end(), spec.t0);
      const double f = static_cast<double>(it - sorted.begin()) / m;
      return lower ? (spec.t0 - f) / sigma0 : (f - spec.t0) / sigma0;
    }
    case StatKind::BJ:
      throw config_error("BJ statistic has no flipped/template form here");
  }
  throw config_error("unknown statistic kind");
}

}  // namespace detail

double ks_statistic(const EcdfCurve& curve) {
  if (curve.size() == 0) throw data_error("ks_statistic: empty sample");
  return detail::sup_statistic_sorted(curve.sorted_values(),
                                      SummaryStatisticSpec::ks(), false);
}

double thc_statistic(const EcdfCurve& curve, const SummaryStatisticSpec& spec) {
  if (spec.kind != StatKind::HC && spec.kind != StatKind::THC)
    throw config_error("thc_statistic: spec kind must be HC or THC");
  spec.validate();
  if (curve.size() == 0) throw data_error("thc_statistic: empty sample");
  return detail::sup_statistic_sorted(curve.sorted_values(), spec, false);
}

namespace {

double bernoulli_kl(double p0, double p1) {
  double d = 0.0;
  if (p0 > 0.0) d += p0 * std::log(p0 / p1);
  if (p0 < 1.0) d += (1.0 - p0) * std::log((1.0 - p0) / (1.0 - p1));
  return d;
}

}  // namespace

double bj_statistic(const EcdfCurve& curve, bool one_sided) {
  const std::size_t m = curve.size();
  if (m < 2) throw data_error("bj_statistic: needs m >= 2");
  const auto v = curve.sorted_values();
  const double dm = static_cast<double>(m);
  double best = 0.0;
  for (std::size_t i = 1; i <= m / 2; ++i) {
    const double p0 = v[i - 1];
    const double p1 = static_cast<double>(i) / dm;
    if (one_sided && !(p0 < p1)) continue;
    best = std::max(best, bernoulli_kl(p0, p1));
  }
  return dm * best;
}

double pointwise_statistic(const EcdfCurve& curve, double t0, double mu0,
                           double sigma0) {
  if (!(sigma0 > 0.0))
    throw config_error("pointwise_statistic: sigma0 must be > 0");
  return (curve.eval(t0) - mu0) / sigma0;
}

double summary_statistic(const EcdfCurve& curve,
                         const SummaryStatisticSpec& spec) {
  spec.validate();
  if (spec.kind == StatKind::BJ) return bj_statistic(curve);
  return detail::sup_statistic_sorted(curve.sorted_values(), spec, false);
}

double summary_statistic_lower(const EcdfCurve& curve,
                               const SummaryStatisticSpec& spec) {
  spec.validate();
  return detail::sup_statistic_sorted(curve.sorted_values(), spec, true);
}

}  // namespace fdpband
