#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fdpband/envelope.hpp"
#include "fdpband/statistics.hpp"

namespace testutil {

// One-sample KS distance to Unif[0,1].
inline double ks_distance_uniform(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - values[i]);
    d = std::max(d, values[i] - static_cast<double>(i) / n);
  }
  return d;
}

// Kolmogorov tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_tail(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Asymptotic two-sample KS p-value. Tied values (the statistic distributions
// here carry genuine atoms) are consumed as whole runs so D is the
// right-continuous CDF gap at each distinct pooled value.
inline double two_sample_ks_pvalue(std::vector<double> a,
                                   std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (i == a.size())
      x = b[j];
    else if (j == b.size())
      x = a[i];
    else
      x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d);
}

// Two-stage brute-force supremum over [lo, hi]: a coarse sweep followed by a
// fine sweep around every coarse point within refine_band of the best one.
// Independent of the candidate-point reduction in the statistics module.
template <typename F>
double dense_grid_sup(F value_at, double lo, double hi,
                      double coarse_step = 1e-5, double fine_step = 1e-9) {
  double best = -fdpband::kInf, best_t = lo;
  for (double t = lo; t <= hi + 0.5 * coarse_step; t += coarse_step) {
    const double v = value_at(std::min(t, hi));
    if (v > best) {
      best = v;
      best_t = std::min(t, hi);
    }
  }
  const double a = std::max(lo, best_t - 2.0 * coarse_step);
  const double b = std::min(hi, best_t + 2.0 * coarse_step);
  for (double t = a; t <= b + 0.5 * fine_step; t += fine_step)
    best = std::max(best, value_at(std::min(t, b)));
  return best;
}

inline double dense_grid_thc(const fdpband::EcdfCurve& curve, double lo,
                             double hi, double beta, double coarse_step = 1e-5,
                             double fine_step = 1e-9) {
  return dense_grid_sup(
      [&](double t) {
        const double s = t * (1.0 - t);
        const double num = curve.eval(t) - t;
        if (s > 0.0) return num / std::pow(s, beta);
        if (beta == 0.0) return num;
        if (num > 0.0) return fdpband::kInf;
        if (num < 0.0) return -fdpband::kInf;
        return 0.0;
      },
      lo, hi, coarse_step, fine_step);
}

// Everywhere-coverage checks exploiting that upper envelopes are
// nondecreasing for nonnegative cutoffs (so the per-piece infimum is at the
// left endpoint) and lower envelopes are convex (per-piece supremum at the
// endpoints).
inline bool covers_upper(const std::vector<double>& sorted_values,
                         const fdpband::EnvelopeFunction& G) {
  const double m = static_cast<double>(sorted_values.size());
  for (std::size_t j = 0; j < sorted_values.size(); ++j)
    if ((static_cast<double>(j) + 1.0) / m > G.eval(sorted_values[j]))
      return false;
  return true;
}

inline bool covers_lower(const std::vector<double>& sorted_values,
                         const fdpband::EnvelopeFunction& L) {
  const double m = static_cast<double>(sorted_values.size());
  for (std::size_t j = 0; j < sorted_values.size(); ++j)
    if (L.eval(sorted_values[j]) > static_cast<double>(j) / m) return false;
  return true;
}

}  // namespace testutil
