#include "fdpband/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace fdpband {

double fcp_bound(const EnvelopeFunction& G, double alpha) {
  if (G.direction() != Direction::Upper || G.scale() != Scale::Proportion)
    throw data_error("fcp_bound: needs an upper proportion-scale envelope");
  if (G.mode() != SampleMode::Conformal)
    throw data_error("fcp_bound: envelope must be calibrated on the conformal law");
  return G.eval(alpha);
}

VarianceResult ecdf_variance(const VarianceQuery& q) {
  if (!(q.t >= 0.0 && q.t <= 1.0))
    throw config_error("ecdf_variance: t must lie in [0,1]");
  if (q.m < 1) throw config_error("ecdf_variance: m must be >= 1");
  const double n = static_cast<double>(q.n);
  const double m = static_cast<double>(q.m);
  const double a = (n + 1.0) * q.t;  // = k + gamma
  if (a <= 0.0 || a >= n + 1.0) return {0.0, 0.0, 0.0};
  const double k = std::floor(a);
  const double gamma = a - k;
  const double rho = ((n + 1.0) * (k + gamma * gamma) - a * a) /
                     ((n + 2.0) * a * (n + 1.0 - a));
  const double c = 1.0 / m + (1.0 - 1.0 / m) * rho;
  return {c * q.t * (1.0 - q.t), c, rho};
}

double CcvThresholds::adjust(double p_marginal) const {
  return ccv_adjust(p_marginal, *this);
}

CcvThresholds ccv_thresholds(const EnvelopeFunction& L, std::size_t n) {
  if (n < 1) throw config_error("ccv_thresholds: n must be >= 1");
  if (L.direction() != Direction::Lower)
    throw data_error("ccv_thresholds: envelope must be lower-direction");
  if (L.mode() != SampleMode::IidUniform)
    throw data_error("ccv_thresholds: envelope must be calibrated on i.i.d. uniforms");
  if (L.m() != n)
    throw data_error("ccv_thresholds: envelope sample size does not match n");

  CcvThresholds out;
  out.n = n;
  out.delta = L.delta();
  out.b.assign(n + 2, 0.0);
  out.b[n + 1] = 1.0;

  const double tol = 1e-10;
  for (std::size_t i = 1; i <= n; ++i) {
    const double level = static_cast<double>(i) / static_cast<double>(n);
    if (L.mono_eval(1.0) < level) {
      out.b[i] = 1.0;  // the envelope never reaches this level
      continue;
    }
    double lo = 0.0, hi = 1.0;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      (L.mono_eval(mid) >= level ? hi : lo) = mid;
    }
    out.b[i] = hi;
  }
  for (std::size_t i = 0; i + 1 < out.b.size(); ++i)
    if (out.b[i] > out.b[i + 1])
      throw numeric_error("ccv_thresholds: thresholds are not nondecreasing");
  return out;
}

double ccv_adjust(double p_marginal, const CcvThresholds& thresholds) {
  if (!(p_marginal >= 0.0 && p_marginal <= 1.0))
    throw data_error("ccv_adjust: p must lie in [0,1]");
  const double n1 = static_cast<double>(thresholds.n) + 1.0;
  auto idx = static_cast<std::size_t>(std::ceil(n1 * p_marginal));
  if (idx > thresholds.n + 1) idx = thresholds.n + 1;
  return thresholds.b[idx];
}

BhResult bh_threshold(std::span<const double> pvalues, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw config_error("bh_threshold: alpha must lie in (0,1)");
  std::vector<double> sorted(pvalues.begin(), pvalues.end());
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  for (std::size_t k = sorted.size(); k >= 1; --k) {
    if (sorted[k - 1] <= static_cast<double>(k) * alpha / m)
      return {sorted[k - 1], k};
  }
  return {0.0, 0};
}

}  // namespace fdpband
