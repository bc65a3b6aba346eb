#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fdpband/envelope.hpp"

namespace fdpband {

// The false coverage proportion at miscoverage level alpha equals the null
// ECDF at alpha, so a simultaneous upper envelope bounds it at every alpha.
double fcp_bound(const EnvelopeFunction& G, double alpha);

struct VarianceQuery {
  std::size_t n = 0;
  std::size_t m = 1;
  double t = 0.5;
};

struct VarianceResult {
  double var = 0.0;
  double c = 0.0;    // c_{n,m}(t) = 1/m + (1 - 1/m) rho
  double rho = 0.0;  // correlation factor from the shared calibration sample
};

// Var F(t) = c_{n,m}(t) t(1-t) with
//   rho_n(t) = ((n+1)(k + g^2) - (k+g)^2) / ((n+2)(k+g)(n+1-k-g)),
//   k = floor((n+1)t), g = (n+1)t - k; zero at t in {0,1}.
VarianceResult ecdf_variance(const VarianceQuery& q);

// Thresholds b_0 = 0 <= b_1 <= ... <= b_n <= b_{n+1} = 1 such that sorted
// uniforms satisfy U_(i) <= b_i for all i with probability >= 1 - delta.
struct CcvThresholds {
  std::vector<double> b;  // n + 2 entries
  std::size_t n = 0;
  double delta = 0.0;

  double adjust(double p_marginal) const;
};

// b_i = inf{ t : L(t) >= i/n } via bisection (to 1e-10) on the running max of
// a lower envelope L calibrated on i.i.d. uniforms of sample size n.
CcvThresholds ccv_thresholds(const EnvelopeFunction& L, std::size_t n);

// h(p) = b_{ceil((n+1) p)}; 0 at p = 0 and 1 at p = 1.
double ccv_adjust(double p_marginal, const CcvThresholds& thresholds);

struct BhResult {
  double threshold = 0.0;  // p_(k*) or 0 when nothing is rejected
  std::size_t k = 0;       // number of rejections
};

// Step-up rule: k* = max{ k : p_(k) <= k alpha / m }.
BhResult bh_threshold(std::span<const double> pvalues, double alpha);

}  // namespace fdpband
