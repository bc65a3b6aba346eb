#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fdpband/envelope.hpp"

namespace fdpband {

// Observed p-values with an optional ground-truth null mask (simulation only)
// and the calibration size n they were built from. Exact duplicates violate
// the no-ties assumption and are rejected unless jitter_ties is set, in which
// case tied runs are spread by +-1e-12 preserving the order statistics.
struct PValueVector {
  std::vector<double> p;
  std::optional<std::vector<std::uint8_t>> null_mask;
  std::size_t n = 0;

  static PValueVector create(std::vector<double> p, std::size_t n,
                             std::optional<std::vector<std::uint8_t>> mask =
                                 std::nullopt,
                             bool jitter_ties = false);

  std::size_t m() const { return p.size(); }
};

// Per-threshold rejection counts and the three FDP bound variants.
// Invariant: bound_combined <= bound_refined <= bound_naive at every point.
struct FdpBoundCurve {
  std::vector<double> eval_points;
  std::vector<std::size_t> rejections;
  std::vector<double> bound_naive;
  std::vector<double> bound_refined;
  std::vector<double> bound_combined;
  std::vector<double> fdp_true;  // filled only when a null mask is present
  std::size_t mhat0 = 0;
  double delta = 0.0;
};

// Sorted union of the observed p-values and a uniform grid on [0,1].
std::vector<double> make_eval_grid(std::span<const double> pvalues,
                                   std::size_t uniform_points = 512);

// m G(t) / max(1, |R(t)|) clipped to [0,1] per grid point; G must be an upper
// proportion-scale envelope calibrated for the same (n, m).
std::vector<double> fdp_naive(const PValueVector& p, const EnvelopeFunction& G,
                              std::span<const double> grid);

// Self-improved count bound
//   B*(t) = min( B(t), |R(t)|, min_{j: p_j <= t} { B(p_j) + |R(t)| - |R(p_j)| } ),
// computed with a running minimum over the sorted p-values; 0 when nothing is
// rejected.
std::vector<double> self_refine(const PValueVector& p,
                                const std::function<double(double)>& count_bound,
                                std::span<const double> grid);

// Largest r in {0..m} with sum_j 1{p_j > t} >= r - Gmono_r(t) for all t, where
// Gmono_r is the monotone count-scale envelope, checked at t = 0 and at every
// observed p-value (right-continuous survival counts).
std::size_t estimate_m0(const PValueVector& p, const EnvelopeFamily& family);

// Combined bound: estimates mhat0, forms the count bound sup_{k <= mhat0} of
// the family's count envelopes (run-max over k so the naive/refined/combined
// dominance chain holds deterministically), applies self-refinement, and
// emits all three variants plus the realized FDP when a mask is present.
FdpBoundCurve fdp_combined(const PValueVector& p, const EnvelopeFamily& family,
                           std::span<const double> grid);

// Curve from a single envelope: naive bound plus optional self-refinement
// (the combined column repeats the refined one). Used when no family is
// available and by the selection path.
FdpBoundCurve fdp_single_envelope(const PValueVector& p,
                                  const EnvelopeFunction& G,
                                  std::span<const double> grid,
                                  bool refine = true);

namespace detail {

std::size_t estimate_m0_core(
    std::span<const double> p_sorted,
    const std::function<double(std::size_t, double)>& count_env_mono);

std::vector<double> self_refine_core(std::span<const double> p_sorted,
                                     std::span<const double> bound_at_p,
                                     std::span<const double> grid,
                                     std::span<const double> bound_at_grid);

}  // namespace detail

}  // namespace fdpband
