#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fdpband/fdp.hpp"

namespace fdpband {

// Monotone clipped score realized as a lexicographic pair: all outcomes with
// y <= c collapse to (0, c - muhat) and outcomes with y > c map to
// (1, -muhat), which orders exactly like M 1{y>c} + c 1{y<=c} - muhat with
// M = +infinity.
struct ClippedScore {
  int indicator = 0;
  double tail = 0.0;

  friend bool operator<(const ClippedScore& a, const ClippedScore& b) {
    if (a.indicator != b.indicator) return a.indicator < b.indicator;
    return a.tail < b.tail;
  }
  friend bool operator==(const ClippedScore& a, const ClippedScore& b) {
    return a.indicator == b.indicator && a.tail == b.tail;
  }
};

ClippedScore clipped_score(double mu_hat, double y, double c);
// Plug-in score at y = c (the indicator-0 branch used for test points).
ClippedScore clipped_score_at_threshold(double mu_hat, double c);

struct SelectionProblem {
  struct CalibPoint {
    double mu_hat;
    double y;
    double c;
  };
  struct TestPoint {
    double mu_hat;
    double c;
  };

  std::vector<CalibPoint> calib;
  std::vector<TestPoint> test;
  std::optional<std::vector<double>> test_truth;  // y_{n+j}, simulation only
  std::uint64_t seed = 0;

  std::size_t n() const { return calib.size(); }
  std::size_t m() const { return test.size(); }
  void validate() const;
};

// p_j = (#{i : V_i < V(x_{n+j}, c_{n+j}, c_{n+j})} + U_j)/(n+1) with U_j drawn
// from the (seed, j) substream. tie_aware adds U_j times the tie count.
PValueVector selection_pvalues(const SelectionProblem& problem,
                               bool tie_aware = false);

// Oracle variables built with the true outcomes and the same U_j stream;
// requires test_truth.
PValueVector oracle_pvalues(const SelectionProblem& problem,
                            bool tie_aware = false);

// Simultaneous FDP bound for selection sets {j : p_j <= t}; emits the naive
// bound m G(t) / max(1, |R(t)|) and its self-refined version (the combined
// column equals the refined one: no null-count tightening applies here).
FdpBoundCurve fdp_selection(const PValueVector& p, const EnvelopeFunction& G,
                            std::span<const double> grid, bool refine = true);

namespace detail {
PValueVector selection_pvalues_with_uniforms(const SelectionProblem& problem,
                                             std::span<const double> uniforms,
                                             bool oracle, bool tie_aware);
}  // namespace detail

}  // namespace fdpband
