#include "fdpband/selection.hpp"

#include <algorithm>
#include <cmath>

namespace fdpband {

namespace {
constexpr std::uint64_t kUniformTag = 0x73656c756e696600ULL;
}

ClippedScore clipped_score(double mu_hat, double y, double c) {
  if (y > c) return {1, -mu_hat};
  return {0, c - mu_hat};
}

ClippedScore clipped_score_at_threshold(double mu_hat, double c) {
  return {0, c - mu_hat};
}

void SelectionProblem::validate() const {
  if (calib.empty()) throw data_error("selection: calibration set is empty");
  if (test.empty()) throw data_error("selection: test set is empty");
  if (test_truth && test_truth->size() != test.size())
    throw data_error("selection: test_truth length does not match test set");
}

namespace detail {

PValueVector selection_pvalues_with_uniforms(const SelectionProblem& problem,
                                             std::span<const double> uniforms,
                                             bool oracle, bool tie_aware) {
  problem.validate();
  if (oracle && !problem.test_truth)
    throw data_error("oracle_pvalues: test_truth is required");
  if (uniforms.size() != problem.m())
    throw data_error("selection: uniform vector length must equal m");

  const std::size_t n = problem.n(), m = problem.m();
  std::vector<ClippedScore> calib_scores(n);
  for (std::size_t i = 0; i < n; ++i)
    calib_scores[i] = clipped_score(problem.calib[i].mu_hat, problem.calib[i].y,
                                    problem.calib[i].c);

  std::vector<double> p(m);
  for (std::size_t j = 0; j < m; ++j) {
    const ClippedScore test_score =
        oracle ? clipped_score(problem.test[j].mu_hat, (*problem.test_truth)[j],
                               problem.test[j].c)
               : clipped_score_at_threshold(problem.test[j].mu_hat,
                                            problem.test[j].c);
    std::size_t below = 0, ties = 0;
    for (const auto& s : calib_scores) {
      if (s < test_score)
        ++below;
      else if (s == test_score)
        ++ties;
    }
    const double randomized =
        tie_aware ? uniforms[j] * (1.0 + static_cast<double>(ties))
                  : uniforms[j];
    p[j] = (static_cast<double>(below) + randomized) /
           (static_cast<double>(n) + 1.0);
  }

  std::optional<std::vector<std::uint8_t>> mask;
  if (problem.test_truth) {
    mask.emplace(m);
    for (std::size_t j = 0; j < m; ++j)
      (*mask)[j] = (*problem.test_truth)[j] <= problem.test[j].c ? 1 : 0;
  }
  PValueVector out;
  out.p = std::move(p);
  out.null_mask = std::move(mask);
  out.n = n;
  return out;
}

}  // namespace detail

namespace {

std::vector<double> draw_uniforms(const SelectionProblem& problem) {
  std::vector<double> u(problem.m());
  for (std::size_t j = 0; j < problem.m(); ++j)
    u[j] = Rng(substream_seed(problem.seed ^ kUniformTag, j)).open_unit();
  return u;
}

}  // namespace

PValueVector selection_pvalues(const SelectionProblem& problem,
                               bool tie_aware) {
  return detail::selection_pvalues_with_uniforms(problem,
                                                 draw_uniforms(problem), false,
                                                 tie_aware);
}

PValueVector oracle_pvalues(const SelectionProblem& problem, bool tie_aware) {
  return detail::selection_pvalues_with_uniforms(problem,
                                                 draw_uniforms(problem), true,
                                                 tie_aware);
}

FdpBoundCurve fdp_selection(const PValueVector& p, const EnvelopeFunction& G,
                            std::span<const double> grid_in, bool refine) {
  return fdp_single_envelope(p, G, grid_in, refine);
}

}  // namespace fdpband
