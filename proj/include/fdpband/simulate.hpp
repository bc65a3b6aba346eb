#pragma once

#include <cstddef>
#include <vector>

#include "fdpband/fdp.hpp"
#include "fdpband/selection.hpp"

namespace fdpband {

// Gaussian-mixture outlier task: points are sqrt(1+a) V + W with V standard
// normal and W drawn from a discrete support (sampled once per config) in
// [-3,3]^dim. Inliers use a = 0; the signal strength a separates outliers.
// The score is the negative mean distance to the knn nearest training points,
// trained only on the training split.
struct OutlierSimConfig {
  std::size_t dim = 50;
  std::size_t n_train = 200;
  std::size_t n_calib = 200;
  std::size_t n_test = 200;
  std::size_t support_size = 50;
  double purity = 0.9;  // fraction of inliers among test points
  double a = 0.2;       // signal strength
  std::size_t knn = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Conformal p-values for one trial, with the ground-truth null mask
// (inlier = null) and n = n_calib.
PValueVector gen_outlier_data(const OutlierSimConfig& config,
                              std::size_t trial);

// Linear-model selection task: y = <w, x> + noise, with muhat fit by least
// squares on an internal training split and thresholds c either constant or a
// fixed linear function of the features. Exchangeability of (x, y, c) holds
// by construction; test_truth is filled for coverage evaluation.
struct SelectionSimConfig {
  std::size_t n_calib = 200;
  std::size_t n_test = 200;
  std::size_t dim = 5;
  std::size_t n_fit = 100;
  double noise_sd = 1.0;
  enum class ThresholdRule { Constant, FeatureFunction };
  ThresholdRule rule = ThresholdRule::Constant;
  double c = 0.0;  // Constant rule
  std::uint64_t seed = 0;

  void validate() const;
};

SelectionProblem gen_selection_data(const SelectionSimConfig& config,
                                    std::size_t trial);

}  // namespace fdpband
