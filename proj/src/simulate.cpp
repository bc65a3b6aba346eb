#include "fdpband/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace fdpband {

namespace {

constexpr std::uint64_t kAtomTag = 0x61746f6d73000000ULL;
constexpr std::uint64_t kTrialTag = 0x747269616c000000ULL;
constexpr std::uint64_t kModelTag = 0x6d6f64656c000000ULL;
constexpr std::uint64_t kUniformTag = 0x752d73747265616dULL;

std::vector<double> draw_mixture_point(Rng& rng,
                                       const std::vector<double>& atoms,
                                       std::size_t dim,
                                       std::size_t support_size, double a) {
  const std::size_t atom = rng.below(support_size);
  std::vector<double> x(dim);
  const double scale = std::sqrt(1.0 + a);
  for (std::size_t d = 0; d < dim; ++d)
    x[d] = scale * rng.normal() + atoms[atom * dim + d];
  return x;
}

// Negative mean Euclidean distance to the knn nearest training points.
double knn_score(const std::vector<double>& x,
                 const std::vector<double>& train, std::size_t n_train,
                 std::size_t dim, std::size_t knn,
                 std::vector<double>& scratch) {
  scratch.resize(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    double d2 = 0.0;
    const double* row = train.data() + i * dim;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = x[d] - row[d];
      d2 += diff * diff;
    }
    scratch[i] = d2;
  }
  std::nth_element(scratch.begin(), scratch.begin() + (knn - 1), scratch.end());
  double mean = 0.0;
  for (std::size_t i = 0; i < knn; ++i) mean += std::sqrt(scratch[i]);
  return -mean / static_cast<double>(knn);
}

}  // namespace

void OutlierSimConfig::validate() const {
  if (dim < 1) throw config_error("outlier sim: dim must be >= 1");
  if (n_calib < 1 || n_test < 1)
    throw config_error("outlier sim: n_calib and n_test must be >= 1");
  if (support_size < 1) throw config_error("outlier sim: support_size must be >= 1");
  if (!(purity >= 0.0 && purity <= 1.0))
    throw config_error("outlier sim: purity must lie in [0,1]");
  if (a < 0.0) throw config_error("outlier sim: a must be >= 0");
  if (n_train < knn)
    throw config_error("outlier sim: n_train must be >= knn");
}

PValueVector gen_outlier_data(const OutlierSimConfig& config,
                              std::size_t trial) {
  config.validate();

  // Support atoms are drawn once per config (same seed, any trial).
  Rng atom_rng(substream_seed(config.seed ^ kAtomTag, 0));
  std::vector<double> atoms(config.support_size * config.dim);
  for (double& v : atoms) v = -3.0 + 6.0 * atom_rng.open_unit();

  Rng rng(substream_seed(config.seed ^ kTrialTag, trial));

  std::vector<double> train(config.n_train * config.dim);
  for (std::size_t i = 0; i < config.n_train; ++i) {
    const auto x = draw_mixture_point(rng, atoms, config.dim,
                                      config.support_size, 0.0);
    std::copy(x.begin(), x.end(), train.begin() + i * config.dim);
  }

  const std::size_t m0 = static_cast<std::size_t>(
      std::lround(config.purity * static_cast<double>(config.n_test)));
  std::vector<std::uint8_t> is_inlier(config.n_test, 0);
  for (std::size_t j = 0; j < m0; ++j) is_inlier[j] = 1;
  for (std::size_t j = config.n_test; j > 1; --j)
    std::swap(is_inlier[j - 1], is_inlier[rng.below(j)]);

  std::vector<double> scratch;
  std::vector<double> calib_scores(config.n_calib);
  for (std::size_t i = 0; i < config.n_calib; ++i) {
    const auto x = draw_mixture_point(rng, atoms, config.dim,
                                      config.support_size, 0.0);
    calib_scores[i] =
        knn_score(x, train, config.n_train, config.dim, config.knn, scratch);
  }

  std::vector<double> p(config.n_test);
  for (std::size_t j = 0; j < config.n_test; ++j) {
    const double a = is_inlier[j] ? 0.0 : config.a;
    const auto x =
        draw_mixture_point(rng, atoms, config.dim, config.support_size, a);
    const double s =
        knn_score(x, train, config.n_train, config.dim, config.knn, scratch);
    std::size_t below = 0;
    for (double cs : calib_scores) below += cs < s ? 1 : 0;
    p[j] = (static_cast<double>(below) + rng.open_unit()) /
           (static_cast<double>(config.n_calib) + 1.0);
  }

  return PValueVector::create(std::move(p), config.n_calib,
                              std::move(is_inlier));
}

void SelectionSimConfig::validate() const {
  if (n_calib < 1 || n_test < 1)
    throw config_error("selection sim: n_calib and n_test must be >= 1");
  if (dim < 1) throw config_error("selection sim: dim must be >= 1");
  if (n_fit < dim)
    throw config_error("selection sim: n_fit must be >= dim");
  if (noise_sd < 0.0)
    throw config_error("selection sim: noise_sd must be >= 0");
}

namespace {

// Least-squares fit of y on x (no intercept; the model has none). Gaussian
// elimination with partial pivoting; a 1e-10 ridge keeps X'X invertible.
std::vector<double> ols_fit(const std::vector<std::vector<double>>& xs,
                            const std::vector<double>& ys, std::size_t dim) {
  std::vector<std::vector<double>> a(dim, std::vector<double>(dim + 1, 0.0));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t r = 0; r < dim; ++r) {
      for (std::size_t c = 0; c < dim; ++c) a[r][c] += xs[i][r] * xs[i][c];
      a[r][dim] += xs[i][r] * ys[i];
    }
  }
  for (std::size_t r = 0; r < dim; ++r) a[r][r] += 1e-10;
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < dim; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < dim; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= dim; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> w(dim);
  for (std::size_t r = 0; r < dim; ++r) w[r] = a[r][dim] / a[r][r];
  return w;
}

}  // namespace

SelectionProblem gen_selection_data(const SelectionSimConfig& config,
                                    std::size_t trial) {
  config.validate();

  Rng model_rng(substream_seed(config.seed ^ kModelTag, 0));
  std::vector<double> w(config.dim), w_c(config.dim);
  for (double& v : w) v = model_rng.normal();
  for (double& v : w_c) v = 0.5 * model_rng.normal();

  Rng rng(substream_seed(config.seed ^ kTrialTag, trial));
  const auto draw_x = [&]() {
    std::vector<double> x(config.dim);
    for (double& v : x) v = rng.normal();
    return x;
  };
  const auto dot = [&](const std::vector<double>& u,
                       const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t d = 0; d < config.dim; ++d) s += u[d] * x[d];
    return s;
  };
  const auto threshold = [&](const std::vector<double>& x) {
    return config.rule == SelectionSimConfig::ThresholdRule::Constant
               ? config.c
               : dot(w_c, x);
  };

  std::vector<std::vector<double>> fit_x(config.n_fit);
  std::vector<double> fit_y(config.n_fit);
  for (std::size_t i = 0; i < config.n_fit; ++i) {
    fit_x[i] = draw_x();
    fit_y[i] = dot(w, fit_x[i]) + config.noise_sd * rng.normal();
  }
  const auto w_hat = ols_fit(fit_x, fit_y, config.dim);

  SelectionProblem problem;
  problem.calib.resize(config.n_calib);
  for (auto& point : problem.calib) {
    const auto x = draw_x();
    point.mu_hat = dot(w_hat, x);
    point.y = dot(w, x) + config.noise_sd * rng.normal();
    point.c = threshold(x);
  }
  problem.test.resize(config.n_test);
  problem.test_truth.emplace(config.n_test);
  for (std::size_t j = 0; j < config.n_test; ++j) {
    const auto x = draw_x();
    problem.test[j].mu_hat = dot(w_hat, x);
    problem.test[j].c = threshold(x);
    (*problem.test_truth)[j] = dot(w, x) + config.noise_sd * rng.normal();
  }
  problem.seed = substream_seed(config.seed ^ kUniformTag, trial);
  return problem;
}

}  // namespace fdpband
