#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fdpband/diagnostics.hpp"
#include "fdpband/fdp.hpp"
#include "fdpband/sampler.hpp"
#include "fdpband/selection.hpp"
#include "fdpband/simulate.hpp"
#include "helpers.hpp"

using namespace fdpband;

namespace {

OutlierSimConfig small_outlier_config() {
  OutlierSimConfig cfg;
  cfg.dim = 3;
  cfg.n_train = 20;
  cfg.n_calib = 15;
  cfg.n_test = 6;
  cfg.support_size = 5;
  cfg.purity = 1.0;
  cfg.a = 0.0;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("outlier sim config validation") {
  OutlierSimConfig cfg = small_outlier_config();
  cfg.n_train = 3;  // below knn
  CHECK_THROWS_AS(gen_outlier_data(cfg, 0), config_error);
  cfg = small_outlier_config();
  cfg.purity = 1.4;
  CHECK_THROWS_AS(gen_outlier_data(cfg, 0), config_error);
}

TEST_CASE("outlier pipeline is reproducible") {
  const auto cfg = small_outlier_config();
  const auto a = gen_outlier_data(cfg, 3);
  const auto b = gen_outlier_data(cfg, 3);
  CHECK(a.p == b.p);
  CHECK(*a.null_mask == *b.null_mask);
  const auto c = gen_outlier_data(cfg, 4);
  CHECK(a.p != c.p);
}

TEST_CASE("null outlier p-values follow the conformal uniform law") {
  const auto cfg = small_outlier_config();
  const auto spec = SummaryStatisticSpec::thc();
  const std::size_t reps = 10000;
  std::vector<double> stats_sim(reps), stats_ref(reps);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const auto p = gen_outlier_data(cfg, rep);
    stats_sim[rep] = thc_statistic(EcdfCurve(p.p), spec);
  }
  const auto reference = sample_conformal(
      {cfg.n_calib, cfg.n_test, reps, 909090, SampleMode::Conformal});
  for (std::size_t b = 0; b < reps; ++b) {
    std::vector<double> row(reference.row(b).begin(), reference.row(b).end());
    stats_ref[b] = thc_statistic(EcdfCurve(std::move(row)), spec);
  }
  CHECK(testutil::two_sample_ks_pvalue(stats_sim, stats_ref) > 0.01);
}

TEST_CASE("no-signal data yields few BH discoveries") {
  OutlierSimConfig cfg = small_outlier_config();
  cfg.n_calib = 50;
  cfg.n_test = 50;
  cfg.n_train = 50;
  const std::size_t trials = 200;
  double frac = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const auto p = gen_outlier_data(cfg, trial);
    // All nulls: every discovery is false.
    for (auto flag : *p.null_mask) CHECK(flag == 1);
    frac += static_cast<double>(bh_threshold(p.p, 0.1).k) /
            static_cast<double>(cfg.n_test);
  }
  CHECK(frac / trials <= 0.02);
}

TEST_CASE("BH keeps its FDR on the outlier task") {
  OutlierSimConfig cfg;
  cfg.dim = 50;
  cfg.n_train = 200;
  cfg.n_calib = 200;
  cfg.n_test = 200;
  cfg.support_size = 50;
  cfg.purity = 0.9;
  cfg.a = 0.5;
  cfg.seed = 11;
  const double alpha = 0.1;
  const std::size_t trials = 200;
  std::vector<double> fdps(trials);
  parallel_for(trials, [&](std::size_t trial) {
    const auto p = gen_outlier_data(cfg, trial);
    const auto bh = bh_threshold(p.p, alpha);
    std::size_t false_disc = 0;
    for (std::size_t j = 0; j < p.m(); ++j)
      if (p.p[j] <= bh.threshold && bh.k > 0 && (*p.null_mask)[j]) ++false_disc;
    fdps[trial] = bh.k == 0 ? 0.0
                            : static_cast<double>(false_disc) /
                                  static_cast<double>(bh.k);
  });
  double mean = 0;
  for (double f : fdps) mean += f;
  mean /= trials;
  CHECK(mean <= alpha + 0.05);
}

TEST_CASE("selection sim reproducibility and exchange of thresholds") {
  SelectionSimConfig cfg;
  cfg.n_calib = 30;
  cfg.n_test = 20;
  cfg.seed = 17;
  const auto a = gen_selection_data(cfg, 2);
  const auto b = gen_selection_data(cfg, 2);
  CHECK(a.calib.size() == 30);
  CHECK(a.test.size() == 20);
  for (std::size_t i = 0; i < a.calib.size(); ++i) {
    CHECK(a.calib[i].mu_hat == b.calib[i].mu_hat);
    CHECK(a.calib[i].y == b.calib[i].y);
  }
  CHECK(*a.test_truth == *b.test_truth);

  cfg.rule = SelectionSimConfig::ThresholdRule::FeatureFunction;
  const auto c = gen_selection_data(cfg, 2);
  bool varies = false;
  for (std::size_t i = 1; i < c.calib.size(); ++i)
    if (c.calib[i].c != c.calib[0].c) varies = true;
  CHECK(varies);
}

TEST_CASE("noiseless selection separates perfectly") {
  SelectionSimConfig cfg;
  cfg.n_calib = 100;
  cfg.n_test = 100;
  cfg.noise_sd = 0.0;
  cfg.seed = 23;

  const auto spec = SummaryStatisticSpec::thc();
  const std::size_t B = 100;
  const auto env = build_envelope(
      calibrate_cutoff(
          sample_conformal({cfg.n_calib, cfg.n_test, B, 24, SampleMode::Conformal}),
          spec, 0.1),
      spec, cfg.n_calib, cfg.n_test, 0.1);

  std::size_t usable = 0;
  for (std::size_t trial = 0; trial < 20; ++trial) {
    const auto problem = gen_selection_data(cfg, trial);
    const auto p = selection_pvalues(problem);

    // Every true positive lands in the bottom rank block: p < 1/(n+1).
    const double block = 1.0 / (static_cast<double>(cfg.n_calib) + 1.0);
    for (std::size_t j = 0; j < p.m(); ++j)
      if (!(*p.null_mask)[j]) CHECK(p.p[j] < block);

    const auto curve = fdp_selection(p, env, make_eval_grid(p.p, 64));
    bool covered = true;
    for (std::size_t i = 0; i < curve.eval_points.size(); ++i)
      if (curve.bound_refined[i] < curve.fdp_true[i]) covered = false;
    if (!covered) continue;
    ++usable;
    // At small t the selection is dominated by true positives (only nulls
    // with outcomes right at the threshold can sneak in), so both the
    // realized FDP and the refined bound stay small.
    const double t_small = 0.5 * block;
    const auto it = std::upper_bound(curve.eval_points.begin(),
                                     curve.eval_points.end(), t_small);
    const std::size_t idx =
        it == curve.eval_points.begin()
            ? 0
            : static_cast<std::size_t>(it - curve.eval_points.begin()) - 1;
    if (curve.rejections[idx] >= 10) {
      CHECK(curve.fdp_true[idx] <= 0.2);
      CHECK(curve.bound_refined[idx] <= 0.4);
    }
  }
  CHECK(usable > 0);
}

TEST_CASE("threshold above every outcome makes all selections false") {
  SelectionSimConfig cfg;
  cfg.n_calib = 60;
  cfg.n_test = 60;
  cfg.c = 1000.0;  // nothing exceeds it
  cfg.seed = 29;

  const auto spec = SummaryStatisticSpec::thc();
  const auto env = build_envelope(
      calibrate_cutoff(
          sample_conformal({cfg.n_calib, cfg.n_test, 100, 30, SampleMode::Conformal}),
          spec, 0.1),
      spec, cfg.n_calib, cfg.n_test, 0.1);

  std::size_t usable = 0;
  for (std::size_t trial = 0; trial < 10; ++trial) {
    const auto problem = gen_selection_data(cfg, trial);
    const auto p = selection_pvalues(problem);
    for (auto flag : *p.null_mask) CHECK(flag == 1);
    const auto curve = fdp_selection(p, env, make_eval_grid(p.p, 64));
    bool covered = true;
    for (std::size_t i = 0; i < curve.eval_points.size(); ++i)
      if (curve.bound_refined[i] < curve.fdp_true[i]) covered = false;
    if (!covered) continue;
    ++usable;
    for (std::size_t i = 0; i < curve.eval_points.size(); ++i)
      if (curve.rejections[i] > 0) CHECK(curve.bound_refined[i] == 1.0);
  }
  CHECK(usable > 0);
}

TEST_CASE("selection bound coverage at the default configuration") {
  SelectionSimConfig cfg;
  cfg.n_calib = 200;
  cfg.n_test = 200;
  cfg.seed = 37;
  const double delta = 0.1;

  const auto spec = SummaryStatisticSpec::thc();
  const auto env = build_envelope(
      calibrate_cutoff(
          sample_conformal({cfg.n_calib, cfg.n_test, 100, 38, SampleMode::Conformal}),
          spec, delta),
      spec, cfg.n_calib, cfg.n_test, delta);

  const std::size_t trials = 200;
  std::vector<int> covered(trials, 0);
  parallel_for(trials, [&](std::size_t trial) {
    const auto problem = gen_selection_data(cfg, trial);
    const auto p = selection_pvalues(problem);
    const auto curve = fdp_selection(p, env, make_eval_grid(p.p, 64));
    bool ok = true;
    for (std::size_t i = 0; i < curve.eval_points.size(); ++i)
      if (curve.bound_refined[i] < curve.fdp_true[i]) ok = false;
    covered[trial] = ok ? 1 : 0;
  });
  double cov = 0;
  for (int c : covered) cov += c;
  CHECK(cov / trials >= 0.86);
}
