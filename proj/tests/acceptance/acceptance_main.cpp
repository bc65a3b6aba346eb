// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Runs single-threaded unless FDPBAND_THREADS is set.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "fdpband/diagnostics.hpp"
#include "fdpband/envelope.hpp"
#include "fdpband/fdp.hpp"
#include "fdpband/sampler.hpp"
#include "fdpband/selection.hpp"
#include "fdpband/simulate.hpp"

using namespace fdpband;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;
std::vector<std::pair<int, std::string>> g_lines;

void report(int id, const std::string& name, bool pass,
            const std::string& detail) {
  std::ostringstream line;
  line << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": " << name
       << ": " << detail;
  g_lines.emplace_back(id, line.str());
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool covers_everywhere_upper(const std::vector<double>& sorted_row,
                             const EnvelopeFunction& G) {
  const double m = static_cast<double>(sorted_row.size());
  for (std::size_t j = 0; j < sorted_row.size(); ++j)
    if ((static_cast<double>(j) + 1.0) / m > G.eval(sorted_row[j]))
      return false;
  return true;
}

// --------------------------------------------------------------------------
// 1. Coverage sandwich for the Monte Carlo envelope. Each outer trial runs
// its own calibration; the sandwich is a statement over both sources of
// randomness.
void criterion_1() {
  const auto start = Clock::now();
  const std::size_t n = 100, m = 100, B = 100, trials = 500;
  const double delta = 0.1;
  const auto spec = SummaryStatisticSpec::thc(0.01, 0.99, 0.5);
  std::size_t covered = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const auto samples = sample_conformal(
        {n, m, B, substream_seed(101, 2 * trial), SampleMode::Conformal});
    const auto G = build_envelope(calibrate_cutoff(samples, spec, delta), spec,
                                  n, m, delta);
    const auto fresh = sample_conformal(
        {n, m, 1, substream_seed(101, 2 * trial + 1), SampleMode::Conformal});
    std::vector<double> row(fresh.row(0).begin(), fresh.row(0).end());
    std::sort(row.begin(), row.end());
    covered += covers_everywhere_upper(row, G) ? 1 : 0;
  }
  const double cov = static_cast<double>(covered) / trials;
  const double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << "coverage=" << cov << " target=[0.855,0.955] elapsed=" << elapsed
         << "s (limit 120s)";
  report(1, "envelope coverage sandwich", cov >= 0.855 && cov <= 0.955 &&
                                              elapsed < 120.0,
         detail.str());
}

// --------------------------------------------------------------------------
// 2. Variance-adaptive envelope pinches below the linear one near t = 0.
void criterion_2() {
  const std::size_t n = 100, m = 100, B = 1000, seeds = 100;
  const double delta = 0.1, t0 = 0.02;
  const auto thc = SummaryStatisticSpec::thc(0.01, 0.99, 0.5);
  const auto ks = SummaryStatisticSpec::ks();
  std::size_t pinched = 0;
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto samples =
        sample_conformal({n, m, B, 200 + s, SampleMode::Conformal});
    const auto g_thc = build_envelope(calibrate_cutoff(samples, thc, delta),
                                      thc, n, m, delta);
    const auto g_ks =
        build_envelope(calibrate_cutoff(samples, ks, delta), ks, n, m, delta);
    pinched += g_thc.eval(t0) < g_ks.eval(t0) ? 1 : 0;
  }
  std::ostringstream detail;
  detail << "thc-below-ks at t=0.02 in " << pinched << "/100 seeds (need 95)";
  report(2, "envelope shape versus the linear band", pinched >= 95,
         detail.str());
}

// --------------------------------------------------------------------------
// 3 and 5 share the simulation harness.
struct OutlierRun {
  double coverage = 0;
  double mhat0_coverage = 0;
  double mean_mhat0 = 0;
  double elapsed = 0;
};

OutlierRun run_outlier(const EnvelopeFamily& family, double purity,
                       std::size_t trials) {
  OutlierSimConfig cfg;
  cfg.dim = 50;
  cfg.n_train = 200;
  cfg.n_calib = 200;
  cfg.n_test = 200;
  cfg.support_size = 50;
  cfg.purity = purity;
  cfg.a = 0.2;
  cfg.seed = 303;

  const auto start = Clock::now();
  std::vector<int> covered(trials, 0), m0_ok(trials, 0);
  std::vector<double> mhat0s(trials, 0);
  parallel_for(trials, [&](std::size_t trial) {
    const auto p = gen_outlier_data(cfg, trial);
    const auto curve = fdp_combined(p, family, make_eval_grid(p.p));
    bool ok = true;
    for (std::size_t i = 0; i < curve.eval_points.size(); ++i)
      if (curve.bound_combined[i] < curve.fdp_true[i]) ok = false;
    covered[trial] = ok ? 1 : 0;
    std::size_t m0 = 0;
    for (auto flag : *p.null_mask) m0 += flag;
    m0_ok[trial] = curve.mhat0 >= m0 ? 1 : 0;
    mhat0s[trial] = static_cast<double>(curve.mhat0);
  });

  OutlierRun out;
  for (std::size_t t = 0; t < trials; ++t) {
    out.coverage += covered[t];
    out.mhat0_coverage += m0_ok[t];
    out.mean_mhat0 += mhat0s[t];
  }
  out.coverage /= static_cast<double>(trials);
  out.mhat0_coverage /= static_cast<double>(trials);
  out.mean_mhat0 /= static_cast<double>(trials);
  out.elapsed = seconds_since(start);
  return out;
}

void criteria_3_and_5() {
  const std::size_t trials = 200, B = 100;
  const double delta = 0.1;
  const auto spec = SummaryStatisticSpec::thc(0.01, 0.99, 0.5);
  const auto family = calibrate_family(
      sample_conformal({200, 200, B, 301, SampleMode::Conformal}), spec, delta);

  const auto run_09 = run_outlier(family, 0.9, trials);
  {
    std::ostringstream detail;
    detail << "coverage=" << run_09.coverage
           << " (need >= 0.86) elapsed=" << run_09.elapsed
           << "s (limit 600s)";
    report(3, "outlier combined-bound coverage",
           run_09.coverage >= 0.86 && run_09.elapsed < 600.0, detail.str());
  }

  const auto run_08 = run_outlier(family, 0.8, trials);
  const auto run_07 = run_outlier(family, 0.7, trials);
  {
    const bool trend = run_09.mean_mhat0 > run_08.mean_mhat0 &&
                       run_08.mean_mhat0 > run_07.mean_mhat0;
    std::ostringstream detail;
    detail << "P(mhat0 >= m0)=" << run_09.mhat0_coverage
           << " (need >= 0.86); mean mhat0 at purity {0.9,0.8,0.7} = {"
           << run_09.mean_mhat0 << ", " << run_08.mean_mhat0 << ", "
           << run_07.mean_mhat0 << "} (need decreasing)";
    report(5, "null-count estimate validity and trend",
           run_09.mhat0_coverage >= 0.86 && trend, detail.str());
  }
}

// --------------------------------------------------------------------------
// 4. Dominance chain with zero tolerance.
void criterion_4() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> unif(0, 1);
  std::size_t violations = 0, points = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 5 + rng() % 56;
    const std::size_t m = 5 + rng() % 56;
    const std::size_t B = 20 + rng() % 41;
    const auto spec = (rep % 2 == 0) ? SummaryStatisticSpec::thc()
                                     : SummaryStatisticSpec::ks();
    const auto family = calibrate_family(
        sample_conformal({n, m, B, static_cast<std::uint64_t>(4000 + rep), SampleMode::Conformal}), spec,
        0.1);
    std::vector<double> pv(m);
    for (auto& v : pv) v = std::pow(unif(rng), 1.0 + 3.0 * unif(rng));
    const auto p = PValueVector::create(pv, n, std::nullopt, true);
    const auto curve = fdp_combined(p, family, make_eval_grid(p.p, 128));
    for (std::size_t i = 0; i < curve.eval_points.size(); ++i) {
      ++points;
      if (curve.bound_combined[i] > curve.bound_refined[i]) ++violations;
      if (curve.bound_refined[i] > curve.bound_naive[i]) ++violations;
    }
  }
  std::ostringstream detail;
  detail << violations << " violations over " << points
         << " evaluation points in 100 instances (need 0)";
  report(4, "refinement dominance chain", violations == 0, detail.str());
}

// --------------------------------------------------------------------------
// 6. Selection coverage and the post hoc BH comparison.
void criterion_6() {
  SelectionSimConfig cfg;
  cfg.n_calib = 200;
  cfg.n_test = 200;
  cfg.noise_sd = 2.0;
  cfg.seed = 606;
  const std::size_t trials = 200, B = 100;
  const double delta = 0.1;

  const auto spec = SummaryStatisticSpec::thc(0.01, 0.99, 0.5);
  const auto env = build_envelope(
      calibrate_cutoff(
          sample_conformal({cfg.n_calib, cfg.n_test, B, 601, SampleMode::Conformal}),
          spec, delta),
      spec, cfg.n_calib, cfg.n_test, delta);

  std::vector<int> covered(trials, 0), bh_covers(trials, 0),
      bound_covers(trials, 0);
  parallel_for(trials, [&](std::size_t trial) {
    const auto problem = gen_selection_data(cfg, trial);
    const auto p = selection_pvalues(problem);
    const auto curve = fdp_selection(p, env, make_eval_grid(p.p), true);
    bool ok = true;
    for (std::size_t i = 0; i < curve.eval_points.size(); ++i)
      if (curve.bound_refined[i] < curve.fdp_true[i]) ok = false;
    covered[trial] = ok ? 1 : 0;

    // Post hoc escalation until at least 5% of the test points are selected.
    const double m = static_cast<double>(p.m());
    double alpha = 0.05;
    BhResult bh = bh_threshold(p.p, alpha);
    while (static_cast<double>(bh.k) < 0.05 * m && alpha + 0.05 < 1.0) {
      alpha += 0.05;
      bh = bh_threshold(p.p, alpha);
    }
    std::size_t false_disc = 0;
    for (std::size_t j = 0; j < p.m(); ++j)
      if (p.p[j] <= bh.threshold && bh.k > 0 && (*p.null_mask)[j]) ++false_disc;
    const double fdp =
        bh.k == 0 ? 0.0
                  : static_cast<double>(false_disc) / static_cast<double>(bh.k);
    const auto it = std::lower_bound(curve.eval_points.begin(),
                                     curve.eval_points.end(), bh.threshold);
    const double bound = curve.bound_refined[static_cast<std::size_t>(
        it - curve.eval_points.begin())];
    bh_covers[trial] = alpha >= fdp ? 1 : 0;
    bound_covers[trial] = bound >= fdp ? 1 : 0;
  });

  double cov = 0, bh_cov = 0, bound_cov = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    cov += covered[t];
    bh_cov += bh_covers[t];
    bound_cov += bound_covers[t];
  }
  cov /= trials;
  bh_cov /= trials;
  bound_cov /= trials;

  std::ostringstream detail;
  detail << "simultaneous coverage=" << cov
         << " (need >= 0.86); post hoc BH fails in " << 1.0 - bh_cov
         << " (need >= 0.05); bound covers the realized FDP at the BH "
            "threshold in "
         << bound_cov << " (need >= 0.86)";
  report(6, "selection coverage and post hoc BH comparison",
         cov >= 0.86 && (1.0 - bh_cov) >= 0.05 && bound_cov >= 0.86,
         detail.str());
}

// --------------------------------------------------------------------------
// 7. Exact variance formula against Monte Carlo.
void criterion_7() {
  const auto exact_case = ecdf_variance({1, 1, 0.5});
  bool pass = std::abs(exact_case.var - 0.25) <= 1e-12;
  std::ostringstream detail;
  detail << "var(1,1,0.5)=" << exact_case.var << " (|err| <= 1e-12: "
         << (pass ? "yes" : "no") << ")";

  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> unif(0, 1);
  double worst = 0;
  for (int q = 0; q < 20; ++q) {
    const std::size_t n = 1 + rng() % 20;
    const std::size_t m = 1 + rng() % 10;
    const double t = 0.05 + 0.9 * unif(rng);
    const double exact = ecdf_variance({n, m, t}).var;

    const std::size_t reps = 1000000;
    Rng mc(substream_seed(7070, static_cast<std::uint64_t>(q)));
    double sum = 0, sumsq = 0;
    std::vector<double> calib(n);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      for (auto& v : calib) v = mc.open_unit();
      std::size_t hits = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const double test = mc.open_unit();
        std::size_t rank = 0;
        for (double v : calib) rank += v < test ? 1 : 0;
        const double qq = (static_cast<double>(rank) + mc.open_unit()) /
                          (static_cast<double>(n) + 1.0);
        hits += qq <= t ? 1 : 0;
      }
      const double f = static_cast<double>(hits) / static_cast<double>(m);
      sum += f;
      sumsq += f * f;
    }
    const double mean = sum / reps;
    const double mc_var = sumsq / reps - mean * mean;
    worst = std::max(worst, std::abs(mc_var - exact) / exact);
  }
  pass = pass && worst <= 0.02;
  detail << "; worst relative MC error over 20 queries = " << worst
         << " (need <= 0.02)";
  report(7, "exact ECDF variance formula", pass, detail.str());
}

// --------------------------------------------------------------------------
// 8. THC candidate reduction equals brute force, and scales linearly.
void criterion_8() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> unif(0, 1);
  const double lo = 0.01, hi = 0.99, beta = 0.5;
  const auto spec = SummaryStatisticSpec::thc(lo, hi, beta);

  double worst = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t m = 1 + rng() % 50;
    std::vector<double> values(m);
    for (auto& v : values) v = unif(rng);
    const EcdfCurve curve(values);
    const double mine = thc_statistic(curve, spec);

    // Brute force over the step-1e-5 lattice plus the jump points.
    double brute = -kInf;
    const auto value_at = [&](double t) {
      return (curve.eval(t) - t) / std::pow(t * (1.0 - t), beta);
    };
    const std::size_t steps = static_cast<std::size_t>((hi - lo) / 1e-5);
    for (std::size_t k = 0; k <= steps; ++k)
      brute = std::max(brute, value_at(lo + static_cast<double>(k) * 1e-5));
    brute = std::max(brute, value_at(hi));
    for (double v : curve.sorted_values())
      if (v > lo && v <= hi) brute = std::max(brute, value_at(v));
    worst = std::max(worst, std::abs(mine - brute));
  }
  const bool exact_ok = worst <= 1e-4;

  // Timing: pre-sorted curves with m and 10m points; interleaved runs with
  // the minimum over 9 repetitions, which filters transient machine load.
  const auto make_curve = [&](std::size_t m) {
    std::vector<double> values(m);
    for (auto& v : values) v = unif(rng);
    std::sort(values.begin(), values.end());
    return EcdfCurve::from_sorted(std::move(values));
  };
  const auto small = make_curve(200000);
  const auto large = make_curve(2000000);
  double sink = thc_statistic(small, spec) + thc_statistic(large, spec);
  double t1 = kInf, t10 = kInf;
  for (int run = 0; run < 9; ++run) {
    auto start = Clock::now();
    sink += thc_statistic(small, spec);
    t1 = std::min(t1, seconds_since(start));
    start = Clock::now();
    sink += thc_statistic(large, spec);
    t10 = std::min(t10, seconds_since(start));
  }
  if (sink == 12345.6789) std::cout << "";  // keep the calls alive
  const double ratio = t10 / t1;
  const bool linear_ok = ratio <= 12.0;

  std::ostringstream detail;
  detail << "worst |candidate - brute force| = " << worst
         << " (need <= 1e-4); time(10m)/time(m) = " << ratio
         << " (need <= 12)";
  report(8, "THC oracle equivalence and linear cost", exact_ok && linear_ok,
         detail.str());
}

// --------------------------------------------------------------------------
// 9. Calibration-conditional validity of the CCV thresholds.
void criterion_9() {
  const std::size_t n = 500, B = 1000;
  const double delta = 0.1;
  const auto spec = SummaryStatisticSpec::thc(0.01, 0.99, 0.5);

  // Nested simulation: each draw builds its own thresholds from a fresh
  // Monte Carlo lower envelope, then checks the calibration set against
  // them. Conditional super-uniformity at all levels reduces to
  // U_(i) <= b_i for every i.
  const std::size_t draws = 200;
  std::size_t valid = 0;
  for (std::size_t draw = 0; draw < draws; ++draw) {
    const auto samples = sample_iid(
        {0, n, B, substream_seed(901, 2 * draw), SampleMode::IidUniform});
    const double cutoff =
        calibrate_cutoff(samples, spec, delta, Direction::Lower);
    const auto L = build_envelope(cutoff, spec, 0, n, delta, Direction::Lower,
                                  SampleMode::IidUniform, B, 901);
    const auto thr = ccv_thresholds(L, n);
    const auto calib = sample_iid(
        {0, n, 1, substream_seed(901, 2 * draw + 1), SampleMode::IidUniform});
    std::vector<double> u(calib.row(0).begin(), calib.row(0).end());
    std::sort(u.begin(), u.end());
    bool ok = true;
    for (std::size_t i = 1; i <= n; ++i)
      if (u[i - 1] > thr.b[i]) ok = false;
    valid += ok ? 1 : 0;
  }
  const double frac = static_cast<double>(valid) / draws;

  // Shape checks on one representative threshold set.
  const auto samples = sample_iid({0, n, B, 902, SampleMode::IidUniform});
  const double cutoff = calibrate_cutoff(samples, spec, delta, Direction::Lower);
  const auto L = build_envelope(cutoff, spec, 0, n, delta, Direction::Lower,
                                SampleMode::IidUniform, B, 902);
  const auto thr = ccv_thresholds(L, n);

  std::size_t below_identity = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (thr.b[i] < static_cast<double>(i) / n) ++below_identity;

  // Brute-force forward sweep of the running max.
  std::vector<double> crossing(n + 1, 1.0);
  double running = -kInf;
  std::size_t level = 1;
  for (double t = 0.0; t <= 1.0 && level <= n; t += 1e-6) {
    running = std::max(running, L.eval(std::min(t, 1.0)));
    while (level <= n && running >= static_cast<double>(level) / n) {
      crossing[level] = t;
      ++level;
    }
  }
  std::size_t sweep_violations = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (!(thr.b[i] <= crossing[i] + 1e-8)) ++sweep_violations;

  std::ostringstream detail;
  detail << "conditional validity fraction=" << frac
         << " (need >= 0.85); b_i below i/n in " << below_identity
         << " cases (need 0); bisection above the sweep inversion in "
         << sweep_violations << " cases (need 0)";
  report(9, "CCV conditional validity", frac >= 0.85 && below_identity == 0 &&
                                            sweep_violations == 0,
         detail.str());
}

// --------------------------------------------------------------------------
// 10. Weighted-quantile exactness including the infinite atom.
void criterion_10() {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> unif(0, 1);
  std::normal_distribution<double> normal(0, 1);
  std::size_t mismatches = 0, infinite_cases = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t B = 1 + rng() % 50;
    const double delta = 0.005 + 0.99 * unif(rng);
    std::vector<double> stats(B);
    for (auto& v : stats) v = normal(rng);
    if (rep % 4 == 0 && B > 3) stats[2] = stats[1];

    // Oracle: walk the sorted atoms accumulating (B+1)^-1 mass each.
    std::vector<double> sorted = stats;
    std::sort(sorted.begin(), sorted.end());
    double oracle = kInf;
    for (std::size_t k = 1; k <= B; ++k) {
      if (static_cast<double>(k) / (static_cast<double>(B) + 1.0) >=
          1.0 - delta) {
        oracle = sorted[k - 1];
        break;
      }
    }

    const std::size_t k = detail::quantile_index(B, delta);
    double mine = kInf;
    if (k <= B) {
      std::vector<double> copy = stats;
      std::nth_element(copy.begin(), copy.begin() + (k - 1), copy.end());
      mine = copy[k - 1];
    }
    if (std::isinf(oracle)) {
      ++infinite_cases;
      if (!std::isinf(mine)) ++mismatches;
    } else if (mine != oracle) {
      ++mismatches;
    }
  }
  std::ostringstream msg;
  msg << mismatches << " mismatches over 1000 cases (" << infinite_cases
      << " infinite-atom cases exercised; need 0 mismatches and > 0 "
         "infinite cases)";
  report(10, "weighted quantile exactness",
         mismatches == 0 && infinite_cases > 0, msg.str());
}

}  // namespace

int main() {
  // The stated runtime budgets are single-threaded.
  setenv("FDPBAND_THREADS", "1", 0);

  criterion_1();
  criterion_2();
  criteria_3_and_5();
  criterion_4();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();

  std::sort(g_lines.begin(), g_lines.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [id, line] : g_lines) std::cout << line << "\n";

  if (g_failures == 0)
    std::cout << "all acceptance criteria passed\n";
  else
    std::cout << g_failures << " acceptance criteria failed\n";
  return g_failures == 0 ? 0 : 1;
}
