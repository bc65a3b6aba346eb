// Command-line front end: envelope calibration, FDP/FCP bound curves, CCV
// thresholds, variance queries, and the synthetic coverage experiments.
//
// Exit codes: 0 success, 2 configuration error, 3 data/contract error,
// 4 numeric error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fdpband/diagnostics.hpp"
#include "fdpband/envelope.hpp"
#include "fdpband/fdp.hpp"
#include "fdpband/io.hpp"
#include "fdpband/selection.hpp"
#include "fdpband/simulate.hpp"

namespace fb = fdpband;
using nlohmann::json;

namespace {

std::string json_scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// JSON config support: "--config file.json" anywhere after the subcommand.
// Flat keys ({"n": 100}) apply to the invoked subcommand; nested sections
// ({"envelope": {"n": 100}}) apply when that subcommand is invoked. Keys are
// the long option names; explicit command-line flags always win.
std::vector<std::string> apply_json_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);

  std::string subcommand;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (!args[i].empty() && args[i][0] != '-') {
      subcommand = args[i];
      break;
    }
  }

  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw fb::config_error("cannot open config '" + config_path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw fb::config_error("config '" + config_path + "': " + e.what());
  }
  if (!j.is_object())
    throw fb::config_error("config '" + config_path + "': expected a JSON object");

  std::vector<std::pair<std::string, std::string>> settings;
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      if (key != subcommand) continue;
      for (const auto& [inner_key, inner] : value.items())
        settings.emplace_back(inner_key, json_scalar_to_string(inner));
    } else {
      settings.emplace_back(key, json_scalar_to_string(value));
    }
  }

  std::vector<std::string> user_options;
  for (const auto& arg : args) {
    if (arg.rfind("--", 0) != 0) continue;
    const auto eq = arg.find('=');
    user_options.push_back(eq == std::string::npos ? arg : arg.substr(0, eq));
  }
  for (const auto& [key, value] : settings) {
    const std::string flag = "--" + key;
    if (std::find(user_options.begin(), user_options.end(), flag) !=
        user_options.end())
      continue;
    args.push_back(flag);
    args.push_back(value);
  }
  return args;
}

struct StatOptions {
  std::string kind = "thc";
  double ell = 0.01;
  double r = 0.99;
  double beta = 0.5;
  double t0 = 0.5;

  fb::SummaryStatisticSpec spec() const {
    fb::SummaryStatisticSpec s;
    s.kind = fb::kind_from_string(kind);
    switch (s.kind) {
      case fb::StatKind::KS:
        return fb::SummaryStatisticSpec::ks();
      case fb::StatKind::BJ:
        return fb::SummaryStatisticSpec::bj();
      case fb::StatKind::HC:
        return fb::SummaryStatisticSpec::hc(beta);
      case fb::StatKind::THC:
        return fb::SummaryStatisticSpec::thc(ell, r, beta);
      case fb::StatKind::Pointwise:
        return fb::SummaryStatisticSpec::pointwise(t0, beta);
    }
    return s;
  }
};

void add_stat_options(CLI::App* cmd, StatOptions& opts) {
  cmd->add_option("--stat,--kind", opts.kind,
                  "Summary statistic: ks, hc, thc, bj, pointwise")
      ->capture_default_str();
  cmd->add_option("--ell", opts.ell, "Left end of the supremum window")
      ->capture_default_str();
  cmd->add_option("--r", opts.r, "Right end of the supremum window")
      ->capture_default_str();
  cmd->add_option("--beta", opts.beta, "Variance-template exponent in [0,1]")
      ->capture_default_str();
  cmd->add_option("--t0", opts.t0, "Evaluation point (pointwise statistic)")
      ->capture_default_str();
}

struct SeedOption {
  std::uint64_t seed = 0;
  bool given = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Reproducibility seed")
        ->each([this](const std::string&) { given = true; });
  }

  // Auto-chosen seeds are always echoed so every run can be reproduced.
  std::uint64_t resolve() {
    if (!given) {
      std::random_device rd;
      seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
    std::cout << "seed: " << seed << "\n";
    return seed;
  }
};

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

fb::EnvelopeFunction load_envelope(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fb::data_error("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw fb::data_error(path + ": " + e.what());
  }
  return fb::EnvelopeFunction::from_json(j);
}

fb::EnvelopeFamily load_family(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fb::data_error("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw fb::data_error(path + ": " + e.what());
  }
  return fb::EnvelopeFamily::from_json(j);
}

void write_curve(const std::string& path, const fb::FdpBoundCurve& curve,
                 const std::string& format) {
  if (format == "json")
    fb::write_text_atomic(path, dump_json(fb::curve_to_json(curve)));
  else
    fb::write_curve_csv(path, curve);
}

// ---------------------------------------------------------------------------

int run_envelope(std::size_t n, std::size_t m, std::size_t B, double delta,
                 SeedOption& seed_opt, const StatOptions& stat,
                 const std::string& mode_str, const std::string& dir_str,
                 bool family, double baseline_lambda,
                 const std::string& out) {
  const fb::SampleMode mode = mode_str == "iid" ? fb::SampleMode::IidUniform
                                                : fb::SampleMode::Conformal;
  const fb::Direction dir =
      dir_str == "lower" ? fb::Direction::Lower : fb::Direction::Upper;

  if (baseline_lambda > 0.0) {
    // Linear comparison band G(t) = t + lambda, expressed as a KS-template
    // envelope with cutoff lambda * sqrt(m).
    const auto env = fb::build_envelope(
        baseline_lambda * std::sqrt(static_cast<double>(m)),
        fb::SummaryStatisticSpec::ks(), n, m, delta, dir, mode, 0, 0);
    fb::write_text_atomic(out, dump_json(env.to_json()));
    std::cout << "baseline envelope written to " << out << "\n";
    return 0;
  }

  const std::uint64_t seed = seed_opt.resolve();
  fb::SamplerConfig cfg{n, m, B, seed, mode};
  const auto samples = fb::sample(cfg);
  const auto spec = stat.spec();

  if (family) {
    const auto fam = fb::calibrate_family(samples, spec, delta, dir);
    fb::write_text_atomic(out, dump_json(fam.to_json()));
    std::cout << "family with " << fam.m() << " members written to " << out
              << "\n";
    return 0;
  }
  const double cutoff = fb::calibrate_cutoff(samples, spec, delta, dir);
  const auto env =
      fb::build_envelope(cutoff, spec, n, m, delta, dir, mode, B, seed);
  fb::write_text_atomic(out, dump_json(env.to_json()));
  std::cout << "cutoff: " << (std::isinf(cutoff) ? "inf" : fb::format_double(cutoff))
            << "\n";
  std::cout << "envelope written to " << out << "\n";
  return 0;
}

int run_bound_outlier(const std::string& pvals_path,
                      const std::string& envelope_path,
                      const std::string& family_path, std::size_t n_override,
                      bool jitter, std::size_t grid_points,
                      const std::string& out, const std::string& format) {
  auto p = fb::read_pvalue_csv(pvals_path, jitter);
  if (n_override > 0) p.n = n_override;
  const auto grid = fb::make_eval_grid(p.p, grid_points);

  fb::FdpBoundCurve curve;
  if (!family_path.empty()) {
    const auto family = load_family(family_path);
    if (p.n == 0) p.n = family.n();
    curve = fb::fdp_combined(p, family, grid);
    std::cout << "mhat0: " << curve.mhat0 << "\n";
  } else {
    const auto env = load_envelope(envelope_path);
    if (p.n == 0) p.n = env.n();
    curve = fb::fdp_single_envelope(p, env, grid, true);
  }
  write_curve(out, curve, format);
  std::cout << "curve with " << curve.eval_points.size() << " points written to "
            << out << "\n";
  return 0;
}

int run_bound_select(const std::string& calib_path,
                     const std::string& test_path,
                     const std::string& envelope_path, SeedOption& seed_opt,
                     bool tie_aware, std::size_t grid_points,
                     const std::string& out, const std::string& format) {
  const std::uint64_t seed = seed_opt.resolve();
  const auto problem = fb::read_selection_csvs(calib_path, test_path, seed);
  const auto env = load_envelope(envelope_path);
  const auto p = fb::selection_pvalues(problem, tie_aware);
  const auto grid = fb::make_eval_grid(p.p, grid_points);
  const auto curve = fb::fdp_selection(p, env, grid, true);
  write_curve(out, curve, format);
  std::cout << "curve with " << curve.eval_points.size() << " points written to "
            << out << "\n";
  return 0;
}

int run_fcp(const std::string& envelope_path, std::vector<double> alphas,
            std::size_t grid_points, const std::string& out) {
  const auto env = load_envelope(envelope_path);
  if (alphas.empty()) {
    for (std::size_t k = 0; k < grid_points; ++k)
      alphas.push_back(static_cast<double>(k) /
                       static_cast<double>(grid_points - 1));
  }
  std::ostringstream csv;
  csv << "alpha,fcp_bound\n";
  for (double a : alphas) {
    const double bound = fb::fcp_bound(env, a);
    csv << fb::format_double(a) << ',' << fb::format_double(bound) << '\n';
    if (alphas.size() <= 8)
      std::cout << "fcp_bound(" << a << ") = " << bound << "\n";
  }
  if (!out.empty()) {
    fb::write_text_atomic(out, csv.str());
    std::cout << "fcp bounds written to " << out << "\n";
  }
  return 0;
}

int run_ccv(std::size_t n, std::size_t B, double delta, SeedOption& seed_opt,
            const StatOptions& stat, const std::string& envelope_path,
            const std::string& out) {
  fb::EnvelopeFunction lower;
  if (!envelope_path.empty()) {
    lower = load_envelope(envelope_path);
  } else {
    const std::uint64_t seed = seed_opt.resolve();
    fb::SamplerConfig cfg{0, n, B, seed, fb::SampleMode::IidUniform};
    const auto samples = fb::sample_iid(cfg);
    const auto spec = stat.spec();
    const double cutoff =
        fb::calibrate_cutoff(samples, spec, delta, fb::Direction::Lower);
    lower = fb::build_envelope(cutoff, spec, 0, n, delta, fb::Direction::Lower,
                               fb::SampleMode::IidUniform, B, seed);
  }
  const auto thresholds = fb::ccv_thresholds(lower, n);
  std::ostringstream csv;
  csv << "i,b_i\n";
  for (std::size_t i = 0; i < thresholds.b.size(); ++i)
    csv << i << ',' << fb::format_double(thresholds.b[i]) << '\n';
  fb::write_text_atomic(out, csv.str());
  std::cout << "ccv thresholds for n=" << n << " written to " << out << "\n";
  return 0;
}

int run_variance(std::size_t n, std::size_t m, std::vector<double> ts,
                 std::size_t grid_points, const std::string& out) {
  if (ts.empty()) {
    for (std::size_t k = 0; k < grid_points; ++k)
      ts.push_back(static_cast<double>(k) /
                   static_cast<double>(grid_points - 1));
  }
  std::ostringstream csv;
  csv << "t,var,c,rho\n";
  for (double t : ts) {
    const auto res = fb::ecdf_variance({n, m, t});
    csv << fb::format_double(t) << ',' << fb::format_double(res.var) << ','
        << fb::format_double(res.c) << ',' << fb::format_double(res.rho)
        << '\n';
    if (ts.size() <= 8)
      std::cout << "var(" << t << ") = " << res.var << "\n";
  }
  if (!out.empty()) {
    fb::write_text_atomic(out, csv.str());
    std::cout << "variance table written to " << out << "\n";
  }
  return 0;
}

int run_simulate_outlier(fb::OutlierSimConfig cfg, std::size_t trials,
                         std::size_t B, double delta, SeedOption& seed_opt,
                         const StatOptions& stat, const std::string& out,
                         const std::string& emit_pvals,
                         const std::string& emit_family) {
  cfg.seed = seed_opt.resolve();
  const auto spec = stat.spec();

  fb::SamplerConfig env_cfg{cfg.n_calib, cfg.n_test, B,
                            fb::substream_seed(cfg.seed, 0xfa111e5),
                            fb::SampleMode::Conformal};
  const auto family =
      fb::calibrate_family(fb::sample_conformal(env_cfg), spec, delta);
  if (!emit_family.empty())
    fb::write_text_atomic(emit_family, dump_json(family.to_json()));

  std::vector<int> covered(trials, 0);
  std::vector<std::size_t> mhat0s(trials, 0), m0s(trials, 0);
  fb::parallel_for(trials, [&](std::size_t trial) {
    const auto p = fb::gen_outlier_data(cfg, trial);
    const auto curve = fb::fdp_combined(p, family, fb::make_eval_grid(p.p));
    bool ok = true;
    for (std::size_t i = 0; i < curve.eval_points.size(); ++i)
      if (curve.bound_combined[i] < curve.fdp_true[i]) ok = false;
    covered[trial] = ok ? 1 : 0;
    mhat0s[trial] = curve.mhat0;
    std::size_t m0 = 0;
    for (auto flag : *p.null_mask) m0 += flag;
    m0s[trial] = m0;
    if (trial == 0 && !emit_pvals.empty()) fb::write_pvalue_csv(emit_pvals, p);
  });

  double cov = 0, mean_mhat0 = 0, mean_m0 = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    cov += covered[t];
    mean_mhat0 += static_cast<double>(mhat0s[t]);
    mean_m0 += static_cast<double>(m0s[t]);
  }
  cov /= static_cast<double>(trials);
  mean_mhat0 /= static_cast<double>(trials);
  mean_m0 /= static_cast<double>(trials);
  std::cout << "coverage: " << cov << " (fraction of " << trials
            << " trials with the bound valid at every threshold)\n";
  std::cout << "mean_mhat0: " << mean_mhat0 << " mean_m0: " << mean_m0 << "\n";

  if (!out.empty()) {
    std::ostringstream csv;
    csv << "trial,covered,mhat0,m0\n";
    for (std::size_t t = 0; t < trials; ++t)
      csv << t << ',' << covered[t] << ',' << mhat0s[t] << ',' << m0s[t]
          << '\n';
    fb::write_text_atomic(out, csv.str());
  }
  return 0;
}

int run_simulate_select(fb::SelectionSimConfig cfg, std::size_t trials,
                        std::size_t B, double delta, SeedOption& seed_opt,
                        const StatOptions& stat, const std::string& out,
                        const std::string& emit_calib,
                        const std::string& emit_test) {
  cfg.seed = seed_opt.resolve();
  const auto spec = stat.spec();

  fb::SamplerConfig env_cfg{cfg.n_calib, cfg.n_test, B,
                            fb::substream_seed(cfg.seed, 0xfa111e5),
                            fb::SampleMode::Conformal};
  const auto samples = fb::sample_conformal(env_cfg);
  const double cutoff = fb::calibrate_cutoff(samples, spec, delta);
  const auto env =
      fb::build_envelope(cutoff, spec, cfg.n_calib, cfg.n_test, delta,
                         fb::Direction::Upper, fb::SampleMode::Conformal, B,
                         env_cfg.seed);

  std::vector<int> covered(trials, 0);
  fb::parallel_for(trials, [&](std::size_t trial) {
    const auto problem = fb::gen_selection_data(cfg, trial);
    const auto p = fb::selection_pvalues(problem);
    const auto curve = fb::fdp_selection(p, env, fb::make_eval_grid(p.p), true);
    bool ok = true;
    for (std::size_t i = 0; i < curve.eval_points.size(); ++i)
      if (curve.bound_refined[i] < curve.fdp_true[i]) ok = false;
    covered[trial] = ok ? 1 : 0;
    if (trial == 0 && !emit_calib.empty() && !emit_test.empty())
      fb::write_selection_csvs(emit_calib, emit_test, problem);
  });

  double cov = 0;
  for (std::size_t t = 0; t < trials; ++t) cov += covered[t];
  cov /= static_cast<double>(trials);
  std::cout << "coverage: " << cov << " (fraction of " << trials
            << " trials with the bound valid at every threshold)\n";

  if (!out.empty()) {
    std::ostringstream csv;
    csv << "trial,covered\n";
    for (std::size_t t = 0; t < trials; ++t) csv << t << ',' << covered[t] << '\n';
    fb::write_text_atomic(out, csv.str());
  }
  return 0;
}

int run_bh_demo(fb::SelectionSimConfig cfg, std::size_t trials, std::size_t B,
                double delta, SeedOption& seed_opt, const StatOptions& stat,
                double alpha0, double alpha_step, double min_select_frac,
                const std::string& out) {
  cfg.seed = seed_opt.resolve();
  const auto spec = stat.spec();

  fb::SamplerConfig env_cfg{cfg.n_calib, cfg.n_test, B,
                            fb::substream_seed(cfg.seed, 0xfa111e5),
                            fb::SampleMode::Conformal};
  const double cutoff =
      fb::calibrate_cutoff(fb::sample_conformal(env_cfg), spec, delta);
  const auto env =
      fb::build_envelope(cutoff, spec, cfg.n_calib, cfg.n_test, delta,
                         fb::Direction::Upper, fb::SampleMode::Conformal, B,
                         env_cfg.seed);

  struct TrialRow {
    double alpha_hat = 0, t_hat = 0, fdp = 0, bound = 0;
    std::size_t selected = 0;
    int alpha_covers = 0, bound_covers = 0;
  };
  std::vector<TrialRow> rows(trials);

  fb::parallel_for(trials, [&](std::size_t trial) {
    const auto problem = fb::gen_selection_data(cfg, trial);
    const auto p = fb::selection_pvalues(problem);
    const double m = static_cast<double>(p.m());

    // Post hoc escalation: raise the BH level until enough is selected.
    double alpha = alpha0;
    fb::BhResult bh = fb::bh_threshold(p.p, alpha);
    while (static_cast<double>(bh.k) < min_select_frac * m &&
           alpha + alpha_step < 1.0) {
      alpha += alpha_step;
      bh = fb::bh_threshold(p.p, alpha);
    }

    TrialRow row;
    row.alpha_hat = alpha;
    row.t_hat = bh.threshold;
    row.selected = bh.k;
    std::size_t false_disc = 0;
    for (std::size_t j = 0; j < p.m(); ++j)
      if (p.p[j] <= bh.threshold && (*p.null_mask)[j]) ++false_disc;
    row.fdp = static_cast<double>(false_disc) /
              static_cast<double>(std::max<std::size_t>(1, bh.k));

    const std::vector<double> single_grid{bh.threshold};
    const auto curve = fb::fdp_selection(p, env, single_grid, true);
    // fdp_selection unions the grid with the p-values; locate t_hat.
    const auto it = std::lower_bound(curve.eval_points.begin(),
                                     curve.eval_points.end(), bh.threshold);
    row.bound = curve.bound_refined[static_cast<std::size_t>(
        it - curve.eval_points.begin())];
    row.alpha_covers = row.alpha_hat >= row.fdp ? 1 : 0;
    row.bound_covers = row.bound >= row.fdp ? 1 : 0;
    rows[trial] = row;
  });

  double alpha_cov = 0, bound_cov = 0;
  for (const auto& row : rows) {
    alpha_cov += row.alpha_covers;
    bound_cov += row.bound_covers;
  }
  alpha_cov /= static_cast<double>(trials);
  bound_cov /= static_cast<double>(trials);
  std::cout << "post_hoc_bh_level_covers_fdp: " << alpha_cov
            << " (underestimates in " << 1.0 - alpha_cov << ")\n";
  std::cout << "simultaneous_bound_covers_fdp: " << bound_cov << "\n";

  if (!out.empty()) {
    std::ostringstream csv;
    csv << "trial,alpha_hat,t_hat,n_selected,fdp,bound,alpha_covers,bound_covers\n";
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& row = rows[t];
      csv << t << ',' << fb::format_double(row.alpha_hat) << ','
          << fb::format_double(row.t_hat) << ',' << row.selected << ','
          << fb::format_double(row.fdp) << ',' << fb::format_double(row.bound)
          << ',' << row.alpha_covers << ',' << row.bound_covers << '\n';
    }
    fb::write_text_atomic(out, csv.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "fdpband: simultaneous FDP/FCP upper bounds for conformal p-values via "
      "Monte Carlo envelope calibration\n"
      "A JSON config file may supply option defaults: --config file.json"};
  app.require_subcommand(1);

  // envelope ---------------------------------------------------------------
  auto* envelope = app.add_subcommand(
      "envelope", "Calibrate an envelope (or a prefix family) and export JSON");
  std::size_t env_n = 100, env_m = 100, env_B = 100;
  double env_delta = 0.1;
  std::string env_mode = "conformal", env_dir = "upper", env_out = "envelope.json";
  bool env_family = false;
  double env_baseline_lambda = 0.0;
  StatOptions env_stat;
  SeedOption env_seed;
  envelope->add_option("--n", env_n, "Calibration size")->capture_default_str();
  envelope->add_option("--m", env_m, "Test size")->capture_default_str();
  envelope->add_option("--B", env_B, "Monte Carlo replications")
      ->capture_default_str();
  envelope->add_option("--delta", env_delta, "Confidence parameter in (0,1)")
      ->capture_default_str();
  envelope->add_option("--mode", env_mode, "conformal or iid")
      ->capture_default_str();
  envelope->add_option("--direction", env_dir, "upper or lower")
      ->capture_default_str();
  envelope->add_flag("--family", env_family,
                     "Calibrate the whole prefix family {G_r}, r = 1..m");
  envelope->add_option("--baseline-lambda", env_baseline_lambda,
                       "Write the linear band t + lambda instead (no sampling)");
  envelope->add_option("--out", env_out, "Output JSON path")
      ->capture_default_str();
  add_stat_options(envelope, env_stat);
  env_seed.add(envelope);

  // bound-outlier ----------------------------------------------------------
  auto* bound_outlier = app.add_subcommand(
      "bound-outlier", "Simultaneous FDP bound curve for outlier p-values");
  std::string bo_pvals, bo_envelope, bo_family, bo_out = "curve.csv",
                                               bo_format = "csv";
  std::size_t bo_n = 0, bo_grid = 512;
  bool bo_jitter = false;
  bound_outlier->add_option("--pvals", bo_pvals, "Input p-value CSV")
      ->required()
      ->check(CLI::ExistingFile);
  bound_outlier->add_option("--envelope", bo_envelope, "Envelope JSON");
  bound_outlier->add_option("--family", bo_family,
                            "Envelope family JSON (enables the combined bound)");
  bound_outlier->add_option("--n", bo_n,
                            "Calibration size behind the p-values (overrides CSV metadata)");
  bound_outlier->add_flag("--jitter-ties", bo_jitter,
                          "Perturb tied p-values by +-1e-12 instead of failing");
  bound_outlier->add_option("--grid", bo_grid, "Uniform grid points")
      ->capture_default_str();
  bound_outlier->add_option("--out", bo_out, "Output curve path")
      ->capture_default_str();
  bound_outlier->add_option("--format", bo_format, "csv or json")
      ->capture_default_str();

  // bound-select -----------------------------------------------------------
  auto* bound_select = app.add_subcommand(
      "bound-select", "Simultaneous FDP bound curve for conformal selection");
  std::string bs_calib, bs_test, bs_envelope, bs_out = "curve.csv",
                                              bs_format = "csv";
  std::size_t bs_grid = 512;
  bool bs_tie_aware = false;
  SeedOption bs_seed;
  bound_select->add_option("--calib", bs_calib, "Calibration CSV (muhat,y,c)")
      ->required()
      ->check(CLI::ExistingFile);
  bound_select->add_option("--test", bs_test, "Test CSV (muhat,c[,y_true])")
      ->required()
      ->check(CLI::ExistingFile);
  bound_select->add_option("--envelope", bs_envelope, "Envelope JSON")
      ->required()
      ->check(CLI::ExistingFile);
  bound_select->add_flag("--tie-aware", bs_tie_aware,
                         "Randomize over calibration scores tied with the test score");
  bound_select->add_option("--grid", bs_grid, "Uniform grid points")
      ->capture_default_str();
  bound_select->add_option("--out", bs_out, "Output curve path")
      ->capture_default_str();
  bound_select->add_option("--format", bs_format, "csv or json")
      ->capture_default_str();
  bs_seed.add(bound_select);

  // fcp ----------------------------------------------------------------
  auto* fcp = app.add_subcommand(
      "fcp", "False coverage proportion bound from an envelope");
  std::string fcp_envelope, fcp_out;
  std::vector<double> fcp_alphas;
  std::size_t fcp_grid = 101;
  fcp->add_option("--envelope", fcp_envelope, "Envelope JSON")
      ->required()
      ->check(CLI::ExistingFile);
  fcp->add_option("--alpha", fcp_alphas, "Miscoverage level(s)");
  fcp->add_option("--grid", fcp_grid, "Uniform alpha grid when --alpha absent")
      ->capture_default_str();
  fcp->add_option("--out", fcp_out, "Output CSV path");

  // ccv ----------------------------------------------------------------
  auto* ccv = app.add_subcommand(
      "ccv", "Calibration-conditional p-value thresholds b_i");
  std::size_t ccv_n = 100, ccv_B = 1000;
  double ccv_delta = 0.1;
  std::string ccv_envelope, ccv_out = "ccv.csv";
  StatOptions ccv_stat;
  SeedOption ccv_seed;
  ccv->add_option("--n", ccv_n, "Calibration sample size")->capture_default_str();
  ccv->add_option("--B", ccv_B, "Monte Carlo replications")
      ->capture_default_str();
  ccv->add_option("--delta", ccv_delta, "Confidence parameter")
      ->capture_default_str();
  ccv->add_option("--envelope", ccv_envelope,
                  "Use this lower envelope JSON instead of calibrating");
  ccv->add_option("--out", ccv_out, "Output CSV path")->capture_default_str();
  add_stat_options(ccv, ccv_stat);
  ccv_seed.add(ccv);

  // variance -------------------------------------------------------------
  auto* variance = app.add_subcommand(
      "variance", "Exact variance of the conformal null ECDF");
  std::size_t var_n = 100, var_m = 100, var_grid = 101;
  std::vector<double> var_ts;
  std::string var_out;
  variance->add_option("--n", var_n, "Calibration size")->capture_default_str();
  variance->add_option("--m", var_m, "Test size")->capture_default_str();
  variance->add_option("--t", var_ts, "Evaluation point(s)");
  variance->add_option("--grid", var_grid, "Uniform t grid when --t absent")
      ->capture_default_str();
  variance->add_option("--out", var_out, "Output CSV path");

  // simulate-outlier -------------------------------------------------------
  auto* sim_outlier = app.add_subcommand(
      "simulate-outlier", "Coverage experiment for the combined outlier bound");
  fb::OutlierSimConfig oc;
  std::size_t so_trials = 200, so_B = 100;
  double so_delta = 0.1;
  std::string so_out, so_emit_pvals, so_emit_family;
  StatOptions so_stat;
  SeedOption so_seed;
  sim_outlier->add_option("--trials", so_trials, "Number of trials")
      ->capture_default_str();
  sim_outlier->add_option("--n-train", oc.n_train, "Training points")
      ->capture_default_str();
  sim_outlier->add_option("--n-calib", oc.n_calib, "Calibration points")
      ->capture_default_str();
  sim_outlier->add_option("--n-test", oc.n_test, "Test points")
      ->capture_default_str();
  sim_outlier->add_option("--dim", oc.dim, "Feature dimension")
      ->capture_default_str();
  sim_outlier->add_option("--purity", oc.purity, "Fraction of inliers")
      ->capture_default_str();
  sim_outlier->add_option("--a", oc.a, "Signal strength")->capture_default_str();
  sim_outlier->add_option("--support", oc.support_size, "Mixture atoms")
      ->capture_default_str();
  sim_outlier->add_option("--knn", oc.knn, "Neighbors in the distance score")
      ->capture_default_str();
  sim_outlier->add_option("--B", so_B, "Monte Carlo replications")
      ->capture_default_str();
  sim_outlier->add_option("--delta", so_delta, "Confidence parameter")
      ->capture_default_str();
  sim_outlier->add_option("--out", so_out, "Per-trial CSV path");
  sim_outlier->add_option("--emit-pvals", so_emit_pvals,
                          "Write trial 0 p-values to this CSV");
  sim_outlier->add_option("--emit-family", so_emit_family,
                          "Write the calibrated family JSON");
  add_stat_options(sim_outlier, so_stat);
  so_seed.add(sim_outlier);

  // simulate-select ---------------------------------------------------------
  auto* sim_select = app.add_subcommand(
      "simulate-select", "Coverage experiment for the selection bound");
  fb::SelectionSimConfig sc;
  std::size_t ss_trials = 200, ss_B = 100;
  double ss_delta = 0.1;
  std::string ss_rule = "constant", ss_out, ss_emit_calib, ss_emit_test;
  StatOptions ss_stat;
  SeedOption ss_seed;
  sim_select->add_option("--trials", ss_trials, "Number of trials")
      ->capture_default_str();
  sim_select->add_option("--n-calib", sc.n_calib, "Calibration points")
      ->capture_default_str();
  sim_select->add_option("--n-test", sc.n_test, "Test points")
      ->capture_default_str();
  sim_select->add_option("--dim", sc.dim, "Feature dimension")
      ->capture_default_str();
  sim_select->add_option("--noise-sd", sc.noise_sd, "Outcome noise s.d.")
      ->capture_default_str();
  sim_select->add_option("--rule", ss_rule, "constant or feature")
      ->capture_default_str();
  sim_select->add_option("--c", sc.c, "Constant threshold")
      ->capture_default_str();
  sim_select->add_option("--B", ss_B, "Monte Carlo replications")
      ->capture_default_str();
  sim_select->add_option("--delta", ss_delta, "Confidence parameter")
      ->capture_default_str();
  sim_select->add_option("--out", ss_out, "Per-trial CSV path");
  sim_select->add_option("--emit-calib", ss_emit_calib,
                         "Write trial 0 calibration CSV");
  sim_select->add_option("--emit-test", ss_emit_test, "Write trial 0 test CSV");
  add_stat_options(sim_select, ss_stat);
  ss_seed.add(sim_select);

  // bh-demo -----------------------------------------------------------------
  auto* bh_demo = app.add_subcommand(
      "bh-demo",
      "Post hoc BH-level escalation versus the simultaneous bound");
  fb::SelectionSimConfig bc;
  bc.noise_sd = 2.0;
  std::size_t bd_trials = 200, bd_B = 100;
  double bd_delta = 0.1, bd_alpha0 = 0.05, bd_step = 0.05, bd_frac = 0.05;
  std::string bd_out;
  StatOptions bd_stat;
  SeedOption bd_seed;
  bh_demo->add_option("--trials", bd_trials, "Number of trials")
      ->capture_default_str();
  bh_demo->add_option("--n-calib", bc.n_calib, "Calibration points")
      ->capture_default_str();
  bh_demo->add_option("--n-test", bc.n_test, "Test points")
      ->capture_default_str();
  bh_demo->add_option("--noise-sd", bc.noise_sd, "Outcome noise s.d.")
      ->capture_default_str();
  bh_demo->add_option("--c", bc.c, "Constant threshold")->capture_default_str();
  bh_demo->add_option("--B", bd_B, "Monte Carlo replications")
      ->capture_default_str();
  bh_demo->add_option("--delta", bd_delta, "Confidence parameter")
      ->capture_default_str();
  bh_demo->add_option("--alpha0", bd_alpha0, "Starting BH level")
      ->capture_default_str();
  bh_demo->add_option("--step", bd_step, "BH level increment")
      ->capture_default_str();
  bh_demo->add_option("--min-frac", bd_frac,
                      "Escalate until this fraction is selected")
      ->capture_default_str();
  bh_demo->add_option("--out", bd_out, "Per-trial CSV path");
  add_stat_options(bh_demo, bd_stat);
  bd_seed.add(bh_demo);

  std::vector<std::string> arg_store;
  std::vector<char*> arg_ptrs;
  try {
    arg_store = apply_json_config(argc, argv);
    for (auto& arg : arg_store) arg_ptrs.push_back(arg.data());
    app.parse(static_cast<int>(arg_ptrs.size()), arg_ptrs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const fb::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (envelope->parsed())
      return run_envelope(env_n, env_m, env_B, env_delta, env_seed, env_stat,
                          env_mode, env_dir, env_family, env_baseline_lambda,
                          env_out);
    if (bound_outlier->parsed()) {
      if (bo_envelope.empty() && bo_family.empty())
        throw fb::config_error("bound-outlier: provide --envelope or --family");
      return run_bound_outlier(bo_pvals, bo_envelope, bo_family, bo_n,
                               bo_jitter, bo_grid, bo_out, bo_format);
    }
    if (bound_select->parsed())
      return run_bound_select(bs_calib, bs_test, bs_envelope, bs_seed,
                              bs_tie_aware, bs_grid, bs_out, bs_format);
    if (fcp->parsed()) return run_fcp(fcp_envelope, fcp_alphas, fcp_grid, fcp_out);
    if (ccv->parsed())
      return run_ccv(ccv_n, ccv_B, ccv_delta, ccv_seed, ccv_stat, ccv_envelope,
                     ccv_out);
    if (variance->parsed())
      return run_variance(var_n, var_m, var_ts, var_grid, var_out);
    if (sim_outlier->parsed())
      return run_simulate_outlier(oc, so_trials, so_B, so_delta, so_seed,
                                  so_stat, so_out, so_emit_pvals,
                                  so_emit_family);
    if (sim_select->parsed()) {
      sc.rule = ss_rule == "feature"
                    ? fb::SelectionSimConfig::ThresholdRule::FeatureFunction
                    : fb::SelectionSimConfig::ThresholdRule::Constant;
      return run_simulate_select(sc, ss_trials, ss_B, ss_delta, ss_seed,
                                 ss_stat, ss_out, ss_emit_calib, ss_emit_test);
    }
    if (bh_demo->parsed())
      return run_bh_demo(bc, bd_trials, bd_B, bd_delta, bd_seed, bd_stat,
                         bd_alpha0, bd_step, bd_frac, bd_out);
  } catch (const fb::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fb::data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const fb::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
