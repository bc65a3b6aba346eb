#include "fdpband/envelope.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace fdpband {

namespace {

// Maximizer of f(s) = s + a * sigma(s) on [lo, hi] for a > 0 (concave case;
// f' = 1 + a sigma' with sigma' strictly decreasing, so bisection on f').
double solve_concave_argmax(double lo, double hi, double a, double beta) {
  if (beta == 0.0 || a <= 0.0 || !(lo < hi)) return hi;
  const auto deriv = [&](double s) {
    return 1.0 + a * detail::sigma_template_deriv(s, beta);
  };
  if (deriv(hi) >= 0.0) return hi;
  if (deriv(lo) <= 0.0) return lo;
  double a0 = lo, b0 = hi;
  for (int it = 0; it < 200 && b0 - a0 > 1e-15; ++it) {
    const double mid = 0.5 * (a0 + b0);
    (deriv(mid) >= 0.0 ? a0 : b0) = mid;
  }
  return 0.5 * (a0 + b0);
}

}  // namespace

EnvelopeFunction::EnvelopeFunction(SummaryStatisticSpec spec, double cutoff,
                                   Direction direction, Scale scale,
                                   std::size_t n, std::size_t m,
                                   SampleMode mode, double delta,
                                   std::size_t B_used, std::uint64_t seed)
    : spec_(spec),
      cutoff_(cutoff),
      direction_(direction),
      scale_(scale),
      n_(n),
      m_(m),
      mode_(mode),
      delta_(delta),
      B_used_(B_used),
      seed_(seed) {
  spec_.validate();
  if (spec_.kind == StatKind::BJ)
    throw config_error("envelope: BJ statistic has no (mu, sigma) template");
  if (m_ < 1) throw config_error("envelope: m must be >= 1");
  const auto [lo, hi] = spec_.window();
  // Effective sigma coefficient of the line: +cutoff (upper), -cutoff (lower).
  const double a =
      direction_ == Direction::Upper ? cutoff_ : -cutoff_;
  if (std::isfinite(cutoff_) && a > 0.0 && spec_.kind != StatKind::KS)
    argmax_ = solve_concave_argmax(lo, hi, a, spec_.beta);
  else
    argmax_ = hi;
}

double EnvelopeFunction::sigma(double t) const {
  switch (spec_.kind) {
    case StatKind::KS:
      return 1.0 / std::sqrt(static_cast<double>(m_));
    case StatKind::HC:
    case StatKind::THC:
      return detail::sigma_template(t, spec_.beta);
    case StatKind::Pointwise:
      return detail::sigma_template(spec_.t0, spec_.beta);
    case StatKind::BJ:
      break;
  }
  throw config_error("envelope: BJ has no sigma template");
}

double EnvelopeFunction::raw_line(double t) const {
  return direction_ == Direction::Upper ? t + cutoff_ * sigma(t)
                                        : t - cutoff_ * sigma(t);
}

double EnvelopeFunction::finish(double raw) const {
  if (direction_ == Direction::Upper) {
    const double prop = std::min(raw, 1.0);
    if (scale_ == Scale::Proportion) return prop;
    return std::clamp(static_cast<double>(m_) * prop, 0.0,
                      static_cast<double>(m_));
  }
  const double prop = std::max(raw, 0.0);
  if (scale_ == Scale::Proportion) return prop;
  return std::min(static_cast<double>(m_) * prop, static_cast<double>(m_));
}

double EnvelopeFunction::eval(double t) const {
  const auto [lo, hi] = spec_.window();
  if (direction_ == Direction::Upper) {
    if (!std::isfinite(cutoff_)) return cap();
    if (t > hi) return cap();
    return finish(raw_line(std::clamp(t, lo, hi)));
  }
  if (!std::isfinite(cutoff_)) return 0.0;
  if (t < lo) return 0.0;
  return finish(raw_line(std::min(t, hi)));
}

double EnvelopeFunction::mono_eval(double t) const {
  const auto [lo, hi] = spec_.window();
  if (!std::isfinite(cutoff_)) return eval(t);  // constant
  const double a = direction_ == Direction::Upper ? cutoff_ : -cutoff_;
  if (direction_ == Direction::Upper) {
    if (t > hi) return cap();
    const double tt = std::clamp(t, lo, hi);
    // a >= 0: raw line is concave (rises to argmax_, then falls);
    // a < 0: convex, so the running max sits at an endpoint.
    const double raw = a >= 0.0
                           ? raw_line(std::min(tt, argmax_))
                           : std::max(raw_line(lo), raw_line(tt));
    return finish(raw);
  }
  if (t < lo) return 0.0;
  const double tt = std::min(t, hi);
  const double raw = a >= 0.0 ? raw_line(std::min(tt, argmax_))
                              : std::max(raw_line(lo), raw_line(tt));
  return finish(raw);
}

EnvelopeFunction EnvelopeFunction::with_scale(Scale scale) const {
  return EnvelopeFunction(spec_, cutoff_, direction_, scale, n_, m_, mode_,
                          delta_, B_used_, seed_);
}

namespace {

std::string direction_to_string(Direction d) {
  return d == Direction::Upper ? "upper" : "lower";
}
Direction direction_from_string(const std::string& s) {
  if (s == "upper") return Direction::Upper;
  if (s == "lower") return Direction::Lower;
  throw data_error("envelope json: unknown direction '" + s + "'");
}
std::string scale_to_string(Scale s) {
  return s == Scale::Proportion ? "proportion" : "count";
}
Scale scale_from_string(const std::string& s) {
  if (s == "proportion") return Scale::Proportion;
  if (s == "count") return Scale::Count;
  throw data_error("envelope json: unknown scale '" + s + "'");
}
std::string mode_to_string(SampleMode m) {
  return m == SampleMode::Conformal ? "conformal" : "iid";
}
SampleMode mode_from_string(const std::string& s) {
  if (s == "conformal") return SampleMode::Conformal;
  if (s == "iid") return SampleMode::IidUniform;
  throw data_error("envelope json: unknown mode '" + s + "'");
}

nlohmann::json cutoff_to_json(double cutoff) {
  if (std::isinf(cutoff)) return "inf";
  return cutoff;
}

double cutoff_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    throw data_error("envelope json: cutoff string must be \"inf\"");
  }
  return j.get<double>();
}

SummaryStatisticSpec spec_from_json(const nlohmann::json& j) {
  SummaryStatisticSpec spec;
  try {
    spec.kind = kind_from_string(j.at("template").get<std::string>());
  } catch (const config_error& e) {
    throw data_error(std::string("envelope json: ") + e.what());
  }
  spec.beta = j.at("beta").get<double>();
  spec.ell = j.at("ell").get<double>();
  spec.r = j.at("r").get<double>();
  spec.t0 = j.value("t0", 0.5);
  return spec;
}

void spec_to_json(const SummaryStatisticSpec& spec, nlohmann::json& j) {
  j["template"] = kind_to_string(spec.kind);
  j["beta"] = spec.beta;
  j["ell"] = spec.ell;
  j["r"] = spec.r;
  if (spec.kind == StatKind::Pointwise) j["t0"] = spec.t0;
}

}  // namespace

std::string kind_to_string(StatKind kind) {
  switch (kind) {
    case StatKind::KS: return "ks";
    case StatKind::HC: return "hc";
    case StatKind::THC: return "thc";
    case StatKind::BJ: return "bj";
    case StatKind::Pointwise: return "pointwise";
  }
  return "thc";
}

StatKind kind_from_string(const std::string& s) {
  if (s == "ks") return StatKind::KS;
  if (s == "hc") return StatKind::HC;
  if (s == "thc") return StatKind::THC;
  if (s == "bj") return StatKind::BJ;
  if (s == "pointwise") return StatKind::Pointwise;
  throw config_error("unknown statistic kind '" + s + "'");
}

nlohmann::json EnvelopeFunction::to_json() const {
  nlohmann::json j;
  spec_to_json(spec_, j);
  j["cutoff"] = cutoff_to_json(cutoff_);
  j["scale"] = scale_to_string(scale_);
  j["direction"] = direction_to_string(direction_);
  j["mode"] = mode_to_string(mode_);
  j["n"] = n_;
  j["m"] = m_;
  j["delta"] = delta_;
  j["B"] = B_used_;
  j["seed"] = seed_;
  return j;
}

EnvelopeFunction EnvelopeFunction::from_json(const nlohmann::json& j) {
  try {
    return EnvelopeFunction(
        spec_from_json(j), cutoff_from_json(j.at("cutoff")),
        direction_from_string(j.value("direction", "upper")),
        scale_from_string(j.value("scale", "proportion")),
        j.at("n").get<std::size_t>(), j.at("m").get<std::size_t>(),
        mode_from_string(j.value("mode", "conformal")),
        j.at("delta").get<double>(), j.value("B", std::size_t{0}),
        j.value("seed", std::uint64_t{0}));
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("envelope json: ") + e.what());
  }
}

EnvelopeFamily::EnvelopeFamily(SummaryStatisticSpec spec,
                               std::vector<double> cutoffs,
                               Direction direction, std::size_t n,
                               SampleMode mode, double delta,
                               std::size_t B_used, std::uint64_t seed)
    : spec_(spec),
      cutoffs_(std::move(cutoffs)),
      direction_(direction),
      n_(n),
      mode_(mode),
      delta_(delta),
      B_used_(B_used),
      seed_(seed) {
  if (cutoffs_.empty()) throw config_error("envelope family: empty cutoffs");
  members_.reserve(cutoffs_.size());
  for (std::size_t r = 1; r <= cutoffs_.size(); ++r)
    members_.emplace_back(spec_, cutoffs_[r - 1], direction_,
                          Scale::Proportion, n_, r, mode_, delta_, B_used_,
                          seed_);
}

const EnvelopeFunction& EnvelopeFamily::member(std::size_t r) const {
  if (r < 1 || r > members_.size())
    throw config_error("envelope family: member index out of range");
  return members_[r - 1];
}

double EnvelopeFamily::count_bound(std::size_t r, double t) const {
  const double prop = member(r).eval(t);
  return std::clamp(static_cast<double>(r) * prop, 0.0,
                    static_cast<double>(r));
}

double EnvelopeFamily::count_bound_mono(std::size_t r, double t) const {
  const double prop = member(r).mono_eval(t);
  return std::clamp(static_cast<double>(r) * prop, 0.0,
                    static_cast<double>(r));
}

nlohmann::json EnvelopeFamily::to_json() const {
  nlohmann::json j;
  spec_to_json(spec_, j);
  j["cutoffs"] = cutoffs_;
  j["scale"] = "proportion";
  j["direction"] = direction_to_string(direction_);
  j["mode"] = mode_to_string(mode_);
  j["n"] = n_;
  j["m"] = members_.size();
  j["delta"] = delta_;
  j["B"] = B_used_;
  j["seed"] = seed_;
  return j;
}

EnvelopeFamily EnvelopeFamily::from_json(const nlohmann::json& j) {
  try {
    std::vector<double> cutoffs;
    for (const auto& c : j.at("cutoffs")) cutoffs.push_back(cutoff_from_json(c));
    return EnvelopeFamily(spec_from_json(j), std::move(cutoffs),
                          direction_from_string(j.value("direction", "upper")),
                          j.at("n").get<std::size_t>(),
                          mode_from_string(j.value("mode", "conformal")),
                          j.at("delta").get<double>(),
                          j.value("B", std::size_t{0}),
                          j.value("seed", std::uint64_t{0}));
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("envelope family json: ") + e.what());
  }
}

namespace detail {

std::size_t quantile_index(std::size_t B, double delta) {
  const double q = 1.0 - delta;
  const double atoms = static_cast<double>(B) + 1.0;
  auto k = static_cast<std::size_t>(std::ceil(q * atoms));
  if (k < 1) k = 1;
  // Settle float rounding against the defining inequality k/(B+1) >= 1-delta.
  while (k > 1 && static_cast<double>(k - 1) / atoms >= q) --k;
  while (k <= B && static_cast<double>(k) / atoms < q) ++k;
  return k;
}

}  // namespace detail

double calibrate_cutoff(const UniformSampleMatrix& samples,
                        const SummaryStatisticSpec& spec, double delta,
                        Direction direction) {
  spec.validate();
  if (!(delta > 0.0 && delta < 1.0))
    throw config_error("calibrate_cutoff: delta must lie in (0,1)");
  const std::size_t B = samples.rows();
  std::vector<double> stats(B);
  std::vector<double> row;
  for (std::size_t b = 0; b < B; ++b) {
    row.assign(samples.row(b).begin(), samples.row(b).end());
    std::sort(row.begin(), row.end());
    const double s =
        spec.kind == StatKind::BJ && direction == Direction::Upper
            ? bj_statistic(EcdfCurve::from_sorted(row))
            : detail::sup_statistic_sorted(row, spec,
                                           direction == Direction::Lower);
    if (std::isnan(s) || std::isinf(s))
      throw numeric_error("calibrate_cutoff: non-finite statistic value");
    stats[b] = s;
  }
  const std::size_t k = detail::quantile_index(B, delta);
  if (k > B) return kInf;
  std::nth_element(stats.begin(), stats.begin() + (k - 1), stats.end());
  return stats[k - 1];
}

EnvelopeFunction build_envelope(double cutoff, const SummaryStatisticSpec& spec,
                                std::size_t n, std::size_t m, double delta,
                                Direction direction, SampleMode mode,
                                std::size_t B_used, std::uint64_t seed) {
  return EnvelopeFunction(spec, cutoff, direction, Scale::Proportion, n, m,
                          mode, delta, B_used, seed);
}

EnvelopeFamily calibrate_family(const UniformSampleMatrix& samples,
                                const SummaryStatisticSpec& spec, double delta,
                                Direction direction) {
  spec.validate();
  if (spec.kind == StatKind::BJ)
    throw config_error("calibrate_family: BJ statistic has no envelope template");
  if (!(delta > 0.0 && delta < 1.0))
    throw config_error("calibrate_family: delta must lie in (0,1)");
  const std::size_t B = samples.rows(), m = samples.cols();

  // stats[b*m + (r-1)] = statistic of the first r columns of row b.
  std::vector<double> stats(B * m);
  std::vector<double> prefix;
  for (std::size_t b = 0; b < B; ++b) {
    prefix.clear();
    const auto row = samples.row(b);
    for (std::size_t r = 1; r <= m; ++r) {
      const double v = row[r - 1];
      prefix.insert(std::upper_bound(prefix.begin(), prefix.end(), v), v);
      const double s = detail::sup_statistic_sorted(
          prefix, spec, direction == Direction::Lower);
      if (std::isnan(s) || std::isinf(s))
        throw numeric_error("calibrate_family: non-finite statistic value");
      stats[b * m + (r - 1)] = s;
    }
  }

  const std::size_t k = detail::quantile_index(B, delta);
  std::vector<double> cutoffs(m);
  std::vector<double> column(B);
  for (std::size_t r = 1; r <= m; ++r) {
    if (k > B) {
      cutoffs[r - 1] = kInf;
      continue;
    }
    for (std::size_t b = 0; b < B; ++b) column[b] = stats[b * m + (r - 1)];
    std::nth_element(column.begin(), column.begin() + (k - 1), column.end());
    cutoffs[r - 1] = column[k - 1];
  }
  return EnvelopeFamily(spec, std::move(cutoffs), direction,
                        samples.config().n, samples.config().mode, delta, B,
                        samples.config().seed);
}

}  // namespace fdpband
