#include "fdpband/fdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fdpband {

namespace {

constexpr double kJitter = 1e-12;

std::size_t count_le(std::span<const double> sorted, double t) {
  return static_cast<std::size_t>(
      std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
}

void check_envelope_contract(const EnvelopeFunction& G, const PValueVector& p,
                             const char* who) {
  if (G.direction() != Direction::Upper)
    throw data_error(std::string(who) + ": envelope must be an upper bound");
  if (G.scale() != Scale::Proportion)
    throw data_error(std::string(who) + ": envelope must be proportion scale");
  if (G.mode() != SampleMode::Conformal)
    throw data_error(std::string(who) +
                     ": envelope must be calibrated on the conformal law");
  if (G.n() != p.n || G.m() != p.m())
    throw data_error(std::string(who) +
                     ": envelope (n,m) does not match the p-values");
}

}  // namespace

PValueVector PValueVector::create(std::vector<double> p, std::size_t n,
                                  std::optional<std::vector<std::uint8_t>> mask,
                                  bool jitter_ties) {
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0))
      throw data_error("p-values must lie in [0,1]");
  if (mask && mask->size() != p.size())
    throw data_error("null mask length does not match the p-values");

  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && p[order[j]] == p[order[i]]) ++j;
    const std::size_t run = j - i;
    if (run > 1) {
      if (!jitter_ties)
        throw data_error("tied p-values violate the no-ties assumption; "
                         "enable jitter to perturb them");
      const double half = 0.5 * static_cast<double>(run - 1) * kJitter;
      const double base =
          std::clamp(p[order[i]], half, 1.0 - half);
      for (std::size_t k = 0; k < run; ++k)
        p[order[i + k]] = base + (static_cast<double>(k) * kJitter - half);
    }
    i = j;
  }

  PValueVector out;
  out.p = std::move(p);
  out.null_mask = std::move(mask);
  out.n = n;
  return out;
}

std::vector<double> make_eval_grid(std::span<const double> pvalues,
                                   std::size_t uniform_points) {
  std::vector<double> grid(pvalues.begin(), pvalues.end());
  grid.reserve(grid.size() + uniform_points);
  if (uniform_points >= 2) {
    for (std::size_t k = 0; k < uniform_points; ++k)
      grid.push_back(static_cast<double>(k) /
                     static_cast<double>(uniform_points - 1));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<double> fdp_naive(const PValueVector& p, const EnvelopeFunction& G,
                              std::span<const double> grid) {
  check_envelope_contract(G, p, "fdp_naive");
  std::vector<double> sorted(p.p);
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(p.m());
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double denom =
        std::max<std::size_t>(1, count_le(sorted, grid[i]));
    out[i] = std::clamp(m * G.eval(grid[i]) / static_cast<double>(denom), 0.0,
                        1.0);
  }
  return out;
}

namespace detail {

std::vector<double> self_refine_core(std::span<const double> p_sorted,
                                     std::span<const double> bound_at_p,
                                     std::span<const double> grid,
                                     std::span<const double> bound_at_grid) {
  const std::size_t m = p_sorted.size();
  // running_min[j] = min_{i <= j} (B(p_(i)) - |R(p_(i))|)
  std::vector<double> running_min(m);
  double acc = kInf;
  for (std::size_t j = 0; j < m; ++j) {
    acc = std::min(acc, bound_at_p[j] - static_cast<double>(j + 1));
    running_min[j] = acc;
  }
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t nr = count_le(p_sorted, grid[i]);
    if (nr == 0) {
      out[i] = 0.0;  // nothing rejected, no false discoveries possible
      continue;
    }
    const double r = static_cast<double>(nr);
    out[i] = std::min({bound_at_grid[i], r, r + running_min[nr - 1]});
  }
  return out;
}

std::size_t estimate_m0_core(
    std::span<const double> p_sorted,
    const std::function<double(std::size_t, double)>& count_env_mono) {
  const std::size_t m = p_sorted.size();
  // Check points {0} + observed p-values; right-continuous survival counts.
  std::vector<double> points;
  points.reserve(m + 1);
  points.push_back(0.0);
  points.insert(points.end(), p_sorted.begin(), p_sorted.end());
  std::vector<double> survival(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    survival[i] = static_cast<double>(m - count_le(p_sorted, points[i]));

  // envelope_max[i] accumulates max_{k <= r} of the monotone count envelopes,
  // so each r is checked against a count bound nondecreasing in r.
  std::vector<double> envelope_max(points.size(), 0.0);
  std::size_t best = 0;
  for (std::size_t r = 1; r <= m; ++r) {
    bool pass = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
      envelope_max[i] = std::max(envelope_max[i], count_env_mono(r, points[i]));
      if (survival[i] < static_cast<double>(r) - envelope_max[i]) pass = false;
    }
    if (pass) best = r;
  }
  return best;
}

}  // namespace detail

std::vector<double> self_refine(const PValueVector& p,
                                const std::function<double(double)>& count_bound,
                                std::span<const double> grid) {
  std::vector<double> sorted(p.p);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> at_p(sorted.size()), at_grid(grid.size());
  for (std::size_t j = 0; j < sorted.size(); ++j) at_p[j] = count_bound(sorted[j]);
  for (std::size_t i = 0; i < grid.size(); ++i) at_grid[i] = count_bound(grid[i]);
  return detail::self_refine_core(sorted, at_p, grid, at_grid);
}

namespace {

void check_family_contract(const EnvelopeFamily& family, const PValueVector& p,
                           const char* who) {
  if (family.n() != p.n)
    throw data_error(std::string(who) +
                     ": family calibration size does not match the p-values");
  if (family.m() < p.m())
    throw data_error(std::string(who) + ": family has fewer members than p-values");
}

}  // namespace

std::size_t estimate_m0(const PValueVector& p, const EnvelopeFamily& family) {
  check_family_contract(family, p, "estimate_m0");
  std::vector<double> sorted(p.p);
  std::sort(sorted.begin(), sorted.end());
  return detail::estimate_m0_core(
      sorted, [&](std::size_t r, double t) {
        return family.count_bound_mono(r, t);
      });
}

FdpBoundCurve fdp_combined(const PValueVector& p, const EnvelopeFamily& family,
                           std::span<const double> grid_in) {
  check_family_contract(family, p, "fdp_combined");
  const std::size_t m = p.m();

  std::vector<double> sorted(p.p);
  std::sort(sorted.begin(), sorted.end());

  // Grid must contain every observed p-value.
  std::vector<double> grid(grid_in.begin(), grid_in.end());
  grid.insert(grid.end(), sorted.begin(), sorted.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const std::size_t mhat0 = estimate_m0(p, family);

  // Count bounds run-maxed over prefix sizes: at k = mhat0 (combined) and
  // k = m (naive); one O(m) sweep per evaluation point serves both.
  const auto sup_bounds = [&](double t) {
    double acc = 0.0, at_mhat0 = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
      acc = std::max(acc, family.count_bound(k, t));
      if (k == mhat0) at_mhat0 = acc;
    }
    return std::pair<double, double>(at_mhat0, acc);
  };

  std::vector<double> comb_at_p(m), naive_at_p(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto [c, nv] = sup_bounds(sorted[j]);
    comb_at_p[j] = c;
    naive_at_p[j] = nv;
  }
  std::vector<double> comb_at_grid(grid.size()), naive_at_grid(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto [c, nv] = sup_bounds(grid[i]);
    comb_at_grid[i] = c;
    naive_at_grid[i] = nv;
  }

  const auto refined_counts =
      detail::self_refine_core(sorted, naive_at_p, grid, naive_at_grid);
  const auto combined_counts =
      detail::self_refine_core(sorted, comb_at_p, grid, comb_at_grid);

  FdpBoundCurve curve;
  curve.eval_points = grid;
  curve.mhat0 = mhat0;
  curve.delta = family.delta();
  curve.rejections.resize(grid.size());
  curve.bound_naive.resize(grid.size());
  curve.bound_refined.resize(grid.size());
  curve.bound_combined.resize(grid.size());

  std::vector<double> null_sorted;
  if (p.null_mask) {
    for (std::size_t j = 0; j < m; ++j)
      if ((*p.null_mask)[j]) null_sorted.push_back(p.p[j]);
    std::sort(null_sorted.begin(), null_sorted.end());
    curve.fdp_true.resize(grid.size());
  }

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t nr = count_le(sorted, grid[i]);
    const double denom = static_cast<double>(std::max<std::size_t>(1, nr));
    curve.rejections[i] = nr;
    curve.bound_naive[i] = std::clamp(naive_at_grid[i] / denom, 0.0, 1.0);
    curve.bound_refined[i] = std::clamp(refined_counts[i] / denom, 0.0, 1.0);
    curve.bound_combined[i] = std::clamp(combined_counts[i] / denom, 0.0, 1.0);
    if (p.null_mask)
      curve.fdp_true[i] =
          static_cast<double>(count_le(null_sorted, grid[i])) / denom;
  }
  return curve;
}

FdpBoundCurve fdp_single_envelope(const PValueVector& p,
                                  const EnvelopeFunction& G,
                                  std::span<const double> grid_in,
                                  bool refine) {
  check_envelope_contract(G, p, "fdp bound");

  std::vector<double> sorted(p.p);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> grid(grid_in.begin(), grid_in.end());
  grid.insert(grid.end(), sorted.begin(), sorted.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const double m = static_cast<double>(p.m());
  const auto count_bound = [&](double t) { return m * G.eval(t); };

  std::vector<double> refined;
  if (refine) refined = self_refine(p, count_bound, grid);

  FdpBoundCurve curve;
  curve.eval_points = grid;
  curve.delta = G.delta();
  curve.mhat0 = p.m();
  curve.rejections.resize(grid.size());
  curve.bound_naive.resize(grid.size());
  curve.bound_refined.resize(grid.size());
  curve.bound_combined.resize(grid.size());

  std::vector<double> null_sorted;
  if (p.null_mask) {
    for (std::size_t j = 0; j < p.m(); ++j)
      if ((*p.null_mask)[j]) null_sorted.push_back(p.p[j]);
    std::sort(null_sorted.begin(), null_sorted.end());
    curve.fdp_true.resize(grid.size());
  }

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t nr = count_le(sorted, grid[i]);
    const double denom = static_cast<double>(std::max<std::size_t>(1, nr));
    curve.rejections[i] = nr;
    curve.bound_naive[i] = std::clamp(count_bound(grid[i]) / denom, 0.0, 1.0);
    curve.bound_refined[i] = refine
                                 ? std::clamp(refined[i] / denom, 0.0, 1.0)
                                 : curve.bound_naive[i];
    curve.bound_combined[i] = curve.bound_refined[i];
    if (p.null_mask)
      curve.fdp_true[i] =
          static_cast<double>(count_le(null_sorted, grid[i])) / denom;
  }
  return curve;
}

}  // namespace fdpband
