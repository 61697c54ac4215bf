#pragma once

// Noise generators and the path functionals on sampled paths: stop-rules,
// dyadic quadratic variation, band local time, the metric d^Xi and
// piecewise-linear approximants.

#include <pathwise/errors.hpp>
#include <pathwise/path.hpp>
#include <pathwise/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace pathwise {

// ---------------------------------------------------------------- generators

/// Standard Brownian motion sampled on `grid`. Path `index` of a seed uses the
/// stream split(seed, index), so batches regenerate path by path.
inline SampledPath gen_brownian(std::span<const double> grid, std::uint64_t seed, std::uint64_t index = 0) {
  if (grid.empty()) throw InputError("gen_brownian: empty grid");
  rng::CounterStream stream(rng::split(seed, index));
  std::vector<double> v(grid.size());
  v[0] = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) v[i] = v[i - 1] + std::sqrt(grid[i] - grid[i - 1]) * stream.next_normal();
  return SampledPath(std::vector<double>(grid.begin(), grid.end()), std::move(v));
}

/// scale * BM + fv_part, the canonical process under a non-Wiener
/// semimartingale measure with finite-variation drift part.
template <class FV>
SampledPath gen_semimartingale(std::span<const double> grid, std::uint64_t seed, FV&& fv_part, double scale,
                               std::uint64_t index = 0) {
  if (!(scale >= 0.0)) throw InputError("gen_semimartingale: scale must be >= 0");
  const SampledPath w = gen_brownian(grid, seed, index);
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = scale * w[i] + fv_part(grid[i]);
  return SampledPath(std::vector<double>(grid.begin(), grid.end()), std::move(v));
}

// ---------------------------------------------------------------- stop-rules

/// Index of the first grid point outside (lo, hi), or of absorption.
inline std::optional<std::size_t> exit_index(const SampledPath& p, double lo, double hi) {
  const std::size_t live = p.live_size();
  for (std::size_t i = 0; i < live; ++i)
    if (!(p[i] > lo && p[i] < hi)) return i;
  if (p.absorbed_from()) return *p.absorbed_from();
  return std::nullopt;
}

inline double index_time(const SampledPath& p, std::optional<std::size_t> k) { return k ? p.time(*k) : kInf; }

/// S_n: first grid time the path leaves (ell_n, r_n); +inf when it never does.
inline double stop_rule(const SampledPath& p, const StateInterval& iv, int n) {
  return index_time(p, exit_index(p, iv.ell_n(n), iv.r_n(n)));
}

/// S = lim S_n: first grid time the path leaves I itself (or is absorbed).
inline double stop_rule_limit(const SampledPath& p, const StateInterval& iv) {
  return index_time(p, exit_index(p, iv.ell, iv.r));
}

// ------------------------------------------------------- quadratic variation

/// Default dyadic level floor(log2(N) / 2) for N grid steps, at least 1.
inline int default_qv_level(std::size_t steps) {
  if (steps < 4) return 1;
  return std::max(1, static_cast<int>(std::floor(std::log2(static_cast<double>(steps)) / 2.0)));
}

/// Dyadic quadratic variation at threshold 2^-n. A stopping time is the first
/// grid point whose distance to the current anchor reaches the threshold; the
/// sampled value there becomes the next anchor, so the overshoot stays in the
/// sum. The partial increment since the last anchor is included, and the
/// running maximum keeps the output nondecreasing.
inline SampledPath quadratic_variation(const SampledPath& p, int n) {
  if (n < 1) throw InputError("quadratic_variation: level must be >= 1");
  const double delta = std::ldexp(1.0, -n);
  const std::size_t live = p.live_size();
  std::vector<double> q(p.size(), 0.0);
  double anchor = p[0], acc = 0.0, best = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (i < live) {
      const double d = p[i] - anchor;
      best = std::max(best, acc + d * d);
      if (std::abs(d) >= delta) {
        acc += d * d;
        anchor = p[i];
      }
    }
    q[i] = best;
  }
  return SampledPath(std::vector<double>(p.times().begin(), p.times().end()), std::move(q));
}

/// Realized variance: the dyadic estimator in the limit of a threshold below
/// the grid resolution.
inline SampledPath realized_variance(const SampledPath& p) {
  std::vector<double> q(p.size(), 0.0);
  const std::size_t live = p.live_size();
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double d = i < live ? p[i] - p[i - 1] : 0.0;
    q[i] = q[i - 1] + d * d;
  }
  return SampledPath(std::vector<double>(p.times().begin(), p.times().end()), std::move(q));
}

// ---------------------------------------------------------------- local time

enum class Side { right, left, symmetric };

/// Root mean square of the live increments of a path.
inline double increment_rms(const SampledPath& p) {
  const std::size_t live = p.live_size();
  if (live < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 1; i < live; ++i) s += (p[i] - p[i - 1]) * (p[i] - p[i - 1]);
  return std::sqrt(s / static_cast<double>(live - 1));
}

/// Sample standard deviation of the live increments.
inline double increment_std(const SampledPath& p) {
  const std::size_t live = p.live_size();
  if (live < 3) return increment_rms(p);
  double mean = 0.0;
  for (std::size_t i = 1; i < live; ++i) mean += p[i] - p[i - 1];
  mean /= static_cast<double>(live - 1);
  double s = 0.0;
  for (std::size_t i = 1; i < live; ++i) {
    const double d = p[i] - p[i - 1] - mean;
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(live - 2));
}

/// Settings for band local time estimates; a zero bandwidth or a zero level
/// selects the automatic choice (8 * std of increments, floor(log2 N / 2)).
/// The right local time is the one entering the integral equation.
/// `natural_scale` lets the integral-equation checks estimate L^x through the
/// scale image y = H(x), whose increments are homogeneous across jumps of s;
/// there the bandwidth is `natural_multiplier` * std of the y increments.
struct LocalTimeConfig {
  double bandwidth = 0.0;
  Side side = Side::right;
  int qv_level = 0;
  bool natural_scale = true;
  double natural_multiplier = 2.0;

  double bandwidth_for(const SampledPath& p) const {
    if (bandwidth > 0.0) return bandwidth;
    const double e = 8.0 * increment_std(p);
    return e > 0.0 ? e : 1e-3;
  }
  int qv_level_for(const SampledPath& p) const {
    return qv_level > 0 ? qv_level : default_qv_level(p.size() - 1);
  }
};

/// Band weight of a state x for level xi; the band is [xi, xi+eps) on the
/// right, (xi-eps, xi] on the left and the average of both when symmetric.
inline double band_weight(double x, double xi, double eps, Side side) noexcept {
  const double r = (x >= xi && x < xi + eps) ? 1.0 : 0.0;
  const double l = (x > xi - eps && x <= xi) ? 1.0 : 0.0;
  switch (side) {
    case Side::right: return r;
    case Side::left: return l;
    case Side::symmetric: return 0.5 * (r + l);
  }
  return 0.0;
}

struct LocalTimeEstimate {
  SampledPath value;         ///< T -> L(T, xi), nondecreasing, zero at 0
  double bandwidth = 0.0;
  bool unreliable = false;   ///< bandwidth below the path's step resolution
};

/// Band estimate of L(T, xi) = (1/2eps) int 1_band(x) d<x>. Each qv increment
/// over [t_j, t_{j+1}] is charged to the band of the left endpoint x(t_j).
inline LocalTimeEstimate local_time(const SampledPath& p, double xi, double eps, Side side, const SampledPath& qv) {
  if (!(eps > 0.0)) throw InputError("local_time: bandwidth must be positive");
  if (!qv.same_grid(p)) throw InputError("local_time: qv on a different grid");
  std::vector<double> v(p.size(), 0.0);
  const std::size_t live = p.live_size();
  const double scale = 1.0 / (2.0 * eps);
  for (std::size_t j = 0; j + 1 < p.size(); ++j) {
    double add = 0.0;
    if (j + 1 < live) add = band_weight(p[j], xi, eps, side) * (qv[j + 1] - qv[j]) * scale;
    v[j + 1] = v[j] + add;
  }
  LocalTimeEstimate out;
  out.value = SampledPath(std::vector<double>(p.times().begin(), p.times().end()), std::move(v));
  out.bandwidth = eps;
  out.unreliable = eps < increment_rms(p);
  return out;
}

inline LocalTimeEstimate local_time(const SampledPath& p, double xi, const LocalTimeConfig& cfg) {
  const SampledPath qv = quadratic_variation(p, cfg.qv_level_for(p));
  return local_time(p, xi, cfg.bandwidth_for(p), cfg.side, qv);
}

/// Two-bandwidth diagnostic at the horizon: estimates at eps and 2*eps, their
/// linear extrapolation to eps -> 0 and the relative gap between the two.
struct RichardsonDiagnostic {
  double at_eps = 0.0;
  double at_2eps = 0.0;
  double extrapolated = 0.0;
  double relative_gap = 0.0;
};

inline RichardsonDiagnostic local_time_richardson(const SampledPath& p, double xi, double eps, Side side,
                                                  const SampledPath& qv) {
  RichardsonDiagnostic d;
  d.at_eps = local_time(p, xi, eps, side, qv).value.values().back();
  d.at_2eps = local_time(p, xi, 2.0 * eps, side, qv).value.values().back();
  d.extrapolated = 2.0 * d.at_eps - d.at_2eps;
  const double scale = std::max(std::abs(d.at_eps), std::abs(d.at_2eps));
  d.relative_gap = scale > 0.0 ? std::abs(d.at_eps - d.at_2eps) / scale : 0.0;
  return d;
}

/// |x(T) - xi| - |x(0) - xi| - sum sgn(x_i - xi)(x_{i+1} - x_i) on the grid.
/// For Brownian input this is the grid analogue of 2 L(T, xi) under the
/// normalization used by `local_time`.
inline SampledPath tanaka_oracle(const SampledPath& p, double xi) {
  std::vector<double> v(p.size(), 0.0);
  const std::size_t live = p.live_size();
  double ito = 0.0;
  for (std::size_t j = 0; j + 1 < p.size(); ++j) {
    if (j + 1 < live) {
      const double d = p[j] - xi;
      const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      ito += sgn * (p[j + 1] - p[j]);
    }
    const std::size_t k = std::min(j + 1, live - 1);
    v[j + 1] = std::abs(p[k] - xi) - std::abs(p[0] - xi) - ito;
  }
  return SampledPath(std::vector<double>(p.times().begin(), p.times().end()), std::move(v));
}

/// Local time on a set of levels, stored on a thinned time grid (every
/// `stride`-th sample plus the last one) to keep memory bounded.
struct LocalTimeField {
  std::vector<double> levels;
  double bandwidth = 0.0;
  Side side = Side::symmetric;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  ///< values[row][level]
  bool unreliable = false;

  /// Values at the horizon, one per level.
  const std::vector<double>& terminal() const { return values.back(); }
};

inline LocalTimeField local_time_field(const SampledPath& p, std::vector<double> levels, double eps, Side side,
                                       const SampledPath& qv, std::size_t max_rows = 1025) {
  if (!(eps > 0.0)) throw InputError("local_time_field: bandwidth must be positive");
  if (!qv.same_grid(p)) throw InputError("local_time_field: qv on a different grid");
  LocalTimeField f;
  f.levels = std::move(levels);
  f.bandwidth = eps;
  f.side = side;
  f.unreliable = eps < increment_rms(p);
  const std::size_t steps = p.size() - 1;
  const std::size_t rows = std::max<std::size_t>(2, std::min(max_rows, p.size()));
  const std::size_t stride = std::max<std::size_t>(1, (steps + rows - 2) / (rows - 1));
  std::vector<double> acc(f.levels.size(), 0.0);
  const std::size_t live = p.live_size();
  const double scale = 1.0 / (2.0 * eps);
  f.times.push_back(0.0);
  f.values.push_back(acc);
  for (std::size_t j = 0; j < steps; ++j) {
    if (j + 1 < live) {
      const double dq = (qv[j + 1] - qv[j]) * scale;
      if (dq != 0.0)
        for (std::size_t m = 0; m < f.levels.size(); ++m) acc[m] += band_weight(p[j], f.levels[m], eps, side) * dq;
    }
    if ((j + 1) % stride == 0 || j + 1 == steps) {
      f.times.push_back(p.time(j + 1));
      f.values.push_back(acc);
    }
  }
  return f;
}

// -------------------------------------------------------------------- metric

/// d^Xi truncated at n_max = floor(horizon) (at least 1), with D - D = 0 and a
/// live value against the cemetery counted as distance 1.
inline double xi_metric(const SampledPath& a, const SampledPath& b, const StateInterval& iv) {
  if (!a.same_grid(b)) throw InputError("xi_metric: paths on different grids");
  const int n_max = std::max(1, static_cast<int>(std::floor(a.horizon())));
  double total = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    const auto sa = exit_index(a, iv.ell_n(n), iv.r_n(n));
    const auto sb = exit_index(b, iv.ell_n(n), iv.r_n(n));
    std::size_t stop = a.size() - 1;
    if (sa) stop = std::min(stop, *sa);
    if (sb) stop = std::min(stop, *sb);
    double sup = 0.0;
    for (std::size_t i = 0; i < a.size() && a.time(i) <= n; ++i) {
      const std::size_t k = std::min(i, stop);
      const bool da = a.is_absorbed(k), db = b.is_absorbed(k);
      const double d = (da && db) ? 0.0 : (da != db ? 1.0 : std::abs(a[k] - b[k]));
      sup = std::max(sup, d);
      if (sup >= 1.0) break;
    }
    total += std::ldexp(std::min(1.0, sup), -n);
  }
  return total;
}

/// sup over grid points with t <= t_max of |a - b| on live values.
inline double sup_distance(const SampledPath& a, const SampledPath& b, double t_max = kInf) {
  if (!a.same_grid(b)) throw InputError("sup_distance: paths on different grids");
  const std::size_t live = std::min(a.live_size(), b.live_size());
  double m = 0.0;
  for (std::size_t i = 0; i < live && a.time(i) <= t_max; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ------------------------------------------------------ piecewise linearize

/// Piecewise-linear interpolation through the dyadic nodes m 2^-k (plus the
/// horizon), resampled on the original grid.
inline SampledPath pl_approximant(const SampledPath& p, int k) {
  if (k < 0) throw InputError("pl_approximant: level must be >= 0");
  if (p.absorbed_from()) throw InputError("pl_approximant: absorbed path");
  const double step = std::ldexp(1.0, -k);
  if (step < p.mesh() * (1.0 - 1e-12)) throw InputError("pl_approximant: dyadic level finer than the grid");
  std::vector<double> nt, nv;
  for (std::size_t m = 0;; ++m) {
    const double t = static_cast<double>(m) * step;
    if (t >= p.horizon()) break;
    nt.push_back(t);
    nv.push_back(p.interpolate(t));
  }
  nt.push_back(p.horizon());
  nv.push_back(p.values().back());
  std::vector<double> v(p.size());
  std::size_t seg = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double t = p.time(i);
    while (seg + 2 < nt.size() && t > nt[seg + 1]) ++seg;
    if (nt.size() == 1) {
      v[i] = nv[0];
      continue;
    }
    const double a = (t - nt[seg]) / (nt[seg + 1] - nt[seg]);
    v[i] = nv[seg] + a * (nv[seg + 1] - nv[seg]);
    if (t == nt[seg]) v[i] = nv[seg];
    if (t == nt[seg + 1]) v[i] = nv[seg + 1];
  }
  return SampledPath(std::vector<double>(p.times().begin(), p.times().end()), std::move(v));
}

}  // namespace pathwise
