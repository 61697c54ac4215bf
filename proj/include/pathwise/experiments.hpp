#pragma once

// Theorem-level experiments on top of the solver: Wong-Zakai convergence,
// a support probe, Kolmogorov-Smirnov checks of closed-form laws and the
// regularization-by-noise probe.

#include <pathwise/assemble.hpp>
#include <pathwise/drift.hpp>
#include <pathwise/errors.hpp>
#include <pathwise/ofe_solver.hpp>
#include <pathwise/path.hpp>
#include <pathwise/pathkit.hpp>
#include <pathwise/transform.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

namespace pathwise {

// ------------------------------------------------------------- Wong-Zakai

struct WongZakaiOptions {
  double horizon = 1.0;
  int base_level = 14;  ///< base mesh 2^-base_level
  int k_min = 4;
  int k_max = 10;
  int n = 0;            ///< localization level of the error window; 0 means ceil(horizon)
  double tol = 1e-9;
  double slack = 0.05;
};

struct ConvergenceReport {
  std::vector<int> levels;
  std::vector<double> errors;       ///< sup over [0, n ^ S_n(x)] of |x - x_k|
  std::vector<double> node_errors;  ///< the same sup over the dyadic nodes of level k
  std::vector<double> stop_times;   ///< S(x_k)
  double stop_time = kInf;          ///< S(x)
  double range = 0.0;               ///< max x - min x on the error window
  std::uint64_t seed = 0;
  double base_mesh = 0.0;
  int window_level = 1;
  bool monotone = false;
  bool stop_ok = false;

  bool pass() const { return monotone && stop_ok; }
};

namespace detail {

inline SieSolution state_path(const AbsolutelyContinuous& d, const SampledPath& omega, const SpaceTransform& t,
                              double tol) {
  SolveOptions o;
  o.tol = tol;
  const OfeSolution sol = solve_caratheodory(d, omega, t, o);
  AssembleOptions ao;
  ao.with_localtime = false;
  return assemble_x(sol, omega, t, ao);
}

inline bool nonincreasing_with_slack(const std::vector<double>& e, double slack) {
  for (std::size_t k = 0; k + 1 < e.size(); ++k)
    if (e[k + 1] > e[k] * (1.0 + slack)) return false;
  return true;
}

}  // namespace detail

/// Solves on a Brownian path omega and on its piecewise-linear dyadic
/// approximants omega_k, k = k_min..k_max, and records the errors of the
/// assembled states.
inline ConvergenceReport wong_zakai(const AbsolutelyContinuous& d, const SpaceTransform& t, std::uint64_t seed,
                                    const WongZakaiOptions& opt = {}) {
  if (opt.k_min < 0 || opt.k_max < opt.k_min) throw InputError("wong_zakai: bad level range");
  if (opt.k_max > opt.base_level) throw InputError("wong_zakai: level mesh finer than the base mesh");
  const std::size_t steps = static_cast<std::size_t>(std::llround(std::ldexp(opt.horizon, opt.base_level)));
  const std::vector<double> grid = uniform_grid(opt.horizon, steps);
  const SampledPath omega = gen_brownian(grid, seed);
  const SieSolution ref = detail::state_path(d, omega, t, opt.tol);

  ConvergenceReport r;
  r.seed = seed;
  r.base_mesh = omega.mesh();
  r.window_level = opt.n > 0 ? opt.n : std::max(1, static_cast<int>(std::ceil(opt.horizon)));
  const StateInterval& iv = t.interval();
  r.stop_time = stop_rule_limit(ref.x, iv);
  const double t_end = std::min(static_cast<double>(r.window_level), stop_rule(ref.x, iv, r.window_level));
  double lo = ref.x[0], hi = ref.x[0];
  for (std::size_t i = 0; i < ref.x.live_size() && ref.x.time(i) <= t_end; ++i) {
    lo = std::min(lo, ref.x[i]);
    hi = std::max(hi, ref.x[i]);
  }
  r.range = hi - lo;
  double min_stop = kInf;
  for (int k = opt.k_min; k <= opt.k_max; ++k) {
    const SampledPath wk = pl_approximant(omega, k);
    const SieSolution xk = detail::state_path(d, wk, t, opt.tol);
    const std::size_t live = std::min(ref.x.live_size(), xk.x.live_size());
    const double node = std::ldexp(1.0, -k);
    double e = 0.0, en = 0.0;
    for (std::size_t i = 0; i < live && omega.time(i) < t_end; ++i) {
      const double diff = std::abs(ref.x[i] - xk.x[i]);
      e = std::max(e, diff);
      const double q = omega.time(i) / node;
      if (q == std::floor(q)) en = std::max(en, diff);
    }
    r.levels.push_back(k);
    r.errors.push_back(e);
    r.node_errors.push_back(en);
    const double sk = stop_rule_limit(xk.x, iv);
    r.stop_times.push_back(sk);
    min_stop = std::min(min_stop, sk);
  }
  r.monotone = detail::nonincreasing_with_slack(r.errors, opt.slack);
  r.stop_ok = std::isinf(r.stop_time) || r.stop_time <= min_stop + r.base_mesh;
  return r;
}

// ---------------------------------------------------------- support probe

struct SupportReport {
  int level = 0;
  std::vector<double> distances;  ///< d^Xi(x, x_k) per path
  std::vector<double> sup_errors; ///< sup |x - x_k| per path
  double max_distance = 0.0;
  /// d^Xi never exceeds min(1, sup error) on any path.
  bool consistent = true;
};

/// For each of `paths` Brownian inputs, the distance between the solution and
/// the solution driven by the level-k piecewise-linear approximant.
inline SupportReport support_probe(const AbsolutelyContinuous& d, const SpaceTransform& t, std::size_t paths,
                                   double horizon, int k, std::uint64_t seed, int base_level = 12,
                                   double tol = 1e-9) {
  const std::size_t steps = static_cast<std::size_t>(std::llround(std::ldexp(horizon, base_level)));
  const std::vector<double> grid = uniform_grid(horizon, steps);
  SupportReport r;
  r.level = k;
  for (std::size_t p = 0; p < paths; ++p) {
    const SampledPath omega = gen_brownian(grid, seed, p);
    const SieSolution x = detail::state_path(d, omega, t, tol);
    const SieSolution xk = detail::state_path(d, pl_approximant(omega, k), t, tol);
    const double dist = xi_metric(x.x, xk.x, t.interval());
    const double sup = sup_distance(x.x, xk.x);
    r.distances.push_back(dist);
    r.sup_errors.push_back(sup);
    r.max_distance = std::max(r.max_distance, dist);
    if (dist > std::min(1.0, sup) * (1.0 + 1e-12)) r.consistent = false;
  }
  return r;
}

// ------------------------------------------------------------------- KS

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct KsModel {
  DispersionSpec disp;
  DriftFunctional drift = StateFree{};
};

struct KsReport {
  std::size_t n = 0;
  double statistic = 0.0;
  double threshold = 0.0;  ///< 1.36 / sqrt(n)
  std::size_t exploded = 0;
  bool pass = false;
};

/// Two-sided Kolmogorov-Smirnov distance of a sample against a CDF.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Empirical law of X(horizon) over n paths (path i uses stream (seed, i))
/// against a closed-form CDF. Paths that explode before the horizon are
/// placed at the endpoint they ran to.
inline KsReport ks_validate(const KsModel& model, std::size_t n_paths, double horizon,
                            const std::function<double(double)>& cdf, std::uint64_t seed, std::size_t steps = 64) {
  if (n_paths < 100) throw InputError("ks_validate: at least 100 paths are needed");
  const SpaceTransform t = build_transform(model.disp, model.disp.interval.x0);
  const std::vector<double> grid = uniform_grid(horizon, steps);
  std::vector<double> sample;
  sample.reserve(n_paths);
  KsReport r;
  r.n = n_paths;
  AssembleOptions ao;
  ao.with_localtime = false;
  for (std::size_t p = 0; p < n_paths; ++p) {
    const SampledPath omega = gen_brownian(grid, seed, p);
    const OfeSolution sol = solve(model.drift, omega, t);
    const SieSolution x = assemble_x(sol, omega, t, ao);
    if (x.x.absorbed_from()) {
      ++r.exploded;
      const double last = x.x[x.x.live_size() - 1];
      sample.push_back(last >= model.disp.interval.x0 ? model.disp.interval.r : model.disp.interval.ell);
    } else {
      sample.push_back(x.x.values().back());
    }
  }
  r.statistic = ks_statistic(std::move(sample), cdf);
  r.threshold = 1.36 / std::sqrt(static_cast<double>(n_paths));
  r.pass = r.statistic < r.threshold;
  return r;
}

// ------------------------------------------------------------ Davie probe

struct DavieOptions {
  double x0 = 0.0;
  double horizon = 1.0;
  std::size_t steps = 1024;
  double tol = 1e-8;
};

struct DavieReport {
  std::vector<double> deltas;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<double>> spread;  ///< spread[delta][seed] = |X_+(T) - X_-(T)|
  std::vector<double> control_spread;       ///< the same with omega = 0
  double mesh = 0.0;

  /// Number of seeds whose spread at delta index j is below `bound`.
  std::size_t count_below(std::size_t j, double bound) const {
    return static_cast<std::size_t>(std::count_if(spread[j].begin(), spread[j].end(), [&](double v) { return v < bound; }));
  }
};

/// Gamma = x0 + int b(Gamma + W) dt with s = 1, started from x0 + delta and
/// x0 - delta. Reports the terminal spread of the two states per seed, and
/// for omega = 0, without any verdict on uniqueness.
inline DavieReport davie_probe(const std::function<double(double)>& b, const std::vector<std::uint64_t>& seeds,
                               const std::vector<double>& deltas, const DavieOptions& opt = {}) {
  const StateInterval line(-kInf, kInf, opt.x0);
  const DispersionSpec one{line, {}, {form::Constant{1.0}}};
  const SpaceTransform t = build_transform(one, opt.x0);
  AbsolutelyContinuous d;
  d.b = [b](double, double, double x) { return b(x); };
  d.continuous = false;
  const std::vector<double> grid = uniform_grid(opt.horizon, opt.steps);
  auto terminal = [&](const SampledPath& omega, double g0) {
    SolveOptions o;
    o.tol = opt.tol;
    o.initial_gamma = g0;
    const OfeSolution s = solve_caratheodory(d, omega, t, o);
    return t.theta(s.gamma.values().back() + omega.values().back());
  };
  DavieReport r;
  r.deltas = deltas;
  r.seeds = seeds;
  r.mesh = opt.horizon / static_cast<double>(opt.steps);
  const SampledPath zero = sample_function(grid, [](double) { return 0.0; });
  for (double delta : deltas) {
    std::vector<double> row;
    for (std::uint64_t s : seeds) {
      const SampledPath omega = gen_brownian(grid, s);
      row.push_back(std::abs(terminal(omega, delta) - terminal(omega, -delta)));
    }
    r.spread.push_back(std::move(row));
    r.control_spread.push_back(std::abs(terminal(zero, delta) - terminal(zero, -delta)));
  }
  return r;
}

}  // namespace pathwise
