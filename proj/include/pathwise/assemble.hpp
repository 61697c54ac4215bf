#pragma once

// From a solved OFE back to the state: X = Theta_{x0}(Gamma + omega),
// C = Theta_{x0}(Gamma), the stop rules, and pathwise checks of the integral
// equation including its local-time correction.

#include <pathwise/drift.hpp>
#include <pathwise/errors.hpp>
#include <pathwise/ofe_solver.hpp>
#include <pathwise/path.hpp>
#include <pathwise/pathkit.hpp>
#include <pathwise/transform.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace pathwise {

struct BalanceReport {
  double at = 0.0;
  double left = 0.0;       ///< L(T, xi-)
  double right = 0.0;      ///< L(T, xi)
  double symmetric = 0.0;
  double ratio = 0.0;      ///< left / right
  double expected = 0.0;   ///< s(xi) / s(xi+)
  double relative_error = 0.0;
  double symmetric_predicted = 0.0;  ///< (1 + s(xi)/s(xi+)) / 2 * right
  double symmetric_error = 0.0;
  std::size_t left_hits = 0;   ///< qv-charged steps in the left band
  std::size_t right_hits = 0;
  bool inconclusive = false;
  bool pass = false;
};

struct SieSolution {
  SampledPath x;
  SampledPath c;
  double explosion_time = kInf;
  std::optional<std::size_t> explosion_index;
  double r_time = kInf;  ///< R(C, omega) = S(C) ^ S(Theta_C(omega))
  LocalTimeField localtime;
  double sie_residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<BalanceReport> balance_report;
};

struct AssembleOptions {
  bool with_localtime = true;
  LocalTimeConfig localtime;
  int levels = 33;
};

namespace detail {

/// Breakpoints inside the visited range plus `m` cell midpoints across it.
struct LevelGrid {
  std::vector<double> breaks;
  std::vector<double> mids;
  double width = 0.0;
};

inline LevelGrid level_grid(const SampledPath& x, const DispersionSpec& disp, int m) {
  LevelGrid g;
  const std::size_t live = x.live_size();
  double lo = x[0], hi = x[0];
  for (std::size_t i = 0; i < live; ++i) {
    lo = std::min(lo, x[i]);
    hi = std::max(hi, x[i]);
  }
  for (double b : disp.breaks)
    if (b >= lo && b <= hi) g.breaks.push_back(b);
  if (hi > lo && m > 0) {
    g.width = (hi - lo) / m;
    for (int k = 0; k < m; ++k) g.mids.push_back(lo + (k + 0.5) * g.width);
  }
  return g;
}

/// Cumulative weighted local time: sum over atoms of w_a L_right(T, xi_a)
/// plus sum over levels of w_m L(T, xi_m) with the configured side.
struct Correction {
  std::vector<double> value;
  bool unreliable = false;
  double bandwidth = 0.0;
};

inline Correction weighted_local_time(const SampledPath& x, const std::vector<double>& atoms,
                                      const std::vector<double>& atom_w, const std::vector<double>& levels,
                                      const std::vector<double>& level_w, const LocalTimeConfig& cfg) {
  Correction c;
  c.value.assign(x.size(), 0.0);
  c.bandwidth = cfg.bandwidth_for(x);
  c.unreliable = c.bandwidth < increment_rms(x);
  if (atoms.empty() && levels.empty()) return c;
  const SampledPath qv = quadratic_variation(x, cfg.qv_level_for(x));
  const double scale = 1.0 / (2.0 * c.bandwidth);
  const std::size_t live = x.live_size();
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < x.size(); ++j) {
    if (j + 1 < live) {
      const double dq = (qv[j + 1] - qv[j]) * scale;
      if (dq != 0.0) {
        double w = 0.0;
        for (std::size_t a = 0; a < atoms.size(); ++a) w += atom_w[a] * band_weight(x[j], atoms[a], c.bandwidth, Side::right);
        for (std::size_t m = 0; m < levels.size(); ++m) w += level_w[m] * band_weight(x[j], levels[m], c.bandwidth, cfg.side);
        acc += w * dq;
      }
    }
    c.value[j + 1] = acc;
  }
  return c;
}

/// -int L^x(T, xi) s(xi) d(1/s)(xi): jumps weighted by (s(xi+) - s(xi)) /
/// s(xi+), the continuous part by s'/s on the midpoint levels. Extra atoms
/// and density (a measure mu) are merged into the same locations. In natural
/// scale L^x(T, xi) is read off as s(xi+) L^y(T, H(xi)) with y = H(x).
inline Correction scale_correction(const SampledPath& x, const SpaceTransform& t, const LocalTimeConfig& cfg, int m,
                                   const std::vector<LocalTimeMeasure::Atom>& mu_atoms = {},
                                   const std::function<double(double)>& mu_density = {}) {
  const DispersionSpec& disp = t.dispersion();
  std::vector<double> atoms, atom_w;
  auto add_atom = [&](double at, double w) {
    for (std::size_t k = 0; k < atoms.size(); ++k)
      if (atoms[k] == at) {
        atom_w[k] += w;
        return;
      }
    atoms.push_back(at);
    atom_w.push_back(w);
  };
  for (const auto& j : disp.jumps()) add_atom(j.at, (j.right - j.left) / j.right);
  for (const auto& a : mu_atoms) add_atom(a.at, a.mass);
  std::vector<double> levels, level_w;
  if (disp.has_continuous_part() || mu_density) {
    const LevelGrid g = level_grid(x, disp, m);
    for (double xi : g.mids) {
      double w = 0.0;
      if (disp.has_continuous_part()) w += disp.s_prime(xi) / disp.s(xi);
      if (mu_density) w += mu_density(xi);
      if (w != 0.0) {
        levels.push_back(xi);
        level_w.push_back(w * g.width);
      }
    }
  }
  if (!cfg.natural_scale) return weighted_local_time(x, atoms, atom_w, levels, level_w, cfg);
  std::vector<double> yv(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) yv[i] = t.H(x[i]);
  const SampledPath y(std::vector<double>(x.times().begin(), x.times().end()), std::move(yv), x.absorbed_from());
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    atom_w[k] *= disp.s_plus(atoms[k]);
    atoms[k] = t.H(atoms[k]);
  }
  for (std::size_t k = 0; k < levels.size(); ++k) {
    level_w[k] *= disp.s(levels[k]);
    levels[k] = t.H(levels[k]);
  }
  LocalTimeConfig ycfg = cfg;
  const double sd = increment_std(y);
  ycfg.bandwidth = sd > 0.0 ? cfg.natural_multiplier * sd : 0.0;
  return weighted_local_time(y, atoms, atom_w, levels, level_w, ycfg);
}

}  // namespace detail

/// Pointwise assembly. Throws SolverError when Gamma + omega leaves the domain
/// of Theta before the stop recorded in the solution.
inline SieSolution assemble_x(const OfeSolution& sol, const SampledPath& omega, const SpaceTransform& t,
                              const AssembleOptions& opt = {}) {
  if (!sol.gamma.same_grid(omega)) throw InputError("assemble_x: solution and noise on different grids");
  const std::size_t N = omega.size();
  const std::size_t live = std::min(sol.gamma.live_size(), omega.live_size());
  std::vector<double> xv(N), cv(N), yv(N);
  std::optional<std::size_t> c_abs, y_abs;
  const StateInterval& iv = t.interval();
  for (std::size_t i = 0; i < live; ++i) {
    const auto x = t.try_theta(sol.gamma[i] + omega[i]);
    if (!x) {
      std::ostringstream os;
      os << "assemble_x: Gamma + omega outside the domain of Theta at t=" << omega.time(i)
         << " before the recorded stop";
      throw SolverError(os.str());
    }
    xv[i] = *x;
    if (!c_abs) {
      const auto c = t.try_theta(sol.gamma[i]);
      if (c) cv[i] = *c;
      else c_abs = i;
    }
    if (!c_abs && !y_abs) {
      const auto y = t.rebased(cv[i]).try_theta(omega[i]);
      if (y) yv[i] = *y;
      else y_abs = i;
    }
  }
  if (live < N) {
    if (!c_abs) c_abs = live;
    if (live == 0) throw InputError("assemble_x: empty live range");
  }
  if (c_abs && (!y_abs || *y_abs > *c_abs)) y_abs = c_abs;
  auto freeze = [&](std::vector<double>& v, std::optional<std::size_t> k) {
    if (!k) return;
    if (*k == 0) throw InputError("assemble_x: start point outside the state interval");
    for (std::size_t i = *k; i < N; ++i) v[i] = v[*k - 1];
  };
  std::optional<std::size_t> x_abs;
  if (live < N) x_abs = live;
  freeze(xv, x_abs);
  freeze(cv, c_abs);
  freeze(yv, y_abs);
  const std::vector<double> grid(omega.times().begin(), omega.times().end());
  SieSolution s;
  s.x = SampledPath(grid, std::move(xv), x_abs);
  s.c = SampledPath(grid, std::move(cv), c_abs);
  const SampledPath y(grid, std::move(yv), y_abs);
  if (sol.stop_index) {
    s.explosion_index = sol.stop_index;
    s.explosion_time = sol.stop_time;
  }
  s.r_time = std::min(stop_rule_limit(s.c, iv), stop_rule_limit(y, iv));
  if (opt.with_localtime) {
    const detail::LevelGrid g = detail::level_grid(s.x, t.dispersion(), opt.levels);
    std::vector<double> levels = g.breaks;
    levels.insert(levels.end(), g.mids.begin(), g.mids.end());
    std::sort(levels.begin(), levels.end());
    const SampledPath qv = quadratic_variation(s.x, opt.localtime.qv_level_for(s.x));
    s.localtime = local_time_field(s.x, std::move(levels), opt.localtime.bandwidth_for(s.x), opt.localtime.side, qv);
  }
  return s;
}

/// R_n(C, omega) = S_n(C) ^ S_n(Theta_C(omega)), recomputed for one level.
inline double r_time_n(const SieSolution& s, const SampledPath& omega, const SpaceTransform& t, int n) {
  const StateInterval& iv = t.interval();
  const double sc = stop_rule(s.c, iv, n);
  std::vector<double> y(omega.size());
  std::optional<std::size_t> y_abs = s.c.absorbed_from();
  const std::size_t live = s.c.live_size();
  for (std::size_t i = 0; i < live; ++i) {
    const auto v = t.rebased(s.c[i]).try_theta(omega[i]);
    if (!v) {
      y_abs = i;
      break;
    }
    y[i] = *v;
  }
  const std::size_t k = y_abs ? *y_abs : omega.size();
  for (std::size_t i = k; i < omega.size(); ++i) y[i] = y[k - 1];
  const SampledPath yp(std::vector<double>(omega.times().begin(), omega.times().end()), std::move(y), y_abs);
  return std::min(sc, stop_rule(yp, iv, n));
}

struct ResidualReport {
  double residual = 0.0;   ///< sup over live grid times of |x - rhs|
  double sup_abs_x = 0.0;
  bool unreliable = false;
  std::string warning;
};

namespace detail {

inline ResidualReport finish_residual(const SampledPath& x, const std::vector<double>& rhs, const Correction& c) {
  ResidualReport r;
  for (std::size_t i = 0; i < x.live_size(); ++i) {
    r.residual = std::max(r.residual, std::abs(x[i] - rhs[i]));
    r.sup_abs_x = std::max(r.sup_abs_x, std::abs(x[i]));
  }
  r.unreliable = c.unreliable;
  if (c.unreliable) r.warning = "local time bandwidth below the increment scale of the path";
  return r;
}

}  // namespace detail

/// sup_T |X(T) - rhs(T)| with rhs(T) = x0 + sum s(X)(d omega + dB) plus the
/// right local time at each jump of s weighted by (s(xi+) - s(xi))/s(xi+)
/// and int L s'/s dxi over the midpoint levels.
inline ResidualReport sie_residual(const SieSolution& sie, const SampledPath& omega, const DriftFunctional& d,
                                   const SpaceTransform& t, const LocalTimeConfig& cfg = {}, int levels = 33) {
  const SampledPath& x = sie.x;
  if (!x.same_grid(omega)) throw InputError("sie_residual: state and noise on different grids");
  const DispersionSpec& disp = t.dispersion();
  const SampledPath b = drift_increments(d, omega, x, DriftContext{&t, cfg});
  const detail::Correction corr = detail::scale_correction(x, t, cfg, levels);
  std::vector<double> rhs(x.size(), x[0]);
  double ito = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    ito += disp.s(x[i]) * ((omega[i + 1] - omega[i]) + (b[i + 1] - b[i]));
    rhs[i + 1] = x[0] + ito + corr.value[i + 1];
  }
  return detail::finish_residual(x, rhs, corr);
}

/// X - x0 - int s(X) dGamma (left-point Stieltjes sum) minus the local-time
/// correction: a pathwise value of int s(X) d omega needing no stochastic sum.
inline SampledPath pathwise_integral(const OfeSolution& sol, const SampledPath& omega, const SpaceTransform& t,
                                     const LocalTimeConfig& cfg = {}, int levels = 33) {
  AssembleOptions ao;
  ao.with_localtime = false;
  const SieSolution sie = assemble_x(sol, omega, t, ao);
  const SampledPath& x = sie.x;
  const DispersionSpec& disp = t.dispersion();
  const detail::Correction corr = detail::scale_correction(x, t, cfg, levels);
  std::vector<double> v(x.size(), 0.0);
  double stieltjes = 0.0;
  const std::size_t live = x.live_size();
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (i + 1 < live) stieltjes += disp.s(x[i]) * (sol.gamma[i + 1] - sol.gamma[i]);
    const std::size_t k = std::min(i + 1, live - 1);
    v[i + 1] = x[k] - x[0] - stieltjes - corr.value[k];
  }
  return SampledPath(std::vector<double>(x.times().begin(), x.times().end()), std::move(v), x.absorbed_from());
}

/// Left-point grid sum of s(X) d omega, the classical comparison value.
inline SampledPath ito_sum(const SampledPath& x, const SampledPath& omega, const DispersionSpec& disp) {
  if (!x.same_grid(omega)) throw InputError("ito_sum: paths on different grids");
  std::vector<double> v(x.size(), 0.0);
  const std::size_t live = x.live_size();
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    v[i + 1] = v[i] + (i + 1 < live ? disp.s(x[i]) * (omega[i + 1] - omega[i]) : 0.0);
  return SampledPath(std::vector<double>(x.times().begin(), x.times().end()), std::move(v), x.absorbed_from());
}

namespace detail {

struct BandTotals {
  double left = 0.0, right = 0.0;
  std::size_t left_hits = 0, right_hits = 0;
};

inline BandTotals band_totals(const SampledPath& x, double xi, const LocalTimeConfig& cfg) {
  BandTotals b;
  const double eps = cfg.bandwidth_for(x);
  const SampledPath qv = quadratic_variation(x, cfg.qv_level_for(x));
  const std::size_t live = x.live_size();
  for (std::size_t j = 0; j + 1 < live; ++j) {
    const double dq = qv[j + 1] - qv[j];
    if (dq == 0.0) continue;
    if (band_weight(x[j], xi, eps, Side::left) > 0.0) {
      b.left += dq / (2.0 * eps);
      ++b.left_hits;
    }
    if (band_weight(x[j], xi, eps, Side::right) > 0.0) {
      b.right += dq / (2.0 * eps);
      ++b.right_hits;
    }
  }
  return b;
}

inline BalanceReport balance_from(double left, double right, std::size_t lh, std::size_t rh, double xi,
                                  const DispersionSpec& disp, std::size_t min_hits) {
  BalanceReport r;
  r.at = xi;
  r.left = left;
  r.right = right;
  r.symmetric = 0.5 * (left + right);
  r.left_hits = lh;
  r.right_hits = rh;
  r.expected = disp.s(xi) / disp.s_plus(xi);
  r.inconclusive = lh < min_hits || rh < min_hits || !(right > 0.0);
  if (right > 0.0) {
    r.ratio = left / right;
    r.relative_error = std::abs(r.ratio - r.expected) / r.expected;
    r.symmetric_predicted = 0.5 * (1.0 + r.expected) * right;
    r.symmetric_error = std::abs(r.symmetric - r.symmetric_predicted) / r.symmetric_predicted;
  }
  r.pass = !r.inconclusive && r.relative_error <= 0.2 && r.symmetric_error <= 0.2;
  return r;
}

}  // namespace detail

/// Compares L(T, xi-) / L(T, xi) with s(xi) / s(xi+) on one path. Fewer than
/// `min_hits` charged steps in either band makes the report inconclusive.
inline BalanceReport balance_check(const SampledPath& x, const DispersionSpec& disp, double xi,
                                   const LocalTimeConfig& cfg = {}, std::size_t min_hits = 64) {
  const detail::BandTotals b = detail::band_totals(x, xi, cfg);
  return detail::balance_from(b.left, b.right, b.left_hits, b.right_hits, xi, disp, min_hits);
}

/// The same ratio from band totals summed over a block of paths.
inline BalanceReport balance_check_pooled(std::span<const SampledPath> xs, const DispersionSpec& disp, double xi,
                                          const LocalTimeConfig& cfg = {}, std::size_t min_hits = 64) {
  detail::BandTotals total;
  for (const auto& x : xs) {
    const detail::BandTotals b = detail::band_totals(x, xi, cfg);
    total.left += b.left;
    total.right += b.right;
    total.left_hits += b.left_hits;
    total.right_hits += b.right_hits;
  }
  return detail::balance_from(total.left, total.right, total.left_hits, total.right_hits, xi, disp, min_hits);
}

/// Residual of X = x0 + int s(X)(d omega + b(X) dt) + int L^X [mu(dxi) - s d(1/s)]
/// for an externally supplied candidate X. Atoms of mu use the right local
/// time, the density of mu the same midpoint levels as the s'/s term.
inline ResidualReport verify_localtime_drift(const SampledPath& x, const SampledPath& omega, const LocalTimeMeasure& d,
                                             const SpaceTransform& t, const LocalTimeConfig& cfg = {},
                                             int levels = 33) {
  if (!x.same_grid(omega)) throw InputError("verify_localtime_drift: candidate and noise on different grids");
  const DispersionSpec& disp = t.dispersion();
  const detail::Correction corr = detail::scale_correction(x, t, cfg, levels, d.atoms, d.density);
  std::vector<double> rhs(x.size(), x[0]);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double dt = x.time(i + 1) - x.time(i);
    const double drift = d.b ? d.b(x[i]) * dt : 0.0;
    acc += disp.s(x[i]) * ((omega[i + 1] - omega[i]) + drift);
    rhs[i + 1] = x[0] + acc + corr.value[i + 1];
  }
  return detail::finish_residual(x, rhs, corr);
}

}  // namespace pathwise
