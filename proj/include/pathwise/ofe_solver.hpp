#pragma once

// Solvers for the ordinary functional equation Gamma(t) = B(t, omega,
// Theta_{x0}(Gamma + omega)) along one sampled noise path.

#include <pathwise/drift.hpp>
#include <pathwise/errors.hpp>
#include <pathwise/path.hpp>
#include <pathwise/pathkit.hpp>
#include <pathwise/transform.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace pathwise {

struct OfeSolution {
  SampledPath gamma;
  double stop_time = kInf;  ///< grid estimate of the exit time of Gamma + omega
  std::optional<std::size_t> stop_index;
  int truncation_level_reached = 0;
  double residual_sup = 0.0;
  double tol = 0.0;
  double error_bound = 0.0;  ///< tol * T * exp(L'_n T) when Lipschitz data is declared
  bool maximal = false;
  bool exploded = false;
  std::size_t substeps = 0;
  int envelope_levels = 0;  ///< perturbed solves used by maximal_solution
};

struct SolveOptions {
  int n_max = 64;
  double tol = 1e-6;
  double initial_gamma = 0.0;
  /// Exit level for explosion reporting; unset means the full domain.
  std::optional<int> explosion_level;
};

/// First index where Gamma + omega leaves (ell~_n, r~_n), or the domain of
/// Theta when `level` is unset.
inline std::optional<std::size_t> transformed_exit_index(const SampledPath& gamma, const SampledPath& omega,
                                                         const SpaceTransform& t, std::optional<int> level) {
  const double lo = level ? t.ell_tilde_n(*level) : t.ell_tilde();
  const double hi = level ? t.r_tilde_n(*level) : t.r_tilde();
  const std::size_t live = std::min(gamma.live_size(), omega.live_size());
  for (std::size_t i = 0; i < live; ++i) {
    const double y = gamma[i] + omega[i];
    if (!(y > lo && y < hi)) return i;
  }
  if (live < gamma.size()) return live;
  return std::nullopt;
}

namespace detail {

inline void finish_stop(OfeSolution& s, const SampledPath& omega, const SpaceTransform& t, std::optional<int> level) {
  const auto k = transformed_exit_index(s.gamma, omega, t, level);
  if (k && *k > 0) {
    s.stop_index = *k;
    s.stop_time = omega.time(*k);
    s.exploded = true;
    s.gamma.absorb_from(*k);
  } else if (k && *k == 0) {
    throw InputError("solver: start point outside the domain of the scale map");
  }
}

inline SampledPath theta_path(const SampledPath& gamma, const SampledPath& omega, const SpaceTransform& t) {
  std::vector<double> v(gamma.size());
  const std::size_t live = std::min(gamma.live_size(), omega.live_size());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const std::size_t k = std::min(i, live - 1);
    v[i] = t.theta(gamma[k] + omega[k]);
  }
  std::optional<std::size_t> absorbed;
  if (live < gamma.size()) absorbed = live;
  return SampledPath(std::vector<double>(gamma.times().begin(), gamma.times().end()), std::move(v), absorbed);
}

inline double drift_residual(const OfeSolution& s, const DriftFunctional& d, const SampledPath& omega,
                             const SpaceTransform& t, const DriftContext& ctx) {
  const SampledPath x = theta_path(s.gamma, omega, t);
  const SampledPath b = drift_increments(d, omega, x, ctx);
  const std::size_t live = std::min(s.gamma.live_size(), b.live_size());
  double r = 0.0;
  for (std::size_t i = 0; i < live; ++i) r = std::max(r, std::abs(s.gamma[i] - s.gamma[0] - b[i]));
  return r;
}

}  // namespace detail

/// The drift does not look at the state: Gamma = B(., omega).
inline OfeSolution solve_statefree(const StateFree& d, const SampledPath& omega, const SpaceTransform& t,
                                   const SolveOptions& opt = {}) {
  OfeSolution s;
  s.gamma = state_free_increments(d, omega);
  s.tol = opt.tol;
  detail::finish_stop(s, omega, t, opt.explosion_level);
  DriftContext ctx{&t, {}};
  s.residual_sup = detail::drift_residual(s, DriftFunctional{d}, omega, t, ctx);
  return s;
}

/// Gamma = int A(Gamma) dB has the solution Gamma = Theta^A_0(B), where
/// Theta^A_0 is the scale inverse built from the gain A.
inline OfeSolution solve_gain(const GainModulated& d, const SampledPath& omega, const SpaceTransform& t,
                              const SolveOptions& opt = {}) {
  const SpaceTransform gain = build_transform(d.gain, 0.0);
  const SampledPath base = state_free_increments(d.base, omega);
  std::vector<double> g(omega.size(), 0.0);
  std::optional<std::size_t> absorbed;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (absorbed) {
      g[i] = g[i - 1];
      continue;
    }
    const auto v = gain.try_theta(base[i]);
    if (!v) {
      absorbed = i;
      g[i] = g[i - 1];
      continue;
    }
    g[i] = *v;
  }
  OfeSolution s;
  s.gamma = SampledPath(std::vector<double>(omega.times().begin(), omega.times().end()), std::move(g), absorbed);
  s.tol = opt.tol;
  if (absorbed) {
    s.stop_index = absorbed;
    s.stop_time = omega.time(*absorbed);
    s.exploded = true;
  }
  detail::finish_stop(s, omega, t, opt.explosion_level);
  if (s.stop_index) s.stop_time = omega.time(*s.stop_index);
  DriftContext ctx{&t, {}};
  s.residual_sup = detail::drift_residual(s, DriftFunctional{d}, omega, t, ctx);
  return s;
}

namespace detail {

/// G(t, w, gamma) = b(t, w, Theta_{x0}(gamma + w)) together with the level-n
/// truncation of the existence proof.
class TruncatedField {
 public:
  TruncatedField(const AbsolutelyContinuous& d, const SpaceTransform& t) : d_(d), t_(t) {}

  void set_level(int n) {
    n_ = n;
    wn_ = d_.w_n(n);
    lo_ = t_.ell_tilde_n(n);
    hi_ = t_.r_tilde_n(n);
  }
  int level() const noexcept { return n_; }
  double w_n() const noexcept { return wn_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

  double raw(double t, double w, double gamma) const { return d_.b(t, w, t_.theta(gamma + w)); }
  std::optional<double> try_raw(double t, double w, double gamma) const {
    const auto x = t_.try_theta(gamma + w);
    if (!x) return std::nullopt;
    return d_.b(t, w, *x);
  }

  double operator()(double t, double w, double gamma) const {
    const double wb = std::clamp(w, -wn_, wn_);
    const double gb = std::clamp(gamma, lo_ - wb, hi_ - wb);
    const double v = d_.b(t, wb, t_.theta(gb + wb));
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite drift at t=" << t << ", gamma=" << gamma;
      throw SolverError(os.str());
    }
    return v;
  }

 private:
  const AbsolutelyContinuous& d_;
  const SpaceTransform& t_;
  int n_ = 1;
  double wn_ = 1.0, lo_ = -1.0, hi_ = 1.0;
};

struct Knot {
  double t;
  double gamma;
};

/// sup over grid nodes of |Gamma - Gamma(0) - int G|, integrating the
/// untruncated field with 15-point Gauss-Kronrod along the cubic Hermite
/// interpolant of the accepted substep knots.
inline double hermite_residual(const std::vector<Knot>& knots, const std::vector<std::size_t>& node_knot,
                               const TruncatedField& field, const SampledPath& omega, std::size_t live) {
  auto w_at = [&](double s) { return omega.interpolate(s); };
  auto slope = [&](double s, double g) { return field.try_raw(s, w_at(s), g).value_or(0.0); };
  double acc = 0.0, worst = 0.0;
  std::size_t node = 1;
  const double g0 = knots.front().gamma;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const Knot a = knots[k], b = knots[k + 1];
    const double h = b.t - a.t;
    if (h > 0.0) {
      const double ma = slope(a.t, a.gamma), mb = slope(b.t, b.gamma);
      auto hermite = [&](double s) {
        const double u = (s - a.t) / h;
        const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
        const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
        return h00 * a.gamma + h10 * h * ma + h01 * b.gamma + h11 * h * mb;
      };
      auto f = [&](double s) { return field.try_raw(s, w_at(s), hermite(s)).value_or(0.0); };
      acc += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a.t, b.t, 0);
    }
    while (node < node_knot.size() && node_knot[node] == k + 1) {
      if (node < live) worst = std::max(worst, std::abs(b.gamma - g0 - acc));
      ++node;
    }
  }
  return worst;
}

inline double sup_dispersion(const SpaceTransform& t, int n) {
  const DispersionSpec& d = t.dispersion();
  const double lo = d.interval.ell_n(n), hi = d.interval.r_n(n);
  double m = 0.0;
  for (int k = 0; k <= 256; ++k) m = std::max(m, d.s(lo + (hi - lo) * k / 256.0));
  for (double b : d.breaks)
    if (b > lo && b < hi) m = std::max({m, d.s(b), d.s_plus(b)});
  return m;
}

}  // namespace detail

/// Adaptive explicit Heun for Gamma' = G(t, omega(t), Gamma) with the level-n
/// truncation (omega clamped to [-w_n, w_n], Gamma + omega clamped to
/// [ell~_n, r~_n]). Levels are raised as needed at grid nodes; running past
/// n_max ends the solution with the explosion flag. Within a grid interval
/// omega is the linear interpolant of its end values.
inline OfeSolution solve_caratheodory(const AbsolutelyContinuous& d, const SampledPath& omega, const SpaceTransform& t,
                                      const SolveOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw InputError("solve_caratheodory: tol must be positive");
  if (opt.n_max < 1) throw InputError("solve_caratheodory: n_max must be >= 1");
  OfeSolution s;
  s.tol = opt.tol;
  const std::size_t N = omega.size();
  std::vector<double> g(N, opt.initial_gamma);
  if (!d.b) {
    s.gamma = SampledPath(std::vector<double>(omega.times().begin(), omega.times().end()), std::move(g));
    detail::finish_stop(s, omega, t, opt.explosion_level);
    return s;
  }
  detail::TruncatedField field(d, t);
  std::vector<detail::Knot> knots{{0.0, opt.initial_gamma}};
  std::vector<std::size_t> node_knot{0};
  std::optional<std::size_t> stop;
  int n = 1;
  const int cap = opt.explosion_level ? std::min(opt.n_max, *opt.explosion_level) : opt.n_max;
  auto level_ok = [&](int m, std::size_t i) {
    field.set_level(m);
    const double y = g[i] + omega[i];
    return omega.time(i + 1) <= m && std::abs(omega[i]) <= field.w_n() && std::abs(omega[i + 1]) <= field.w_n() &&
           y > field.lo() && y < field.hi();
  };
  for (std::size_t i = 0; i + 1 < N; ++i) {
    if (omega.is_absorbed(i + 1)) {
      stop = i + 1;
      break;
    }
    while (n <= cap && !level_ok(n, i)) ++n;
    if (n > cap) {
      stop = i + 1;
      break;
    }
    s.truncation_level_reached = std::max(s.truncation_level_reached, n);
    const double t0 = omega.time(i), t1 = omega.time(i + 1), H = t1 - t0;
    const double w0 = omega[i], w1 = omega[i + 1];
    auto w_at = [&](double tt) { return w0 + (w1 - w0) * ((tt - t0) / H); };
    auto heun = [&](double ta, double ga, double h, double ka) {
      const double kb = field(ta + h, w_at(ta + h), ga + h * ka);
      return ga + 0.5 * h * (ka + kb);
    };
    double tc = t0, gc = g[i], h = H;
    const double h_min =
        std::max(H * 0x1.0p-50, 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t1)));
    while (tc < t1) {
      if (tc + h > t1 || t1 - (tc + h) < 1e-15 * H) h = t1 - tc;
      const double k0 = field(tc, w_at(tc), gc);
      const double full = heun(tc, gc, h, k0);
      const double half = heun(tc, gc, 0.5 * h, k0);
      const double tm = tc + 0.5 * h;
      const double two = heun(tm, half, 0.5 * h, field(tm, w_at(tm), half));
      const double err = std::abs(two - full) / 3.0;
      if (err <= opt.tol * h || h <= h_min) {
        tc = (h == t1 - tc) ? t1 : tc + h;
        gc = two + (two - full) / 3.0;
        knots.push_back({tc, gc});
        ++s.substeps;
        h = std::min(2.0 * h, H);
      } else {
        h *= 0.5;
      }
    }
    g[i + 1] = gc;
    node_knot.push_back(knots.size() - 1);
    const double y = gc + w1;
    if (!(y > t.ell_tilde_n(cap) && y < t.r_tilde_n(cap))) {
      stop = i + 1;
      break;
    }
  }
  std::optional<std::size_t> absorbed = stop;
  const std::size_t live = absorbed ? *absorbed : N;
  for (std::size_t i = live; i < N; ++i) g[i] = g[live - 1];
  s.gamma = SampledPath(std::vector<double>(omega.times().begin(), omega.times().end()), std::move(g), absorbed);
  if (absorbed) {
    s.stop_index = absorbed;
    s.stop_time = omega.time(*absorbed);
    s.exploded = true;
  }
  s.residual_sup = detail::hermite_residual(knots, node_knot, field, omega, live);
  if (d.lipschitz && s.truncation_level_reached > 0) {
    const int m = s.truncation_level_reached;
    const double lp = d.lipschitz(m) * detail::sup_dispersion(t, m);
    const double T = omega.time(live - 1);
    s.error_bound = opt.tol * T * std::exp(lp * T);
  }
  return s;
}

/// Dispatch on the drift variant. Local-time drifts cannot be solved forward.
inline OfeSolution solve(const DriftFunctional& d, const SampledPath& omega, const SpaceTransform& t,
                         const SolveOptions& opt = {}) {
  return std::visit(
      [&](const auto& v) -> OfeSolution {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StateFree>) return solve_statefree(v, omega, t, opt);
        else if constexpr (std::is_same_v<T, GainModulated>) return solve_gain(v, omega, t, opt);
        else if constexpr (std::is_same_v<T, AbsolutelyContinuous>) return solve_caratheodory(v, omega, t, opt);
        else throw InputError("solve: local-time drifts are verified, not solved forward");
      },
      d);
}

/// Picard iterates Gamma^{k+1} = gamma0 + int G(s, omega, Gamma^k) ds with
/// the trapezoid rule on the grid, started from `start`.
inline SampledPath picard_iterate(const AbsolutelyContinuous& d, const SampledPath& omega, const SpaceTransform& t,
                                  const SampledPath& start, int iterations, double gamma0 = 0.0) {
  if (!start.same_grid(omega)) throw InputError("picard_iterate: start path on a different grid");
  std::vector<double> cur(start.values().begin(), start.values().end());
  std::vector<double> next(cur.size());
  for (int k = 0; k < iterations; ++k) {
    next[0] = gamma0;
    double prev = d.b(0.0, omega[0], t.theta(cur[0] + omega[0]));
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
      const double nx = d.b(omega.time(i + 1), omega[i + 1], t.theta(cur[i + 1] + omega[i + 1]));
      next[i + 1] = next[i] + 0.5 * (prev + nx) * (omega.time(i + 1) - omega.time(i));
      prev = nx;
    }
    std::swap(cur, next);
  }
  return SampledPath(std::vector<double>(omega.times().begin(), omega.times().end()), std::move(cur));
}

/// Upper envelope: solve with b + 2^-k for k = 0..6 and then every second k,
/// until two consecutive envelopes agree within tol (or k passes 52). Each
/// solve runs at tol / 16. The envelopes must decrease in k within 10 tol;
/// the last one is returned.
inline OfeSolution maximal_solution(const AbsolutelyContinuous& d, const SampledPath& omega, const SpaceTransform& t,
                                    const SolveOptions& opt = {}) {
  if (!d.continuous) throw InputError("maximal_solution: the drift must be declared continuous");
  if (!d.b) throw InputError("maximal_solution: no drift given");
  const double slack = 10.0 * opt.tol;
  SolveOptions inner = opt;
  inner.tol = opt.tol / 16.0;
  auto envelope = [&](int k) {
    AbsolutelyContinuous up = d;
    up.b = [b = d.b, delta = std::ldexp(1.0, -k)](double tt, double w, double x) { return b(tt, w, x) + delta; };
    return solve_caratheodory(up, omega, t, inner);
  };
  OfeSolution prev = envelope(0);
  int k = 0;
  int levels = 1;
  for (;;) {
    k += k < 6 ? 1 : 2;
    OfeSolution cur = envelope(k);
    ++levels;
    const std::size_t live = std::min(prev.gamma.live_size(), cur.gamma.live_size());
    double gap = 0.0;
    for (std::size_t i = 0; i < live; ++i) {
      const double diff = cur.gamma[i] - prev.gamma[i];
      if (diff > slack) {
        std::ostringstream os;
        os << "maximal_solution: envelope not monotone at t=" << omega.time(i) << " for delta=2^-" << k;
        throw SolverError(os.str());
      }
      gap = std::max(gap, std::abs(diff));
    }
    prev = std::move(cur);
    if ((k >= 6 && gap <= opt.tol) || k >= 52) break;
  }
  prev.maximal = true;
  prev.tol = opt.tol;
  prev.envelope_levels = levels;
  return prev;
}

struct ComparisonResult {
  bool pass = true;
  double max_violation = 0.0;  ///< max of Gamma_hat - Gamma_bar (0 when ordered)
};

/// Checks Gamma_hat <= Gamma_bar + tol on the grid before either solution stops.
inline ComparisonResult compare(const OfeSolution& hat, const OfeSolution& bar, double tol) {
  if (!hat.gamma.same_grid(bar.gamma)) throw InputError("compare: solutions on different grids");
  ComparisonResult r;
  const std::size_t live = std::min(hat.gamma.live_size(), bar.gamma.live_size());
  for (std::size_t i = 0; i < live; ++i) r.max_violation = std::max(r.max_violation, hat.gamma[i] - bar.gamma[i]);
  r.pass = r.max_violation <= tol;
  return r;
}

}  // namespace pathwise
