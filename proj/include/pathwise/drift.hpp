#pragma once

// The generalized drift functional B(t, omega, x) in its concrete families,
// evaluated cumulatively along sampled paths.

#include <pathwise/dispersion.hpp>
#include <pathwise/errors.hpp>
#include <pathwise/path.hpp>
#include <pathwise/pathkit.hpp>
#include <pathwise/rng.hpp>
#include <pathwise/transform.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace pathwise {

/// Cumulative |integrand| beyond which the drift counts as blown up.
inline constexpr double kDriftOverflow = 1e12;

/// Drift that ignores the state: an explicit finite-variation B(t), or the
/// time integral of beta(t, omega(t)).
struct StateFree {
  std::function<double(double)> B{};
  std::function<double(double, double)> beta{};
  bool continuous = false;  ///< beta continuous: trapezoid rule, else left endpoint
};

/// int A(H_{x0}(x) - omega) dB with a positive gain A and a state-free base B.
/// The gain is described like a dispersion on the real line anchored at 0,
/// which also yields the map that solves Gamma = int A(Gamma) dB.
struct GainModulated {
  DispersionSpec gain;
  StateFree base;
};

/// int b(t, omega(t), x(t)) dt with localization data: on level n the noise is
/// clamped to [-w_n, w_n] and b is L_n-Lipschitz in x on (ell_n, r_n).
struct AbsolutelyContinuous {
  std::function<double(double, double, double)> b;
  bool continuous = true;
  std::function<double(int)> w_level;    ///< defaults to n
  std::function<double(int)> lipschitz;  ///< L_n; unset means not declared

  double w_n(int n) const { return w_level ? w_level(n) : static_cast<double>(n); }
};

/// int b(x) dt + int L^x(T, xi) mu(dxi) / s(xi) with mu = atoms + density.
struct LocalTimeMeasure {
  struct Atom {
    double at;
    double mass;
  };
  std::function<double(double)> b;
  std::vector<Atom> atoms;
  std::function<double(double)> density;  ///< optional Lebesgue density of mu
  double density_lo = 0.0;
  double density_hi = 0.0;
  int density_levels = 33;
};

using DriftFunctional = std::variant<StateFree, GainModulated, AbsolutelyContinuous, LocalTimeMeasure>;

/// What some drift variants need besides the paths: the scale map anchored at
/// x0 and the local time settings.
struct DriftContext {
  const SpaceTransform* transform = nullptr;
  LocalTimeConfig localtime;
};

namespace detail {

inline SampledPath same_grid_path(const SampledPath& ref, std::vector<double> v,
                                  std::optional<std::size_t> absorbed = std::nullopt) {
  return SampledPath(std::vector<double>(ref.times().begin(), ref.times().end()), std::move(v), absorbed);
}

/// Cumulative integral of f(i) dt with the left-endpoint or trapezoid rule,
/// stopped (absorbed) when the cumulative |f| passes the overflow threshold
/// or when `live` runs out.
template <class F>
SampledPath cumulative_dt(const SampledPath& grid, F&& f, bool trapezoid, std::size_t live) {
  std::vector<double> v(grid.size(), 0.0);
  double total = 0.0, mass = 0.0;
  std::optional<std::size_t> absorbed;
  double prev = live > 0 ? f(0) : 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (i + 1 >= live) {
      if (!absorbed && live < grid.size()) absorbed = live;
      v[i + 1] = total;
      continue;
    }
    const double dt = grid.time(i + 1) - grid.time(i);
    double inc;
    if (trapezoid) {
      const double next = f(i + 1);
      inc = 0.5 * (prev + next) * dt;
      mass += 0.5 * (std::abs(prev) + std::abs(next)) * dt;
      prev = next;
    } else {
      const double cur = f(i);
      inc = cur * dt;
      mass += std::abs(cur) * dt;
    }
    if (!std::isfinite(inc) || mass > kDriftOverflow) {
      absorbed = i + 1;
      v[i + 1] = total;
      live = i + 1;
      continue;
    }
    total += inc;
    v[i + 1] = total;
  }
  return same_grid_path(grid, std::move(v), absorbed);
}

inline SampledPath state_free_path(const StateFree& d, const SampledPath& omega) {
  if (d.B) {
    if (d.B(0.0) != 0.0) throw InputError("state-free drift: B(0) must be 0");
    std::vector<double> v(omega.size());
    for (std::size_t i = 0; i < omega.size(); ++i) v[i] = d.B(omega.time(i));
    v[0] = 0.0;
    return same_grid_path(omega, std::move(v));
  }
  if (!d.beta) return same_grid_path(omega, std::vector<double>(omega.size(), 0.0));
  return cumulative_dt(omega, [&](std::size_t i) { return d.beta(omega.time(i), omega[i]); }, d.continuous,
                       omega.size());
}

inline bool gain_continuous(const DispersionSpec& g) { return g.jumps().empty(); }

}  // namespace detail

/// Base path B(t, omega) of a state-free drift.
inline SampledPath state_free_increments(const StateFree& d, const SampledPath& omega) {
  return detail::state_free_path(d, omega);
}

/// Cumulative drift t -> B(t, omega, x) on the common grid of omega and x.
/// Paths that blow up (cumulative |integrand| past 1e12) come back absorbed.
inline SampledPath drift_increments(const DriftFunctional& d, const SampledPath& omega, const SampledPath& x,
                                    const DriftContext& ctx = {}) {
  if (!omega.same_grid(x)) throw InputError("drift_increments: omega and x on different grids");
  return std::visit(
      [&](const auto& v) -> SampledPath {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StateFree>) {
          return detail::state_free_path(v, omega);
        } else if constexpr (std::is_same_v<T, GainModulated>) {
          if (!ctx.transform) throw InputError("drift_increments: gain drift needs the scale map");
          const SampledPath base = detail::state_free_path(v.base, omega);
          const std::size_t live = x.live_size();
          auto gain = [&](std::size_t i) { return v.gain.s(ctx.transform->H(x[i]) - omega[i]); };
          const bool trap = detail::gain_continuous(v.gain);
          std::vector<double> out(omega.size(), 0.0);
          std::optional<std::size_t> absorbed;
          double total = 0.0, mass = 0.0;
          for (std::size_t i = 0; i + 1 < omega.size(); ++i) {
            if (i + 1 >= live || absorbed) {
              if (!absorbed && live < omega.size()) absorbed = live;
              out[i + 1] = total;
              continue;
            }
            const double dB = base[i + 1] - base[i];
            const double a = trap ? 0.5 * (gain(i) + gain(i + 1)) : gain(i);
            mass += a * std::abs(dB);
            if (!std::isfinite(a) || mass > kDriftOverflow) {
              absorbed = i + 1;
              out[i + 1] = total;
              continue;
            }
            total += a * dB;
            out[i + 1] = total;
          }
          return detail::same_grid_path(omega, std::move(out), absorbed);
        } else if constexpr (std::is_same_v<T, AbsolutelyContinuous>) {
          if (!v.b) return detail::same_grid_path(omega, std::vector<double>(omega.size(), 0.0));
          return detail::cumulative_dt(
              omega, [&](std::size_t i) { return v.b(omega.time(i), omega[i], x[i]); }, v.continuous, x.live_size());
        } else {
          if (!ctx.transform) throw InputError("drift_increments: local-time drift needs the dispersion");
          const DispersionSpec& disp = ctx.transform->dispersion();
          SampledPath lebesgue =
              v.b ? detail::cumulative_dt(omega, [&](std::size_t i) { return v.b(x[i]); }, false, x.live_size())
                  : detail::same_grid_path(omega, std::vector<double>(omega.size(), 0.0));
          if (v.atoms.empty() && !v.density) return lebesgue;
          const SampledPath qv = quadratic_variation(x, ctx.localtime.qv_level_for(x));
          const double eps = ctx.localtime.bandwidth_for(x);
          std::vector<double> levels, weights;
          for (const auto& a : v.atoms) {
            levels.push_back(a.at);
            weights.push_back(a.mass / disp.s(a.at));
          }
          if (v.density && v.density_levels > 0 && v.density_hi > v.density_lo) {
            const double dxi = (v.density_hi - v.density_lo) / v.density_levels;
            for (int k = 0; k < v.density_levels; ++k) {
              const double xi = v.density_lo + (k + 0.5) * dxi;
              levels.push_back(xi);
              weights.push_back(v.density(xi) * dxi / disp.s(xi));
            }
          }
          std::vector<double> out(lebesgue.values().begin(), lebesgue.values().end());
          const std::size_t live = std::min(x.live_size(), lebesgue.live_size());
          double acc = 0.0;
          const double scale = 1.0 / (2.0 * eps);
          for (std::size_t j = 0; j + 1 < x.size(); ++j) {
            if (j + 1 < live) {
              const double dq = (qv[j + 1] - qv[j]) * scale;
              if (dq != 0.0)
                for (std::size_t m = 0; m < levels.size(); ++m)
                  acc += weights[m] * band_weight(x[j], levels[m], eps, ctx.localtime.side) * dq;
            }
            out[j + 1] += acc;
          }
          std::optional<std::size_t> absorbed = lebesgue.absorbed_from();
          if (!absorbed && x.absorbed_from()) absorbed = x.absorbed_from();
          return detail::same_grid_path(omega, std::move(out), absorbed);
        }
      },
      d);
}

struct LocalizationReport {
  int level = 0;
  double declared = 0.0;
  double max_ratio = 0.0;
  std::size_t samples = 0;
  bool pass = false;
};

/// Samples 1000 triples (t, w, x) and partners x' on level n and compares the
/// largest |b(t,w,x) - b(t,w,x')| / |x - x'| with the declared L_n.
inline LocalizationReport wz_localization_check(const AbsolutelyContinuous& d, const StateInterval& iv, int n,
                                                std::uint64_t seed = 2024) {
  if (n < 1) throw InputError("wz_localization_check: level must be >= 1");
  if (!d.lipschitz) throw InputError("wz_localization_check: no Lipschitz constants declared");
  LocalizationReport r;
  r.level = n;
  r.declared = d.lipschitz(n);
  const double lo = iv.ell_n(n), hi = iv.r_n(n), wn = d.w_n(n);
  rng::CounterStream stream(rng::split(seed, static_cast<std::uint64_t>(n)));
  for (int k = 0; k < 1000; ++k) {
    const double t = n * stream.next_uniform();
    const double w = wn * (2.0 * stream.next_uniform() - 1.0);
    const double x1 = lo + (hi - lo) * stream.next_uniform();
    const double x2 = lo + (hi - lo) * stream.next_uniform();
    if (x1 == x2) continue;
    const double ratio = std::abs(d.b(t, w, x1) - d.b(t, w, x2)) / std::abs(x1 - x2);
    r.max_ratio = std::max(r.max_ratio, ratio);
    ++r.samples;
  }
  r.pass = r.max_ratio <= 1.01 * r.declared;
  return r;
}

}  // namespace pathwise
