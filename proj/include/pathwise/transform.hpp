#pragma once

// Scale maps H_c(x) = int_c^x dz / s(z) and their inverses Theta_c, built once
// per dispersion and re-anchored in O(1).

#include <pathwise/dispersion.hpp>
#include <pathwise/errors.hpp>
#include <pathwise/path.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace pathwise {

namespace detail {

/// Global antiderivative F of 1/s with F(x0) = 0, assembled from the pieces.
struct ScaleCore {
  DispersionSpec spec;
  std::vector<PieceScale> pieces;
  std::vector<double> offset;    // F = offset[i] + G_i on piece i
  std::vector<double> f_break;   // F at each breakpoint
  double f_lo = 0.0, f_hi = 0.0;
  bool heuristic = false;        // an infinite end is governed by a table

  explicit ScaleCore(DispersionSpec d) : spec(std::move(d)) {
    spec.validate();
    const double x0 = spec.interval.x0;
    const std::size_t m = spec.pieces();
    pieces.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double lo = spec.piece_lo(i), hi = spec.piece_hi(i);
      double ref = x0;
      if (x0 > hi) ref = hi;
      else if (x0 <= lo) ref = lo;
      pieces.emplace_back(spec.forms[i], lo, hi, ref, static_cast<int>(i));
    }
    offset.assign(m, 0.0);
    const std::size_t home = spec.piece_of(x0);
    for (std::size_t i = home + 1; i < m; ++i) {
      const double b = spec.breaks[i - 1];
      offset[i] = offset[i - 1] + pieces[i - 1].G(b) - pieces[i].G(b);
    }
    for (std::size_t i = home; i-- > 0;) {
      const double b = spec.breaks[i];
      offset[i] = offset[i + 1] + pieces[i + 1].G(b) - pieces[i].G(b);
    }
    f_break.resize(spec.breaks.size());
    for (std::size_t k = 0; k < spec.breaks.size(); ++k) f_break[k] = offset[k] + pieces[k].G(spec.breaks[k]);
    f_lo = offset.front() + pieces.front().g_lo();
    f_hi = offset.back() + pieces.back().g_hi();
    for (std::size_t k = 0; k < m; ++k) {
      if (k + 1 < m && !(f_break[k] > (k == 0 ? f_lo : f_break[k - 1])))
        throw ConstructionError("scale map is not strictly increasing across a breakpoint", static_cast<int>(k));
      if (std::isnan(offset[k])) throw ConstructionError("scale map offset is undefined", static_cast<int>(k));
    }
    heuristic = (pieces.front().tabulated() && std::isinf(spec.interval.ell)) ||
                (pieces.back().tabulated() && std::isinf(spec.interval.r));
  }

  double F(double x) const {
    if (x == spec.interval.ell) return f_lo;
    if (x == spec.interval.r) return f_hi;
    if (!(x > spec.interval.ell && x < spec.interval.r)) throw DomainError("scale map: state outside the interval");
    const std::size_t i = spec.piece_of(x);
    return offset[i] + pieces[i].G(x);
  }

  std::optional<double> F_inverse(double y) const {
    if (!(y > f_lo && y < f_hi)) return std::nullopt;
    const std::size_t k =
        static_cast<std::size_t>(std::lower_bound(f_break.begin(), f_break.end(), y) - f_break.begin());
    return pieces[k].inverse(y - offset[k]);
  }
};

}  // namespace detail

/// H_c and Theta_c for one anchor c. Copies share the immutable core.
class SpaceTransform {
 public:
  SpaceTransform() = default;

  double anchor() const noexcept { return c_; }
  const DispersionSpec& dispersion() const { return core_->spec; }
  const StateInterval& interval() const { return core_->spec.interval; }

  /// Same dispersion, new anchor.
  SpaceTransform rebased(double c) const {
    if (!interval().contains(c)) throw InputError("rebased: anchor outside the state interval");
    SpaceTransform t;
    t.core_ = core_;
    t.c_ = c;
    t.fc_ = core_->F(c);
    return t;
  }

  double H(double x) const { return core_->F(x) - fc_; }

  bool in_domain(double w) const noexcept {
    const double y = w + fc_;
    return y > core_->f_lo && y < core_->f_hi;
  }

  std::optional<double> try_theta(double w) const {
    if (w == 0.0) return c_;
    return core_->F_inverse(w + fc_);
  }

  double theta(double w) const {
    const auto x = try_theta(w);
    if (!x) throw DomainError("theta: argument outside (ell~(c), r~(c))");
    return *x;
  }

  double ell_tilde() const noexcept { return core_->f_lo - fc_; }
  double r_tilde() const noexcept { return core_->f_hi - fc_; }
  double ell_tilde_n(int n) const { return H(interval().ell_n(n)); }
  double r_tilde_n(int n) const { return H(interval().r_n(n)); }

  /// (H(ell+) = -inf, H(r-) = +inf).
  std::pair<bool, bool> barrow_osgood() const noexcept {
    return {std::isinf(core_->f_lo), std::isinf(core_->f_hi)};
  }
  /// True when an infinite end is governed by a table, whose tail is extrapolated.
  bool barrow_osgood_heuristic() const noexcept { return core_->heuristic; }

  /// Theta-preimages of the dispersion breakpoints, increasing.
  std::vector<double> break_preimages() const {
    std::vector<double> out;
    out.reserve(core_->f_break.size());
    for (double f : core_->f_break) out.push_back(f - fc_);
    return out;
  }

  /// Breakpoint preimages plus the preimages of interior table knots, where
  /// s(Theta(.)) has kinks.
  std::vector<double> kink_preimages() const {
    std::vector<double> out = break_preimages();
    const DispersionSpec& d = dispersion();
    for (std::size_t i = 0; i < d.pieces(); ++i)
      if (const auto* t = std::get_if<form::Tabulated>(&d.forms[i]))
        for (double x : t->x)
          if (x > d.piece_lo(i) && x < d.piece_hi(i)) out.push_back(H(x));
    std::sort(out.begin(), out.end());
    return out;
  }

  friend SpaceTransform build_transform(const DispersionSpec& disp, double c);

 private:
  std::shared_ptr<const detail::ScaleCore> core_;
  double c_ = 0.0;
  double fc_ = 0.0;
};

inline SpaceTransform build_transform(const DispersionSpec& disp, double c) {
  if (!disp.interval.contains(c)) throw InputError("build_transform: anchor outside the state interval");
  SpaceTransform t;
  t.core_ = std::make_shared<const detail::ScaleCore>(disp);
  t.c_ = c;
  t.fc_ = t.core_->F(c);
  return t;
}

inline std::pair<bool, bool> check_barrow_osgood(const SpaceTransform& t) { return t.barrow_osgood(); }

/// int_a^b s(Theta(z)) dz on a panel free of breakpoint preimages.
inline double integrate_s_theta(const SpaceTransform& t, double a, double b) {
  if (a == b) return 0.0;
  const DispersionSpec& d = t.dispersion();
  const double mid = t.theta(0.5 * (a + b));
  if (const auto* k = std::get_if<form::Constant>(&d.forms[d.piece_of(mid)])) return k->v * (b - a);
  auto f = [&](double z) { return d.s(t.theta(z)); };
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 10, 1e-13);
}

/// sup over w of |Theta(w) - c - int_0^w s(Theta(z)) dz|, each integral split
/// into panels at the Theta-preimages of the breakpoints and table knots.
inline double theta_residual(const SpaceTransform& t, std::span<const double> w_grid) {
  const std::vector<double> pre = t.kink_preimages();
  double worst = 0.0;
  for (double w : w_grid) {
    if (!t.in_domain(w)) throw InputError("theta_residual: grid point outside the domain");
    const double lo = std::min(0.0, w), hi = std::max(0.0, w);
    std::vector<double> cuts{lo};
    for (double p : pre)
      if (p > lo && p < hi) cuts.push_back(p);
    cuts.push_back(hi);
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) integral += integrate_s_theta(t, cuts[k], cuts[k + 1]);
    if (w < 0.0) integral = -integral;
    worst = std::max(worst, std::abs(t.theta(w) - t.anchor() - integral));
  }
  return worst;
}

struct CompositionSample {
  double c;
  double gamma;
  double w;
};

struct CompositionReport {
  double max_error = 0.0;  ///< max |lhs - rhs| / (1 + |rhs|)
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

/// Checks Theta_{Theta_c(gamma)}(w) = Theta_c(gamma + w); samples outside
/// the domain are skipped and counted.
inline CompositionReport composition_check(const SpaceTransform& t, std::span<const CompositionSample> samples) {
  CompositionReport r;
  for (const auto& s : samples) {
    if (!t.interval().contains(s.c)) {
      ++r.skipped;
      continue;
    }
    const SpaceTransform tc = t.rebased(s.c);
    if (!tc.in_domain(s.gamma) || !tc.in_domain(s.gamma + s.w)) {
      ++r.skipped;
      continue;
    }
    const double mid = tc.theta(s.gamma);
    const SpaceTransform tm = t.rebased(mid);
    const auto lhs = tm.try_theta(s.w);
    const double rhs = tc.theta(s.gamma + s.w);
    if (!lhs) {
      ++r.skipped;
      continue;
    }
    const double err = std::abs(*lhs - rhs);
    r.max_abs_error = std::max(r.max_abs_error, err);
    r.max_error = std::max(r.max_error, err / (1.0 + std::abs(rhs)));
    ++r.checked;
  }
  return r;
}

}  // namespace pathwise
