#pragma once

// Piecewise dispersion s(.) > 0 on a state interval, left-continuous at its
// breakpoints. Each piece carries an antiderivative of 1/s anchored at a
// finite reference point inside (or on the edge of) the piece.

#include <pathwise/errors.hpp>
#include <pathwise/path.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace pathwise {

namespace form {

struct Constant {
  double v = 1.0;
};

/// s(x) = a + b x.
struct Linear {
  double a = 1.0;
  double b = 0.0;
};

/// s(x) = coef * x^p, only on x > 0.
struct Power {
  double p = 1.0;
  double coef = 1.0;
};

/// s(x) = coef * exp(rate * x).
struct Exponential {
  double rate = 1.0;
  double coef = 1.0;
};

/// Piecewise-linear through (x_i, s_i), constant beyond the first and last knot.
struct Tabulated {
  std::vector<double> x;
  std::vector<double> s;
};

}  // namespace form

using Form = std::variant<form::Constant, form::Linear, form::Power, form::Exponential, form::Tabulated>;

inline const char* form_name(const Form& f) {
  static constexpr const char* names[] = {"constant", "linear", "power", "exp", "table"};
  return names[f.index()];
}

namespace detail {

inline double table_value(const form::Tabulated& t, double x) {
  if (x <= t.x.front()) return t.s.front();
  if (x >= t.x.back()) return t.s.back();
  const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - t.x.begin());
  const double a = (x - t.x[i - 1]) / (t.x[i] - t.x[i - 1]);
  return t.s[i - 1] + a * (t.s[i] - t.s[i - 1]);
}

inline double table_slope(const form::Tabulated& t, double x) {
  if (x < t.x.front() || x >= t.x.back()) return 0.0;
  const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - t.x.begin());
  return (t.s[i] - t.s[i - 1]) / (t.x[i] - t.x[i - 1]);
}

}  // namespace detail

inline double form_value(const Form& f, double x) {
  return std::visit(
      [x](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, form::Constant>) return g.v;
        else if constexpr (std::is_same_v<T, form::Linear>) return g.a + g.b * x;
        else if constexpr (std::is_same_v<T, form::Power>) return g.coef * std::pow(x, g.p);
        else if constexpr (std::is_same_v<T, form::Exponential>) return g.coef * std::exp(g.rate * x);
        else return detail::table_value(g, x);
      },
      f);
}

/// Classical derivative of a form (right derivative at table knots).
inline double form_derivative(const Form& f, double x) {
  return std::visit(
      [x](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, form::Constant>) return 0.0;
        else if constexpr (std::is_same_v<T, form::Linear>) return g.b;
        else if constexpr (std::is_same_v<T, form::Power>) return g.coef * g.p * std::pow(x, g.p - 1.0);
        else if constexpr (std::is_same_v<T, form::Exponential>) return g.rate * g.coef * std::exp(g.rate * x);
        else return detail::table_slope(g, x);
      },
      f);
}

/// Dispersion on `interval`: forms[i] governs (b_{i-1}, b_i] with b_{-1} = ell
/// and b_{k} = r, where b = breaks. A breakpoint belongs to the piece on its
/// left, so s is left-continuous and s(b+) is the right piece's limit.
struct DispersionSpec {
  StateInterval interval;
  std::vector<double> breaks;
  std::vector<Form> forms;

  std::size_t pieces() const noexcept { return forms.size(); }
  double piece_lo(std::size_t i) const { return i == 0 ? interval.ell : breaks[i - 1]; }
  double piece_hi(std::size_t i) const { return i + 1 == forms.size() ? interval.r : breaks[i]; }

  /// Piece owning x under left-continuity.
  std::size_t piece_of(double x) const {
    return static_cast<std::size_t>(std::lower_bound(breaks.begin(), breaks.end(), x) - breaks.begin());
  }
  /// Piece owning the right neighbourhood of x.
  std::size_t piece_right_of(double x) const {
    return static_cast<std::size_t>(std::upper_bound(breaks.begin(), breaks.end(), x) - breaks.begin());
  }

  double s(double x) const { return form_value(forms[piece_of(x)], x); }
  double s_plus(double x) const { return form_value(forms[piece_right_of(x)], x); }
  double s_prime(double x) const { return form_derivative(forms[piece_of(x)], x); }

  /// Jumps of s: (breakpoint, s(b), s(b+)) with s(b+) != s(b).
  struct Jump {
    double at;
    double left;
    double right;
  };
  std::vector<Jump> jumps() const {
    std::vector<Jump> out;
    for (std::size_t k = 0; k < breaks.size(); ++k) {
      const double b = breaks[k];
      const double l = form_value(forms[k], b), r = form_value(forms[k + 1], b);
      if (l != r) out.push_back({b, l, r});
    }
    return out;
  }

  bool has_continuous_part() const {
    for (const auto& f : forms)
      if (!std::holds_alternative<form::Constant>(f)) return true;
    return false;
  }

  void validate() const;
};

namespace detail {

/// Checks s > 0 and finite on the piece (lo, hi); interior breakpoints need a
/// strictly positive, finite limit, interval endpoints may degenerate.
inline void validate_piece(const Form& f, double lo, double hi, bool lo_is_break, bool hi_is_break, int idx) {
  const std::string tag = std::string(form_name(f)) + " piece " + std::to_string(idx);
  auto fail = [&](const std::string& why) { throw ConstructionError(tag + ": " + why, idx); };
  std::visit(
      [&](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, form::Constant>) {
          if (!(g.v > 0.0) || !std::isfinite(g.v)) fail("value must be positive and finite");
        } else if constexpr (std::is_same_v<T, form::Linear>) {
          if (!std::isfinite(g.a) || !std::isfinite(g.b)) fail("coefficients must be finite");
          if (g.b == 0.0 && !(g.a > 0.0)) fail("constant value must be positive");
          if (std::isinf(lo) && g.b > 0.0) fail("a + b x turns negative towards -inf");
          if (std::isinf(hi) && g.b < 0.0) fail("a + b x turns negative towards +inf");
          const double vl = std::isinf(lo) ? kInf : g.a + g.b * lo;
          const double vh = std::isinf(hi) ? kInf : g.a + g.b * hi;
          if (lo_is_break ? !(vl > 0.0) : vl < 0.0) fail("not positive at the left end");
          if (hi_is_break ? !(vh > 0.0) : vh < 0.0) fail("not positive at the right end");
          if (!lo_is_break && !hi_is_break && vl == 0.0 && vh == 0.0) fail("vanishes identically");
        } else if constexpr (std::is_same_v<T, form::Power>) {
          if (!(g.coef > 0.0) || !std::isfinite(g.coef) || !std::isfinite(g.p)) fail("needs coef > 0 and finite p");
          if (lo < 0.0) fail("power form requires the piece inside (0, inf)");
          if (lo == 0.0 && lo_is_break) fail("power form cannot have a breakpoint at 0");
        } else if constexpr (std::is_same_v<T, form::Exponential>) {
          if (!(g.coef > 0.0) || !std::isfinite(g.coef) || !std::isfinite(g.rate)) fail("needs coef > 0 and finite rate");
        } else {
          if (g.x.empty() || g.x.size() != g.s.size()) fail("table needs matching, non-empty knot lists");
          for (std::size_t i = 0; i < g.x.size(); ++i) {
            if (!std::isfinite(g.x[i]) || !(g.s[i] > 0.0) || !std::isfinite(g.s[i])) fail("knot values must be positive and finite");
            if (i > 0 && !(g.x[i] > g.x[i - 1])) fail("knots must be strictly increasing");
          }
        }
      },
      f);
}

}  // namespace detail

inline void DispersionSpec::validate() const {
  interval.validate();
  if (forms.empty()) throw ConstructionError("dispersion: no pieces");
  if (breaks.size() + 1 != forms.size())
    throw ConstructionError("dispersion: need exactly one more piece than breakpoints");
  for (std::size_t k = 0; k < breaks.size(); ++k) {
    if (!(breaks[k] > interval.ell && breaks[k] < interval.r))
      throw ConstructionError("dispersion: breakpoint outside the state interval", static_cast<int>(k + 1));
    if (k > 0 && !(breaks[k] > breaks[k - 1]))
      throw ConstructionError("dispersion: breakpoints must be strictly increasing", static_cast<int>(k + 1));
  }
  for (std::size_t i = 0; i < forms.size(); ++i)
    detail::validate_piece(forms[i], piece_lo(i), piece_hi(i), i > 0, i + 1 < forms.size(), static_cast<int>(i));
}

// ------------------------------------------------- per-piece antiderivatives

/// G(x) = int_{ref}^x dz / s(z) on one piece, with its inverse. Endpoint
/// limits are exact IEEE infinities when the integral diverges there.
class PieceScale {
 public:
  PieceScale(Form f, double lo, double hi, double ref, int idx) : form_(std::move(f)), lo_(lo), hi_(hi), ref_(ref), idx_(idx) {
    s_ref_ = form_value(form_, ref_);
    if (auto* t = std::get_if<form::Tabulated>(&form_)) build_table(*t);
    g_lo_ = end_value(lo_, true);
    g_hi_ = end_value(hi_, false);
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double g_lo() const noexcept { return g_lo_; }
  double g_hi() const noexcept { return g_hi_; }
  const Form& form() const noexcept { return form_; }
  bool tabulated() const noexcept { return std::holds_alternative<form::Tabulated>(form_); }

  double G(double x) const {
    if (x == ref_) return 0.0;
    return std::visit(
        [&](const auto& g) -> double {
          using T = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<T, form::Constant>) {
            return (x - ref_) / g.v;
          } else if constexpr (std::is_same_v<T, form::Linear>) {
            if (g.b == 0.0) return (x - ref_) / g.a;
            return std::log1p(g.b * (x - ref_) / s_ref_) / g.b;
          } else if constexpr (std::is_same_v<T, form::Power>) {
            const double q = 1.0 - g.p;
            if (q == 0.0) return std::log(x / ref_) / g.coef;
            return (std::pow(x, q) - std::pow(ref_, q)) / (q * g.coef);
          } else if constexpr (std::is_same_v<T, form::Exponential>) {
            if (g.rate == 0.0) return (x - ref_) / g.coef;
            return -std::expm1(-g.rate * (x - ref_)) / (g.rate * s_ref_);
          } else {
            return table_cum(x) - table_cum(ref_);
          }
        },
        form_);
  }

  /// Inverse of G on (g_lo, g_hi); the result is clamped into [lo, hi].
  double inverse(double y) const {
    if (y == 0.0) return ref_;
    const double x = std::visit(
        [&](const auto& g) -> double {
          using T = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<T, form::Constant>) {
            return ref_ + g.v * y;
          } else if constexpr (std::is_same_v<T, form::Linear>) {
            if (g.b == 0.0) return ref_ + g.a * y;
            return ref_ + s_ref_ * std::expm1(g.b * y) / g.b;
          } else if constexpr (std::is_same_v<T, form::Power>) {
            const double q = 1.0 - g.p;
            if (q == 0.0) return ref_ * std::exp(g.coef * y);
            return std::pow(q * g.coef * y + std::pow(ref_, q), 1.0 / q);
          } else if constexpr (std::is_same_v<T, form::Exponential>) {
            if (g.rate == 0.0) return ref_ + g.coef * y;
            return ref_ - std::log1p(-g.rate * s_ref_ * y) / g.rate;
          } else {
            return table_inverse(y);
          }
        },
        form_);
    return std::clamp(x, lo_, hi_);
  }

 private:
  struct TableCache {
    form::Tabulated t;
    std::vector<double> cum;     // int_{x_0}^{x_i} 1/s at the knots
    std::vector<double> node_x;  // bracketing table for the inverse
    std::vector<double> node_g;
  };

  // Integral of 1/s over one knot segment, where s is linear.
  double segment_integral(double a, double b) const {
    if (a == b) return 0.0;
    auto f = [this](double z) { return 1.0 / detail::table_value(cache_.t, z); };
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 12, 1e-14, &err);
    if (!std::isfinite(v) || err > 1e-6 * std::abs(v) + 1e-11)
      throw ConstructionError("table piece: quadrature of 1/s did not converge", idx_);
    return v;
  }

  void build_table(const form::Tabulated& t) {
    cache_.t = t;
    cache_.cum.assign(t.x.size(), 0.0);
    for (std::size_t i = 1; i < t.x.size(); ++i) cache_.cum[i] = cache_.cum[i - 1] + segment_integral(t.x[i - 1], t.x[i]);
    const double a = std::max(lo_, t.x.front()), b = std::min(hi_, t.x.back());
    if (a < b) {
      constexpr std::size_t kNodes = 1024;
      cache_.node_x.resize(kNodes + 1);
      cache_.node_g.resize(kNodes + 1);
      for (std::size_t i = 0; i <= kNodes; ++i) {
        cache_.node_x[i] = a + (b - a) * static_cast<double>(i) / kNodes;
        cache_.node_g[i] = table_cum(cache_.node_x[i]);
      }
      cache_.node_x.back() = b;
    }
  }

  double table_cum(double x) const {
    const auto& t = cache_.t;
    if (x <= t.x.front()) return (x - t.x.front()) / t.s.front();
    if (x >= t.x.back()) return cache_.cum.back() + (x - t.x.back()) / t.s.back();
    const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - t.x.begin()) - 1;
    return cache_.cum[i] + segment_integral(t.x[i], x);
  }

  double table_inverse(double y) const {
    const auto& t = cache_.t;
    const double target = y + table_cum(ref_);
    if (target <= 0.0) return t.x.front() + target * t.s.front();
    if (target >= cache_.cum.back()) return t.x.back() + (target - cache_.cum.back()) * t.s.back();
    const auto& nx = cache_.node_x;
    const auto& ng = cache_.node_g;
    double a = t.x.front(), b = t.x.back(), guess = 0.5 * (a + b);
    if (!nx.empty()) {
      const auto it = std::upper_bound(ng.begin(), ng.end(), target);
      const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(it - ng.begin()), 1, ng.size() - 1);
      a = nx[k - 1];
      b = nx[k];
      guess = a + (b - a) * std::clamp((target - ng[k - 1]) / (ng[k] - ng[k - 1]), 0.0, 1.0);
    }
    auto f = [&](double x) {
      return std::make_pair(table_cum(x) - target, 1.0 / detail::table_value(t, x));
    };
    std::uintmax_t iters = 60;
    return boost::math::tools::newton_raphson_iterate(f, guess, a, b, 48, iters);
  }

  double end_value(double e, bool left) const {
    if (std::isinf(e)) {
      if (tabulated()) return left ? -kInf : kInf;
      return G(e);
    }
    if (const auto* l = std::get_if<form::Linear>(&form_)) {
      const double v = l->a + l->b * e;
      if (std::abs(v) <= 1e-14 * (std::abs(l->a) + std::abs(l->b * e))) return left ? -kInf : kInf;
    }
    if (const auto* p = std::get_if<form::Power>(&form_)) {
      if (e == 0.0 && p->p >= 1.0) return -kInf;
    }
    return G(e);
  }

  Form form_;
  double lo_, hi_, ref_;
  int idx_;
  double s_ref_ = 1.0;
  double g_lo_ = 0.0, g_hi_ = 0.0;
  TableCache cache_;
};

}  // namespace pathwise
