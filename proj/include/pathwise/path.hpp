#pragma once

#include <pathwise/errors.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace pathwise {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Shortest round-trip text for a double (17 significant digits at most).
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (text == "inf" || text == "+inf") return kInf;
  if (text == "-inf") return -kInf;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw InputError("not a number: '" + std::string(text) + "'");
  return v;
}

/// A continuous path observed on a finite, strictly increasing grid starting
/// at 0. From `absorbed_from` onward the path sits in the cemetery; the stored
/// values there are frozen copies of the last live value, never NaN.
class SampledPath {
 public:
  SampledPath() = default;

  SampledPath(std::vector<double> times, std::vector<double> values,
              std::optional<std::size_t> absorbed_from = std::nullopt)
      : times_(std::move(times)), values_(std::move(values)) {
    if (times_.empty()) throw InputError("SampledPath: empty grid");
    if (times_.size() != values_.size()) throw InputError("SampledPath: times/values size mismatch");
    if (times_.front() != 0.0) throw InputError("SampledPath: grid must start at 0");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1])) throw InputError("SampledPath: grid not strictly increasing");
    if (absorbed_from) absorb_from(*absorbed_from);
    const std::size_t live = live_size();
    for (std::size_t i = 0; i < live; ++i)
      if (!std::isfinite(values_[i])) throw InputError("SampledPath: non-finite live value");
  }

  std::size_t size() const noexcept { return times_.size(); }
  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> values() const noexcept { return values_; }
  double time(std::size_t i) const { return times_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double horizon() const noexcept { return times_.back(); }

  std::optional<std::size_t> absorbed_from() const noexcept { return absorbed_from_; }
  bool is_absorbed(std::size_t i) const noexcept { return absorbed_from_ && i >= *absorbed_from_; }
  /// Number of grid points carrying a live (non-cemetery) value.
  std::size_t live_size() const noexcept { return absorbed_from_ ? *absorbed_from_ : times_.size(); }

  /// Sends the path to the cemetery from grid index `k` on (k >= 1). A path
  /// already absorbed earlier stays absorbed from the earlier index.
  void absorb_from(std::size_t k) {
    if (k == 0) throw InputError("SampledPath: cannot absorb at index 0");
    if (k >= times_.size()) return;
    if (absorbed_from_ && *absorbed_from_ <= k) return;
    absorbed_from_ = k;
    std::fill(values_.begin() + static_cast<std::ptrdiff_t>(k), values_.end(), values_[k - 1]);
  }

  /// Grid mesh (largest step).
  double mesh() const noexcept {
    double m = 0.0;
    for (std::size_t i = 1; i < times_.size(); ++i) m = std::max(m, times_[i] - times_[i - 1]);
    return m;
  }

  /// Linear interpolation at time t (clamped to the horizon); live part only.
  double interpolate(double t) const {
    const std::size_t live = live_size();
    if (t <= 0.0) return values_.front();
    const auto end = times_.begin() + static_cast<std::ptrdiff_t>(live);
    auto it = std::upper_bound(times_.begin(), end, t);
    if (it == end) return values_[live - 1];
    const std::size_t i = static_cast<std::size_t>(it - times_.begin());
    const double t0 = times_[i - 1], t1 = times_[i];
    const double a = (t - t0) / (t1 - t0);
    return values_[i - 1] + a * (values_[i] - values_[i - 1]);
  }

  bool same_grid(const SampledPath& other) const noexcept { return times_ == other.times_; }

  friend bool operator==(const SampledPath&, const SampledPath&) = default;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  std::optional<std::size_t> absorbed_from_;
};

/// Uniform grid with `steps` intervals on [0, horizon]; t_i = horizon * i / steps.
inline std::vector<double> uniform_grid(double horizon, std::size_t steps) {
  if (!(horizon > 0.0) || steps == 0) {
    if (steps == 0) return {0.0};
    throw InputError("uniform_grid: horizon must be positive");
  }
  std::vector<double> t(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) t[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
  return t;
}

/// Uniform grid from a mesh; the step count is round(horizon / mesh).
inline std::vector<double> grid_from_mesh(double mesh, double horizon) {
  if (!(mesh > 0.0) || !(horizon > 0.0)) throw InputError("grid_from_mesh: mesh and horizon must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(horizon / mesh));
  if (steps == 0) throw InputError("grid_from_mesh: mesh larger than horizon");
  return uniform_grid(horizon, steps);
}

/// Path whose values are f(t) on the grid.
template <class F>
SampledPath sample_function(std::span<const double> grid, F&& f) {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid[i]);
  return SampledPath(std::vector<double>(grid.begin(), grid.end()), std::move(v));
}

/// The state interval I = (ell, r) with a start point and exhausting
/// localizers (ell_n, r_n). Unless `localizer` is set, a finite endpoint e
/// gives e -/+ |x0 - e| / (n + 1) and an infinite one gives x0 -/+ n.
struct StateInterval {
  double ell = -kInf;
  double r = kInf;
  double x0 = 0.0;
  std::function<std::pair<double, double>(int)> localizer;

  StateInterval() = default;
  StateInterval(double ell_, double r_, double x0_) : ell(ell_), r(r_), x0(x0_) { validate(); }

  void validate() const {
    if (!(ell < x0 && x0 < r)) throw InputError("StateInterval: need ell < x0 < r");
  }

  bool contains(double x) const noexcept { return x > ell && x < r; }

  double ell_n(int n) const {
    if (n < 1) throw InputError("StateInterval: localizer level must be >= 1");
    if (localizer) return localizer(n).first;
    if (std::isinf(ell)) return x0 - n;
    return ell + std::abs(x0 - ell) / (n + 1.0);
  }
  double r_n(int n) const {
    if (n < 1) throw InputError("StateInterval: localizer level must be >= 1");
    if (localizer) return localizer(n).second;
    if (std::isinf(r)) return x0 + n;
    return r - std::abs(r - x0) / (n + 1.0);
  }
};

// CSV: header `t,value,absorbed`; values printed with 17 significant digits.

inline void write_csv(std::ostream& os, const SampledPath& p) {
  os << "t,value,absorbed\n";
  for (std::size_t i = 0; i < p.size(); ++i)
    os << format_double(p.time(i)) << ',' << format_double(p[i]) << ',' << (p.is_absorbed(i) ? 1 : 0) << '\n';
}

inline SampledPath read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("read_csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,value,absorbed") throw InputError("read_csv: bad header '" + line + "'");
  std::vector<double> t, v;
  std::optional<std::size_t> absorbed;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw InputError("read_csv: row " + std::to_string(row + 1) + " needs three fields");
    t.push_back(parse_double(std::string_view(line).substr(0, c1)));
    v.push_back(parse_double(std::string_view(line).substr(c1 + 1, c2 - c1 - 1)));
    const auto flag = std::string_view(line).substr(c2 + 1);
    if (flag == "1") {
      if (!absorbed) absorbed = row;
    } else if (flag != "0") {
      throw InputError("read_csv: absorbed flag must be 0 or 1");
    } else if (absorbed) {
      throw InputError("read_csv: absorbed path cannot revive");
    }
    ++row;
  }
  return SampledPath(std::move(t), std::move(v), absorbed);
}

}  // namespace pathwise
