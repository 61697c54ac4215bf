#pragma once

// Flat INI run configuration: sections of `key = value` lines, parsed with
// line/column diagnostics and resolved against named function registries.

#include <pathwise/dispersion.hpp>
#include <pathwise/drift.hpp>
#include <pathwise/errors.hpp>
#include <pathwise/path.hpp>
#include <pathwise/pathkit.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pathwise {

class ConfigError : public InputError {
 public:
  ConfigError(const std::string& what, int line, int column)
      : InputError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        message_(what),
        line_(line),
        column_(column) {}
  const std::string& message() const noexcept { return message_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  std::string message_;
  int line_;
  int column_;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 15];
  return s;
}

// ------------------------------------------------------------------- INI

struct IniEntry {
  std::string value;
  int line = 0;
  int key_column = 0;
  int value_column = 0;
};

class IniDocument {
 public:
  static IniDocument parse(std::string_view text) {
    IniDocument doc;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t end = std::min(text.find('\n', pos), text.size());
      std::string_view line = text.substr(pos, end - pos);
      ++line_no;
      pos = end + 1;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      const std::size_t first = line.find_first_not_of(" \t");
      if (first == std::string_view::npos || line[first] == ';' || line[first] == '#') {
        if (end == text.size()) break;
        continue;
      }
      const int col = static_cast<int>(first) + 1;
      if (line[first] == '[') {
        const std::size_t close = line.find(']', first);
        if (close == std::string_view::npos)
          throw ConfigError("section header is missing ']'", line_no, static_cast<int>(line.size()) + 1);
        const std::size_t rest = line.find_first_not_of(" \t", close + 1);
        if (rest != std::string_view::npos && line[rest] != ';' && line[rest] != '#')
          throw ConfigError("unexpected text after section header", line_no, static_cast<int>(rest) + 1);
        section = trim(line.substr(first + 1, close - first - 1));
        if (section.empty() || !valid_name(section)) throw ConfigError("invalid section name", line_no, col + 1);
        doc.sections_.insert(section);
      } else {
        const std::size_t eq = line.find('=', first);
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no, col);
        const std::string key = trim(line.substr(first, eq - first));
        if (key.empty() || !valid_name(key)) throw ConfigError("invalid key", line_no, col);
        if (section.empty()) throw ConfigError("key outside of any section", line_no, col);
        std::string_view raw = line.substr(eq + 1);
        const std::size_t vfirst = raw.find_first_not_of(" \t");
        const int vcol = static_cast<int>(eq + 1 + (vfirst == std::string_view::npos ? 0 : vfirst)) + 1;
        const std::string full = section + "." + key;
        if (doc.entries_.count(full)) throw ConfigError("duplicate key '" + key + "'", line_no, col);
        doc.entries_[full] = IniEntry{strip_comment(raw), line_no, col, vcol};
      }
      if (end == text.size()) break;
    }
    return doc;
  }

  const IniEntry* find(const std::string& section, const std::string& key) const {
    const auto it = entries_.find(section + "." + key);
    return it == entries_.end() ? nullptr : &it->second;
  }
  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
  const std::map<std::string, IniEntry>& entries() const { return entries_; }

 private:
  static std::string trim(std::string_view s) {
    const std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string_view::npos) return {};
    const std::size_t b = s.find_last_not_of(" \t");
    return std::string(s.substr(a, b - a + 1));
  }
  static std::string strip_comment(std::string_view s) {
    std::size_t cut = s.size();
    for (std::size_t i = 0; i < s.size(); ++i)
      if ((s[i] == ';' || s[i] == '#') && (i == 0 || s[i - 1] == ' ' || s[i - 1] == '\t')) {
        cut = i;
        break;
      }
    return trim(s.substr(0, cut));
  }
  static bool valid_name(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '-'; });
  }

  std::map<std::string, IniEntry> entries_;
  std::set<std::string> sections_;
};

// ------------------------------------------------------- call expressions

/// `name` or `name(arg, arg, ...)`.
struct CallExpr {
  std::string name;
  std::vector<std::string> args;
};

inline CallExpr parse_call(const std::string& text) {
  CallExpr c;
  const std::size_t open = text.find('(');
  if (open == std::string::npos) {
    c.name = text;
    return c;
  }
  if (text.back() != ')') throw InputError("missing ')'");
  c.name = text.substr(0, open);
  std::string inner = text.substr(open + 1, text.size() - open - 2);
  std::size_t p = 0;
  while (p <= inner.size()) {
    const std::size_t q = std::min(inner.find(',', p), inner.size());
    std::string a = inner.substr(p, q - p);
    a.erase(0, a.find_first_not_of(" \t"));
    a.erase(a.find_last_not_of(" \t") + 1);
    if (!a.empty()) c.args.push_back(a);
    else if (!inner.empty()) throw InputError("empty argument");
    p = q + 1;
    if (q == inner.size()) break;
  }
  while (!c.name.empty() && c.name.back() == ' ') c.name.pop_back();
  return c;
}

inline std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char ch : text) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == sep && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
  }
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

inline std::vector<double> numeric_args(const CallExpr& c, std::size_t n) {
  if (c.args.size() != n)
    throw InputError("'" + c.name + "' takes " + std::to_string(n) + " argument(s), got " + std::to_string(c.args.size()));
  std::vector<double> v;
  for (const auto& a : c.args) v.push_back(parse_double(a));
  return v;
}

/// constant(v), linear(a, b), power(p, coef), exp(rate, coef),
/// table(x:s, x:s, ...).
inline Form parse_form(const std::string& text) {
  const CallExpr c = parse_call(text);
  if (c.name == "constant") return form::Constant{numeric_args(c, 1)[0]};
  if (c.name == "linear") {
    const auto v = numeric_args(c, 2);
    return form::Linear{v[0], v[1]};
  }
  if (c.name == "power") {
    const auto v = numeric_args(c, 2);
    return form::Power{v[0], v[1]};
  }
  if (c.name == "exp" || c.name == "exponential") {
    const auto v = numeric_args(c, 2);
    return form::Exponential{v[0], v[1]};
  }
  if (c.name == "table") {
    form::Tabulated t;
    for (const auto& a : c.args) {
      const std::size_t colon = a.find(':');
      if (colon == std::string::npos) throw InputError("table entries are written x:s");
      t.x.push_back(parse_double(a.substr(0, colon)));
      t.s.push_back(parse_double(a.substr(colon + 1)));
    }
    return t;
  }
  throw InputError("unknown dispersion form '" + c.name + "'");
}

// -------------------------------------------------------------- registries

struct StateFunction {
  std::function<double(double)> f;
  std::optional<double> lipschitz;
  bool continuous = true;
};

/// zero, neg_identity, sqrt_abs, sign, sin, affine(a, c) = a x + c.
inline StateFunction lookup_state_function(const std::string& text) {
  const CallExpr c = parse_call(text);
  if (c.name == "zero") return {[](double) { return 0.0; }, 0.0, true};
  if (c.name == "neg_identity") return {[](double x) { return -x; }, 1.0, true};
  if (c.name == "sqrt_abs") return {[](double x) { return std::sqrt(std::abs(x)); }, std::nullopt, true};
  if (c.name == "sign") return {[](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }, std::nullopt, false};
  if (c.name == "sin") return {[](double x) { return std::sin(x); }, 1.0, true};
  if (c.name == "affine") {
    const auto v = numeric_args(c, 2);
    const double a = v[0], k = v[1];
    return {[a, k](double x) { return a * x + k; }, std::abs(a), true};
  }
  throw InputError("unknown state function '" + c.name + "'");
}

/// zero, t, scaled_t(c).
inline std::function<double(double)> lookup_time_function(const std::string& text) {
  const CallExpr c = parse_call(text);
  if (c.name == "zero") return [](double) { return 0.0; };
  if (c.name == "t") return [](double t) { return t; };
  if (c.name == "scaled_t") {
    const double k = numeric_args(c, 1)[0];
    return [k](double t) { return k * t; };
  }
  throw InputError("unknown time function '" + c.name + "'");
}

/// zero, one, indicator_positive; functions of (t, w).
inline std::pair<std::function<double(double, double)>, bool> lookup_noise_integrand(const std::string& text) {
  const CallExpr c = parse_call(text);
  if (c.name == "zero") return {[](double, double) { return 0.0; }, true};
  if (c.name == "one") return {[](double, double) { return 1.0; }, true};
  if (c.name == "indicator_positive") return {[](double, double w) { return w > 0.0 ? 1.0 : 0.0; }, false};
  throw InputError("unknown integrand '" + c.name + "'");
}

/// Closed-form CDFs of X(T): normal(mean, sd), skew(rho, sigma) for
/// Theta_0 of N(0, T), lognormal(scale) for scale * exp(N(0, T)).
inline std::function<double(double)> lookup_oracle(const std::string& text, double horizon) {
  const CallExpr c = parse_call(text);
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  const double sd = std::sqrt(horizon);
  if (c.name == "normal") {
    const auto v = numeric_args(c, 2);
    return [=](double x) { return phi((x - v[0]) / v[1]); };
  }
  if (c.name == "skew") {
    const auto v = numeric_args(c, 2);
    return [=](double x) { return x > 0.0 ? phi(x / (v[1] * sd)) : phi(x / (v[0] * sd)); };
  }
  if (c.name == "lognormal") {
    const double k = numeric_args(c, 1)[0];
    return [=](double x) { return x <= 0.0 ? 0.0 : phi(std::log(x / k) / sd); };
  }
  throw InputError("unknown oracle '" + c.name + "'");
}

// --------------------------------------------------------------- RunConfig

enum class DriftKind { none, statefree, gain, ac, localtime };
enum class NoiseKind { brownian, zero };

struct RunConfig {
  std::string scenario;
  DispersionSpec disp;
  DriftKind drift_kind = DriftKind::none;
  DriftFunctional drift = StateFree{};
  AbsolutelyContinuous ac;  ///< the drift as a state function (ac and none kinds)
  std::string drift_b;      ///< registry text of b, for reports

  double mesh = 1e-3;
  double horizon = 1.0;
  NoiseKind noise = NoiseKind::brownian;
  double noise_scale = 1.0;
  double noise_drift = 0.0;
  std::vector<std::uint64_t> seeds{1};

  double tol = 1e-8;
  int n_max = 64;
  std::optional<int> explosion_level;
  LocalTimeConfig localtime;

  double residual_rel_tol = 0.05;  ///< validate: SIE residual / sup|X|

  std::size_t ks_paths = 10000;
  std::size_t ks_steps = 1;
  std::string ks_oracle;

  double compare_hat_shift = -0.5;
  double compare_x0_shift = -0.1;
  double compare_tol = 1e-6;

  int wz_base_level = 14;
  int wz_k_min = 4;
  int wz_k_max = 10;
  double wz_slack = 0.05;

  std::vector<double> davie_deltas{0.25, 0x1.0p-10};

  double transform_x_lo = 0.0, transform_x_hi = 0.0;
  double transform_w_lo = -1.0, transform_w_hi = 1.0;
  int transform_points = 11;

  std::string out_dir = "out";
  std::uint64_t hash = 0;
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(const IniDocument& doc) : doc_(doc) {}

  const IniEntry* get(const std::string& section, const std::string& key) {
    used_.insert(section + "." + key);
    return doc_.find(section, key);
  }

  template <class F>
  auto convert(const IniEntry& e, F&& f) -> decltype(f(e.value)) {
    try {
      return f(e.value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ConfigError(ex.what(), e.line, e.value_column);
    }
  }

  double number(const std::string& s, const std::string& k, double def) {
    const IniEntry* e = get(s, k);
    return e ? convert(*e, [](const std::string& v) { return parse_double(v); }) : def;
  }
  double positive(const std::string& s, const std::string& k, double def) {
    const IniEntry* e = get(s, k);
    if (!e) return def;
    const double v = convert(*e, [](const std::string& t) { return parse_double(t); });
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("'" + k + "' must be a positive number", e->line, e->value_column);
    return v;
  }
  long long integer(const std::string& s, const std::string& k, long long def) {
    const IniEntry* e = get(s, k);
    if (!e) return def;
    return convert(*e, [](const std::string& v) {
      std::size_t used = 0;
      const long long n = std::stoll(v, &used);
      if (used != v.size()) throw InputError("not an integer: '" + v + "'");
      return n;
    });
  }
  std::string text(const std::string& s, const std::string& k, const std::string& def) {
    const IniEntry* e = get(s, k);
    return e ? e->value : def;
  }
  bool boolean(const std::string& s, const std::string& k, bool def) {
    const IniEntry* e = get(s, k);
    if (!e) return def;
    if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "0" || e->value == "no") return false;
    throw ConfigError("expected true or false", e->line, e->value_column);
  }

  void reject_unknown() const {
    for (const auto& [full, e] : doc_.entries())
      if (!used_.count(full)) throw ConfigError("unknown key '" + full + "'", e.line, e.key_column);
  }

 private:
  const IniDocument& doc_;
  std::set<std::string> used_;
};

inline std::vector<std::uint64_t> parse_seeds(const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(v, ',')) {
    const std::size_t dots = item.find("..");
    auto num = [](const std::string& t) {
      std::size_t used = 0;
      const unsigned long long n = std::stoull(t, &used);
      if (used != t.size()) throw InputError("not a seed: '" + t + "'");
      return static_cast<std::uint64_t>(n);
    };
    if (dots == std::string::npos) {
      out.push_back(num(item));
    } else {
      const std::uint64_t a = num(item.substr(0, dots)), b = num(item.substr(dots + 2));
      if (b < a) throw InputError("seed range is reversed");
      for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
    }
  }
  if (out.empty()) throw InputError("no seeds given");
  return out;
}

}  // namespace detail

/// Parses and validates a configuration; every problem is reported as a
/// ConfigError pointing at the offending line and column.
inline RunConfig load_config(std::string_view text) {
  const IniDocument doc = IniDocument::parse(text);
  detail::ConfigReader rd(doc);
  RunConfig c;
  c.hash = fnv1a(text);
  c.scenario = rd.text("scenario", "name", "unnamed");

  // dispersion
  {
    const IniEntry* iv = rd.get("dispersion", "interval");
    double ell = -kInf, r = kInf;
    if (iv) {
      const auto parts = split_list(iv->value, ',');
      if (parts.size() != 2) throw ConfigError("interval is written 'ell, r'", iv->line, iv->value_column);
      ell = rd.convert(*iv, [&](const std::string&) { return parse_double(parts[0]); });
      r = rd.convert(*iv, [&](const std::string&) { return parse_double(parts[1]); });
    }
    const IniEntry* x0e = rd.get("dispersion", "x0");
    const double x0 = x0e ? rd.convert(*x0e, [](const std::string& v) { return parse_double(v); }) : 0.0;
    const int at_line = iv ? iv->line : (x0e ? x0e->line : 1);
    try {
      c.disp.interval = StateInterval(ell, r, x0);
    } catch (const std::exception& ex) {
      throw ConfigError(ex.what(), at_line, 1);
    }
    if (const IniEntry* b = rd.get("dispersion", "breaks"))
      c.disp.breaks = rd.convert(*b, [](const std::string& v) {
        std::vector<double> out;
        for (const auto& s : split_list(v, ',')) out.push_back(parse_double(s));
        return out;
      });
    const IniEntry* f = rd.get("dispersion", "forms");
    if (!f) throw ConfigError("missing [dispersion] forms", 1, 1);
    c.disp.forms = rd.convert(*f, [](const std::string& v) {
      std::vector<Form> out;
      for (const auto& s : split_list(v, ';')) out.push_back(parse_form(s));
      return out;
    });
    try {
      c.disp.validate();
    } catch (const std::exception& ex) {
      throw ConfigError(ex.what(), f->line, f->value_column);
    }
  }

  // drift
  {
    const IniEntry* te = rd.get("drift", "type");
    const std::string type = te ? te->value : "none";
    const double shift = rd.number("drift", "shift", 0.0);
    const IniEntry* be = rd.get("drift", "b");
    c.drift_b = be ? be->value : "zero";
    const StateFunction sf =
        be ? rd.convert(*be, [](const std::string& v) { return lookup_state_function(v); }) : lookup_state_function("zero");
    const bool continuous = rd.boolean("drift", "continuous", sf.continuous);
    c.ac.b = [f = sf.f, shift](double, double, double x) { return f(x) + shift; };
    c.ac.continuous = continuous;
    if (sf.lipschitz) c.ac.lipschitz = [l = *sf.lipschitz](int) { return l; };
    const IniEntry* Be = rd.get("drift", "B");
    const IniEntry* betae = rd.get("drift", "beta");
    const IniEntry* ge = rd.get("drift", "gain");
    const IniEntry* ae = rd.get("drift", "atoms");
    StateFree sfree;
    if (Be) sfree.B = rd.convert(*Be, [](const std::string& v) { return lookup_time_function(v); });
    if (betae) {
      auto [fn, cont] = rd.convert(*betae, [](const std::string& v) { return lookup_noise_integrand(v); });
      sfree.beta = fn;
      sfree.continuous = cont;
    }
    if (Be && betae) throw ConfigError("give either B or beta, not both", betae->line, betae->key_column);
    if (type == "none") {
      if (be) throw ConfigError("drift type none takes no 'b'", be->line, be->key_column);
      c.drift_kind = DriftKind::none;
      c.ac.b = [shift](double, double, double) { return shift; };
      c.drift = c.ac;
    } else if (type == "statefree") {
      c.drift_kind = DriftKind::statefree;
      c.drift = sfree;
    } else if (type == "gain") {
      if (!ge) throw ConfigError("gain drift needs 'gain'", te->line, te->value_column);
      GainModulated g;
      g.gain.interval = StateInterval(-kInf, kInf, 0.0);
      g.gain.forms = {rd.convert(*ge, [](const std::string& v) { return parse_form(v); })};
      try {
        g.gain.validate();
      } catch (const std::exception& ex) {
        throw ConfigError(ex.what(), ge->line, ge->value_column);
      }
      g.base = sfree;
      c.drift_kind = DriftKind::gain;
      c.drift = g;
    } else if (type == "ac") {
      c.drift_kind = DriftKind::ac;
      c.drift = c.ac;
    } else if (type == "localtime") {
      LocalTimeMeasure m;
      m.b = [f = sf.f, shift](double x) { return f(x) + shift; };
      if (ae)
        m.atoms = rd.convert(*ae, [](const std::string& v) {
          std::vector<LocalTimeMeasure::Atom> out;
          for (const auto& s : split_list(v, ',')) {
            const std::size_t colon = s.find(':');
            if (colon == std::string::npos) throw InputError("atoms are written at:mass");
            out.push_back({parse_double(s.substr(0, colon)), parse_double(s.substr(colon + 1))});
          }
          return out;
        });
      c.drift_kind = DriftKind::localtime;
      c.drift = m;
    } else {
      throw ConfigError("unknown drift type '" + type + "'", te->line, te->value_column);
    }
  }

  // grid and noise
  c.mesh = rd.positive("grid", "mesh", c.mesh);
  c.horizon = rd.positive("grid", "horizon", c.horizon);
  {
    const IniEntry* ne = rd.get("grid", "noise");
    const std::string n = ne ? ne->value : "brownian";
    if (n == "brownian") c.noise = NoiseKind::brownian;
    else if (n == "zero") c.noise = NoiseKind::zero;
    else throw ConfigError("noise must be brownian or zero", ne->line, ne->value_column);
    c.noise_scale = rd.number("grid", "noise_scale", 1.0);
    if (!(c.noise_scale >= 0.0)) throw ConfigError("noise_scale must be >= 0", ne ? ne->line : 1, 1);
    c.noise_drift = rd.number("grid", "noise_drift", 0.0);
  }
  if (const IniEntry* se = rd.get("seeds", "list"))
    c.seeds = rd.convert(*se, [](const std::string& v) { return detail::parse_seeds(v); });

  // solver and local time
  c.tol = rd.positive("solver", "tol", c.tol);
  c.n_max = static_cast<int>(rd.integer("solver", "n_max", c.n_max));
  if (const IniEntry* e = rd.get("solver", "explosion_level")) {
    const long long n = rd.convert(*e, [](const std::string& v) { return std::stoll(v); });
    if (n < 1) throw ConfigError("explosion_level must be >= 1", e->line, e->value_column);
    c.explosion_level = static_cast<int>(n);
  }
  c.localtime.bandwidth = rd.number("localtime", "bandwidth", 0.0);
  c.localtime.qv_level = static_cast<int>(rd.integer("localtime", "qv_level", 0));
  c.localtime.natural_scale = rd.boolean("localtime", "natural_scale", true);
  if (const IniEntry* e = rd.get("localtime", "side")) {
    if (e->value == "right") c.localtime.side = Side::right;
    else if (e->value == "left") c.localtime.side = Side::left;
    else if (e->value == "symmetric") c.localtime.side = Side::symmetric;
    else throw ConfigError("side must be right, left or symmetric", e->line, e->value_column);
  }
  c.residual_rel_tol = rd.positive("validate", "residual_rel_tol", c.residual_rel_tol);

  c.ks_paths = static_cast<std::size_t>(rd.integer("ks", "paths", static_cast<long long>(c.ks_paths)));
  c.ks_steps = static_cast<std::size_t>(rd.integer("ks", "steps", static_cast<long long>(c.ks_steps)));
  if (const IniEntry* e = rd.get("ks", "oracle")) {
    rd.convert(*e, [&](const std::string& v) { return lookup_oracle(v, c.horizon); });
    c.ks_oracle = e->value;
  }

  c.compare_hat_shift = rd.number("compare", "hat_shift", c.compare_hat_shift);
  c.compare_x0_shift = rd.number("compare", "x0_shift", c.compare_x0_shift);
  c.compare_tol = rd.positive("compare", "tol", c.compare_tol);

  c.wz_base_level = static_cast<int>(rd.integer("wz", "base_level", c.wz_base_level));
  c.wz_k_min = static_cast<int>(rd.integer("wz", "k_min", c.wz_k_min));
  c.wz_k_max = static_cast<int>(rd.integer("wz", "k_max", c.wz_k_max));
  c.wz_slack = rd.positive("wz", "slack", c.wz_slack);

  if (const IniEntry* e = rd.get("davie", "deltas"))
    c.davie_deltas = rd.convert(*e, [](const std::string& v) {
      std::vector<double> out;
      for (const auto& s : split_list(v, ',')) out.push_back(parse_double(s));
      return out;
    });

  {
    const double x0 = c.disp.interval.x0;
    const double lo_default = std::isfinite(c.disp.interval.ell) ? 0.5 * (c.disp.interval.ell + x0) : x0 - 1.0;
    const double hi_default = std::isfinite(c.disp.interval.r) ? 0.5 * (c.disp.interval.r + x0) : x0 + 1.0;
    c.transform_x_lo = rd.number("transform", "x_lo", lo_default);
    c.transform_x_hi = rd.number("transform", "x_hi", hi_default);
    c.transform_w_lo = rd.number("transform", "w_lo", c.transform_w_lo);
    c.transform_w_hi = rd.number("transform", "w_hi", c.transform_w_hi);
    c.transform_points = static_cast<int>(rd.integer("transform", "points", c.transform_points));
    if (c.transform_points < 2) throw ConfigError("transform points must be >= 2", 1, 1);
  }

  c.out_dir = rd.text("output", "dir", c.out_dir);
  rd.reject_unknown();
  return c;
}

}  // namespace pathwise
