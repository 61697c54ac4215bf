#pragma once

// Command-line driver: reads a run configuration, runs one subcommand and
// commits its artifacts to the output directory in one step.

#include <pathwise/assemble.hpp>
#include <pathwise/config.hpp>
#include <pathwise/drift.hpp>
#include <pathwise/errors.hpp>
#include <pathwise/experiments.hpp>
#include <pathwise/ofe_solver.hpp>
#include <pathwise/path.hpp>
#include <pathwise/pathkit.hpp>
#include <pathwise/transform.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace pathwise {

namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

/// Files produced by a run, held in memory until the run has finished.
class Artifacts {
 public:
  std::ostringstream& file(const std::string& relative) { return files_[relative]; }

  /// Writes everything under a staging directory next to `dir` and renames
  /// each file into place; nothing is touched when the run failed earlier.
  void commit(const std::filesystem::path& dir, std::uint64_t hash) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path staging = dir / (".staging-" + hex64(hash));
    fs::remove_all(staging);
    for (const auto& [rel, body] : files_) {
      const fs::path p = staging / rel;
      fs::create_directories(p.parent_path());
      std::ofstream os(p, std::ios::binary);
      os << body.str();
      if (!os) throw std::runtime_error("cannot write " + p.string());
    }
    for (const auto& [rel, body] : files_) {
      const fs::path target = dir / rel;
      fs::create_directories(target.parent_path());
      fs::rename(staging / rel, target);
    }
    fs::remove_all(staging);
  }

  const std::map<std::string, std::ostringstream>& files() const { return files_; }

 private:
  std::map<std::string, std::ostringstream> files_;
};

/// `key = value` report lines.
class Report {
 public:
  explicit Report(std::ostream& os) : os_(os) {}
  Report& kv(const std::string& k, double v) {
    os_ << k << " = " << format_double(v) << '\n';
    return *this;
  }
  Report& kv(const std::string& k, const std::string& v) {
    os_ << k << " = " << v << '\n';
    return *this;
  }
  Report& kv(const std::string& k, bool v) { return kv(k, std::string(v ? "true" : "false")); }
  template <std::integral I>
    requires(!std::same_as<I, bool>)
  Report& kv(const std::string& k, I v) {
    return kv(k, std::to_string(v));
  }

 private:
  std::ostream& os_;
};

inline void header(Report& r, const RunConfig& c, const std::string& command) {
  r.kv("command", command)
      .kv("scenario", c.scenario)
      .kv("config_hash", hex64(c.hash))
      .kv("mesh", c.mesh)
      .kv("horizon", c.horizon);
  std::string seeds;
  for (std::size_t i = 0; i < c.seeds.size(); ++i) seeds += (i ? "," : "") + std::to_string(c.seeds[i]);
  r.kv("seeds", seeds);
}

inline SampledPath noise_path(const RunConfig& c, std::uint64_t seed) {
  const std::vector<double> grid = grid_from_mesh(c.mesh, c.horizon);
  std::vector<double> v(grid.size(), 0.0);
  if (c.noise == NoiseKind::brownian && c.noise_scale != 0.0) {
    const SampledPath w = gen_brownian(grid, seed);
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = c.noise_scale * w[i];
  }
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] += c.noise_drift * grid[i];
  return SampledPath(grid, std::move(v));
}

inline SolveOptions solve_options(const RunConfig& c) {
  SolveOptions o;
  o.tol = c.tol;
  o.n_max = c.n_max;
  o.explosion_level = c.explosion_level;
  return o;
}

inline OfeSolution solve_config(const RunConfig& c, const SampledPath& omega, const SpaceTransform& t) {
  if (c.drift_kind == DriftKind::localtime)
    throw InputError("a local-time drift is checked on given paths, it has no solver");
  return solve(c.drift, omega, t, solve_options(c));
}

inline const AbsolutelyContinuous& state_drift(const RunConfig& c, const std::string& command) {
  if (c.drift_kind != DriftKind::ac && c.drift_kind != DriftKind::none)
    throw InputError(command + ": needs drift type ac or none");
  return c.ac;
}

inline void write_localtime(std::ostream& os, const LocalTimeField& f) {
  os << "t";
  for (double l : f.levels) os << ",L(" << format_double(l) << ")";
  os << '\n';
  for (std::size_t row = 0; row < f.times.size(); ++row) {
    os << format_double(f.times[row]);
    for (double v : f.values[row]) os << ',' << format_double(v);
    os << '\n';
  }
}

inline std::string seed_dir(std::uint64_t seed) { return "seed_" + std::to_string(seed) + "/"; }

// ------------------------------------------------------------- subcommands

inline int cmd_transform(const RunConfig& c, Artifacts& out) {
  const SpaceTransform t = build_transform(c.disp, c.disp.interval.x0);
  const int n = c.transform_points;
  std::ostringstream& h = out.file("transform/H.csv");
  h << "x,H(x)\n";
  double roundtrip = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = c.transform_x_lo + (c.transform_x_hi - c.transform_x_lo) * i / (n - 1);
    if (!c.disp.interval.contains(x)) throw InputError("transform: x grid leaves the state interval");
    const double y = t.H(x);
    h << format_double(x) << ',' << format_double(y) << '\n';
    if (std::isfinite(y)) roundtrip = std::max(roundtrip, std::abs(t.theta(y) - x) / (1.0 + std::abs(x)));
  }
  std::ostringstream& th = out.file("transform/Theta.csv");
  th << "w,Theta(w)\n";
  std::vector<double> ws;
  std::size_t outside = 0;
  for (int i = 0; i < n; ++i) {
    const double w = c.transform_w_lo + (c.transform_w_hi - c.transform_w_lo) * i / (n - 1);
    if (!t.in_domain(w)) {
      ++outside;
      continue;
    }
    ws.push_back(w);
    th << format_double(w) << ',' << format_double(t.theta(w)) << '\n';
  }
  const auto [lo_inf, hi_inf] = t.barrow_osgood();
  Report r(out.file("transform/summary.txt"));
  header(r, c, "transform");
  r.kv("barrow_osgood_left", lo_inf)
      .kv("barrow_osgood_right", hi_inf)
      .kv("barrow_osgood_heuristic", t.barrow_osgood_heuristic())
      .kv("ell_tilde", t.ell_tilde())
      .kv("r_tilde", t.r_tilde())
      .kv("roundtrip_max_rel_error", roundtrip)
      .kv("theta_integral_residual", ws.empty() ? 0.0 : theta_residual(t, ws))
      .kv("theta_points_outside_domain", outside);
  return kExitOk;
}

inline int cmd_solve(const RunConfig& c, Artifacts& out) {
  const SpaceTransform t = build_transform(c.disp, c.disp.interval.x0);
  for (std::uint64_t seed : c.seeds) {
    const SampledPath omega = noise_path(c, seed);
    OfeSolution sol;
    try {
      sol = solve_config(c, omega, t);
    } catch (const SolverError& e) {
      throw SolverError("scenario " + c.scenario + ", seed " + std::to_string(seed) + ": " + e.what());
    }
    AssembleOptions ao;
    ao.localtime = c.localtime;
    const SieSolution sie = assemble_x(sol, omega, t, ao);
    const std::string dir = seed_dir(seed);
    write_csv(out.file(dir + "x.csv"), sie.x);
    write_csv(out.file(dir + "c.csv"), sie.c);
    write_localtime(out.file(dir + "localtime.csv"), sie.localtime);
    const ResidualReport res = sie_residual(sie, omega, c.drift, t, c.localtime);
    Report r(out.file(dir + "report.txt"));
    header(r, c, "solve");
    r.kv("seed", seed)
        .kv("residual_sup", sol.residual_sup)
        .kv("error_bound", sol.error_bound)
        .kv("substeps", sol.substeps)
        .kv("stop_time", sol.stop_time)
        .kv("explosion_time", sie.explosion_time)
        .kv("r_time", sie.r_time)
        .kv("exploded", sol.exploded)
        .kv("sie_residual", res.residual)
        .kv("sup_abs_x", res.sup_abs_x)
        .kv("localtime_bandwidth", sie.localtime.bandwidth)
        .kv("localtime_unreliable", sie.localtime.unreliable);
  }
  return kExitOk;
}

/// Per seed: the solver residual, the integral-equation residual against
/// residual_rel_tol * sup|X|, and for drift-free runs X = Theta_{x0}(omega).
inline int cmd_validate(const RunConfig& c, Artifacts& out) {
  const SpaceTransform t = build_transform(c.disp, c.disp.interval.x0);
  bool all = true;
  std::ostringstream& table = out.file("validate/seeds.csv");
  table << "seed,sie_residual,sup_abs_x,closed_form_error,solver_residual,pass\n";
  std::vector<SampledPath> states;
  for (std::uint64_t seed : c.seeds) {
    const SampledPath omega = noise_path(c, seed);
    const OfeSolution sol = solve_config(c, omega, t);
    AssembleOptions ao;
    ao.with_localtime = false;
    const SieSolution sie = assemble_x(sol, omega, t, ao);
    const ResidualReport res = sie_residual(sie, omega, c.drift, t, c.localtime);
    double closed = 0.0;
    if (c.drift_kind == DriftKind::none && c.ac.b(0.0, 0.0, c.disp.interval.x0) == 0.0)
      for (std::size_t i = 0; i < sie.x.live_size(); ++i)
        closed = std::max(closed, std::abs(sie.x[i] - t.theta(omega[i])));
    const bool ok = res.residual <= c.residual_rel_tol * std::max(res.sup_abs_x, 1e-300) && closed <= 1e-12 &&
                    sol.residual_sup <= std::max(10.0 * c.tol, 1e-9);
    all = all && ok;
    table << seed << ',' << format_double(res.residual) << ',' << format_double(res.sup_abs_x) << ','
          << format_double(closed) << ',' << format_double(sol.residual_sup) << ',' << (ok ? "true" : "false")
          << '\n';
    states.push_back(sie.x);
  }
  Report r(out.file("validate/summary.txt"));
  header(r, c, "validate");
  r.kv("residual_rel_tol", c.residual_rel_tol);
  for (const auto& j : c.disp.jumps()) {
    const BalanceReport b = balance_check_pooled(states, c.disp, j.at);
    const std::string at = format_double(j.at);
    r.kv("balance_ratio(" + at + ")", b.ratio)
        .kv("balance_expected(" + at + ")", b.expected)
        .kv("balance_inconclusive(" + at + ")", b.inconclusive);
  }
  r.kv("pass", all);
  return all ? kExitOk : kExitFailure;
}

inline int cmd_wz(const RunConfig& c, Artifacts& out) {
  const AbsolutelyContinuous& d = state_drift(c, "wz");
  const SpaceTransform t = build_transform(c.disp, c.disp.interval.x0);
  WongZakaiOptions o;
  o.horizon = c.horizon;
  o.base_level = c.wz_base_level;
  o.k_min = c.wz_k_min;
  o.k_max = c.wz_k_max;
  o.tol = c.tol;
  o.slack = c.wz_slack;
  bool all = true;
  Report r(out.file("wz/summary.txt"));
  header(r, c, "wz");
  for (std::uint64_t seed : c.seeds) {
    const ConvergenceReport rep = wong_zakai(d, t, seed, o);
    std::ostringstream& csv = out.file("wz/" + seed_dir(seed) + "convergence.csv");
    csv << "level,error,node_error,stop_time\n";
    for (std::size_t k = 0; k < rep.levels.size(); ++k)
      csv << rep.levels[k] << ',' << format_double(rep.errors[k]) << ',' << format_double(rep.node_errors[k]) << ','
          << format_double(rep.stop_times[k]) << '\n';
    const std::string p = "seed_" + std::to_string(seed) + ".";
    r.kv(p + "range", rep.range)
        .kv(p + "last_error_over_range", rep.range > 0.0 ? rep.errors.back() / rep.range : 0.0)
        .kv(p + "monotone", rep.monotone)
        .kv(p + "stop_ok", rep.stop_ok);
    all = all && rep.pass();
  }
  r.kv("pass", all);
  return all ? kExitOk : kExitFailure;
}

/// Gamma_bar is the maximal solution for b; Gamma_hat solves with
/// b + hat_shift from x0 + x0_shift. Ordered data must give hat <= bar.
inline int cmd_compare(const RunConfig& c, Artifacts& out) {
  const AbsolutelyContinuous& d = state_drift(c, "compare");
  const SpaceTransform t = build_transform(c.disp, c.disp.interval.x0);
  const double x_hat0 = c.disp.interval.x0 + c.compare_x0_shift;
  if (!c.disp.interval.contains(x_hat0)) throw InputError("compare: shifted start leaves the state interval");
  AbsolutelyContinuous hat = d;
  hat.b = [b = d.b, s = c.compare_hat_shift](double tt, double w, double x) { return b(tt, w, x) + s; };
  SolveOptions ho = solve_options(c);
  ho.initial_gamma = t.H(x_hat0);
  bool all = true;
  double worst = 0.0;
  std::ostringstream& csv = out.file("compare/seeds.csv");
  csv << "seed,max_violation,pass\n";
  for (std::uint64_t seed : c.seeds) {
    const SampledPath omega = noise_path(c, seed);
    const OfeSolution bar = maximal_solution(d, omega, t, solve_options(c));
    const OfeSolution h = solve_caratheodory(hat, omega, t, ho);
    const ComparisonResult cr = compare(h, bar, c.compare_tol);
    csv << seed << ',' << format_double(cr.max_violation) << ',' << (cr.pass ? "true" : "false") << '\n';
    worst = std::max(worst, cr.max_violation);
    all = all && cr.pass;
  }
  Report r(out.file("compare/summary.txt"));
  header(r, c, "compare");
  r.kv("hat_shift", c.compare_hat_shift)
      .kv("x0_shift", c.compare_x0_shift)
      .kv("tol", c.compare_tol)
      .kv("max_violation", worst)
      .kv("pass", all);
  return all ? kExitOk : kExitFailure;
}

inline int cmd_ks(const RunConfig& c, Artifacts& out) {
  if (c.ks_oracle.empty()) throw InputError("ks: [ks] oracle is required");
  const auto cdf = lookup_oracle(c.ks_oracle, c.horizon);
  const KsModel model{c.disp, c.drift};
  bool all = true;
  Report r(out.file("ks/summary.txt"));
  header(r, c, "ks");
  r.kv("oracle", c.ks_oracle).kv("paths", c.ks_paths).kv("steps", c.ks_steps);
  for (std::uint64_t seed : c.seeds) {
    const KsReport k = ks_validate(model, c.ks_paths, c.horizon, cdf, seed, c.ks_steps);
    const std::string p = "seed_" + std::to_string(seed) + ".";
    r.kv(p + "statistic", k.statistic).kv(p + "threshold", k.threshold).kv(p + "exploded", k.exploded);
    all = all && k.pass;
  }
  r.kv("pass", all);
  return all ? kExitOk : kExitFailure;
}

/// Reports spreads only; there is no pass/fail verdict for this probe.
inline int cmd_davie(const RunConfig& c, Artifacts& out) {
  const AbsolutelyContinuous& d = state_drift(c, "davie");
  DavieOptions o;
  o.x0 = c.disp.interval.x0;
  o.horizon = c.horizon;
  o.steps = grid_from_mesh(c.mesh, c.horizon).size() - 1;
  o.tol = c.tol;
  const DavieReport rep = davie_probe([b = d.b](double x) { return b(0.0, 0.0, x); }, c.seeds, c.davie_deltas, o);
  std::ostringstream& csv = out.file("davie/spread.csv");
  csv << "delta,seed,spread\n";
  for (std::size_t j = 0; j < rep.deltas.size(); ++j) {
    for (std::size_t s = 0; s < rep.seeds.size(); ++s)
      csv << format_double(rep.deltas[j]) << ',' << rep.seeds[s] << ',' << format_double(rep.spread[j][s]) << '\n';
    csv << format_double(rep.deltas[j]) << ",control," << format_double(rep.control_spread[j]) << '\n';
  }
  Report r(out.file("davie/summary.txt"));
  header(r, c, "davie");
  const double bound = 10.0 * std::sqrt(rep.mesh);
  r.kv("spread_bound", bound);
  for (std::size_t j = 0; j < rep.deltas.size(); ++j) {
    const std::string p = "delta_" + format_double(rep.deltas[j]) + ".";
    r.kv(p + "seeds_below_bound", rep.count_below(j, bound)).kv(p + "control_spread", rep.control_spread[j]);
  }
  return kExitOk;
}

}  // namespace cli

/// Entry point of the `pathwise` tool. Exit codes: 0 success, 1 failed
/// check or solver failure, 2 configuration or usage error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"pathwise: scale-transform solver for integral equations with discontinuous dispersion"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> mesh, horizon;
  const std::vector<std::string> names{"transform", "solve", "validate", "wz", "compare", "ks", "davie"};
  for (const auto& n : names) {
    CLI::App* sub = app.add_subcommand(n);
    sub->add_option("--config", config_path, "INI run configuration")->required();
    sub->add_option("--seed", seed, "run a single seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--mesh", mesh, "grid mesh h");
    sub->add_option("--horizon", horizon, "horizon T");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? cli::kExitOk : cli::kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    std::ifstream is(config_path, std::ios::binary);
    if (!is) throw InputError("cannot read config file '" + config_path + "'");
    std::ostringstream text;
    text << is.rdbuf();
    cfg = load_config(text.str());
    std::string overrides;
    if (seed) {
      cfg.seeds = {*seed};
      overrides += "seed=" + std::to_string(*seed) + ";";
    }
    if (mesh) {
      if (!(*mesh > 0.0)) throw InputError("--mesh must be positive");
      cfg.mesh = *mesh;
      overrides += "mesh=" + format_double(*mesh) + ";";
    }
    if (horizon) {
      if (!(*horizon > 0.0)) throw InputError("--horizon must be positive");
      cfg.horizon = *horizon;
      overrides += "horizon=" + format_double(*horizon) + ";";
    }
    cfg.hash = fnv1a(overrides, cfg.hash);
    if (const char* env = std::getenv("PATHWISE_OUT"); env && *env) cfg.out_dir = env;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
  } catch (const ConfigError& e) {
    err << config_path << ":" << e.line() << ":" << e.column() << ": " << e.message() << '\n';
    return cli::kExitConfig;
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return cli::kExitConfig;
  }

  cli::Artifacts artifacts;
  int code = cli::kExitOk;
  try {
    if (command == "transform") code = cli::cmd_transform(cfg, artifacts);
    else if (command == "solve") code = cli::cmd_solve(cfg, artifacts);
    else if (command == "validate") code = cli::cmd_validate(cfg, artifacts);
    else if (command == "wz") code = cli::cmd_wz(cfg, artifacts);
    else if (command == "compare") code = cli::cmd_compare(cfg, artifacts);
    else if (command == "ks") code = cli::cmd_ks(cfg, artifacts);
    else code = cli::cmd_davie(cfg, artifacts);
  } catch (const InputError& e) {
    err << command << ": " << e.what() << '\n';
    return cli::kExitConfig;
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << '\n';
    return cli::kExitFailure;
  }
  artifacts.commit(cfg.out_dir, cfg.hash);
  for (const auto& [rel, body] : artifacts.files())
    if (rel.ends_with("summary.txt") || rel.ends_with("report.txt")) out << "== " << rel << '\n' << body.str();
  out << (code == cli::kExitOk ? "ok" : "FAILED") << ' ' << command << " -> " << cfg.out_dir << '\n';
  return code;
}

}  // namespace pathwise
