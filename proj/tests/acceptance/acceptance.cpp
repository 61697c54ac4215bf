// Acceptance suite: one line per criterion, `criterion NN PASS|FAIL name: detail`.
// Run with no arguments for all twelve, or with criterion numbers.

#include <pathwise/pathwise.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

using namespace pathwise;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const StateInterval kLine(-kInf, kInf, 0.0);

DispersionSpec skew_spec() { return {kLine, {0.0}, {form::Constant{1.0}, form::Constant{2.0}}}; }

SampledPath skew_state(const SampledPath& w, const SpaceTransform& t) {
  AssembleOptions ao;
  ao.with_localtime = false;
  return assemble_x(solve(StateFree{}, w, t), w, t, ao).x;
}

AbsolutelyContinuous ou_drift() {
  AbsolutelyContinuous d;
  d.b = [](double, double, double x) { return -x; };
  d.lipschitz = [](int) { return 1.0; };
  return d;
}

SampledPath every(const SampledPath& fine, std::size_t stride) {
  std::vector<double> t, v;
  for (std::size_t i = 0; i < fine.size(); i += stride) {
    t.push_back(fine.time(i));
    v.push_back(fine[i]);
  }
  return SampledPath(std::move(t), std::move(v));
}

// 1. rho = 1, sigma = 2: X = 2 omega+ - omega-.
Outcome skew_closed_form() {
  const SpaceTransform t = build_transform(skew_spec(), 0.0);
  const auto grid = uniform_grid(1.0, 10000);
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SampledPath w = gen_brownian(grid, seed);
    const SampledPath x = skew_state(w, t);
    for (std::size_t i = 0; i < w.size(); ++i)
      worst = std::max(worst, std::abs(x[i] - (2.0 * std::max(w[i], 0.0) - std::max(-w[i], 0.0))));
  }
  return {worst <= 1e-12, "sup error " + num(worst) + " over 10 seeds, N = 10^4 (bound 1e-12)"};
}

// 2. s = x^2, x0 = 1, B = t, omega = 0 explodes at 1 / x0.
Outcome explosion_time() {
  const double h = 1e-4;
  const SpaceTransform t = build_transform({StateInterval(0.0, kInf, 1.0), {}, {form::Power{2.0, 1.0}}}, 1.0);
  const SampledPath z = sample_function(grid_from_mesh(h, 2.0), [](double) { return 0.0; });
  const SieSolution sie = assemble_x(solve(StateFree{[](double tt) { return tt; }}, z, t), z, t);
  const bool ok = sie.explosion_time >= 1.0 - h && sie.explosion_time <= 1.0 + h;
  return {ok, "explosion_time " + format_double(sie.explosion_time) + " in [1 - h, 1 + h], h = 1e-4"};
}

// 3. s(x) = x, A(x) = e^{-x}, B = t: X = (1 + t) exp(W).
Outcome exponential_gain() {
  const SpaceTransform t = build_transform({StateInterval(0.0, kInf, 1.0), {}, {form::Linear{0.0, 1.0}}}, 1.0);
  const GainModulated g{DispersionSpec{kLine, {}, {form::Exponential{-1.0, 1.0}}}, StateFree{[](double tt) { return tt; }}};
  const auto grid = grid_from_mesh(1e-4, 1.0);
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SampledPath w = gen_brownian(grid, seed);
    AssembleOptions ao;
    ao.with_localtime = false;
    const SieSolution sie = assemble_x(solve(g, w, t), w, t, ao);
    for (std::size_t i = 0; i < w.size(); ++i)
      worst = std::max(worst, std::abs(sie.x[i] - (1.0 + grid[i]) * std::exp(w[i])));
  }
  return {worst <= 1e-9, "sup error " + num(worst) + " over 10 seeds, h = 1e-4 (bound 1e-9)"};
}

// 4. H(Theta(w)) = w and Theta_{Theta_c(g)}(w) = Theta_c(g + w) for every form.
Outcome transform_identities() {
  struct Case {
    const char* name;
    DispersionSpec spec;
    double lo, hi;  // anchor range
  };
  const std::vector<Case> cases{
      {"constant", {kLine, {0.0}, {form::Constant{1.0}, form::Constant{3.0}}}, -2.0, 2.0},
      {"linear", {StateInterval(0.0, kInf, 1.0), {}, {form::Linear{0.0, 1.0}}}, 0.2, 5.0},
      {"power", {StateInterval(0.0, kInf, 1.0), {}, {form::Power{1.5, 0.7}}}, 0.2, 5.0},
      {"exp", {kLine, {}, {form::Exponential{0.8, 1.3}}}, -2.0, 2.0},
      {"table", {kLine, {}, {form::Tabulated{{-1.0, 0.0, 0.5, 2.0}, {1.0, 2.5, 0.6, 1.8}}}}, -2.0, 2.0}};
  rng::CounterStream s(rng::split(2024, 4));
  double worst_rt = 0.0, worst_comp = 0.0;
  std::size_t skipped = 0;
  std::string worst_name;
  for (const auto& c : cases) {
    const SpaceTransform t = build_transform(c.spec, c.spec.interval.x0);
    std::vector<CompositionSample> samples;
    for (int i = 0; i < 10000; ++i) {
      const double anchor = c.lo + (c.hi - c.lo) * s.next_uniform();
      const double g = 2.0 * s.next_uniform() - 1.0, w = 2.0 * s.next_uniform() - 1.0;
      samples.push_back({anchor, g, w});
      if (t.in_domain(w)) {
        const double e = std::abs(t.H(t.theta(w)) - w) / (1.0 + std::abs(w));
        if (e > worst_rt) {
          worst_rt = e;
          worst_name = c.name;
        }
      }
    }
    const CompositionReport r = composition_check(t, samples);
    worst_comp = std::max(worst_comp, r.max_error);
    skipped += r.skipped;
  }
  const bool ok = worst_rt <= 1e-10 && worst_comp <= 1e-10;
  return {ok, "round trip " + num(worst_rt) + ", composition " + num(worst_comp) + " (relative, bound 1e-10; " +
                  std::to_string(skipped) + " of 50000 samples outside the domain)"};
}

// 5. Band estimate against the Tanaka oracle, BM, xi = 0, N = 2^20.
Outcome local_time_tanaka() {
  const auto c0 = std::chrono::steady_clock::now();
  const SampledPath w = gen_brownian(uniform_grid(1.0, 1 << 20), 1);
  const double est = local_time(w, 0.0, LocalTimeConfig{}).value.values().back();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();
  const double oracle = 0.5 * tanaka_oracle(w, 0.0).values().back();
  const double err = std::abs(est - oracle);
  const bool ok = err <= 0.05 * oracle + 0.05 && secs <= 30.0;
  return {ok, "L = " + num(est) + ", Tanaka " + num(oracle) + ", error " + num(err) + " (bound " +
                  num(0.05 * oracle + 0.05) + "), " + num(secs) + " s"};
}

// 6. L(T, 0-) / L(T, 0) against s(0) / s(0+) = 1/2, pooled over 20 paths.
Outcome balance_equation() {
  const SpaceTransform t = build_transform(skew_spec(), 0.0);
  const auto grid = uniform_grid(1.0, 1 << 20);
  std::vector<SampledPath> xs;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) xs.push_back(skew_state(gen_brownian(grid, seed), t));
  const BalanceReport b = balance_check_pooled(xs, skew_spec(), 0.0);
  const bool ok = !b.inconclusive && std::abs(b.ratio - 0.5) <= 0.2 * 0.5;
  return {ok, "pooled ratio " + num(b.ratio) + " (target 0.5 +- 20%), N = 2^20, 20 paths"};
}

// 7. Wong-Zakai on s = 1, b = -x.
Outcome wong_zakai_trend() {
  const SpaceTransform t = build_transform({StateInterval(-kInf, kInf, 0.5), {}, {form::Constant{1.0}}}, 0.5);
  const ConvergenceReport r = wong_zakai(ou_drift(), t, 1);
  std::string errs;
  for (std::size_t k = 0; k < r.errors.size(); ++k) errs += (k ? " " : "") + num(r.errors[k]);
  const double bound = 0.01 * r.range;
  const bool ok = r.pass() && r.errors.back() <= bound;
  return {ok, "e_4..e_10 = [" + errs + "], monotone " + (r.monotone ? "yes" : "no") + ", e_10 " +
                  num(r.errors.back()) + " vs 0.01 range " + num(bound) + " (node-only e_10 " +
                  num(r.node_errors.back()) + ")"};
}

// 8. b_hat = b - 0.5 from x0 - 0.1 stays below the maximal solution.
Outcome comparison() {
  const SpaceTransform t = build_transform({kLine, {}, {form::Constant{1.0}}}, 0.0);
  const auto grid = uniform_grid(1.0, 256);
  SolveOptions o;
  o.tol = 1e-7;
  SolveOptions ho = o;
  ho.initial_gamma = t.H(-0.1);
  AbsolutelyContinuous lower = ou_drift(), upper = ou_drift();
  lower.b = [](double, double, double x) { return -x - 0.5; };
  upper.b = [](double, double, double x) { return -x + 0.5; };
  double worst = 0.0;
  std::size_t control_failures = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const SampledPath w = gen_brownian(grid, seed);
    const OfeSolution bar = maximal_solution(ou_drift(), w, t, o);
    worst = std::max(worst, compare(solve_caratheodory(lower, w, t, ho), bar, 1e-6).max_violation);
    if (seed <= 10 && !compare(solve_caratheodory(upper, w, t, ho), bar, 1e-6).pass) ++control_failures;
  }
  const bool ok = worst <= 1e-6 && control_failures == 10;
  return {ok, "max violation " + num(worst) + " over 100 seeds (bound 1e-6); reversed control failed on " +
                  std::to_string(control_failures) + "/10 seeds"};
}

// 9. KS of the skew law and calibration of the identity model.
Outcome distribution() {
  const auto skew_cdf = [](double x) { return x > 0.0 ? normal_cdf(x / 2.0) : normal_cdf(x); };
  const KsReport k = ks_validate(KsModel{skew_spec()}, 10000, 1.0, skew_cdf, 9, 1);
  int ok_reps = 0;
  for (int m = 0; m < 100; ++m)
    ok_reps += ks_validate(KsModel{{kLine, {}, {form::Constant{1.0}}}}, 10000, 1.0, normal_cdf, 1000 + m, 1).pass;
  const bool ok = k.pass && ok_reps >= 95;
  return {ok, "skew D = " + num(k.statistic) + " (bound " + num(k.threshold) + "), identity calibration " +
                  std::to_string(ok_reps) + "/100 (need 95)"};
}

// 10. Integral-equation residuals.
Outcome sie_residuals() {
  const SpaceTransform ts = build_transform(skew_spec(), 0.0);
  const auto grid = uniform_grid(1.0, 1 << 20);
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SampledPath w = gen_brownian(grid, seed);
    AssembleOptions ao;
    ao.with_localtime = false;
    const SieSolution sie = assemble_x(solve(StateFree{}, w, ts), w, ts, ao);
    const ResidualReport r = sie_residual(sie, w, StateFree{}, ts);
    worst_ratio = std::max(worst_ratio, r.residual / r.sup_abs_x);
  }
  const SpaceTransform t1 = build_transform({StateInterval(-kInf, kInf, 0.5), {}, {form::Constant{1.0}}}, 0.5);
  const SampledPath w = gen_brownian(uniform_grid(1.0, 1 << 16), 3);
  SolveOptions o;
  o.tol = 1e-9;
  AssembleOptions ao;
  ao.with_localtime = false;
  const SieSolution sie = assemble_x(solve_caratheodory(ou_drift(), w, t1, o), w, t1, ao);
  const double unit = sie_residual(sie, w, ou_drift(), t1).residual;
  const bool ok = worst_ratio <= 0.05 && unit <= 1e-3;
  return {ok, "skew residual / sup|X| " + num(worst_ratio) + " (worst of 10 seeds, bound 0.05); s = 1 residual " +
                  num(unit) + " (bound 1e-3)"};
}

// 11. Error against the half-mesh solution, RMS over 16 paths.
Outcome solver_order() {
  const SpaceTransform t = build_transform({StateInterval(-kInf, kInf, 0.5), {}, {form::Constant{1.0}}}, 0.5);
  const int base = 13;
  const auto grid = uniform_grid(1.0, std::size_t{1} << base);
  std::vector<double> ms(5, 0.0);
  const int paths = 16;
  for (int p = 0; p < paths; ++p) {
    const SampledPath w = gen_brownian(grid, 300 + p);
    std::vector<SampledPath> g;
    for (int level = 8; level <= 13; ++level) {
      SolveOptions o;
      o.tol = 1e-10;
      g.push_back(solve_caratheodory(ou_drift(), every(w, std::size_t{1} << (base - level)), t, o).gamma);
    }
    for (int j = 0; j < 5; ++j) {
      double e = 0.0;
      for (std::size_t i = 0; i < g[j].size(); ++i) e = std::max(e, std::abs(g[j][i] - g[j + 1][2 * i]));
      ms[j] += e * e / paths;
    }
  }
  bool ok = true;
  std::string ratios;
  for (int j = 0; j < 4; ++j) {
    const double r = std::sqrt(ms[j] / ms[j + 1]);
    ok = ok && r >= 1.5;
    ratios += (j ? " " : "") + num(r);
  }
  return {ok, "halving ratios for h = 2^-8..2^-12: [" + ratios + "] (need >= 1.5)"};
}

// 12. b = sqrt|x| from 0: the maximal solution is t^2 / 4.
Outcome peano_maximal() {
  const SpaceTransform t = build_transform({kLine, {}, {form::Constant{1.0}}}, 0.0);
  const SampledPath z = sample_function(uniform_grid(1.0, 1024), [](double) { return 0.0; });
  AbsolutelyContinuous pe;
  pe.b = [](double, double, double x) { return std::sqrt(std::abs(x)); };
  SolveOptions o;
  o.tol = 1e-8;
  const OfeSolution m = maximal_solution(pe, z, t, o);
  const OfeSolution zero = solve_caratheodory(pe, z, t, o);
  const double err = std::abs(m.gamma.values().back() - 0.25);
  bool below = true;
  for (std::size_t i = 1; i < z.size(); ++i) below = below && zero.gamma[i] < m.gamma[i];
  const bool ok = err <= 10.0 * o.tol && below && zero.gamma.values().back() == 0.0;
  return {ok, "|Gamma(1) - 1/4| = " + num(err) + " (bound 1e-7), zero solution strictly below: " +
                  (below ? "yes" : "no")};
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{{1, "skew closed form", skew_closed_form},
                                   {2, "explosion time", explosion_time},
                                   {3, "exponential gain", exponential_gain},
                                   {4, "transform identities", transform_identities},
                                   {5, "local time vs Tanaka", local_time_tanaka},
                                   {6, "balance equation", balance_equation},
                                   {7, "Wong-Zakai trend", wong_zakai_trend},
                                   {8, "comparison", comparison},
                                   {9, "distribution", distribution},
                                   {10, "integral-equation residual", sie_residuals},
                                   {11, "solver order", solver_order},
                                   {12, "Peano maximal solution", peano_maximal}};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.number) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %02d %s %s: %s [%.1f s]\n", c.number, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
