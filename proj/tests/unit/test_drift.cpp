#include <pathwise/drift.hpp>
#include <pathwise/pathkit.hpp>
#include <pathwise/transform.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace pathwise;

namespace {

const StateInterval kLine(-kInf, kInf, 0.0);

SampledPath zeros(const std::vector<double>& grid) {
  return sample_function(grid, [](double) { return 0.0; });
}

}  // namespace

TEST(StateFree, ExplicitPathAndIntegrand) {
  const auto grid = uniform_grid(1.0, 100);
  const SampledPath w = gen_brownian(grid, 1);
  const SampledPath b = state_free_increments(StateFree{[](double t) { return t * t; }}, w);
  EXPECT_DOUBLE_EQ(b[50], 0.25);
  StateFree one;
  one.beta = [](double, double) { return 1.0; };
  EXPECT_NEAR(state_free_increments(one, w).values().back(), 1.0, 1e-14);
  EXPECT_THROW(state_free_increments(StateFree{[](double t) { return t + 1.0; }}, w), InputError);
}

TEST(StateFree, DiscontinuousIntegrandUsesLeftPoints) {
  const SampledPath w({0.0, 0.25, 0.5, 0.75, 1.0}, {0.0, 1.0, -1.0, 1.0, 1.0});
  StateFree ind;
  ind.beta = [](double, double x) { return x > 0.0 ? 1.0 : 0.0; };
  EXPECT_DOUBLE_EQ(state_free_increments(ind, w).values().back(), 0.5);
}

TEST(AbsolutelyContinuous, ConstantAndLinearIntegrands) {
  const auto grid = uniform_grid(2.0, 2000);
  const SampledPath w = gen_brownian(grid, 2);
  const SampledPath x = sample_function(grid, [](double t) { return t; });
  AbsolutelyContinuous k;
  k.b = [](double, double, double) { return 3.0; };
  EXPECT_NEAR(drift_increments(k, w, x).values().back(), 6.0, 1e-12);
  AbsolutelyContinuous lin;
  lin.b = [](double, double, double xx) { return xx; };
  // trapezoid is exact for a linear integrand
  EXPECT_NEAR(drift_increments(lin, w, x).values().back(), 2.0, 1e-12);
}

TEST(AbsolutelyContinuous, BlowUpIsAbsorbed) {
  const auto grid = uniform_grid(1.0, 100);
  const SampledPath w = zeros(grid);
  AbsolutelyContinuous huge;
  huge.b = [](double t, double, double) { return t > 0.5 ? 1e20 : 1.0; };
  const SampledPath b = drift_increments(huge, w, w);
  ASSERT_TRUE(b.absorbed_from());
  EXPECT_NEAR(b[*b.absorbed_from() - 1], 0.5, 0.02);
}

TEST(DriftIncrements, RejectsDifferentGrids) {
  EXPECT_THROW(drift_increments(StateFree{}, zeros(uniform_grid(1.0, 10)), zeros(uniform_grid(1.0, 11))), InputError);
}

TEST(GainModulated, UnitGainReproducesTheBase) {
  const auto grid = uniform_grid(1.0, 256);
  const SampledPath w = gen_brownian(grid, 3);
  const SpaceTransform t = build_transform({kLine, {}, {form::Constant{1.0}}}, 0.0);
  GainModulated g{DispersionSpec{kLine, {}, {form::Constant{1.0}}}, StateFree{[](double tt) { return 2.0 * tt; }}};
  const SampledPath b = drift_increments(g, w, w, DriftContext{&t, {}});
  EXPECT_NEAR(b.values().back(), 2.0, 1e-13);
  EXPECT_THROW(drift_increments(g, w, w), InputError);
}

TEST(GainModulated, GainSeesTheTransformedState) {
  // x = omega + 1 gives H(x) - omega = 1, so the integrand is e^{-1}
  const auto grid = uniform_grid(1.0, 256);
  const SampledPath w = gen_brownian(grid, 4);
  std::vector<double> xv(w.values().begin(), w.values().end());
  for (double& v : xv) v += 1.0;
  const SampledPath x(grid, xv);
  const SpaceTransform t = build_transform({kLine, {}, {form::Constant{1.0}}}, 0.0);
  GainModulated g{DispersionSpec{kLine, {}, {form::Exponential{-1.0, 1.0}}}, StateFree{[](double tt) { return tt; }}};
  EXPECT_NEAR(drift_increments(g, w, x, DriftContext{&t, {}}).values().back(), std::exp(-1.0), 1e-13);
}

TEST(LocalTimeMeasure, WithoutAtomsIsTheLebesguePart) {
  const auto grid = uniform_grid(1.0, 512);
  const SampledPath w = gen_brownian(grid, 5);
  const SpaceTransform t = build_transform({kLine, {}, {form::Constant{1.0}}}, 0.0);
  LocalTimeMeasure m;
  m.b = [](double) { return -1.0; };
  EXPECT_NEAR(drift_increments(m, w, w, DriftContext{&t, {}}).values().back(), -1.0, 1e-13);
}

TEST(LocalTimeMeasure, AtomAddsWeightedLocalTime) {
  const auto grid = uniform_grid(1.0, 1 << 14);
  const SampledPath w = gen_brownian(grid, 6);
  const DispersionSpec two{kLine, {}, {form::Constant{2.0}}};
  const SpaceTransform t = build_transform(two, 0.0);
  LocalTimeMeasure m;
  m.atoms = {{0.0, 0.5}};
  const LocalTimeConfig cfg;
  const double lt = local_time(w, 0.0, cfg).value.values().back();
  EXPECT_NEAR(drift_increments(m, w, w, DriftContext{&t, cfg}).values().back(), 0.5 / 2.0 * lt, 1e-12);
}

TEST(Localization, DeclaredLipschitzConstantIsChecked) {
  AbsolutelyContinuous ou;
  ou.b = [](double, double, double x) { return -x; };
  ou.lipschitz = [](int) { return 1.0; };
  EXPECT_TRUE(wz_localization_check(ou, kLine, 3).pass);
  ou.lipschitz = [](int) { return 0.5; };
  EXPECT_FALSE(wz_localization_check(ou, kLine, 3).pass);
  ou.lipschitz = nullptr;
  EXPECT_THROW(wz_localization_check(ou, kLine, 3), InputError);
}
