#include <pathwise/experiments.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace pathwise;

namespace {

const StateInterval kLine(-kInf, kInf, 0.0);

SpaceTransform unit_transform() { return build_transform({kLine, {}, {form::Constant{1.0}}}, 0.0); }

}  // namespace

TEST(Ks, StatisticOfTinySamples) {
  auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  EXPECT_DOUBLE_EQ(ks_statistic({0.5}, uniform), 0.5);
  EXPECT_DOUBLE_EQ(ks_statistic({0.25, 0.75}, uniform), 0.25);
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
}

TEST(Ks, RefusesSmallSamples) {
  EXPECT_THROW(ks_validate(KsModel{{kLine, {}, {form::Constant{1.0}}}}, 50, 1.0, normal_cdf, 1), InputError);
}

TEST(Ks, IdentityModelAgainstTheNormalLaw) {
  const KsReport r = ks_validate(KsModel{{kLine, {}, {form::Constant{1.0}}}}, 2000, 1.0, normal_cdf, 42, 1);
  EXPECT_TRUE(r.pass) << r.statistic << " vs " << r.threshold;
  EXPECT_EQ(r.exploded, 0u);
}

TEST(Ks, WrongLawIsRejected) {
  auto too_wide = [](double x) { return normal_cdf(x / 2.0); };
  EXPECT_FALSE(ks_validate(KsModel{{kLine, {}, {form::Constant{1.0}}}}, 2000, 1.0, too_wide, 42, 1).pass);
}

TEST(WongZakai, DriftFreeErrorIsTheInterpolationError) {
  AbsolutelyContinuous none;
  none.b = [](double, double, double) { return 0.0; };
  WongZakaiOptions o;
  o.base_level = 12;
  const ConvergenceReport r = wong_zakai(none, unit_transform(), 3, o);
  ASSERT_EQ(r.levels.size(), 7u);
  // drift-free: the state error is exactly the noise error sup |W - W_k|
  // on the window [0, min(1, S_1)) with S_1 the exit time of (-1, 1)
  const SampledPath w = gen_brownian(uniform_grid(1.0, 1 << 12), 3);
  const double t_end = std::min(1.0, stop_rule(w, kLine, 1));
  auto windowed = [&](int k) {
    const SampledPath wk = pl_approximant(w, k);
    double e = 0.0;
    for (std::size_t i = 0; i < w.size() && w.time(i) < t_end; ++i) e = std::max(e, std::abs(w[i] - wk[i]));
    return e;
  };
  bool monotone = true;
  for (std::size_t j = 0; j < r.levels.size(); ++j) {
    EXPECT_NEAR(r.errors[j], windowed(r.levels[j]), 1e-12);
    if (j > 0 && r.errors[j] > r.errors[j - 1] * (1.0 + o.slack)) monotone = false;
  }
  // on this path the level-9 interpolation error exceeds the level-8 one
  EXPECT_FALSE(monotone);
  EXPECT_EQ(r.pass(), monotone);
  EXPECT_GT(r.errors.front(), r.errors.back());
  EXPECT_EQ(r.node_errors.back(), 0.0);
}

TEST(WongZakai, RejectsBadLevels) {
  AbsolutelyContinuous none;
  none.b = [](double, double, double) { return 0.0; };
  WongZakaiOptions o;
  o.base_level = 8;
  EXPECT_THROW(wong_zakai(none, unit_transform(), 1, o), InputError);
}

TEST(Support, DistancesStayBelowSupErrors) {
  AbsolutelyContinuous ou;
  ou.b = [](double, double, double x) { return -x; };
  const SupportReport r = support_probe(ou, unit_transform(), 8, 1.0, 6, 17, 10);
  EXPECT_TRUE(r.consistent);
  EXPECT_EQ(r.distances.size(), 8u);
  EXPECT_GT(r.max_distance, 0.0);
}

TEST(Davie, ControlSpreadIsDeterministic) {
  // omega = 0 and b = sign: the starts +-delta drift apart at unit speed
  auto sign = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
  DavieOptions o;
  o.steps = 256;
  const DavieReport r = davie_probe(sign, {1, 2, 3}, {0.25, 0.01}, o);
  EXPECT_NEAR(r.control_spread[0], 2.5, 1e-6);
  EXPECT_NEAR(r.control_spread[1], 2.02, 1e-6);
  EXPECT_EQ(r.spread[1].size(), 3u);
  EXPECT_LE(r.count_below(1, kInf), 3u);
}
