#include <pathwise/cli.hpp>
#include <pathwise/config.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace pathwise;
namespace fs = std::filesystem;

namespace {

const std::string kSkew = R"(; skew
[scenario]
name = skew-test

[dispersion]
interval = -inf, inf
x0 = 0
breaks = 0
forms = constant(1); constant(2)

[grid]
mesh = 0.001
horizon = 1

[seeds]
list = 1..3, 7
)";

ConfigError config_error(const std::string& text) {
  try {
    load_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return ConfigError("none", 0, 0);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pathwise_test_" + name);
  fs::remove_all(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
  return p;
}

int run(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "pathwise");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Ini, SectionsKeysAndComments) {
  const IniDocument d = IniDocument::parse("[a]\nx = 1 ; note\n# comment\n[b]\ny=two words\n");
  ASSERT_TRUE(d.find("a", "x"));
  EXPECT_EQ(d.find("a", "x")->value, "1");
  EXPECT_EQ(d.find("b", "y")->value, "two words");
  EXPECT_EQ(d.find("b", "y")->line, 5);
  EXPECT_FALSE(d.find("a", "y"));
}

TEST(Ini, StructuralErrorsCarryPositions) {
  EXPECT_EQ(config_error("[a\nx = 1\n").line(), 1);
  const ConfigError e = config_error("[a]\n  novalue\n");
  EXPECT_EQ(e.line(), 2);
  EXPECT_EQ(e.column(), 3);
  EXPECT_EQ(config_error("x = 1\n").line(), 1);
  EXPECT_EQ(config_error("[a]\nx = 1\nx = 2\n").line(), 3);
}

TEST(Config, LoadsTheSkewScenario) {
  const RunConfig c = load_config(kSkew);
  EXPECT_EQ(c.scenario, "skew-test");
  EXPECT_EQ(c.disp.breaks, std::vector<double>{0.0});
  EXPECT_EQ(c.disp.s_plus(0.0), 2.0);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3, 7}));
  EXPECT_EQ(c.drift_kind, DriftKind::none);
  EXPECT_EQ(c.mesh, 0.001);
  EXPECT_EQ(load_config(kSkew).hash, c.hash);
  EXPECT_NE(load_config(kSkew + "\n").hash, c.hash);
}

TEST(Config, AllFormsParse) {
  EXPECT_EQ(std::get<form::Linear>(parse_form("linear(1, 2)")).b, 2.0);
  EXPECT_EQ(std::get<form::Power>(parse_form("power(2, 3)")).coef, 3.0);
  EXPECT_EQ(std::get<form::Exponential>(parse_form("exp(-1, 1)")).rate, -1.0);
  EXPECT_EQ(std::get<form::Tabulated>(parse_form("table(0:1, 1:2, 2:0.5)")).s.size(), 3u);
  EXPECT_EQ(std::get<form::Constant>(parse_form("constant(4)")).v, 4.0);
  EXPECT_THROW(parse_form("linear(1)"), InputError);
  EXPECT_THROW(parse_form("table(0;1)"), InputError);
}

TEST(Config, UnknownKeysAndValuesPointAtTheirPosition) {
  ConfigError e = config_error(kSkew + "[grid2]\nbogus = 1\n");
  EXPECT_EQ(e.line(), 18);
  e = config_error("[dispersion]\nforms = constant(1); wobble(2)\n");
  EXPECT_EQ(e.line(), 2);
  EXPECT_EQ(e.column(), 9);
  e = config_error(kSkew + "[drift]\ntype = ac\nb = cosh\n");
  EXPECT_EQ(e.line(), 19);
  EXPECT_EQ(config_error(kSkew + "[solver]\ntol = -1\n").line(), 18);
  EXPECT_EQ(config_error("[dispersion]\nforms = constant(-1)\n").line(), 2);
}

TEST(Config, DriftRegistries) {
  RunConfig c = load_config(kSkew + "[drift]\ntype = ac\nb = affine(-2, 1)\nshift = 0.5\n");
  EXPECT_EQ(c.drift_kind, DriftKind::ac);
  EXPECT_DOUBLE_EQ(c.ac.b(0.0, 0.0, 1.0), -0.5);
  EXPECT_DOUBLE_EQ(c.ac.lipschitz(3), 2.0);
  c = load_config(kSkew + "[drift]\ntype = statefree\nbeta = indicator_positive\n");
  EXPECT_FALSE(std::get<StateFree>(c.drift).continuous);
  c = load_config(kSkew + "[drift]\ntype = localtime\natoms = 0:0.5, 1:-0.25\n");
  EXPECT_EQ(std::get<LocalTimeMeasure>(c.drift).atoms.size(), 2u);
  EXPECT_THROW(load_config(kSkew + "[drift]\ntype = gain\n"), ConfigError);
  EXPECT_THROW(load_config(kSkew + "[drift]\ntype = none\nb = sign\n"), ConfigError);
}

TEST(Config, OraclesAreProperCdfs) {
  for (const char* o : {"normal(0, 1)", "skew(1, 2)", "lognormal(2)"}) {
    const auto f = lookup_oracle(o, 1.0);
    EXPECT_LE(f(-50.0), 1e-12);
    EXPECT_GE(f(1e6), 1.0 - 1e-12);
  }
  EXPECT_NEAR(lookup_oracle("skew(1, 2)", 1.0)(0.0), 0.5, 1e-15);
}

TEST(Cli, MalformedConfigExitsTwoWithoutOutput) {
  const fs::path dir = scratch("malformed");
  const fs::path cfg = write_file(dir / "bad.ini", "[dispersion]\nforms = constant(1); wobble(2)\n");
  std::string err;
  EXPECT_EQ(run({"transform", "--config", cfg.string(), "--out", (dir / "out").string()}, nullptr, &err), 2);
  EXPECT_NE(err.find(":2:9:"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, UsageErrorsExitTwoAndHelpExitsZero) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"solve"}), 2);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST(Cli, TransformReportsBarrowOsgoodFlags) {
  const fs::path dir = scratch("transform");
  const fs::path cfg = write_file(dir / "sq.ini",
                                  "[dispersion]\ninterval = 0, inf\nx0 = 1\nforms = power(2, 1)\n"
                                  "[transform]\nx_lo = 0.5\nx_hi = 4\nw_lo = -1\nw_hi = 0.5\npoints = 8\n");
  EXPECT_EQ(run({"transform", "--config", cfg.string(), "--out", (dir / "out").string()}), 0);
  const std::string summary = slurp(dir / "out/transform/summary.txt");
  EXPECT_NE(summary.find("barrow_osgood_left = true"), std::string::npos);
  EXPECT_NE(summary.find("barrow_osgood_right = false"), std::string::npos);
  EXPECT_NE(slurp(dir / "out/transform/H.csv").find("x,H(x)\n0.5,-1\n"), std::string::npos);
}

TEST(Cli, SolveIsReproducibleAndHonoursOutputOverrides) {
  const fs::path dir = scratch("solve");
  const fs::path cfg = write_file(dir / "skew.ini", kSkew + "[output]\ndir = " + (dir / "from_config").string() + "\n");
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--seed", "7"}), 0);
  EXPECT_TRUE(fs::exists(dir / "from_config/seed_7/x.csv"));
  EXPECT_FALSE(fs::exists(dir / "from_config/seed_1"));
  ::setenv("PATHWISE_OUT", (dir / "from_env").c_str(), 1);
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--seed", "7"}), 0);
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--seed", "7", "--out", (dir / "from_flag").string()}), 0);
  ::unsetenv("PATHWISE_OUT");
  for (const char* f : {"x.csv", "c.csv", "localtime.csv", "report.txt"})
    EXPECT_EQ(slurp(dir / "from_env/seed_7" / f), slurp(dir / "from_flag/seed_7" / f)) << f;
  EXPECT_NE(slurp(dir / "from_flag/seed_7/report.txt").find("config_hash = "), std::string::npos);
  for (const auto& e : fs::directory_iterator(dir / "from_flag"))
    EXPECT_EQ(e.path().filename().string().rfind(".staging", 0), std::string::npos);
}

TEST(Cli, SolvedSkewStateIsTheClosedForm) {
  const fs::path dir = scratch("closed");
  const fs::path cfg = write_file(dir / "skew.ini", kSkew);
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--seed", "7", "--out", (dir / "out").string()}), 0);
  std::ifstream is(dir / "out/seed_7/x.csv");
  const SampledPath x = read_csv(is);
  const SampledPath w = gen_brownian(grid_from_mesh(0.001, 1.0), 7);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(x[i], w[i] > 0.0 ? 2.0 * w[i] : w[i]);
}

TEST(Cli, ReversedComparisonExitsOne) {
  const fs::path dir = scratch("compare");
  const std::string base =
      "[dispersion]\nx0 = 0\nforms = constant(1)\n[drift]\ntype = ac\nb = neg_identity\n"
      "[grid]\nmesh = 0.0078125\n[seeds]\nlist = 1\n[solver]\ntol = 1e-7\n";
  const fs::path ok = write_file(dir / "ok.ini", base + "[compare]\nhat_shift = -0.5\n");
  const fs::path rev = write_file(dir / "rev.ini", base + "[compare]\nhat_shift = 0.5\n");
  EXPECT_EQ(run({"compare", "--config", ok.string(), "--out", (dir / "ok").string()}), 0);
  EXPECT_EQ(run({"compare", "--config", rev.string(), "--out", (dir / "rev").string()}), 1);
  EXPECT_NE(slurp(dir / "rev/compare/summary.txt").find("pass = false"), std::string::npos);
}

TEST(Cli, LocalTimeDriftHasNoForwardSolve) {
  const fs::path dir = scratch("ltm");
  const fs::path cfg = write_file(dir / "ltm.ini", kSkew + "[drift]\ntype = localtime\natoms = 0:0.5\n");
  EXPECT_EQ(run({"solve", "--config", cfg.string(), "--out", (dir / "out").string()}), 2);
  EXPECT_FALSE(fs::exists(dir / "out"));
}
