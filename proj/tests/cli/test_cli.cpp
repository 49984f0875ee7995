#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nudgekit/assimilation.hpp"
#include "nudgekit/csv.hpp"
#include "nudgekit/errors.hpp"
#include "nudgekit/invariants.hpp"
#include "nudgekit/spectral_ops.hpp"
#include "nudgekit_cli/commands.hpp"

using namespace nudgekit;
using namespace nudgekit::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    for (const auto& f : csv::split(line)) row.push_back(f.empty() ? std::nan("") : csv::parse_double(f, "cell"));
    rows.push_back(row);
  }
  return rows;
}

// Small, fast settings shared by the assimilation-type commands.
const char* kSmall =
    "grid.n = 32\n"
    "solver.nu = 0.01\n"
    "observation.points_per_side = 8\n"
    "observation.lambda = 20\n"
    "initial.peak = 3\n"
    "initial.l2 = 1\n"
    "assimilation.reference = initial\n"
    "assimilation.duration = 1\n";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("nudgekit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    ::setenv("NUDGEKIT_RESULTS", (root_ / "results").c_str(), 1);
  }
  void TearDown() override {
    ::unsetenv("NUDGEKIT_RESULTS");
    fs::remove_all(root_);
  }

  fs::path write_config(const std::string& name, const std::string& text) {
    const auto p = root_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "nudgekit");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    log_.str("");
    return run_cli(static_cast<int>(argv.size()), argv.data(), out_, log_);
  }

  fs::path results(const std::string& id) const { return root_ / "results" / id; }

  fs::path root_;
  std::ostringstream out_, log_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Config file

TEST(ConfigFile, ParsesKeysCommentsAndEmptyValues) {
  const auto f = ConfigFile::parse("# header\n\n  solver.nu   =  0.01 \nscheme.kappa =\n\tgrid.n=64\r\n");
  EXPECT_EQ(f.take("solver.nu").value(), "0.01");
  EXPECT_EQ(f.take("scheme.kappa").value(), "");
  EXPECT_EQ(f.take("grid.n").value(), "64");
  EXPECT_FALSE(f.take("seed").has_value());
  EXPECT_NO_THROW(f.reject_unused());
}

TEST(ConfigFile, RejectsMalformedInput) {
  EXPECT_THROW(ConfigFile::parse("solver.nu 0.01\n"), ConfigError);
  EXPECT_THROW(ConfigFile::parse("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(ConfigFile::parse("bad key = 1\n"), ConfigError);
  EXPECT_THROW(ConfigFile::parse("a..b = 1\n"), ConfigError);
}

TEST(ConfigFile, UnknownKeysAreErrors) {
  const auto f = ConfigFile::parse("solver.nu = 0.01\nsolver.nuu = 3\n");
  try {
    RunConfig::from_file(f);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("solver.nuu"), std::string::npos);
  }
}

TEST(RunConfigText, DefaultsRoundTrip) {
  const auto c = RunConfig::from_file(ConfigFile::parse(""));
  const auto text = c.resolved_text();
  const auto again = RunConfig::from_file(ConfigFile::parse(text));
  EXPECT_EQ(again.resolved_text(), text);
  // Every registered key appears exactly once.
  const auto keys = config_keys();
  std::istringstream is(text);
  std::string line;
  std::size_t i = 0;
  while (std::getline(is, line)) {
    ASSERT_LT(i, keys.size());
    EXPECT_EQ(line.substr(0, line.find(" =")), keys[i++]);
  }
  EXPECT_EQ(i, keys.size());
}

TEST(RunConfigText, NonDefaultValuesRoundTrip) {
  const std::string input =
      "seed = 18446744073709551615\ngrid.n = 48\ngrid.length = 1.5\ngrid.dealias_rule = circular\n"
      "solver.nu = 0.1\nsolver.monitor.max_l2 = 1e6\nsolver.nonlinear = false\nobservation.radius_sq = 0\n"
      "observation.averaging = square\nscheme.kind = relaxed\nscheme.kappa = 0.3\nscheme.schedule = 3,7,11\n"
      "sweep.periods = 9,3\nfft.planner = measure\nfft.wisdom = /tmp/w\n";
  const auto c = RunConfig::from_file(ConfigFile::parse(input));
  EXPECT_EQ(c.seed, 18446744073709551615ull);
  EXPECT_EQ(c.solver.grid.dealias_rule, DealiasRule::circular);
  EXPECT_EQ(c.scheme.kappa.value(), 0.3);
  EXPECT_EQ(c.scheme.schedule, (std::vector<int>{3, 7, 11}));
  const auto again = RunConfig::from_file(ConfigFile::parse(c.resolved_text()));
  EXPECT_EQ(again.resolved_text(), c.resolved_text());
  EXPECT_EQ(again.solver.grid.length, 1.5);
  EXPECT_EQ(again.interpolant.geometry.radius_sq, 0);
  EXPECT_TRUE(std::isinf(again.solver.monitors.max_h1));
}

TEST(RunConfigText, BadValuesNameTheKey) {
  for (const std::string bad : {"grid.n = 12x", "solver.nonlinear = yes", "initial.kind = spiral", "seed = -1",
                                "converge.periods = 4,,2"}) {
    try {
      RunConfig::from_file(ConfigFile::parse(bad + "\n"));
      FAIL() << bad;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(bad.substr(0, bad.find(' '))), std::string::npos) << e.what();
    }
  }
}

TEST(RunConfigText, CommandValidation) {
  auto c = RunConfig::from_file(ConfigFile::parse("scheme.delta = 0.01\n"));
  EXPECT_NO_THROW(c.validate(Command::solve));
  EXPECT_THROW(c.validate(Command::assimilate), ConfigError);  // not a multiple of dt
  c = RunConfig::from_file(ConfigFile::parse("assimilation.duration = 1\n"));
  EXPECT_THROW(c.validate(Command::sweep), ConfigError);  // largest interval exceeds T
  EXPECT_THROW(RunConfig::from_file(ConfigFile::parse("observation.lambda = 0\n")), ConfigError);
  EXPECT_THROW(RunConfig::from_file(ConfigFile::parse("fft.wisdom = w\n")), ConfigError);
}

// ---------------------------------------------------------------------------
// Commands

TEST_F(Cli, SolveTaylorGreenMatchesAnalyticDecay) {
  const auto cfg = write_config("tg.txt",
                                "run.id = tg\ngrid.n = 64\nsolver.nu = 0.01\nsolver.forcing = none\n"
                                "initial.kind = taylor_green\nsolve.duration = 1\nsample_stride = 8\n");
  ASSERT_EQ(run({"solve", "--config", cfg.string()}), exit_ok) << log_.str();
  const auto rows = read_csv(results("tg") / "diagnostics.csv");
  ASSERT_EQ(rows.size(), 17u);
  const double e0 = rows.front()[1];
  for (const auto& r : rows) EXPECT_NEAR(r[1] / (e0 * std::exp(-4.0 * 0.01 * r[0])), 1.0, 1e-6) << "t = " << r[0];
  EXPECT_TRUE(fs::exists(results("tg") / "final.nkf"));
  const auto cp = load_checkpoint(results("tg") / "final.nkf");
  EXPECT_DOUBLE_EQ(cp.time, 1.0);
}

TEST_F(Cli, SolveZeroDataStaysZero) {
  const auto cfg = write_config("z.txt", "run.id = z\ngrid.n = 32\nsolver.forcing = none\ninitial.kind = zero\n");
  ASSERT_EQ(run({"solve", "--config", cfg.string()}), exit_ok);
  for (const auto& r : read_csv(results("z") / "diagnostics.csv"))
    for (std::size_t j = 1; j < r.size(); ++j) EXPECT_EQ(r[j], 0.0);
}

TEST_F(Cli, ConfigEchoIsByteIdentical) {
  const std::string text = "# odd spacing and comments stay\nrun.id=echo\n\n   grid.n   = 32\t\nsolve.duration = 0.0625\n";
  const auto cfg = write_config("e.txt", text);
  ASSERT_EQ(run({"solve", "--config", cfg.string(), "--seed", "5"}), exit_ok);
  EXPECT_EQ(slurp(results("echo") / "config.txt"), text);
  const auto resolved = slurp(results("echo") / "resolved_config.txt");
  EXPECT_NE(resolved.find("seed = 5\n"), std::string::npos);
}

TEST_F(Cli, ResolvedConfigReproducesOutputs) {
  const auto cfg = write_config("a.txt", std::string(kSmall) + "run.id = first\nseed = 4\ninitial.kind = random\n");
  ASSERT_EQ(run({"assimilate", "--config", cfg.string()}), exit_ok);
  auto resolved = slurp(results("first") / "resolved_config.txt");
  resolved.replace(resolved.find("run.id = first"), 14, "run.id = again");
  const auto cfg2 = write_config("b.txt", resolved);
  ASSERT_EQ(run({"assimilate", "--config", cfg2.string()}), exit_ok);
  EXPECT_EQ(slurp(results("first") / "trajectory.csv"), slurp(results("again") / "trajectory.csv"));
}

TEST_F(Cli, DirectAndClampedRelaxedGiveIdenticalCsv) {
  const auto d = write_config("d.txt", std::string(kSmall) + "run.id = d\nscheme.kind = direct\nscheme.delta = 0.0625\n");
  const auto r = write_config("r.txt", std::string(kSmall) +
                                           "run.id = r\nscheme.kind = relaxed\nscheme.delta = 0.0625\nscheme.mu = 16\n");
  ASSERT_EQ(run({"assimilate", "--config", d.string()}), exit_ok);
  ASSERT_EQ(run({"assimilate", "--config", r.string()}), exit_ok);
  EXPECT_EQ(slurp(results("d") / "trajectory.csv"), slurp(results("r") / "trajectory.csv"));
  const auto meta = load_trajectory(results("r") / "trajectory.csv").meta;
  EXPECT_EQ(meta.scheme, "relaxed");
  EXPECT_EQ(meta.kappa, 1.0);
}

TEST_F(Cli, FixedPointRunStaysOnReference) {
  for (const std::string kind : {"direct", "relaxed", "nudging"}) {
    const auto cfg = write_config(kind + ".txt", std::string(kSmall) + "run.id = fp_" + kind + "\nscheme.kind = " + kind +
                                                     "\nscheme.delta = 0.03125\nscheme.mu = 2\n"
                                                     "assimilation.initial = reference\nsample_stride = 1\n");
    ASSERT_EQ(run({"assimilate", "--config", cfg.string()}), exit_ok) << log_.str();
    for (const auto& r : read_csv(results("fp_" + kind) / "trajectory.csv")) EXPECT_LE(r[1], 1e-10) << kind;
  }
}

TEST_F(Cli, NudgingWithZeroGainIsAFreeRun) {
  const auto cfg =
      write_config("n.txt", std::string(kSmall) + "run.id = n0\nscheme.kind = nudging\nscheme.mu = 0\nsample_stride = 8\n");
  ASSERT_EQ(run({"assimilate", "--config", cfg.string()}), exit_ok);
  const auto traj = load_trajectory(results("n0") / "trajectory.csv");

  const auto config = RunConfig::from_file(ConfigFile::load(cfg));
  const auto U0 = initial_state(config);
  const Interpolant J(config.interpolant_config());
  Solver truth(config.solver_params(), U0);
  Solver model(config.solver_params(), J.apply_to_vorticity(U0));
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    if (i > 0) {
      truth.advance(8);
      model.advance(8);
    }
    const double expected = velocity_norm(truth.state() - model.state(), 0);
    EXPECT_NEAR(traj.samples[i].err_l2, expected, 1e-12 * std::max(1.0, expected));
  }
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run({"verify", "--config", write_config("l.txt", "observation.lambda = 0\n").string()}), exit_config);
  EXPECT_NE(log_.str().find("observation.lambda"), std::string::npos);
  EXPECT_EQ(run({"solve", "--config", write_config("u.txt", "nope = 1\n").string()}), exit_config);
  EXPECT_EQ(run({"solve", "--config", (root_ / "missing.txt").string()}), exit_config);
  EXPECT_EQ(run({"frobnicate"}), exit_config);
  EXPECT_EQ(run({}), exit_config);

  // A tripped monitor aborts the free run and keeps the rows written so far.
  const auto div = write_config("div.txt",
                                "run.id = div\ngrid.n = 32\nsolver.monitor.max_l2 = 1e-3\ninitial.l2 = 1\n"
                                "solve.duration = 0.5\nsample_stride = 1\n");
  EXPECT_EQ(run({"solve", "--config", div.string()}), exit_divergence);
  EXPECT_EQ(read_csv(results("div") / "diagnostics.csv").size(), 1u);
}

TEST_F(Cli, VerifyReportsOneLinePerInvariant) {
  const auto cfg = write_config("v.txt", "grid.n = 64\nverify.samples = 10\nverify.steps = 20\n");
  ASSERT_EQ(run({"verify", "--config", cfg.string()}), exit_ok) << out_.str();
  std::istringstream is(out_.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    EXPECT_EQ(line.substr(0, line.find(' ')), invariant_names()[n]);
    EXPECT_EQ(line.substr(line.rfind(' ') + 1), "pass");
    ++n;
  }
  EXPECT_EQ(n, invariant_names().size());
  EXPECT_EQ(slurp(results("run") / "verify.txt"), out_.str());
}

TEST_F(Cli, SweepPlanAtDefaults) {
  ASSERT_EQ(run({"sweep", "--plan"}), exit_ok);
  const auto plan = out_.str();
  EXPECT_NE(plan.find("deltas: 18\n"), std::string::npos);
  EXPECT_NE(plan.find("grid pairs: 920\n"), std::string::npos);
  EXPECT_NE(plan.find("runs: 7408\n"), std::string::npos);
  EXPECT_FALSE(fs::exists(results("run")));
}

TEST_F(Cli, SweepRunsResumesAndGuardsManifest) {
  const std::string text =
      "run.id = sw\ngrid.n = 32\nsolver.nu = 0.01\nobservation.points_per_side = 8\nobservation.lambda = 20\n"
      "assimilation.duration = 0.5\nensemble.size = 2\nensemble.spinup = 0.25\nsweep.periods = 4,8\n"
      "sweep.kappa_floor = 0.1\nsweep.kappa_root = 1\n";
  const auto cfg = write_config("s.txt", text);
  ASSERT_EQ(run({"sweep", "--config", cfg.string()}), exit_ok) << log_.str();
  const auto dir = results("sw");
  const auto summary = read_csv(dir / "summary.csv");
  EXPECT_EQ(summary.size(), 6u);  // 4 kappas at delta = 8 dt, 2 at 4 dt
  for (const auto& r : summary) EXPECT_EQ(r[2] + r[3], 2.0);
  EXPECT_EQ(read_csv(dir / "kappa_min.csv").size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "mu_fit.txt"));
  EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
  EXPECT_TRUE(fs::exists(dir / "0.0625" / "0.2373046875" / "1.csv"));

  const auto before = slurp(dir / "summary.csv");
  ASSERT_EQ(run({"sweep", "--config", cfg.string(), "--threads", "2"}), exit_ok);
  EXPECT_NE(log_.str().find("executed 0, skipped 12"), std::string::npos) << log_.str();
  EXPECT_EQ(slurp(dir / "summary.csv"), before);

  auto changed = text;
  changed.replace(changed.find("solver.nu = 0.01"), 16, "solver.nu = 0.02");
  const auto cfg2 = write_config("s2.txt", changed);
  EXPECT_EQ(run({"sweep", "--config", cfg2.string()}), exit_config);
  EXPECT_NE(log_.str().find("solver.nu"), std::string::npos);
  EXPECT_EQ(slurp(dir / "config.txt"), text);  // untouched by the rejected run

  ASSERT_EQ(run({"sweep", "--config", cfg2.string(), "--no-resume"}), exit_ok);
  EXPECT_NE(log_.str().find("executed 12, skipped 0"), std::string::npos);
  EXPECT_NE(slurp(dir / "summary.csv"), before);
}

TEST_F(Cli, ConvergeSingleDeltaHasBlankRate) {
  const auto cfg = write_config("c.txt", std::string(kSmall) + "converge.duration = 0.5\nconverge.periods = 4\n");
  ASSERT_EQ(run({"converge", "--config", cfg.string()}), exit_ok);
  EXPECT_EQ(read_csv(results("run") / "converge.csv").size(), 1u);
  EXPECT_EQ(slurp(results("run") / "converge_rate.txt"), "rate_l2 =\nrate_h1 =\n");
}

TEST_F(Cli, ConvergeGapShrinksWithDelta) {
  const auto cfg = write_config("c.txt", std::string(kSmall) + "converge.duration = 1\nconverge.periods = 16,8,4,2,1\n");
  ASSERT_EQ(run({"converge", "--config", cfg.string()}), exit_ok);
  const auto rows = read_csv(results("run") / "converge.csv");
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i - 1][0], rows[i][0]);
    EXPECT_LE(rows[i - 1][2], rows[i][2]);
  }
  const auto rate = slurp(results("run") / "converge_rate.txt");
  const auto pos = rate.find("rate_h1 = ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_GE(std::stod(rate.substr(pos + 10)), 0.5);
}

TEST_F(Cli, OutputDirUsedWithoutEnvironmentOverride) {
  ::unsetenv("NUDGEKIT_RESULTS");
  const auto cfg = write_config("o.txt", "run.id = od\ngrid.n = 32\nsolve.duration = 0.0078125\noutput_dir = " +
                                             (root_ / "elsewhere").string() + "\n");
  ASSERT_EQ(run({"solve", "--config", cfg.string()}), exit_ok);
  EXPECT_TRUE(fs::exists(root_ / "elsewhere" / "od" / "diagnostics.csv"));
}
