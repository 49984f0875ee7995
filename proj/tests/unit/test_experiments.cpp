#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nudgekit/errors.hpp"
#include "nudgekit/experiments.hpp"
#include "nudgekit/random_fields.hpp"
#include "nudgekit/spectral_ops.hpp"

using namespace nudgekit;

namespace {

constexpr double kDt = 0.0078125;

// kappa = (3/4)^(q/3) for every integer q in a wide window, filtered by range.
std::vector<double> brute_kappas(double lo, double hi) {
  std::vector<double> out;
  for (int q = -300; q <= 600; ++q) {
    const double k = std::pow(0.75, q / 3.0);
    if (k >= lo && k <= hi) out.push_back(k);
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

SweepConfig tiny_sweep(const std::filesystem::path& root) {
  SweepConfig c;
  c.sweep.periods = {4, 8};
  c.sweep.kappa_ratio_root = 1;
  c.sweep.kappa_floor = 0.1;
  c.ensemble.size = 2;
  c.ensemble.spinup_time = 0.0625;
  c.ensemble.seed = 5;
  c.ensemble.initial_l2 = 1.0;
  c.ensemble.spectrum_peak = 3.0;
  auto& a = c.assimilation;
  a.solver.grid.n = 32;
  a.solver.nu = 0.01;
  a.solver.dt = kDt;
  a.solver.forcing.wavenumber = 2;
  a.interpolant = standard_interpolant(a.solver.grid);
  a.interpolant.geometry.points_per_side = 8;
  a.interpolant.geometry.radius_sq = 1;
  a.interpolant.lambda = 20;
  a.duration = 0.25;
  a.sample_stride = 8;
  c.root = root;
  c.batch_size = 4;
  return c;
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST(DeltaGrid, DefaultEndpointsAndCount) {
  const auto g = delta_grid(SweepSpec{}, kDt);
  ASSERT_EQ(g.size(), 18u);
  EXPECT_EQ(g.front().m, 228);
  EXPECT_DOUBLE_EQ(g.front().delta, 1.78125);
  EXPECT_EQ(g.back().m, 1);
  EXPECT_DOUBLE_EQ(g.back().delta, 0.0078125);
  EXPECT_EQ(g[4].m, 72);
  EXPECT_DOUBLE_EQ(g[4].delta, 0.5625);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i].delta, g[i - 1].delta);
}

TEST(DeltaGrid, DeduplicatesKeepingFirst) {
  SweepSpec s;
  s.base_m = 4;
  s.p_last = 8;  // 4, 3, 2, 1, 1, 0, ...
  const auto g = delta_grid(s, 0.5);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_EQ(g[3].m, 1);
  EXPECT_EQ(g[3].p, 3);
}

TEST(DeltaGrid, ExplicitPeriodsAndErrors) {
  SweepSpec s;
  s.periods = {4, 64, 16, 8, 32, 16};
  const auto g = delta_grid(s, kDt);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g.front().m, 64);
  EXPECT_EQ(g.back().m, 4);
  s.periods = {0};
  EXPECT_THROW(delta_grid(s, kDt), ConfigError);
  EXPECT_THROW(delta_grid(SweepSpec{}, 0.0), ConfigError);
  SweepSpec empty;
  empty.base_m = 1;
  empty.p_first = 3;
  empty.p_last = 5;
  EXPECT_THROW(delta_grid(empty, kDt), ConfigError);
}

TEST(KappaGrid, FinestIntervalStartsAtQ34) {
  const auto k = kappa_grid(kDt, SweepSpec{});
  EXPECT_EQ(k.front().q, 34);
  EXPECT_NEAR(k.front().kappa, 0.038373, 5e-7);
  EXPECT_LE(k.front().kappa, 5 * kDt);
  EXPECT_GT(std::pow(0.75, 33 / 3.0), 5 * kDt);
}

TEST(KappaGrid, MatchesEnumeration) {
  const SweepSpec spec;
  for (const auto& d : delta_grid(spec, kDt)) {
    const auto k = kappa_grid(d.delta, spec);
    auto expected = brute_kappas(spec.kappa_floor, 5 * d.delta);
    std::sort(expected.begin(), expected.end(), std::greater<>());
    ASSERT_EQ(k.size(), expected.size()) << d.delta;
    for (std::size_t i = 0; i < k.size(); ++i) {
      EXPECT_EQ(k[i].kappa, expected[i]);
      if (i) EXPECT_LT(k[i].kappa, k[i - 1].kappa);
    }
  }
}

TEST(KappaGrid, UnitKappaNeedsDeltaAtLeastOneFifth) {
  auto has_one = [](double delta) {
    const auto k = kappa_grid(delta, SweepSpec{});
    return std::any_of(k.begin(), k.end(), [](const KappaPoint& p) { return p.q == 0 && p.kappa == 1.0; });
  };
  EXPECT_FALSE(has_one(25 * kDt));
  EXPECT_TRUE(has_one(26 * kDt));
  EXPECT_TRUE(has_one(0.2));
}

TEST(KappaGrid, EmptyRangeNamesDelta) {
  SweepSpec s;
  s.kappa_floor = 0.5;
  try {
    kappa_grid(0.01, s);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("0.01"), std::string::npos);
  }
}

TEST(SweepCells, FinestIntervalExtension) {
  const SweepSpec spec;
  const auto cells = sweep_cells(spec, kDt);
  std::size_t extended = 0;
  for (const auto& c : cells) {
    if (c.extended) {
      ++extended;
      EXPECT_EQ(c.delta.m, 1);
      EXPECT_GE(c.kappa.kappa, 0.00317);
      EXPECT_LT(c.kappa.kappa, 0.0056);
    }
  }
  EXPECT_EQ(extended, brute_kappas(0.00317, 0.0056).size() - (brute_kappas(0.0056, 0.0056).size()));
  EXPECT_EQ(cells.size(), grid_pair_count(spec, kDt) + extended);

  std::size_t brute = 0;
  for (const auto& d : delta_grid(spec, kDt)) brute += brute_kappas(0.0056, 5 * d.delta).size();
  EXPECT_EQ(grid_pair_count(spec, kDt), brute);
}

TEST(Ensemble, NoSpinupGivesTheRandomField) {
  EnsembleSpec e;
  e.size = 1;
  e.spinup_time = 0.0;
  e.seed = 17;
  SolverParams p;
  p.grid.n = 32;
  const auto members = generate_ensemble(e, p);
  ASSERT_EQ(members.size(), 1u);
  CounterRng rng(17, member_stream(0, 0, e.max_retries));
  const auto z0 = random_vorticity(p.grid, e.spectrum_peak, e.initial_l2, rng);
  EXPECT_EQ(max_abs_difference(members[0].state, z0), 0.0);
  EXPECT_EQ(members[0].attempts, 1);
}

TEST(Ensemble, DeterministicAndDistinct) {
  EnsembleSpec e;
  e.size = 3;
  e.spinup_time = 0.25;
  e.seed = 2;
  SolverParams p;
  p.grid.n = 32;
  const auto a = generate_ensemble(e, p, 1);
  const auto b = generate_ensemble(e, p, 3);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(max_abs_difference(a[i].state, b[i].state), 0.0);
  EXPECT_GT(max_abs_difference(a[0].state, a[1].state), 0.0);
  const auto solo = generate_member(e, p, 2);
  EXPECT_EQ(max_abs_difference(solo.state, a[2].state), 0.0);
}

TEST(Ensemble, DivergentSpinupMovesToNextStream) {
  EnsembleSpec e;
  e.size = 1;
  e.spinup_time = 0.0078125;
  e.max_retries = 2;
  SolverParams p;
  p.grid.n = 32;
  p.monitors.max_l2 = 1e-3;  // every attempt trips the monitor
  std::vector<std::string> log;
  EXPECT_THROW(generate_member(e, p, 0, [&](const std::string& s) { log.push_back(s); }), DivergenceError);
  EXPECT_EQ(log.size(), 3u);
  EXPECT_NE(member_stream(0, 1, 2), member_stream(1, 0, 2));
}

TEST(Statistics, SmallExamples) {
  EXPECT_DOUBLE_EQ(geometric_mean({1.0, 100.0}), 10.0);
  EXPECT_DOUBLE_EQ(ensemble_average({2.0, 4.0}), 3.0);
  const auto q = quartiles({5.0, 1.0, 4.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(q.q1, 2.0);
  EXPECT_DOUBLE_EQ(q.median, 3.0);
  EXPECT_DOUBLE_EQ(q.q3, 4.0);
  EXPECT_DOUBLE_EQ(quantile({1.0, 2.0}, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(quantile({7.0}, 0.75), 7.0);
}

TEST(Statistics, Errors) {
  EXPECT_THROW(ensemble_average({}), ConfigError);
  EXPECT_THROW(quantile({}, 0.5), ConfigError);
  try {
    geometric_mean({1.0, 2.0, 0.0});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("entry 2"), std::string::npos);
  }
}

TEST(Statistics, LogNormalSample) {
  CounterRng rng(99);
  std::vector<double> v(4000);
  for (auto& x : v) x = std::exp(1.5 * rng.normal());
  const double gm = geometric_mean(v);
  const double mean = ensemble_average(v);
  const double med = quartiles(v).median;
  EXPECT_LT(gm, mean);
  EXPECT_GT(mean, med);
  // GM and median both estimate exp(0) = 1; standard errors are about 0.03 and 0.04.
  EXPECT_NEAR(gm / med, 1.0, 0.15);
}

TEST(Statistics, SummarizeCountsDivergence) {
  const auto c = summarize(0.5, 0.25, {1.0, 4.0, std::nan(""), 16.0}, 2);
  EXPECT_EQ(c.n_ok, 3);
  EXPECT_EQ(c.n_diverged, 3);
  EXPECT_DOUBLE_EQ(c.gm, 4.0);
  EXPECT_DOUBLE_EQ(c.mean, 7.0);
  EXPECT_DOUBLE_EQ(c.min, 1.0);
  EXPECT_DOUBLE_EQ(c.max, 16.0);
  EXPECT_LE(c.gm, c.mean);
  const auto none = summarize(1.0, 1.0, {}, 8);
  EXPECT_EQ(none.n_ok, 0);
  EXPECT_TRUE(std::isnan(none.gm));

  std::stringstream ss;
  write_summary_csv(ss, {c, none});
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "delta,kappa,n_ok,n_diverged,mean,gm,median,q1,q3,min,max");
  const auto back = read_summary_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].q3, c.q3);
  EXPECT_EQ(back[0].n_diverged, 3);
  EXPECT_TRUE(std::isnan(back[1].median));
}

TEST(FitKappaMin, ExactParabola) {
  std::vector<std::pair<double, double>> curve;
  for (const auto& k : kappa_grid(0.5, SweepSpec{}))
    curve.emplace_back(k.kappa, (k.kappa - 0.3) * (k.kappa - 0.3) + 1.0);
  const auto f = fit_kappa_min(curve);
  EXPECT_FALSE(f.boundary);
  EXPECT_TRUE(f.fitted);
  EXPECT_NEAR(f.kappa_min, 0.3, 1e-12);
}

TEST(FitKappaMin, MonotoneCurveIsBoundary) {
  std::vector<std::pair<double, double>> curve;
  for (const auto& k : kappa_grid(0.5, SweepSpec{})) curve.emplace_back(k.kappa, k.kappa);
  const auto f = fit_kappa_min(curve);
  EXPECT_TRUE(f.boundary);
  EXPECT_EQ(f.kappa_min, curve.back().first);
  EXPECT_EQ(f.argmin, curve.size() - 1);
}

TEST(FitKappaMin, NoisyParabola) {
  CounterRng rng(8);
  int trials = 0;
  for (int t = 0; t < 50; ++t) {
    std::vector<std::pair<double, double>> curve;
    for (const auto& k : kappa_grid(0.5, SweepSpec{})) {
      const double y = 0.02 + (k.kappa - 0.2) * (k.kappa - 0.2);
      curve.emplace_back(k.kappa, y * (1.0 + 0.01 * rng.normal()));
    }
    const auto f = fit_kappa_min(curve);
    EXPECT_NEAR(f.kappa_min, 0.2, 0.02);
    ++trials;
  }
  EXPECT_EQ(trials, 50);
}

TEST(FitKappaMin, InvariantUnderErrorScaling) {
  CounterRng rng(9);
  std::vector<std::pair<double, double>> curve;
  for (const auto& k : kappa_grid(0.25, SweepSpec{}))
    curve.emplace_back(k.kappa, std::exp(std::pow(std::log(k.kappa / 0.15), 2)) * (1 + 0.05 * rng.uniform()));
  const auto base = fit_kappa_min(curve);
  for (double s : {1e-6, 3.0, 1e5}) {
    auto scaled = curve;
    for (auto& p : scaled) p.second *= s;
    EXPECT_NEAR(fit_kappa_min(scaled).kappa_min, base.kappa_min, 1e-12 * base.kappa_min);
  }
}

TEST(FitKappaMin, SkipsNonFiniteAndHandlesConcaveWindows) {
  std::vector<std::pair<double, double>> curve{
      {1.0, std::nan("")}, {0.8, 3.0}, {0.6, 2.0}, {0.4, 1.0}, {0.3, 1.9}, {0.2, 2.0}, {0.1, 5.0}};
  const auto f = fit_kappa_min(curve, 3);
  EXPECT_EQ(f.argmin, 3u);
  EXPECT_FALSE(f.boundary);
  // Window {0.6, 0.4, 0.3} is convex; the vertex stays inside the sampled range.
  EXPECT_GT(f.kappa_min, 0.1);
  EXPECT_LT(f.kappa_min, 0.8);
  EXPECT_THROW(fit_kappa_min({{1.0, 1.0}, {0.5, 0.5}}), ConfigError);
}

TEST(FitLinearMu, ExactLine) {
  const auto f = fit_linear_mu({{0.1, 0.07}, {0.2, 0.14}, {0.4, 0.28}, {0.9, 5.0}}, 0.5);
  EXPECT_NEAR(f.mu, 0.7, 1e-15);
  EXPECT_NEAR(f.r2, 1.0, 1e-15);
  EXPECT_EQ(f.points, 3);
}

TEST(FitLinearMu, SinglePoint) {
  const auto f = fit_linear_mu({{0.5, 0.4}}, 0.5);
  EXPECT_DOUBLE_EQ(f.mu, 0.8);
  EXPECT_EQ(f.r2, 1.0);
}

TEST(FitLinearMu, NoisySynthetic) {
  CounterRng rng(12);
  std::vector<std::pair<double, double>> pts;
  for (int r = 0; r < 4; ++r)
    for (const auto& d : delta_grid(SweepSpec{}, kDt))
      pts.emplace_back(d.delta, 0.966 * d.delta * (1.0 + 0.05 * rng.normal()));
  const auto f = fit_linear_mu(pts, 0.5);
  EXPECT_NEAR(f.mu, 0.966, 0.05);
  EXPECT_GT(f.r2, 0.9);
  EXPECT_THROW(fit_linear_mu({{0.9, 1.0}}, 0.5), ConfigError);
}

TEST(Sweep, PlanCountsAtDefaults) {
  SweepConfig c;
  c.root = fresh_dir("nudgekit_plan_test");
  c.assimilation.solver.grid.n = 32;
  c.assimilation.interpolant = standard_interpolant(c.assimilation.solver.grid);
  c.assimilation.duration = 2.0;
  c.ensemble.size = 500;
  const auto plan = plan_sweep(c);
  EXPECT_EQ(plan.grid_pairs, grid_pair_count(SweepSpec{}, kDt));
  EXPECT_EQ(plan.total_runs(), plan.cells.size() * 500);
  EXPECT_EQ(plan.completed, 0u);
  EXPECT_NE(describe_plan(plan).find("runs: " + std::to_string(plan.total_runs())), std::string::npos);
}

TEST(Sweep, RunsResumesAndIsDeterministic) {
  const auto root = fresh_dir("nudgekit_sweep_test");
  auto cfg = tiny_sweep(root);
  const auto plan = plan_sweep(cfg);
  ASSERT_EQ(plan.cells.size(), 6u);
  const auto first = run_sweep(cfg);
  EXPECT_EQ(first.executed, 12u);
  EXPECT_EQ(first.skipped, 0u);
  ASSERT_EQ(first.summary.size(), 6u);
  for (const auto& row : first.summary) {
    EXPECT_EQ(row.n_ok + row.n_diverged, 2);
    if (row.n_ok == 2) EXPECT_LE(row.gm, row.mean);
  }
  const auto summary_text = slurp(root / "summary.csv");
  std::vector<std::string> member1;
  for (const auto& c : plan.cells) member1.push_back(slurp(run_path(root, c, 1)));

  EXPECT_EQ(run_sweep(cfg).executed, 0u);

  // Remove member 1 and half of member 0's sidecars; only those runs repeat.
  std::filesystem::remove(root / "ensemble" / "member_1.nkf");
  for (std::size_t i = 0; i < plan.cells.size(); ++i) {
    std::filesystem::remove(metadata_path(run_path(root, plan.cells[i], 1)));
    if (i % 2 == 0) std::filesystem::remove(metadata_path(run_path(root, plan.cells[i], 0)));
  }
  EXPECT_EQ(plan_sweep(cfg).completed, 3u);
  const auto again = run_sweep(cfg);
  EXPECT_EQ(again.executed, 9u);
  EXPECT_EQ(again.skipped, 3u);
  EXPECT_EQ(slurp(root / "summary.csv"), summary_text);
  for (std::size_t i = 0; i < plan.cells.size(); ++i) EXPECT_EQ(slurp(run_path(root, plan.cells[i], 1)), member1[i]);

  const auto root2 = fresh_dir("nudgekit_sweep_test_threads");
  auto cfg2 = tiny_sweep(root2);
  cfg2.threads = 3;
  cfg2.batch_size = 1;
  run_sweep(cfg2);
  EXPECT_EQ(slurp(root2 / "summary.csv"), summary_text);

  const auto curve = kappa_min_curve(first.summary);
  EXPECT_EQ(curve.size(), 2u);
  const auto per_member = kappa_min_per_member(cfg);
  EXPECT_EQ(per_member.size(), 4u);
  std::filesystem::remove_all(root);
  std::filesystem::remove_all(root2);
}
