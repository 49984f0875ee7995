#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "../support/oracles.hpp"
#include "nudgekit/errors.hpp"
#include "nudgekit/random_fields.hpp"
#include "nudgekit/snapshot.hpp"
#include "nudgekit/spectral_ops.hpp"

using namespace nudgekit;

namespace {

GridSpec grid_of(int n) {
  GridSpec g;
  g.n = n;
  return g;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(GridSpec, RejectsInvalidGrids) {
  GridSpec g;
  g.n = 15;
  EXPECT_THROW(g.validate(), ConfigError);
  g.n = 8;
  EXPECT_THROW(g.validate(), ConfigError);
  g.n = 32;
  g.length = 0.0;
  EXPECT_THROW(g.validate(), ConfigError);
  g.length = 1.0;
  g.dealias_fraction = 1.5;
  EXPECT_THROW(g.validate(), ConfigError);
  g.dealias_fraction = 1.0;
  EXPECT_NO_THROW(g.validate());
}

TEST(Transform, ConstantFieldHasOnlyMeanMode) {
  const auto g = grid_of(16);
  auto f = oracle::sample(g, [](double, double) { return 3.25; });
  auto s = transform(f);
  EXPECT_NEAR(s.coeffs[0].real(), 3.25, 1e-15);
  for (std::size_t i = 1; i < s.coeffs.size(); ++i) EXPECT_LT(std::abs(s.coeffs[i]), 1e-15);
}

TEST(Transform, CosineHasHalfAtUnitWavenumbers) {
  const auto g = grid_of(32);
  auto s = transform(oracle::sample(g, [](double x, double) { return std::cos(x); }));
  auto layout = SpectralLayout::get(g);
  for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
    const bool unit = i == layout->index(1, 0) || i == layout->index(g.n - 1, 0);
    EXPECT_NEAR(std::abs(s.coeffs[i] - Complex(unit ? 0.5 : 0.0)), 0.0, 1e-15) << i;
  }
}

TEST(Transform, RandomRealFieldRoundTripsAndIsHermitian) {
  const auto g = grid_of(64);
  CounterRng rng(7);
  auto f = random_physical(g, 1, rng);
  auto s = transform(f);
  EXPECT_TRUE(is_hermitian(s, 1e-12));
  auto back = inverse_transform(s);
  double worst = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) worst = std::max(worst, std::abs(back.values[i] - f.values[i]));
  EXPECT_LE(worst, 1e-12);
}

TEST(Transform, AgreesWithDirectSummation) {
  const auto g = grid_of(16);
  CounterRng rng(11);
  auto f = random_physical(g, 1, rng);
  auto s = transform(f);
  auto layout = SpectralLayout::get(g);
  for (int mx : {-8, -3, 0, 1, 7})
    for (int my : {0, 2, 5, 8}) {
      const Complex direct = oracle::dft_coefficient(f, 0, mx, my);
      const Complex stored = s.coeffs[layout->index((mx + g.n) % g.n, my)];
      EXPECT_LT(std::abs(direct - stored), 1e-13) << mx << "," << my;
    }
}

TEST(Transform, DimensionMismatchIsConfigError) {
  auto f = PhysicalField::zeros(grid_of(16), 1);
  f.values.resize(10);
  EXPECT_THROW(transform(f), ConfigError);
  auto v = PhysicalField::zeros(grid_of(16), 1);
  EXPECT_THROW(transform_vector(v), ConfigError);
}

TEST(Leray, GradientFieldIsAnnihilated) {
  const auto g = grid_of(32);
  auto layout = SpectralLayout::get(g);
  CounterRng rng(3);
  auto phi = random_vorticity(g, 4.0, 1.0, rng);
  auto grad = VectorSpectrum::zeros(g);
  for (std::size_t i = 0; i < grad.x.size(); ++i) {
    grad.x[i] = Complex(0, 1) * layout->kx()[i] * phi.coeffs[i];
    grad.y[i] = Complex(0, 1) * layout->ky()[i] * phi.coeffs[i];
  }
  EXPECT_LT(max_abs(leray_project(grad)), 1e-14 * std::max(1.0, max_abs(grad)));
}

TEST(Leray, RemovesComponentAlongWavevector) {
  const auto g = grid_of(16);
  auto layout = SpectralLayout::get(g);
  auto v = VectorSpectrum::zeros(g);
  v.x[layout->index(1, 0)] = 1.0;
  v.y[layout->index(1, 0)] = 1.0;
  v.x[layout->index(g.n - 1, 0)] = 1.0;
  v.y[layout->index(g.n - 1, 0)] = 1.0;
  auto p = leray_project(v);
  EXPECT_EQ(p.x[layout->index(1, 0)], Complex(0.0));
  EXPECT_EQ(p.y[layout->index(1, 0)], Complex(1.0));
}

TEST(Leray, DivergenceFreeFieldUnchangedAndProjectionIdempotent) {
  const auto g = grid_of(32);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CounterRng rng(seed);
    auto u = random_velocity(g, 10, rng);
    EXPECT_LE(divergence_defect(u), 1e-10);
    EXPECT_LT(max_abs_difference(leray_project(u), u), 1e-14 * max_abs(u));

    CounterRng rng2(seed + 100);
    auto raw = transform_vector(random_physical(g, 2, rng2));
    auto once = leray_project(raw);
    auto twice = leray_project(once);
    EXPECT_LT(max_abs_difference(once, twice), 1e-15);
    EXPECT_LE(sobolev_norm(once, 0), sobolev_norm(raw, 0) * (1 + 1e-14));
    EXPECT_LE(divergence_defect(once), 1e-10);
    EXPECT_TRUE(is_hermitian(once));
    EXPECT_EQ(once.x[0], Complex(0.0));
  }
}

TEST(SobolevNorm, ZeroFieldAndUnsupportedIndex) {
  auto z = VectorSpectrum::zeros(grid_of(16));
  for (int a = 0; a <= 3; ++a) EXPECT_EQ(sobolev_norm(z, a), 0.0);
  EXPECT_THROW(sobolev_norm(z, 4), ConfigError);
  EXPECT_THROW(sobolev_norm(z, -1), ConfigError);
}

TEST(SobolevNorm, UnitWavenumberMode) {
  const auto g = grid_of(16);
  auto layout = SpectralLayout::get(g);
  const double a = 0.7;
  auto u = VectorSpectrum::zeros(g);  // 2a cos(x) y-hat
  u.y[layout->index(1, 0)] = a;
  u.y[layout->index(g.n - 1, 0)] = a;
  for (int alpha = 0; alpha <= 3; ++alpha)
    EXPECT_NEAR(sobolev_norm(u, alpha), 2 * std::numbers::pi * a * std::sqrt(2.0), 1e-13);
}

TEST(SobolevNorm, RatioForWavenumberTwo) {
  const auto g = grid_of(16);
  auto layout = SpectralLayout::get(g);
  auto u = VectorSpectrum::zeros(g);  // mode pair at k = +-(0, 2), velocity along x
  u.x[layout->index(0, 2)] = Complex(0.3, -0.4);
  EXPECT_NEAR(sobolev_norm(u, 1) / sobolev_norm(u, 0), 2.0, 1e-14);
}

TEST(SobolevNorm, MatchesFullPlaneOracle) {
  const auto g = grid_of(32);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CounterRng rng(seed);
    auto u = transform_vector(random_physical(g, 2, rng));
    for (int alpha = 0; alpha <= 3; ++alpha)
      EXPECT_LE(rel_diff(sobolev_norm(u, alpha), oracle::sobolev_norm(u, alpha)), 1e-13) << seed << " " << alpha;
  }
}

TEST(SobolevNorm, PoincareInequality) {
  for (double L : {2 * std::numbers::pi, 1.0}) {
    GridSpec g = grid_of(32);
    g.length = L;
    const double l1 = g.lambda1();
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      CounterRng rng(seed);
      auto u = random_velocity(g, 12, rng, 1.0);
      for (int alpha = 0; alpha <= 3; ++alpha)
        for (int beta = 0; beta <= alpha; ++beta) {
          const double lhs = std::pow(l1, alpha - beta) * std::pow(sobolev_norm(u, beta), 2);
          EXPECT_LE(lhs, std::pow(sobolev_norm(u, alpha), 2) * (1 + 1e-12));
        }
    }
  }
}

TEST(BiotSavart, ZeroAndCosine) {
  const auto g = grid_of(16);
  auto layout = SpectralLayout::get(g);
  EXPECT_EQ(max_abs(velocity_from_vorticity(ScalarSpectrum::zeros(g))), 0.0);

  auto w = ScalarSpectrum::zeros(g);  // w = 2 cos x
  w.coeffs[layout->index(1, 0)] = 1.0;
  w.coeffs[layout->index(g.n - 1, 0)] = 1.0;
  auto u = velocity_from_vorticity(w);
  // u_k = i k_perp w_k / |k|^2 with k = (1, 0): k_perp = (0, -1) -> u_k = (0, -i)
  EXPECT_LT(std::abs(u.x[layout->index(1, 0)]), 1e-16);
  EXPECT_LT(std::abs(u.y[layout->index(1, 0)] - Complex(0, -1)), 1e-16);
  EXPECT_LT(std::abs(u.y[layout->index(g.n - 1, 0)] - Complex(0, 1)), 1e-16);
  // Physical check: v = 2 sin x.
  auto phys = inverse_transform(u);
  for (int i = 0; i < g.n; ++i) EXPECT_NEAR(phys.at(1, i, 3), 2 * std::sin(i * g.length / g.n), 1e-14);
}

TEST(BiotSavart, RoundTripAndNormShift) {
  const auto g = grid_of(32);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CounterRng rng(seed);
    auto w = random_vorticity(g, 5.0, 2.0, rng);
    auto u = velocity_from_vorticity(w);
    EXPECT_LE(divergence_defect(u), 1e-10);
    EXPECT_LE(max_abs_difference(vorticity_from_velocity(u), w), 1e-12 * max_abs(w));
    for (int alpha = 0; alpha <= 3; ++alpha)
      EXPECT_LE(rel_diff(sobolev_norm(u, alpha), velocity_norm(w, alpha)), 1e-12);
    // ||u||_1 equals the plain L2 norm of the vorticity.
    PhysicalField wp = inverse_transform(w);
    double sum = 0.0;
    for (double v : wp.values) sum += v * v;
    const double l2w = std::sqrt(sum * g.length * g.length / (g.n * g.n));
    EXPECT_LE(rel_diff(sobolev_norm(u, 1), l2w), 1e-12);

    CounterRng rng2(seed + 50);
    auto v = random_velocity(g, 10, rng2);
    EXPECT_LE(max_abs_difference(velocity_from_vorticity(vorticity_from_velocity(v)), v), 1e-12 * max_abs(v));
  }
}

TEST(Dealias, SquareRule) {
  const auto g = grid_of(32);
  auto layout = SpectralLayout::get(g);
  CounterRng rng(5);
  auto low = dealias(transform_vector(random_physical(g, 2, rng)));
  auto narrow = VectorSpectrum::zeros(g);
  for (int a = 0; a < g.n; ++a)
    for (int b = 0; b <= g.n / 4; ++b)
      if (std::abs(layout->mode_x(a)) <= g.n / 4) narrow.x[layout->index(a, b)] = low.x[layout->index(a, b)];
  EXPECT_EQ(max_abs_difference(dealias(narrow), narrow), 0.0);

  auto single = ScalarSpectrum::zeros(g);
  single.coeffs[layout->index(g.n / 2 - 1, 0)] = 1.0;
  EXPECT_EQ(max_abs(dealias(single)), 0.0);

  auto once = dealias(low);
  EXPECT_EQ(max_abs_difference(dealias(once), once), 0.0);
}

TEST(Dealias, ActiveModeCountAt512) {
  GridSpec g = grid_of(512);
  EXPECT_EQ(SpectralLayout(g).active_mode_count(), 116280u);
  g.dealias_rule = DealiasRule::circular;
  // Circular rule keeps fewer modes than the square one.
  EXPECT_LT(SpectralLayout(g).active_mode_count(), 116280u);
}

TEST(Hermitian, PreservedByModuleOperations) {
  const auto g = grid_of(32);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    CounterRng rng(seed);
    auto f = transform_vector(random_physical(g, 2, rng));
    EXPECT_TRUE(is_hermitian(f));
    EXPECT_TRUE(is_hermitian(leray_project(f)));
    EXPECT_TRUE(is_hermitian(dealias(f)));
    auto w = vorticity_from_velocity(leray_project(f));
    EXPECT_TRUE(is_hermitian(w));
    EXPECT_TRUE(is_hermitian(velocity_from_vorticity(w)));
  }
}

TEST(Snapshot, RoundTripIsBitExact) {
  const auto g = grid_of(16);
  CounterRng rng(9);
  auto w = random_vorticity(g, 3.0, 1.0, rng);
  std::stringstream ss;
  write_snapshot(ss, w);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "NKF1");
  EXPECT_EQ(bytes.size(), 4u + 4u + 8u + 4u + w.coeffs.size() * 16u);
  auto back = std::get<SpectralVorticityField>(read_snapshot(ss));
  EXPECT_EQ(back.grid.n, 16);
  for (std::size_t i = 0; i < w.coeffs.size(); ++i) EXPECT_EQ(back.coeffs[i], w.coeffs[i]);

  auto u = velocity_from_vorticity(w);
  std::stringstream sv;
  write_snapshot(sv, u);
  auto ub = std::get<SpectralVelocityField>(read_snapshot(sv));
  EXPECT_EQ(max_abs_difference(ub, u), 0.0);

  std::stringstream bad("XXXX");
  EXPECT_THROW(read_snapshot(bad), ConfigError);
  std::stringstream truncated(bytes.substr(0, 40));
  EXPECT_THROW(read_snapshot(truncated), ConfigError);
}
