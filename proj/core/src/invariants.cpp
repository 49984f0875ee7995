#include "nudgekit/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "nudgekit/assimilation.hpp"
#include "nudgekit/csv.hpp"
#include "nudgekit/errors.hpp"
#include "nudgekit/random_fields.hpp"
#include "nudgekit/spectral_ops.hpp"

namespace nudgekit {

namespace {

// Stream offsets keep the sample sets of different checks independent.
constexpr std::uint64_t kFieldStream = 0;
constexpr std::uint64_t kHeldOutStream = 2u << 20;
constexpr std::uint64_t kPairStream = 3u << 20;

const GridSpec& grid_of(const InvariantSuiteConfig& c) { return c.solver.grid; }

SpectralVelocityField sample(const InvariantSuiteConfig& c, std::uint64_t stream, int kmax, double smoothness) {
  CounterRng rng(c.seed, stream);
  return random_velocity(grid_of(c), kmax, rng, smoothness);
}

InvariantReport finish(std::string name, int samples, double worst, double limit) {
  return {std::move(name), samples, worst, limit, std::isfinite(worst) && worst <= limit};
}

// Held-out samples for the J bounds: the type-I sampling distribution.
SpectralVelocityField held_out(const InvariantSuiteConfig& c, int s) {
  return sample(c, kHeldOutStream + static_cast<std::uint64_t>(s), 16, 2.0);
}

JConstants estimated_constants(const InvariantSuiteConfig& c) {
  const auto est = estimate_type1_constant(c.samples, c.interpolant, c.seed + 1, 16);
  return j_constants(est.c1, c.interpolant);
}

}  // namespace

void InvariantSuiteConfig::validate() const {
  solver.validate();
  interpolant.validate();
  require_same_grid(solver.grid, interpolant.geometry.grid, "invariant suite");
  if (samples < 1) throw ConfigError("verify.samples must be >= 1");
  if (kmax < 1) throw ConfigError("verify kmax must be >= 1");
  if (dynamic_steps < 1) throw ConfigError("verify steps must be >= 1");
}

const std::vector<std::string>& invariant_names() {
  static const std::vector<std::string> names = {
      "poincare", "pinterp",  "psmooth", "interp", "jinterp",     "jweak",
      "jsmooth",  "jlinear", "energy_dissipation", "fixed_points"};
  return names;
}

InvariantReport check_poincare(const InvariantSuiteConfig& c) {
  const double l1 = grid_of(c).lambda1();
  double worst = 0.0;
  for (int s = 0; s < c.samples; ++s) {
    const auto u = sample(c, kFieldStream + s, c.kmax, 1.0);
    for (int alpha = 1; alpha <= 3; ++alpha)
      for (int beta = 0; beta < alpha; ++beta) {
        const double lhs = std::pow(l1, alpha - beta) * std::pow(sobolev_norm(u, beta), 2);
        worst = std::max(worst, lhs / std::pow(sobolev_norm(u, alpha), 2));
      }
  }
  return finish("poincare", c.samples, worst, 1.0 + 1e-12);
}

InvariantReport check_filter_interpolation(const InvariantSuiteConfig& c) {
  double worst = 0.0;
  for (int s = 0; s < c.samples; ++s) {
    const auto u = sample(c, kFieldStream + s, c.kmax, 1.0);
    for (double lambda : {4.0, 16.0, 64.0}) {
      const auto p = spectral_filter(u, lambda);
      worst = std::max(worst, sobolev_norm(u - p, 0) / (sobolev_norm(u, 1) / std::sqrt(lambda)));
    }
  }
  return finish("pinterp", c.samples, worst, 1.0 + 1e-12);
}

InvariantReport check_filter_smoothing(const InvariantSuiteConfig& c) {
  double worst = 0.0;
  for (int s = 0; s < c.samples; ++s) {
    const auto u = sample(c, kFieldStream + s, c.kmax, 1.0);
    for (double lambda : {4.0, 16.0, 64.0}) {
      const auto p = spectral_filter(u, lambda);
      for (int alpha : {1, 2})
        worst = std::max(worst, sobolev_norm(p, alpha) / (std::pow(lambda, alpha / 2.0) * sobolev_norm(u, 0)));
    }
  }
  return finish("psmooth", c.samples, worst, 1.0 + 1e-12);
}

InvariantReport check_type1(const InvariantSuiteConfig& c) {
  const auto estimate = estimate_type1_constant(c.samples, c.interpolant, c.seed + 1, 16);
  std::vector<SpectralVelocityField> fresh;
  for (int s = 0; s < c.samples; ++s) fresh.push_back(held_out(c, s));
  const auto check = estimate_type1_constant(fresh, c.interpolant);
  // The held-out maximum may exceed the estimate by sampling noise only.
  return finish("interp", check.samples, check.ratio / estimate.ratio, 1.1);
}

InvariantReport check_j_interpolation(const InvariantSuiteConfig& c) {
  const auto k = estimated_constants(c);
  const Interpolant J(c.interpolant);
  double worst = 0.0;
  for (int s = 0; s < c.samples; ++s) {
    const auto u = held_out(c, s);
    const double d = sobolev_norm(u - J.apply(u), 0);
    const double h1 = sobolev_norm(u, 1);
    worst = std::max(worst, d * d / (k.interp_sq * h1 * h1));
  }
  return finish("jinterp", c.samples, worst, 1.0);
}

InvariantReport check_j_weak(const InvariantSuiteConfig& c) {
  const auto k = estimated_constants(c);
  const Interpolant J(c.interpolant);
  double worst = 0.0;
  for (int s = 0; s < c.samples; ++s) {
    const auto u = held_out(c, s);
    worst = std::max(worst, sobolev_norm(J.apply(u), 0) / (k.c2 * sobolev_norm(u, 1)));
  }
  return finish("jweak", c.samples, worst, 1.0);
}

InvariantReport check_j_smooth(const InvariantSuiteConfig& c) {
  const auto k = estimated_constants(c);
  const Interpolant J(c.interpolant);
  double worst = 0.0;
  for (int s = 0; s < c.samples; ++s) {
    const auto u = held_out(c, s);
    worst = std::max(worst, sobolev_norm(J.apply(u), 1) / (k.c3 * sobolev_norm(u, 1)));
  }
  return finish("jsmooth", c.samples, worst, 1.0);
}

InvariantReport check_j_linear(const InvariantSuiteConfig& c) {
  const Interpolant J(c.interpolant);
  double worst = 0.0;
  for (int s = 0; s < c.samples; ++s) {
    CounterRng rng(c.seed, kPairStream + s);
    const auto u = random_velocity(grid_of(c), c.kmax, rng, 1.0);
    const auto v = random_velocity(grid_of(c), c.kmax, rng, 1.0);
    const double a = rng.normal(), b = rng.normal();
    const auto rhs = a * J.apply(u) + b * J.apply(v);
    const double err = sobolev_norm(J.apply(a * u + b * v) - rhs, 0);
    worst = std::max(worst, err / (1e-12 * std::max(sobolev_norm(rhs, 0), 1e-300)));
  }
  return finish("jlinear", c.samples, worst, 1.0);
}

InvariantReport check_energy_dissipation(const InvariantSuiteConfig& c) {
  auto p = c.solver;
  p.forcing.kind = ForcingKind::none;
  CounterRng rng(c.seed, kFieldStream);
  Solver solver(p, random_vorticity(p.grid, 4.0, 3.0, rng));
  double previous = velocity_norm(solver.state(), 0);
  double worst = 0.0;
  for (int i = 0; i < c.dynamic_steps; ++i) {
    solver.step();
    const double e = velocity_norm(solver.state(), 0);
    worst = std::max(worst, (e * e) / (previous * previous));
    previous = e;
  }
  return finish("energy_dissipation", c.dynamic_steps, worst, 1.0 + 1e-10);
}

InvariantReport check_fixed_points(const InvariantSuiteConfig& c) {
  AssimilationConfig ac;
  ac.solver = c.solver;
  ac.interpolant = c.interpolant;
  ac.duration = c.dynamic_steps * c.solver.dt;
  ac.sample_stride = 1;
  ac.initial = InitialState::reference;
  CounterRng rng(c.seed, kFieldStream);
  const auto U0 = random_vorticity(c.solver.grid, 4.0, 3.0, rng);
  const auto schemes = {AssimilationScheme::direct(1), AssimilationScheme::direct(4),
                        AssimilationScheme::insertion(0.5, 2, c.solver.dt), AssimilationScheme::nudging(1.0)};
  const auto results = run_schemes(U0, schemes, ac);
  double worst = 0.0;
  int samples = 0;
  for (const auto& r : results) {
    if (r.trajectory.meta.diverged) worst = std::numeric_limits<double>::infinity();
    for (const auto& s : r.trajectory.samples) {
      worst = std::max(worst, s.err_l2 / (1e-10 * velocity_norm(U0, 0)));
      ++samples;
    }
  }
  return finish("fixed_points", samples, worst, 1.0);
}

std::vector<InvariantReport> run_invariant_suite(const InvariantSuiteConfig& config) {
  config.validate();
  return {check_poincare(config),           check_filter_interpolation(config), check_filter_smoothing(config),
          check_type1(config),              check_j_interpolation(config),      check_j_weak(config),
          check_j_smooth(config),           check_j_linear(config),             check_energy_dissipation(config),
          check_fixed_points(config)};
}

void write_invariant_report(std::ostream& os, const std::vector<InvariantReport>& reports) {
  for (const auto& r : reports)
    os << r.name << ' ' << r.samples << ' ' << csv::number(r.worst_ratio) << ' ' << csv::number(r.limit) << ' '
       << (r.pass ? "pass" : "fail") << '\n';
}

}  // namespace nudgekit
