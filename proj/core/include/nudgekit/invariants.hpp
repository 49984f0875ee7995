#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nudgekit/observation.hpp"
#include "nudgekit/solver.hpp"

namespace nudgekit {

/// One property check: the worst observed ratio of left side to right side
/// over all samples. The check passes when worst_ratio <= limit.
struct InvariantReport {
  std::string name;
  int samples = 0;
  double worst_ratio = 0.0;
  double limit = 1.0;
  bool pass = false;
};

struct InvariantSuiteConfig {
  SolverParams solver;            // grid, viscosity and step for the dynamic checks
  InterpolantConfig interpolant;  // J under test
  int samples = 100;
  std::uint64_t seed = 1;
  int kmax = 20;                  // band of the random test fields
  int dynamic_steps = 100;        // steps for the energy and fixed-point checks

  void validate() const;
};

/// Names of the registered checks, in report order.
const std::vector<std::string>& invariant_names();

InvariantReport check_poincare(const InvariantSuiteConfig& config);
InvariantReport check_filter_interpolation(const InvariantSuiteConfig& config);
InvariantReport check_filter_smoothing(const InvariantSuiteConfig& config);
/// Stability of the empirical type-I constant: held-out worst ratio over the estimate.
InvariantReport check_type1(const InvariantSuiteConfig& config);
InvariantReport check_j_interpolation(const InvariantSuiteConfig& config);
InvariantReport check_j_weak(const InvariantSuiteConfig& config);
InvariantReport check_j_smooth(const InvariantSuiteConfig& config);
InvariantReport check_j_linear(const InvariantSuiteConfig& config);
/// Unforced energy is nonincreasing from step to step.
InvariantReport check_energy_dissipation(const InvariantSuiteConfig& config);
/// Every scheme started on the reference stays on it.
InvariantReport check_fixed_points(const InvariantSuiteConfig& config);

std::vector<InvariantReport> run_invariant_suite(const InvariantSuiteConfig& config);

/// "name samples worst_ratio limit pass|fail", one line per report.
void write_invariant_report(std::ostream& os, const std::vector<InvariantReport>& reports);

}  // namespace nudgekit
