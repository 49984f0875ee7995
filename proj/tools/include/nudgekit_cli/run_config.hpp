#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nudgekit/assimilation.hpp"
#include "nudgekit/experiments.hpp"
#include "nudgekit/fft.hpp"
#include "nudgekit/invariants.hpp"
#include "nudgekit_cli/config_file.hpp"

namespace nudgekit::cli {

enum class InitialKind { random, taylor_green, zero, checkpoint };
enum class Command { solve, assimilate, sweep, converge, verify };

/// Source of the observed trajectory for assimilate and converge.
enum class ReferenceKind { ensemble, initial };

struct InitialSpec {
  InitialKind kind = InitialKind::random;
  double peak = 4.0;
  double l2 = 3.0;
  std::string path;  // checkpoint only
};

struct SchemeSpec {
  SchemeKind kind = SchemeKind::direct;
  double delta = 0.25;
  std::optional<double> kappa;  // relaxed only; default min(1, mu delta)
  double mu = 1.0;
  std::vector<int> schedule;    // explicit observation steps
};

struct AssimilateSpec {
  double duration = 64.0;
  InitialState initial = InitialState::interpolated;
  ReferenceKind reference = ReferenceKind::ensemble;
  int member = 0;
};

struct ConvergeSpec {
  std::vector<int> periods = {32, 16, 8, 4, 2, 1};
  double mu = 1.0;
  double duration = 10.0;
  int sample_stride = 1;
};

/// Everything a command needs. Every field maps to one config key; see
/// config_keys() for the list and resolved_text() for the canonical form.
struct RunConfig {
  std::string run_id = "run";
  std::string output_dir = "results";
  std::uint64_t seed = 0;
  int threads = 1;
  int sample_stride = 16;

  SolverParams solver;  // solver.grid is the grid of every component
  InitialSpec initial;
  double solve_duration = 1.0;

  InterpolantConfig interpolant;
  StreamMode stream = StreamMode::smoothed;

  SchemeSpec scheme;
  AssimilateSpec assimilate;
  EnsembleSpec ensemble;

  SweepSpec sweep;
  int batch_size = 64;
  double delta_cap = 0.5;
  int fit_window = 5;

  ConvergeSpec converge;

  int verify_samples = 100;
  int verify_steps = 100;

  FftPlanner planner = FftPlanner::estimate;
  std::string wisdom;

  /// Reads every key, rejects unknown ones and runs the common validation.
  static RunConfig from_file(const ConfigFile& file);

  /// Canonical `key = value` listing of every setting; parses back to an equal config.
  std::string resolved_text() const;
  /// Settings that determine sweep results, for resume checks.
  std::string manifest_text() const;

  /// Grid, solver and observation settings. Throws ConfigError.
  void validate() const;
  /// Common checks plus everything the command will use, before it starts.
  void validate(Command command) const;

  SolverParams solver_params() const;
  InterpolantConfig interpolant_config() const;
  AssimilationConfig assimilation_config() const;
  AssimilationScheme scheme_config() const;
  EnsembleSpec ensemble_spec() const;
  SweepConfig sweep_config(const std::filesystem::path& root) const;
  AssimilationConfig converge_config() const;
  InvariantSuiteConfig suite_config() const;
};

/// Config keys in canonical order.
std::vector<std::string> config_keys();

}  // namespace nudgekit::cli
