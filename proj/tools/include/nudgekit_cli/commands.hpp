#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "nudgekit_cli/run_config.hpp"

namespace nudgekit::cli {

/// Process exit codes.
enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_divergence = 2, exit_invariant = 3 };

struct CliOptions {
  Command command = Command::verify;
  std::optional<std::filesystem::path> config;  // defaults only when absent
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool plan = false;
  bool resume = true;
};

/// Output root: $NUDGEKIT_RESULTS when set and nonempty, else output_dir.
std::filesystem::path results_root(const RunConfig& config);
/// <root>/<run.id>
std::filesystem::path run_directory(const RunConfig& config);

/// Initial vorticity described by the initial.* keys.
SpectralVorticityField initial_state(const RunConfig& config);
/// State U(t0) of the observed system for assimilate and converge.
SpectralVorticityField reference_state(const RunConfig& config, std::ostream& log);

/// Runs one subcommand. Errors propagate as exceptions.
int run_command(const CliOptions& options, std::ostream& out, std::ostream& log);

/// Parses argv, runs the subcommand and maps exceptions to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& log);

}  // namespace nudgekit::cli
