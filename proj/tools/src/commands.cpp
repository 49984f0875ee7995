#include "nudgekit_cli/commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nudgekit/csv.hpp"
#include "nudgekit/errors.hpp"
#include "nudgekit/random_fields.hpp"
#include "nudgekit/rng.hpp"

namespace nudgekit::cli {

namespace {

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << bytes;
  if (!out.flush()) throw ConfigError("cannot write " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

/// Echo of the input bytes plus the canonical resolved form.
void write_config_echo(const std::filesystem::path& dir, const ConfigFile& file, const RunConfig& config) {
  std::filesystem::create_directories(dir);
  write_file(dir / "config.txt", file.text());
  write_file(dir / "resolved_config.txt", config.resolved_text());
}

LogFn logger(std::ostream& log) {
  return [&log](const std::string& line) { log << line << (line.ends_with('\n') ? "" : "\n") << std::flush; };
}

int cmd_solve(const RunConfig& config, const std::filesystem::path& dir, std::ostream& log) {
  const auto params = config.solver_params();
  double t0 = 0.0;
  std::int64_t step0 = 0;
  auto w = initial_state(config);
  if (config.initial.kind == InitialKind::checkpoint) {
    const auto cp = load_checkpoint(config.initial.path);
    t0 = cp.time;
    step0 = cp.step;
  }
  Solver solver(params, std::move(w), t0 - static_cast<double>(step0) * params.dt, step0);
  const auto steps = static_cast<std::int64_t>(std::llround(config.solve_duration / params.dt));

  auto csv_out = open_output(dir / "diagnostics.csv");
  csv::write_header(csv_out, {"t", "e", "ens", "h1", "h2"});
  auto record = [&] {
    const auto d = diagnostics(solver.state());
    csv::write_row(csv_out, {solver.time(), d.energy, d.enstrophy, d.h1, d.h2});
    csv_out.flush();
  };
  record();
  for (std::int64_t k = 1; k <= steps; ++k) {
    solver.step();
    if (k % config.sample_stride == 0 || k == steps) record();
  }
  save_checkpoint(dir / "final.nkf", {params, solver.state(), solver.time(), solver.step_index()});
  log << "solve: " << steps << " steps to t = " << csv::number(solver.time()) << '\n';
  return exit_ok;
}

int cmd_assimilate(const RunConfig& config, const std::filesystem::path& dir, std::ostream& log) {
  const auto U0 = reference_state(config, log);
  const auto ac = config.assimilation_config();
  const auto scheme = config.scheme_config();
  const auto result = run_schemes(U0, {scheme}, ac).front();
  const auto path = dir / "trajectory.csv";
  save_trajectory(path, result.trajectory);
  const auto& meta = result.trajectory.meta;
  log << "assimilate: " << meta.scheme << " terminal err_l2 = " << csv::number(result.trajectory.terminal().err_l2)
      << '\n';
  if (meta.diverged) {
    log << "assimilate: run diverged\n";
    return exit_divergence;
  }
  return exit_ok;
}

int cmd_sweep(const RunConfig& config, const ConfigFile& file, const std::filesystem::path& dir, bool plan_only,
              bool resume, std::ostream& out, std::ostream& log) {
  auto sc = config.sweep_config(dir);
  sc.resume = resume;
  if (plan_only) {
    out << describe_plan(plan_sweep(sc));
    return exit_ok;
  }
  const auto manifest_path = dir / "manifest.txt";
  const auto manifest = config.manifest_text();
  if (resume && std::filesystem::exists(manifest_path)) {
    const auto existing = read_file(manifest_path);
    if (existing != manifest) {
      std::istringstream a(existing), b(manifest);
      std::string la, lb;
      while (std::getline(a, la) && std::getline(b, lb))
        if (la != lb) break;
      throw ConfigError("results in " + dir.string() + " were produced by a different configuration: '" + la +
                        "' vs '" + lb + "' (use --no-resume or a new run.id)");
    }
  }
  write_config_echo(dir, file, config);
  write_file(manifest_path, manifest);

  const auto outcome = run_sweep(sc, logger(log));
  log << "sweep: executed " << outcome.executed << ", skipped " << outcome.skipped << '\n';

  const auto curve = kappa_min_curve(outcome.summary, config.fit_window);
  {
    auto os = open_output(dir / "kappa_min.csv");
    write_kappa_min_csv(os, curve);
  }
  {
    auto os = open_output(dir / "kappa_min_members.csv");
    csv::write_header(os, {"member", "delta", "kappa_min", "boundary_flag"});
    for (const auto& [member, row] : kappa_min_per_member(sc, config.fit_window))
      os << member << ',' << csv::number(row.delta) << ',' << csv::number(row.fit.kappa_min) << ','
         << (row.fit.boundary ? 1 : 0) << '\n';
  }
  std::vector<std::pair<double, double>> points;
  for (const auto& r : curve) points.emplace_back(r.delta, r.fit.kappa_min);
  const auto fit = fit_linear_mu(points, config.delta_cap);
  auto os = open_output(dir / "mu_fit.txt");
  write_mu_fit(os, fit);
  log << "sweep: mu = " << csv::number(fit.mu) << ", R^2 = " << csv::number(fit.r2) << '\n';
  return exit_ok;
}

int cmd_converge(const RunConfig& config, const std::filesystem::path& dir, std::ostream& log) {
  const auto U0 = reference_state(config, log);
  const auto gaps = compare_discrete_vs_nudging(U0, config.converge.periods, config.converge.mu,
                                                config.converge_config());
  auto os = open_output(dir / "converge.csv");
  csv::write_header(os, {"delta", "sup_gap_l2", "sup_gap_h1"});
  std::vector<std::pair<double, double>> l2, h1;
  bool all_valid = true;
  for (const auto& g : gaps) {
    csv::write_row(os, {g.delta, g.sup_gap_l2, g.sup_gap_h1});
    all_valid = all_valid && g.valid;
    l2.emplace_back(g.delta, g.sup_gap_l2);
    h1.emplace_back(g.delta, g.sup_gap_h1);
  }
  auto rate = [](const std::vector<std::pair<double, double>>& pts) {
    const double r = loglog_slope(pts);
    return std::isnan(r) ? std::string() : csv::number(r);
  };
  auto rs = open_output(dir / "converge_rate.txt");
  rs << "rate_l2 =" << (gaps.size() > 1 ? " " + rate(l2) : "") << '\n';
  rs << "rate_h1 =" << (gaps.size() > 1 ? " " + rate(h1) : "") << '\n';
  if (!all_valid) {
    log << "converge: a run diverged\n";
    return exit_divergence;
  }
  return exit_ok;
}

int cmd_verify(const RunConfig& config, const std::filesystem::path& dir, std::ostream& out) {
  const auto reports = run_invariant_suite(config.suite_config());
  std::ostringstream text;
  write_invariant_report(text, reports);
  out << text.str();
  write_file(dir / "verify.txt", text.str());
  for (const auto& r : reports)
    if (!r.pass) return exit_invariant;
  return exit_ok;
}

}  // namespace

std::filesystem::path results_root(const RunConfig& config) {
  if (const char* env = std::getenv("NUDGEKIT_RESULTS"); env && *env) return env;
  return config.output_dir;
}

std::filesystem::path run_directory(const RunConfig& config) { return results_root(config) / config.run_id; }

SpectralVorticityField initial_state(const RunConfig& config) {
  const auto& grid = config.solver.grid;
  switch (config.initial.kind) {
    case InitialKind::random: {
      CounterRng rng(config.seed);
      return random_vorticity(grid, config.initial.peak, config.initial.l2, rng);
    }
    case InitialKind::taylor_green:
      return taylor_green(grid, config.solver.nu, 0.0);
    case InitialKind::zero:
      return SpectralVorticityField::zeros(grid);
    case InitialKind::checkpoint: {
      auto cp = load_checkpoint(config.initial.path);
      require_same_grid(cp.params.grid, grid, "initial checkpoint");
      return std::move(cp.state);
    }
  }
  throw ConfigError("unknown initial.kind");
}

SpectralVorticityField reference_state(const RunConfig& config, std::ostream& log) {
  if (config.assimilate.reference == ReferenceKind::initial) return initial_state(config);
  return generate_member(config.ensemble_spec(), config.solver_params(), config.assimilate.member, logger(log)).state;
}

int run_command(const CliOptions& options, std::ostream& out, std::ostream& log) {
  auto file = options.config ? ConfigFile::load(*options.config) : ConfigFile::parse("", "<defaults>");
  if (options.seed) file.set("seed", std::to_string(*options.seed));
  if (options.threads) file.set("threads", std::to_string(*options.threads));
  const auto config = RunConfig::from_file(file);
  config.validate(options.command);
  configure_fft(config.planner, config.wisdom);

  const auto dir = run_directory(config);
  switch (options.command) {
    case Command::solve:
      write_config_echo(dir, file, config);
      return cmd_solve(config, dir, log);
    case Command::assimilate:
      write_config_echo(dir, file, config);
      return cmd_assimilate(config, dir, log);
    case Command::sweep:
      return cmd_sweep(config, file, dir, options.plan, options.resume, out, log);
    case Command::converge:
      write_config_echo(dir, file, config);
      return cmd_converge(config, dir, log);
    case Command::verify:
      write_config_echo(dir, file, config);
      return cmd_verify(config, dir, out);
  }
  return exit_config;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& log) {
  CLI::App app{"nudgekit: data assimilation experiments for 2-D Navier-Stokes"};
  app.require_subcommand(1);

  CliOptions options;
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 1;
  const std::vector<std::pair<Command, std::string>> commands = {
      {Command::solve, "free run with diagnostics"},
      {Command::assimilate, "one assimilation run against one reference"},
      {Command::sweep, "ensemble sweep over (delta, kappa)"},
      {Command::converge, "discrete schemes against nudging as delta shrinks"},
      {Command::verify, "invariant suite"}};
  const char* names[] = {"solve", "assimilate", "sweep", "converge", "verify"};
  std::vector<std::pair<Command, CLI::App*>> subs;
  std::vector<CLI::Option*> seed_opts, thread_opts;
  for (const auto& [command, help] : commands) {
    auto* sub = app.add_subcommand(names[static_cast<int>(command)], help);
    sub->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    seed_opts.push_back(sub->add_option("--seed", seed, "overrides seed"));
    thread_opts.push_back(sub->add_option("--threads", threads, "overrides threads")->check(CLI::PositiveNumber));
    if (command == Command::sweep) {
      sub->add_flag("--plan", options.plan, "print the run plan and exit");
      sub->add_flag("--resume,!--no-resume", options.resume, "skip runs already on disk (default)");
    }
    subs.emplace_back(command, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, log);
    return code == 0 ? exit_ok : exit_config;
  }

  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i].second->parsed()) {
      options.command = subs[i].first;
      if (*seed_opts[i]) options.seed = seed;
      if (*thread_opts[i]) options.threads = threads;
    }
  if (!config_path.empty()) options.config = config_path;

  try {
    return run_command(options, out, log);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const DivergenceError& e) {
    log << "divergence: " << e.what() << '\n';
    return exit_divergence;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return exit_config;
  }
}

}  // namespace nudgekit::cli
