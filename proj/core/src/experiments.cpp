#include "nudgekit/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "nudgekit/csv.hpp"
#include "nudgekit/errors.hpp"
#include "nudgekit/random_fields.hpp"
#include "nudgekit/spectral_ops.hpp"

namespace nudgekit {

namespace {

std::int64_t whole_steps(double time, double dt, const char* what) {
  const double steps = time / dt;
  const double r = std::round(steps);
  if (std::abs(steps - r) > 1e-9 * std::max(1.0, steps))
    throw ConfigError(std::string(what) + " must be a multiple of dt");
  return static_cast<std::int64_t>(r);
}

// Runs body(i) for i in [0, count) on up to `threads` workers; rethrows the
// first exception after all workers stop.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; !failed && (i = next++) < count;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

// ---------------------------------------------------------------------------
// Grids

void SweepSpec::validate() const {
  if (periods.empty()) {
    if (p_first < 0 || p_last < p_first) throw ConfigError("sweep exponent range must satisfy 0 <= p_first <= p_last");
    if (base_m < 1) throw ConfigError("sweep base_m must be >= 1");
  }
  for (int m : periods)
    if (m < 1) throw ConfigError("sweep periods must be >= 1");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("sweep ratio must lie in (0, 1)");
  if (kappa_ratio_root < 1) throw ConfigError("kappa_ratio_root must be >= 1");
  if (!(kappa_floor > 0.0)) throw ConfigError("kappa_floor must be positive");
  if (!(kappa_ceiling_factor > 0.0)) throw ConfigError("kappa_ceiling_factor must be positive");
  if (!(finest_kappa_floor > 0.0)) throw ConfigError("finest_kappa_floor must be positive");
}

std::vector<DeltaPoint> delta_grid(const SweepSpec& spec, double dt) {
  spec.validate();
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  std::vector<int> ms;
  std::vector<int> ps;
  if (spec.periods.empty()) {
    for (int p = spec.p_first; p <= spec.p_last; ++p) {
      ms.push_back(static_cast<int>(std::floor(spec.base_m * std::pow(spec.ratio, p))));
      ps.push_back(p);
    }
  } else {
    ms = spec.periods;
    std::sort(ms.begin(), ms.end(), std::greater<>());
    for (std::size_t i = 0; i < ms.size(); ++i) ps.push_back(static_cast<int>(i));
  }
  std::vector<DeltaPoint> out;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (ms[i] < 1) continue;
    if (std::any_of(out.begin(), out.end(), [&](const DeltaPoint& d) { return d.m == ms[i]; })) continue;
    out.push_back({ps[i], ms[i], ms[i] * dt});
  }
  if (out.empty()) throw ConfigError("delta grid is empty");
  return out;
}

std::vector<KappaPoint> kappa_grid(double delta, const SweepSpec& spec, double floor) {
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  const double cap = spec.kappa_ceiling_factor * delta;
  const double root = spec.kappa_ratio_root;
  const double lr = std::log(spec.ratio);
  auto kappa_of = [&](int q) { return std::pow(spec.ratio, q / root); };
  // ratio < 1: kappa decreases in q. Start a little early and test exactly.
  int q = static_cast<int>(std::floor(root * std::log(cap) / lr)) - 1;
  while (kappa_of(q) > cap) ++q;
  std::vector<KappaPoint> out;
  for (; kappa_of(q) >= floor; ++q) out.push_back({q, kappa_of(q)});
  if (out.empty()) {
    std::ostringstream msg;
    msg << "kappa grid for delta = " << csv::number(delta) << " is empty (range [" << csv::number(floor) << ", "
        << csv::number(cap) << "])";
    throw ConfigError(msg.str());
  }
  return out;
}

std::vector<KappaPoint> kappa_grid(double delta, const SweepSpec& spec) {
  return kappa_grid(delta, spec, spec.kappa_floor);
}

std::vector<SweepCell> sweep_cells(const SweepSpec& spec, double dt) {
  std::vector<SweepCell> cells;
  for (const auto& d : delta_grid(spec, dt)) {
    const bool finest = d.m == 1 && spec.finest_kappa_floor < spec.kappa_floor;
    for (const auto& k : kappa_grid(d.delta, spec, finest ? spec.finest_kappa_floor : spec.kappa_floor))
      cells.push_back({d, k, k.kappa < spec.kappa_floor});
  }
  return cells;
}

std::size_t grid_pair_count(const SweepSpec& spec, double dt) {
  std::size_t n = 0;
  for (const auto& d : delta_grid(spec, dt)) n += kappa_grid(d.delta, spec).size();
  return n;
}

// ---------------------------------------------------------------------------
// Ensembles

void EnsembleSpec::validate() const {
  if (size < 1) throw ConfigError("ensemble size must be >= 1");
  if (!(spinup_time >= 0.0)) throw ConfigError("spinup time must be >= 0");
  if (!(spectrum_peak > 0.0)) throw ConfigError("spectrum peak must be positive");
  if (!(initial_l2 > 0.0)) throw ConfigError("initial amplitude must be positive");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

std::uint64_t member_stream(int index, int attempt, int max_retries) {
  return static_cast<std::uint64_t>(index) * static_cast<std::uint64_t>(max_retries + 1) +
         static_cast<std::uint64_t>(attempt);
}

EnsembleMember generate_member(const EnsembleSpec& spec, const SolverParams& params, int index, const LogFn& log) {
  spec.validate();
  params.validate();
  const auto steps = whole_steps(spec.spinup_time, params.dt, "spinup time");
  const auto coeffs = std::make_shared<const EtdCoefficients>(etd_coefficients(params));
  for (int attempt = 0; attempt <= spec.max_retries; ++attempt) {
    const auto stream = member_stream(index, attempt, spec.max_retries);
    CounterRng rng(spec.seed, stream);
    auto z0 = random_vorticity(params.grid, spec.spectrum_peak, spec.initial_l2, rng);
    try {
      Solver solver(params, coeffs, std::move(z0));
      solver.advance(steps);
      return {index, attempt + 1, stream, solver.state()};
    } catch (const DivergenceError& e) {
      if (log) log("ensemble member " + std::to_string(index) + " attempt " + std::to_string(attempt + 1) +
                   " diverged during spinup (" + e.what() + "); regenerating");
    }
  }
  throw DivergenceError(0, "ensemble member " + std::to_string(index) + " diverged in every spinup attempt");
}

std::vector<EnsembleMember> generate_ensemble(const EnsembleSpec& spec, const SolverParams& params, int threads,
                                              const LogFn& log) {
  spec.validate();
  std::vector<EnsembleMember> out(static_cast<std::size_t>(spec.size));
  std::mutex log_mutex;
  const LogFn safe_log = [&](const std::string& s) {
    std::lock_guard lock(log_mutex);
    if (log) log(s);
  };
  parallel_for(out.size(), threads,
               [&](std::size_t i) { out[i] = generate_member(spec, params, static_cast<int>(i), safe_log); });
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

double ensemble_average(const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("average of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double geometric_mean(const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("geometric mean of an empty sample");
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0))
      throw ConfigError("geometric mean needs positive values; entry " + std::to_string(i) + " is " +
                        csv::number(values[i]));
    s += std::log(values[i]);
  }
  return std::exp(s / static_cast<double>(values.size()));
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ConfigError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

Quartiles quartiles(const std::vector<double>& values) {
  return {quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)};
}

CellStats summarize(double delta, double kappa, const std::vector<double>& terminal_errors, int diverged) {
  CellStats c;
  c.delta = delta;
  c.kappa = kappa;
  c.n_diverged = diverged;
  std::vector<double> ok;
  for (double v : terminal_errors) {
    if (std::isfinite(v))
      ok.push_back(v);
    else
      ++c.n_diverged;
  }
  c.n_ok = static_cast<int>(ok.size());
  if (ok.empty()) {
    const double nan = std::nan("");
    c.mean = c.gm = c.median = c.q1 = c.q3 = c.min = c.max = nan;
    return c;
  }
  c.mean = ensemble_average(ok);
  c.gm = std::all_of(ok.begin(), ok.end(), [](double v) { return v > 0.0; }) ? geometric_mean(ok) : std::nan("");
  const auto q = quartiles(ok);
  c.q1 = q.q1;
  c.median = q.median;
  c.q3 = q.q3;
  const auto [lo, hi] = std::minmax_element(ok.begin(), ok.end());
  c.min = *lo;
  c.max = *hi;
  return c;
}

namespace {
const std::vector<std::string> kSummaryColumns = {"delta", "kappa", "n_ok", "n_diverged", "mean", "gm",
                                                  "median", "q1",    "q3",   "min",        "max"};
}

void write_summary_csv(std::ostream& os, const std::vector<CellStats>& rows) {
  csv::write_header(os, kSummaryColumns);
  for (const auto& r : rows) {
    os << csv::number(r.delta) << ',' << csv::number(r.kappa) << ',' << r.n_ok << ',' << r.n_diverged;
    for (double v : {r.mean, r.gm, r.median, r.q1, r.q3, r.min, r.max}) os << ',' << csv::number(v);
    os << '\n';
  }
}

std::vector<CellStats> read_summary_csv(std::istream& is) {
  csv::expect_header(is, kSummaryColumns);
  std::vector<CellStats> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != kSummaryColumns.size()) throw ConfigError("summary row has wrong field count");
    CellStats c;
    c.delta = csv::parse_double(f[0], "delta");
    c.kappa = csv::parse_double(f[1], "kappa");
    c.n_ok = static_cast<int>(csv::parse_int(f[2], "n_ok"));
    c.n_diverged = static_cast<int>(csv::parse_int(f[3], "n_diverged"));
    double* dst[] = {&c.mean, &c.gm, &c.median, &c.q1, &c.q3, &c.min, &c.max};
    for (std::size_t i = 0; i < 7; ++i) *dst[i] = csv::parse_double(f[4 + i], kSummaryColumns[4 + i]);
    rows.push_back(c);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Fits

namespace {

// Solves the 3 x 3 system a x = b by Gaussian elimination with partial pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (a[piv][c] == 0.0) throw ConfigError("singular quadratic fit (repeated kappa values?)");
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (int r = c + 1; r < 3; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < 3; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::array<double, 3> x{};
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

}  // namespace

KappaMinFit fit_kappa_min(const std::vector<std::pair<double, double>>& curve, int window) {
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < curve.size(); ++i)
    if (std::isfinite(curve[i].first) && std::isfinite(curve[i].second)) valid.push_back(i);
  if (valid.size() < 3) throw ConfigError("kappa_min fit needs at least 3 finite points");
  if (window < 3) throw ConfigError("kappa_min fit window must be >= 3");

  std::size_t pos = 0;
  for (std::size_t j = 1; j < valid.size(); ++j)
    if (curve[valid[j]].second < curve[valid[pos]].second) pos = j;
  KappaMinFit fit;
  fit.argmin = valid[pos];
  fit.kappa_min = curve[fit.argmin].first;
  if (pos == 0 || pos + 1 == valid.size()) {
    fit.boundary = true;
    return fit;
  }

  const auto w = std::min(static_cast<std::size_t>(window), valid.size());
  const auto start = std::min(pos - std::min(pos, w / 2), valid.size() - w);
  const double k0 = fit.kappa_min;
  double scale = 0.0;
  for (std::size_t j = start; j < start + w; ++j) scale = std::max(scale, std::abs(curve[valid[j]].first - k0));
  std::array<std::array<double, 3>, 3> ata{};
  std::array<double, 3> aty{};
  for (std::size_t j = start; j < start + w; ++j) {
    const double t = (curve[valid[j]].first - k0) / scale;
    const double y = curve[valid[j]].second;
    const std::array<double, 3> row{1.0, t, t * t};
    for (int r = 0; r < 3; ++r) {
      aty[r] += row[r] * y;
      for (int c = 0; c < 3; ++c) ata[r][c] += row[r] * row[c];
    }
  }
  const auto c = solve3(ata, aty);
  if (!(c[2] > 0.0)) return fit;
  double lo = curve[valid[0]].first, hi = lo;
  for (auto i : valid) {
    lo = std::min(lo, curve[i].first);
    hi = std::max(hi, curve[i].first);
  }
  fit.kappa_min = std::clamp(k0 - scale * c[1] / (2.0 * c[2]), lo, hi);
  fit.fitted = true;
  return fit;
}

LinearFit fit_linear_mu(const std::vector<std::pair<double, double>>& points, double delta_cap) {
  LinearFit fit;
  fit.delta_cap = delta_cap;
  double sdk = 0.0, sdd = 0.0, skk = 0.0;
  std::vector<std::pair<double, double>> used;
  for (const auto& [d, k] : points) {
    if (!(d <= delta_cap) || !std::isfinite(k)) continue;
    used.emplace_back(d, k);
    sdk += d * k;
    sdd += d * d;
    skk += k * k;
  }
  if (used.empty() || !(sdd > 0.0)) throw ConfigError("no points with delta <= " + csv::number(delta_cap) + " to fit");
  fit.points = static_cast<int>(used.size());
  fit.mu = sdk / sdd;
  double sse = 0.0;
  for (const auto& [d, k] : used) sse += (k - fit.mu * d) * (k - fit.mu * d);
  fit.r2 = skk > 0.0 ? 1.0 - sse / skk : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Sweeps

void SweepConfig::validate() const {
  sweep.validate();
  ensemble.validate();
  assimilation.validate();
  if (root.empty()) throw ConfigError("sweep output directory is not set");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  for (const auto& d : delta_grid(sweep, assimilation.solver.dt))
    if (d.m > assimilation.total_steps())
      throw ConfigError("observation interval " + csv::number(d.delta) + " exceeds the assimilation duration");
}

std::filesystem::path run_path(const std::filesystem::path& root, const SweepCell& cell, int member) {
  return root / csv::number(cell.delta.delta) / csv::number(cell.kappa.kappa) / (std::to_string(member) + ".csv");
}

SweepPlan plan_sweep(const SweepConfig& config) {
  config.validate();
  SweepPlan plan;
  plan.cells = sweep_cells(config.sweep, config.assimilation.solver.dt);
  plan.members = config.ensemble.size;
  plan.grid_pairs = grid_pair_count(config.sweep, config.assimilation.solver.dt);
  if (config.resume)
    for (const auto& c : plan.cells)
      for (int m = 0; m < plan.members; ++m)
        if (std::filesystem::exists(metadata_path(run_path(config.root, c, m)))) ++plan.completed;
  return plan;
}

std::string describe_plan(const SweepPlan& plan) {
  std::map<int, std::size_t> per_m;
  std::size_t extended = 0;
  for (const auto& c : plan.cells) {
    ++per_m[c.delta.m];
    if (c.extended) ++extended;
  }
  std::ostringstream os;
  os << "deltas: " << per_m.size() << '\n';
  os << "grid pairs: " << plan.grid_pairs << '\n';
  os << "extra finest-interval pairs: " << extended << '\n';
  os << "cells: " << plan.cells.size() << '\n';
  os << "members: " << plan.members << '\n';
  os << "runs: " << plan.total_runs() << '\n';
  os << "completed: " << plan.completed << '\n';
  os << "pending: " << plan.total_runs() - plan.completed << '\n';
  return os.str();
}

namespace {

std::filesystem::path member_path(const std::filesystem::path& root, int member) {
  return root / "ensemble" / ("member_" + std::to_string(member) + ".nkf");
}

// Spun-up initial state for a member, cached under root/ensemble.
SpectralVorticityField load_or_generate_member(const SweepConfig& config, int member, const LogFn& log) {
  const auto path = member_path(config.root, member);
  if (config.resume && std::filesystem::exists(path)) {
    auto cp = load_checkpoint(path);
    require_same_grid(cp.state.grid, config.assimilation.solver.grid, "cached ensemble member");
    return std::move(cp.state);
  }
  auto m = generate_member(config.ensemble, config.assimilation.solver, member, log);
  std::filesystem::create_directories(path.parent_path());
  Checkpoint cp;
  cp.params = config.assimilation.solver;
  cp.state = m.state;
  cp.time = config.ensemble.spinup_time;
  cp.step = whole_steps(config.ensemble.spinup_time, cp.params.dt, "spinup time");
  auto tmp = path;
  tmp += ".tmp";
  save_checkpoint(tmp, cp);
  std::filesystem::rename(tmp, path);
  return std::move(m.state);
}

}  // namespace

SweepOutcome run_sweep(const SweepConfig& config, const LogFn& log) {
  const auto plan = plan_sweep(config);
  std::mutex log_mutex;
  const LogFn say = [&](const std::string& s) {
    std::lock_guard lock(log_mutex);
    if (log) log(s);
  };
  say(describe_plan(plan));

  struct Task {
    int member;
    std::vector<std::size_t> cells;
  };
  std::vector<Task> tasks;
  std::vector<int> members_needed;
  SweepOutcome outcome;
  for (int m = 0; m < plan.members; ++m) {
    std::vector<std::size_t> pending;
    for (std::size_t c = 0; c < plan.cells.size(); ++c) {
      if (config.resume && std::filesystem::exists(metadata_path(run_path(config.root, plan.cells[c], m))))
        ++outcome.skipped;
      else
        pending.push_back(c);
    }
    if (pending.empty()) continue;
    members_needed.push_back(m);
    for (std::size_t b = 0; b < pending.size(); b += static_cast<std::size_t>(config.batch_size)) {
      const auto e = std::min(pending.size(), b + static_cast<std::size_t>(config.batch_size));
      tasks.push_back({m, std::vector<std::size_t>(pending.begin() + b, pending.begin() + e)});
    }
  }

  std::map<int, SpectralVorticityField> initial;
  {
    std::vector<SpectralVorticityField> states(members_needed.size());
    parallel_for(members_needed.size(), config.threads, [&](std::size_t i) {
      states[i] = load_or_generate_member(config, members_needed[i], say);
    });
    for (std::size_t i = 0; i < members_needed.size(); ++i) initial.emplace(members_needed[i], std::move(states[i]));
  }
  if (!members_needed.empty()) say("ensemble ready (" + std::to_string(members_needed.size()) + " members)");

  const auto& ac = config.assimilation;
  const auto coeffs = std::make_shared<const EtdCoefficients>(etd_coefficients(ac.solver));
  const auto J = std::make_shared<const Interpolant>(ac.interpolant);
  StreamOptions opts;
  opts.mode = ac.mode;
  opts.sample_stride = ac.sample_stride;
  opts.total_steps = ac.total_steps();

  std::atomic<std::size_t> executed{0};
  parallel_for(tasks.size(), config.threads, [&](std::size_t t) {
    const auto& task = tasks[t];
    std::vector<std::unique_ptr<Assimilator>> owned;
    std::vector<Assimilator*> consumers;
    for (auto c : task.cells) {
      const auto& cell = plan.cells[c];
      const auto scheme = AssimilationScheme::insertion(cell.kappa.kappa, cell.delta.m, ac.solver.dt);
      auto meta = make_metadata(scheme, ac);
      meta.seed = config.ensemble.seed;
      owned.push_back(std::make_unique<Assimilator>(scheme, ac.solver, coeffs, J, meta, ac.sample_stride));
      consumers.push_back(owned.back().get());
    }
    ReferenceRun reference(ac.solver, coeffs, J, initial.at(task.member), opts);
    drive(reference, consumers);
    int diverged = 0;
    for (std::size_t i = 0; i < owned.size(); ++i) {
      save_trajectory(run_path(config.root, plan.cells[task.cells[i]], task.member), owned[i]->trajectory());
      if (owned[i]->diverged()) ++diverged;
    }
    const auto done = executed += owned.size();
    say("member " + std::to_string(task.member) + ": " + std::to_string(owned.size()) + " runs, " +
        std::to_string(diverged) + " diverged (" + std::to_string(done) + " executed)");
  });
  outcome.executed = executed;

  outcome.summary = aggregate_sweep(config);
  std::filesystem::create_directories(config.root);
  std::ofstream os(config.root / "summary.csv");
  if (!os) throw ConfigError("cannot write " + (config.root / "summary.csv").string());
  write_summary_csv(os, outcome.summary);
  return outcome;
}

std::vector<CellStats> aggregate_sweep(const SweepConfig& config) {
  const auto cells = sweep_cells(config.sweep, config.assimilation.solver.dt);
  std::vector<CellStats> rows;
  for (const auto& cell : cells) {
    std::vector<double> errors;
    int diverged = 0;
    for (int m = 0; m < config.ensemble.size; ++m) {
      const auto path = run_path(config.root, cell, m);
      if (!std::filesystem::exists(metadata_path(path))) continue;
      const auto traj = load_trajectory(path);
      if (traj.meta.diverged || traj.samples.empty())
        ++diverged;
      else
        errors.push_back(traj.terminal().err_l2);
    }
    rows.push_back(summarize(cell.delta.delta, cell.kappa.kappa, errors, diverged));
  }
  return rows;
}

namespace {

// Consecutive runs of equal delta, in input order.
template <class Row, class DeltaOf>
std::vector<std::pair<std::size_t, std::size_t>> delta_groups(const std::vector<Row>& rows, DeltaOf delta_of) {
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    while (j < rows.size() && delta_of(rows[j]) == delta_of(rows[i])) ++j;
    groups.emplace_back(i, j);
    i = j;
  }
  return groups;
}

}  // namespace

std::vector<KappaMinRow> kappa_min_curve(const std::vector<CellStats>& summary, int window) {
  std::vector<KappaMinRow> out;
  for (const auto& [b, e] : delta_groups(summary, [](const CellStats& c) { return c.delta; })) {
    std::vector<std::pair<double, double>> curve;
    for (std::size_t i = b; i < e; ++i)
      curve.emplace_back(summary[i].kappa, summary[i].n_diverged == 0 ? summary[i].gm : std::nan(""));
    KappaMinRow row;
    row.delta = summary[b].delta;
    try {
      row.fit = fit_kappa_min(curve, window);
    } catch (const ConfigError&) {
      row.fit.kappa_min = std::nan("");
      row.fit.boundary = true;
    }
    out.push_back(row);
  }
  return out;
}

std::vector<std::pair<int, KappaMinRow>> kappa_min_per_member(const SweepConfig& config, int window) {
  const auto cells = sweep_cells(config.sweep, config.assimilation.solver.dt);
  std::vector<std::pair<int, KappaMinRow>> out;
  for (const auto& [b, e] : delta_groups(cells, [](const SweepCell& c) { return c.delta.m; })) {
    for (int m = 0; m < config.ensemble.size; ++m) {
      std::vector<std::pair<double, double>> curve;
      for (std::size_t i = b; i < e; ++i) {
        const auto path = run_path(config.root, cells[i], m);
        double err = std::nan("");
        if (std::filesystem::exists(metadata_path(path))) {
          const auto traj = load_trajectory(path);
          if (!traj.meta.diverged && !traj.samples.empty()) err = traj.terminal().err_l2;
        }
        curve.emplace_back(cells[i].kappa.kappa, err);
      }
      KappaMinRow row;
      row.delta = cells[b].delta.delta;
      try {
        row.fit = fit_kappa_min(curve, window);
      } catch (const ConfigError&) {
        row.fit.kappa_min = std::nan("");
        row.fit.boundary = true;
      }
      out.emplace_back(m, row);
    }
  }
  return out;
}

double loglog_slope(const std::vector<std::pair<double, double>>& points) {
  std::vector<std::pair<double, double>> logs;
  for (const auto& [x, y] : points)
    if (x > 0.0 && y > 0.0 && std::isfinite(x) && std::isfinite(y)) logs.emplace_back(std::log(x), std::log(y));
  if (logs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : logs) mx += x, my += y;
  mx /= logs.size();
  my /= logs.size();
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [x, y] : logs) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

void write_kappa_min_csv(std::ostream& os, const std::vector<KappaMinRow>& rows) {
  csv::write_header(os, {"delta", "kappa_min", "boundary_flag"});
  for (const auto& r : rows)
    os << csv::number(r.delta) << ',' << csv::number(r.fit.kappa_min) << ',' << (r.fit.boundary ? 1 : 0) << '\n';
}

void write_mu_fit(std::ostream& os, const LinearFit& fit) {
  os << "mu = " << csv::number(fit.mu) << '\n';
  os << "r2 = " << csv::number(fit.r2) << '\n';
  os << "delta_cap = " << csv::number(fit.delta_cap) << '\n';
  os << "points = " << fit.points << '\n';
}

}  // namespace nudgekit
