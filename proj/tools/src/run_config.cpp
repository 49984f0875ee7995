#include "nudgekit_cli/run_config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>

#include "nudgekit/csv.hpp"
#include "nudgekit/errors.hpp"

namespace nudgekit::cli {

namespace {

struct Binding {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
  bool manifest = true;  // part of the sweep manifest
};

template <class T>
using Field = std::function<T&(RunConfig&)>;

template <class T>
const T& read(const Field<T>& f, const RunConfig& c) {
  return f(const_cast<RunConfig&>(c));
}

Binding real(std::string key, Field<double> f) {
  const std::string k = key;
  return {std::move(key), [f](const RunConfig& c) { return csv::number(read(f, c)); },
          [f, k](RunConfig& c, const std::string& v) { f(c) = csv::parse_double(v, k); }};
}

Binding optional_real(std::string key, Field<std::optional<double>> f) {
  const std::string k = key;
  return {std::move(key),
          [f](const RunConfig& c) {
            const auto& v = read(f, c);
            return v ? csv::number(*v) : std::string();
          },
          [f, k](RunConfig& c, const std::string& v) {
            f(c) = v.empty() ? std::nullopt : std::optional<double>(csv::parse_double(v, k));
          }};
}

// Infinite bounds print as an empty value.
Binding bound(std::string key, Field<double> f) {
  const std::string k = key;
  return {std::move(key),
          [f](const RunConfig& c) {
            const double v = read(f, c);
            return std::isinf(v) ? std::string() : csv::number(v);
          },
          [f, k](RunConfig& c, const std::string& v) {
            f(c) = v.empty() ? std::numeric_limits<double>::infinity() : csv::parse_double(v, k);
          }};
}

int to_int(const std::string& v, const std::string& key) {
  const long long x = csv::parse_int(v, key);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ConfigError(key + " is out of range: " + v);
  return static_cast<int>(x);
}

Binding integer(std::string key, Field<int> f) {
  const std::string k = key;
  return {std::move(key), [f](const RunConfig& c) { return std::to_string(read(f, c)); },
          [f, k](RunConfig& c, const std::string& v) { f(c) = to_int(v, k); }};
}

// Empty value means "derive from the grid" and is stored as -1.
Binding auto_integer(std::string key, Field<int> f) {
  const std::string k = key;
  return {std::move(key),
          [f](const RunConfig& c) {
            const int v = read(f, c);
            return v < 0 ? std::string() : std::to_string(v);
          },
          [f, k](RunConfig& c, const std::string& v) {
            f(c) = v.empty() ? -1 : to_int(v, k);
            if (!v.empty() && f(c) < 0) throw ConfigError(k + " must be >= 0 or empty");
          }};
}

Binding unsigned64(std::string key, Field<std::uint64_t> f) {
  const std::string k = key;
  return {std::move(key), [f](const RunConfig& c) { return std::to_string(read(f, c)); },
          [f, k](RunConfig& c, const std::string& v) {
            std::uint64_t x = 0;
            const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
            if (ec != std::errc() || end != v.data() + v.size())
              throw ConfigError(k + " must be a nonnegative integer, got '" + v + "'");
            f(c) = x;
          }};
}

Binding text(std::string key, Field<std::string> f) {
  return {std::move(key), [f](const RunConfig& c) { return read(f, c); },
          [f](RunConfig& c, const std::string& v) { f(c) = v; }};
}

Binding flag(std::string key, Field<bool> f) {
  const std::string k = key;
  return {std::move(key), [f](const RunConfig& c) { return std::string(read(f, c) ? "true" : "false"); },
          [f, k](RunConfig& c, const std::string& v) {
            if (v == "true") f(c) = true;
            else if (v == "false") f(c) = false;
            else throw ConfigError(k + " must be true or false, got '" + v + "'");
          }};
}

template <class E>
Binding word(std::string key, Field<E> f, std::vector<std::pair<E, std::string>> names) {
  const std::string k = key;
  return {std::move(key),
          [f, names](const RunConfig& c) {
            for (const auto& [e, n] : names)
              if (e == read(f, c)) return n;
            return std::string("?");
          },
          [f, names, k](RunConfig& c, const std::string& v) {
            std::string allowed;
            for (const auto& [e, n] : names) {
              if (n == v) {
                f(c) = e;
                return;
              }
              allowed += (allowed.empty() ? "" : "|") + n;
            }
            throw ConfigError(k + " must be one of " + allowed + ", got '" + v + "'");
          }};
}

Binding int_list(std::string key, Field<std::vector<int>> f) {
  const std::string k = key;
  return {std::move(key),
          [f](const RunConfig& c) {
            std::string out;
            for (int x : read(f, c)) out += (out.empty() ? "" : ",") + std::to_string(x);
            return out;
          },
          [f, k](RunConfig& c, const std::string& v) {
            std::vector<int> out;
            if (!v.empty())
              for (const auto& item : csv::split(v)) out.push_back(to_int(trim(item), k));
            f(c) = std::move(out);
          }};
}

Binding local(Binding b) {
  b.manifest = false;
  return b;
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> t;
    t.push_back(local(text("run.id", [](RunConfig& c) -> auto& { return c.run_id; })));
    t.push_back(local(text("output_dir", [](RunConfig& c) -> auto& { return c.output_dir; })));
    t.push_back(unsigned64("seed", [](RunConfig& c) -> auto& { return c.seed; }));
    t.push_back(local(integer("threads", [](RunConfig& c) -> auto& { return c.threads; })));
    t.push_back(integer("sample_stride", [](RunConfig& c) -> auto& { return c.sample_stride; }));

    t.push_back(integer("grid.n", [](RunConfig& c) -> auto& { return c.solver.grid.n; }));
    t.push_back(real("grid.length", [](RunConfig& c) -> auto& { return c.solver.grid.length; }));
    t.push_back(real("grid.dealias_fraction", [](RunConfig& c) -> auto& { return c.solver.grid.dealias_fraction; }));
    t.push_back(word<DealiasRule>("grid.dealias_rule", [](RunConfig& c) -> auto& { return c.solver.grid.dealias_rule; },
                                  {{DealiasRule::square, "square"}, {DealiasRule::circular, "circular"}}));

    t.push_back(real("solver.nu", [](RunConfig& c) -> auto& { return c.solver.nu; }));
    t.push_back(real("solver.dt", [](RunConfig& c) -> auto& { return c.solver.dt; }));
    t.push_back(flag("solver.nonlinear", [](RunConfig& c) -> auto& { return c.solver.nonlinear; }));
    t.push_back(word<ForcingKind>("solver.forcing", [](RunConfig& c) -> auto& { return c.solver.forcing.kind; },
                                  {{ForcingKind::kolmogorov, "kolmogorov"}, {ForcingKind::none, "none"}}));
    t.push_back(real("solver.forcing.amplitude", [](RunConfig& c) -> auto& { return c.solver.forcing.amplitude; }));
    t.push_back(integer("solver.forcing.wavenumber", [](RunConfig& c) -> auto& { return c.solver.forcing.wavenumber; }));
    t.push_back(bound("solver.monitor.max_l2", [](RunConfig& c) -> auto& { return c.solver.monitors.max_l2; }));
    t.push_back(bound("solver.monitor.max_h1", [](RunConfig& c) -> auto& { return c.solver.monitors.max_h1; }));
    t.push_back(bound("solver.monitor.max_h2", [](RunConfig& c) -> auto& { return c.solver.monitors.max_h2; }));

    t.push_back(word<InitialKind>("initial.kind", [](RunConfig& c) -> auto& { return c.initial.kind; },
                                  {{InitialKind::random, "random"},
                                   {InitialKind::taylor_green, "taylor_green"},
                                   {InitialKind::zero, "zero"},
                                   {InitialKind::checkpoint, "checkpoint"}}));
    t.push_back(real("initial.peak", [](RunConfig& c) -> auto& { return c.initial.peak; }));
    t.push_back(real("initial.l2", [](RunConfig& c) -> auto& { return c.initial.l2; }));
    t.push_back(text("initial.path", [](RunConfig& c) -> auto& { return c.initial.path; }));

    t.push_back(local(real("solve.duration", [](RunConfig& c) -> auto& { return c.solve_duration; })));

    t.push_back(integer("observation.points_per_side",
                        [](RunConfig& c) -> auto& { return c.interpolant.geometry.points_per_side; }));
    t.push_back(auto_integer("observation.radius_sq", [](RunConfig& c) -> auto& { return c.interpolant.geometry.radius_sq; }));
    t.push_back(word<Averaging>("observation.averaging", [](RunConfig& c) -> auto& { return c.interpolant.geometry.averaging; },
                                {{Averaging::ball, "ball"}, {Averaging::square, "square"}}));
    t.push_back(real("observation.lambda", [](RunConfig& c) -> auto& { return c.interpolant.lambda; }));
    t.push_back(word<StreamMode>("observation.stream", [](RunConfig& c) -> auto& { return c.stream; },
                                 {{StreamMode::smoothed, "smoothed"}, {StreamMode::raw, "raw"}}));

    t.push_back(local(word<SchemeKind>("scheme.kind", [](RunConfig& c) -> auto& { return c.scheme.kind; },
                                       {{SchemeKind::direct, "direct"},
                                        {SchemeKind::relaxed, "relaxed"},
                                        {SchemeKind::nudging, "nudging"}})));
    t.push_back(local(real("scheme.delta", [](RunConfig& c) -> auto& { return c.scheme.delta; })));
    t.push_back(local(optional_real("scheme.kappa", [](RunConfig& c) -> auto& { return c.scheme.kappa; })));
    t.push_back(local(real("scheme.mu", [](RunConfig& c) -> auto& { return c.scheme.mu; })));
    t.push_back(local(int_list("scheme.schedule", [](RunConfig& c) -> auto& { return c.scheme.schedule; })));

    t.push_back(real("assimilation.duration", [](RunConfig& c) -> auto& { return c.assimilate.duration; }));
    t.push_back(word<InitialState>("assimilation.initial", [](RunConfig& c) -> auto& { return c.assimilate.initial; },
                                   {{InitialState::interpolated, "interpolated"}, {InitialState::reference, "reference"}}));
    t.push_back(local(word<ReferenceKind>("assimilation.reference", [](RunConfig& c) -> auto& { return c.assimilate.reference; },
                                          {{ReferenceKind::ensemble, "ensemble"}, {ReferenceKind::initial, "initial"}})));
    t.push_back(local(integer("assimilation.member", [](RunConfig& c) -> auto& { return c.assimilate.member; })));

    t.push_back(integer("ensemble.size", [](RunConfig& c) -> auto& { return c.ensemble.size; }));
    t.push_back(real("ensemble.spinup", [](RunConfig& c) -> auto& { return c.ensemble.spinup_time; }));
    t.push_back(real("ensemble.peak", [](RunConfig& c) -> auto& { return c.ensemble.spectrum_peak; }));
    t.push_back(real("ensemble.l2", [](RunConfig& c) -> auto& { return c.ensemble.initial_l2; }));
    t.push_back(integer("ensemble.max_retries", [](RunConfig& c) -> auto& { return c.ensemble.max_retries; }));

    t.push_back(integer("sweep.p_first", [](RunConfig& c) -> auto& { return c.sweep.p_first; }));
    t.push_back(integer("sweep.p_last", [](RunConfig& c) -> auto& { return c.sweep.p_last; }));
    t.push_back(integer("sweep.base_m", [](RunConfig& c) -> auto& { return c.sweep.base_m; }));
    t.push_back(real("sweep.ratio", [](RunConfig& c) -> auto& { return c.sweep.ratio; }));
    t.push_back(integer("sweep.kappa_root", [](RunConfig& c) -> auto& { return c.sweep.kappa_ratio_root; }));
    t.push_back(real("sweep.kappa_floor", [](RunConfig& c) -> auto& { return c.sweep.kappa_floor; }));
    t.push_back(real("sweep.kappa_ceiling", [](RunConfig& c) -> auto& { return c.sweep.kappa_ceiling_factor; }));
    t.push_back(real("sweep.finest_kappa_floor", [](RunConfig& c) -> auto& { return c.sweep.finest_kappa_floor; }));
    t.push_back(int_list("sweep.periods", [](RunConfig& c) -> auto& { return c.sweep.periods; }));
    t.push_back(local(integer("sweep.batch_size", [](RunConfig& c) -> auto& { return c.batch_size; })));
    t.push_back(local(real("sweep.delta_cap", [](RunConfig& c) -> auto& { return c.delta_cap; })));
    t.push_back(local(integer("sweep.fit_window", [](RunConfig& c) -> auto& { return c.fit_window; })));

    t.push_back(local(int_list("converge.periods", [](RunConfig& c) -> auto& { return c.converge.periods; })));
    t.push_back(local(real("converge.mu", [](RunConfig& c) -> auto& { return c.converge.mu; })));
    t.push_back(local(real("converge.duration", [](RunConfig& c) -> auto& { return c.converge.duration; })));
    t.push_back(local(integer("converge.sample_stride", [](RunConfig& c) -> auto& { return c.converge.sample_stride; })));

    t.push_back(local(integer("verify.samples", [](RunConfig& c) -> auto& { return c.verify_samples; })));
    t.push_back(local(integer("verify.steps", [](RunConfig& c) -> auto& { return c.verify_steps; })));

    t.push_back(local(word<FftPlanner>("fft.planner", [](RunConfig& c) -> auto& { return c.planner; },
                                       {{FftPlanner::estimate, "estimate"}, {FftPlanner::measure, "measure"}})));
    t.push_back(local(text("fft.wisdom", [](RunConfig& c) -> auto& { return c.wisdom; })));
    return t;
  }();
  return table;
}

int steps_of(double time, double dt, const std::string& what) {
  if (!(time > 0.0)) throw ConfigError(what + " must be positive");
  const double steps = time / dt;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps) || rounded > std::numeric_limits<int>::max())
    throw ConfigError(what + " = " + csv::number(time) + " is not a multiple of solver.dt");
  return static_cast<int>(rounded);
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& b : bindings()) keys.push_back(b.key);
  return keys;
}

RunConfig RunConfig::from_file(const ConfigFile& file) {
  RunConfig c;
  for (const auto& b : bindings())
    if (const auto v = file.take(b.key)) b.set(c, *v);
  file.reject_unused();
  c.validate();
  return c;
}

std::string RunConfig::resolved_text() const {
  std::ostringstream os;
  for (const auto& b : bindings()) {
    const auto v = b.get(*this);
    os << b.key << " =" << (v.empty() ? "" : " ") << v << '\n';
  }
  return os.str();
}

std::string RunConfig::manifest_text() const {
  std::ostringstream os;
  for (const auto& b : bindings())
    if (b.manifest) {
      const auto v = b.get(*this);
      os << b.key << " =" << (v.empty() ? "" : " ") << v << '\n';
    }
  return os.str();
}

void RunConfig::validate() const {
  if (run_id.empty() || run_id.find('/') != std::string::npos || run_id == "." || run_id == "..")
    throw ConfigError("run.id must be a plain directory name");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (sample_stride < 1) throw ConfigError("sample_stride must be >= 1");
  if (planner == FftPlanner::estimate && !wisdom.empty())
    throw ConfigError("fft.wisdom requires fft.planner = measure");
  solver.validate();
  auto j = interpolant_config();
  j.validate();
  make_forcing(solver.forcing, solver.grid);
}

void RunConfig::validate(Command command) const {
  validate();
  switch (command) {
    case Command::solve:
      if (!(solve_duration >= 0.0)) throw ConfigError("solve.duration must be >= 0");
      if (solve_duration > 0.0) steps_of(solve_duration, solver.dt, "solve.duration");
      if (initial.kind == InitialKind::checkpoint && initial.path.empty())
        throw ConfigError("initial.kind = checkpoint needs initial.path");
      if (initial.kind == InitialKind::random && !(initial.peak > 0.0 && initial.l2 >= 0.0))
        throw ConfigError("initial.peak must be positive and initial.l2 nonnegative");
      break;
    case Command::assimilate:
      assimilation_config().validate();
      scheme_config().validate();
      if (assimilate.reference == ReferenceKind::ensemble) ensemble_spec().validate();
      if (assimilate.member < 0) throw ConfigError("assimilation.member must be >= 0");
      if (assimilate.reference == ReferenceKind::initial) validate(Command::solve);
      break;
    case Command::sweep:
      if (fit_window < 3) throw ConfigError("sweep.fit_window must be >= 3");
      if (!(delta_cap > 0.0)) throw ConfigError("sweep.delta_cap must be positive");
      sweep_config("sweep").validate();
      break;
    case Command::converge: {
      if (converge.periods.empty()) throw ConfigError("converge.periods is empty");
      if (!(converge.mu > 0.0)) throw ConfigError("converge.mu must be positive");
      const auto a = converge_config();
      a.validate();
      for (int p : converge.periods)
        if (p < 1 || p > a.total_steps())
          throw ConfigError("converge.periods entries must lie in [1, converge.duration / solver.dt]");
      if (assimilate.reference == ReferenceKind::ensemble) ensemble_spec().validate();
      if (assimilate.reference == ReferenceKind::initial) validate(Command::solve);
      break;
    }
    case Command::verify:
      suite_config().validate();
      break;
  }
}

SolverParams RunConfig::solver_params() const { return solver; }

InterpolantConfig RunConfig::interpolant_config() const {
  InterpolantConfig j = interpolant;
  j.geometry.grid = solver.grid;
  return j;
}

AssimilationConfig RunConfig::assimilation_config() const {
  AssimilationConfig a;
  a.solver = solver_params();
  a.interpolant = interpolant_config();
  a.duration = assimilate.duration;
  a.sample_stride = sample_stride;
  a.mode = stream;
  a.initial = assimilate.initial;
  a.seed = seed;
  return a;
}

AssimilationScheme RunConfig::scheme_config() const {
  AssimilationScheme s;
  if (scheme.kind == SchemeKind::nudging) {
    if (scheme.kappa) throw ConfigError("scheme.kappa does not apply to nudging");
    s = AssimilationScheme::nudging(scheme.mu);
  } else {
    const int m = steps_of(scheme.delta, solver.dt, "scheme.delta");
    if (scheme.kind == SchemeKind::direct) {
      if (scheme.kappa && *scheme.kappa != 1.0) throw ConfigError("scheme.kappa must be 1 or empty for direct insertion");
      s = AssimilationScheme::direct(m);
    } else {
      s = scheme.kappa ? AssimilationScheme::insertion(*scheme.kappa, m, solver.dt)
                       : AssimilationScheme::relaxed(scheme.mu, m, solver.dt);
    }
    s.schedule.assign(scheme.schedule.begin(), scheme.schedule.end());
  }
  return s;
}

EnsembleSpec RunConfig::ensemble_spec() const {
  EnsembleSpec e = ensemble;
  e.seed = seed;
  return e;
}

SweepConfig RunConfig::sweep_config(const std::filesystem::path& root) const {
  SweepConfig s;
  s.sweep = sweep;
  s.ensemble = ensemble_spec();
  s.assimilation = assimilation_config();
  s.root = root;
  s.threads = threads;
  s.batch_size = batch_size;
  s.delta_cap = delta_cap;
  return s;
}

AssimilationConfig RunConfig::converge_config() const {
  auto a = assimilation_config();
  a.duration = converge.duration;
  a.sample_stride = converge.sample_stride;
  a.initial = InitialState::interpolated;
  return a;
}

InvariantSuiteConfig RunConfig::suite_config() const {
  InvariantSuiteConfig s;
  s.solver = solver_params();
  s.interpolant = interpolant_config();
  s.samples = verify_samples;
  s.dynamic_steps = verify_steps;
  s.seed = seed;
  return s;
}

}  // namespace nudgekit::cli
