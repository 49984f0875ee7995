#include "nudgekit/assimilation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <thread>

#include "nudgekit/csv.hpp"
#include "nudgekit/errors.hpp"
#include "nudgekit/spectral_ops.hpp"

namespace nudgekit {

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::direct: return "direct";
    case SchemeKind::relaxed: return "relaxed";
    case SchemeKind::nudging: return "nudging";
  }
  return "unknown";
}

SchemeKind parse_scheme_kind(const std::string& text) {
  if (text == "direct") return SchemeKind::direct;
  if (text == "relaxed") return SchemeKind::relaxed;
  if (text == "nudging") return SchemeKind::nudging;
  throw ConfigError("unknown scheme '" + text + "' (expected direct, relaxed or nudging)");
}

AssimilationScheme AssimilationScheme::direct(int period_steps) {
  AssimilationScheme s;
  s.kind = SchemeKind::direct;
  s.period_steps = period_steps;
  s.kappa = 1.0;
  return s;
}

AssimilationScheme AssimilationScheme::relaxed(double mu, int period_steps, double dt) {
  AssimilationScheme s;
  s.kind = SchemeKind::relaxed;
  s.mu = mu;
  s.period_steps = period_steps;
  s.kappa = std::min(1.0, mu * period_steps * dt);
  return s;
}

AssimilationScheme AssimilationScheme::insertion(double kappa, int period_steps, double dt) {
  AssimilationScheme s;
  s.kind = SchemeKind::relaxed;
  s.kappa = kappa;
  s.period_steps = period_steps;
  s.mu = kappa / (period_steps * dt);
  return s;
}

AssimilationScheme AssimilationScheme::nudging(double mu) {
  AssimilationScheme s;
  s.kind = SchemeKind::nudging;
  s.mu = mu;
  s.kappa = 0.0;
  return s;
}

void AssimilationScheme::validate() const {
  if (period_steps < 1) throw ConfigError("observation period must be at least one step");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("mu must be finite and >= 0");
  switch (kind) {
    case SchemeKind::direct:
      if (kappa != 1.0) throw ConfigError("direct insertion requires kappa = 1");
      break;
    case SchemeKind::relaxed:
      if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be positive");
      break;
    case SchemeKind::nudging:
      break;
  }
  for (std::size_t i = 0; i < schedule.size(); ++i)
    if (schedule[i] <= (i ? schedule[i - 1] : 0)) throw ConfigError("observation schedule must increase from step 1");
}

bool AssimilationScheme::observes_at(std::int64_t step) const {
  if (kind == SchemeKind::nudging || step <= 0) return false;
  if (!schedule.empty()) return std::binary_search(schedule.begin(), schedule.end(), step);
  return step % period_steps == 0;
}

double AssimilationScheme::kappa_at(std::int64_t step, double dt) const {
  if (kind == SchemeKind::direct) return 1.0;
  if (kind == SchemeKind::relaxed && !schedule.empty()) {
    auto it = std::lower_bound(schedule.begin(), schedule.end(), step);
    const std::int64_t prev = it == schedule.begin() ? 0 : *(it - 1);
    return std::min(1.0, mu * static_cast<double>(step - prev) * dt);
  }
  return kappa;
}

SpectralVelocityField insertion_update(const SpectralVelocityField& u_pred, const SpectralVelocityField& obs_JU,
                                       double kappa, const Interpolant& J) {
  require_same_grid(u_pred.grid, obs_JU.grid, "insertion_update");
  return u_pred - kappa * J.apply(u_pred) + kappa * obs_JU;
}

PhysicalField physical_velocity(const SpectralVorticityField& w) {
  return inverse_transform(velocity_from_vorticity(w));
}

void insertion_update(SpectralVorticityField& w_pred, const std::vector<Complex>& obs_band, double kappa,
                      const Interpolant& J) {
  const auto& band = J.band();
  if (obs_band.size() != band.size()) throw ConfigError("observation band size mismatch");
  const auto ju = J.smooth_vorticity_band(J.observe(physical_velocity(w_pred)));
  for (std::size_t q = 0; q < band.size(); ++q) w_pred.coeffs[band[q]] += kappa * (obs_band[q] - ju[q]);
  dealias_in_place(w_pred);
}

// ---------------------------------------------------------------------------
// Trajectory files

const ErrorSample& ErrorTrajectory::terminal() const {
  if (samples.empty()) throw ConfigError("error trajectory has no samples");
  return samples.back();
}

namespace {

const std::vector<std::string> kTrajColumns = {"t", "err_l2", "err_h1"};

void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write " + tmp.string());
    body(os);
    os.flush();
    if (!os) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const ErrorTrajectory& traj) {
  csv::write_header(os, kTrajColumns);
  for (const auto& s : traj.samples) csv::write_row(os, {s.t, s.err_l2, s.err_h1});
}

ErrorTrajectory read_trajectory_csv(std::istream& is) {
  csv::expect_header(is, kTrajColumns);
  ErrorTrajectory traj;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 3) throw ConfigError("trajectory row has wrong field count");
    traj.samples.push_back(
        {csv::parse_double(f[0], "t"), csv::parse_double(f[1], "err_l2"), csv::parse_double(f[2], "err_h1")});
  }
  return traj;
}

void write_metadata(std::ostream& os, const RunMetadata& m) {
  os << "scheme = " << m.scheme << '\n';
  os << "delta = " << csv::number(m.delta) << '\n';
  os << "kappa = " << csv::number(m.kappa) << '\n';
  os << "mu = " << csv::number(m.mu) << '\n';
  os << "nu = " << csv::number(m.nu) << '\n';
  os << "n = " << m.n << '\n';
  os << "dt = " << csv::number(m.dt) << '\n';
  os << "seed = " << m.seed << '\n';
  os << "lambda = " << csv::number(m.lambda) << '\n';
  os << "h = " << csv::number(m.h) << '\n';
  os << "diverged = " << (m.diverged ? "true" : "false") << '\n';
}

RunMetadata read_metadata(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(std::string("metadata lacks '") + key + "'");
    return it->second;
  };
  RunMetadata m;
  m.scheme = get("scheme");
  m.delta = csv::parse_double(get("delta"), "delta");
  m.kappa = csv::parse_double(get("kappa"), "kappa");
  m.mu = csv::parse_double(get("mu"), "mu");
  m.nu = csv::parse_double(get("nu"), "nu");
  m.n = static_cast<int>(csv::parse_int(get("n"), "n"));
  m.dt = csv::parse_double(get("dt"), "dt");
  m.seed = static_cast<std::uint64_t>(csv::parse_int(get("seed"), "seed"));
  m.lambda = csv::parse_double(get("lambda"), "lambda");
  m.h = csv::parse_double(get("h"), "h");
  const auto& d = get("diverged");
  if (d != "true" && d != "false") throw ConfigError("metadata 'diverged' must be true or false");
  m.diverged = d == "true";
  return m;
}

std::filesystem::path metadata_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".meta");
  return p;
}

void save_trajectory(const std::filesystem::path& csv_path, const ErrorTrajectory& traj) {
  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  atomic_write(csv_path, [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  atomic_write(metadata_path(csv_path), [&](std::ostream& os) { write_metadata(os, traj.meta); });
}

ErrorTrajectory load_trajectory(const std::filesystem::path& csv_path) {
  std::ifstream is(csv_path);
  if (!is) throw ConfigError("cannot read " + csv_path.string());
  auto traj = read_trajectory_csv(is);
  std::ifstream ms(metadata_path(csv_path));
  if (!ms) throw ConfigError("missing metadata for " + csv_path.string());
  traj.meta = read_metadata(ms);
  return traj;
}

// ---------------------------------------------------------------------------
// Stream

bool ObservationStream::publish(ObservationFrame frame) {
  if (frame.step != last_published_ + 1)
    throw ProtocolError("frame for step " + std::to_string(frame.step) + " published after step " +
                        std::to_string(last_published_));
  last_published_ = frame.step;
  return channel_.push(std::move(frame));
}

std::optional<ObservationFrame> ObservationStream::next() {
  auto f = channel_.pop();
  if (!f) return f;
  if (f->step != last_delivered_ + 1)
    throw ProtocolError("expected frame " + std::to_string(last_delivered_ + 1) + ", received " +
                        std::to_string(f->step));
  last_delivered_ = f->step;
  return f;
}

class ReferenceRun::Recorder : public StageHook {
 public:
  Recorder(ObservationFrame& frame, const Interpolant& J, StreamMode mode) : frame_(frame), J_(J), mode_(mode) {}

  void on_stage(int stage, const SpectralVorticityField&, const PhysicalField& velocity,
                SpectralVorticityField&) override {
    record(stage, velocity);
  }

  void record(int stage, const PhysicalField& velocity) {
    auto obs = J_.observe(velocity, frame_.time);
    if (mode_ == StreamMode::smoothed)
      frame_.ju[stage] = std::make_shared<const std::vector<Complex>>(J_.smooth_vorticity_band(obs));
    else
      frame_.raw[stage] = std::make_shared<const ObservationVector>(std::move(obs));
  }

 private:
  ObservationFrame& frame_;
  const Interpolant& J_;
  StreamMode mode_;
};

ReferenceRun::ReferenceRun(SolverParams params, std::shared_ptr<const EtdCoefficients> coeffs,
                           std::shared_ptr<const Interpolant> J, SpectralVorticityField U0, StreamOptions options)
    : params_(params),
      integrator_(std::move(params), std::move(coeffs)),
      J_(std::move(J)),
      state_(std::move(U0)),
      options_(options) {
  require_same_grid(state_.grid, params_.grid, "reference initial state");
  require_same_grid(J_->geometry().grid, params_.grid, "observation geometry");
  if (options_.total_steps < 0) throw ConfigError("total_steps must be >= 0");
  if (options_.sample_stride < 1) throw ConfigError("sample stride must be >= 1");
}

ObservationFrame ReferenceRun::next_frame() {
  if (done()) throw ProtocolError("reference run already delivered its last frame");
  ObservationFrame frame;
  frame.step = step_;
  frame.time = static_cast<double>(step_) * params_.dt;
  frame.last = step_ == options_.total_steps;
  if (step_ % options_.sample_stride == 0 || frame.last)
    frame.truth = std::make_shared<const SpectralVorticityField>(state_);
  Recorder rec(frame, *J_, options_.mode);
  if (frame.last)
    rec.record(0, physical_velocity(state_));
  else
    integrator_.step(state_, step_ + 1, &rec);
  ++step_;
  return frame;
}

std::shared_ptr<const std::vector<Complex>> frame_ju(const ObservationFrame& frame, int stage, const Interpolant& J) {
  if (frame.ju[stage]) return frame.ju[stage];
  if (frame.raw[stage]) return std::make_shared<const std::vector<Complex>>(J.smooth_vorticity_band(*frame.raw[stage]));
  throw ProtocolError("frame " + std::to_string(frame.step) + " lacks stage " + std::to_string(stage));
}

void NudgingHook::on_stage(int stage, const SpectralVorticityField&, const PhysicalField& velocity,
                           SpectralVorticityField& rhs) {
  if (frame_ == nullptr) throw ProtocolError("nudging step without reference stage data");
  const auto ju_ref = frame_ju(*frame_, stage, *J_);
  const auto ju_own = J_->smooth_vorticity_band(J_->observe(velocity));
  const auto& band = J_->band();
  for (std::size_t q = 0; q < band.size(); ++q) rhs.coeffs[band[q]] += mu_ * ((*ju_ref)[q] - ju_own[q]);
}

// ---------------------------------------------------------------------------
// Assimilator

Assimilator::Assimilator(AssimilationScheme scheme, SolverParams params, std::shared_ptr<const EtdCoefficients> coeffs,
                         std::shared_ptr<const Interpolant> J, RunMetadata meta, int sample_stride)
    : scheme_(std::move(scheme)),
      integrator_(std::move(params), std::move(coeffs)),
      J_(J),
      hook_(scheme_.mu, J),
      state_(ScalarSpectrum::zeros(integrator_.params().grid)),
      sample_stride_(sample_stride) {
  scheme_.validate();
  trajectory_.meta = std::move(meta);
  if (sample_stride_ < 1) throw ConfigError("sample stride must be >= 1");
}

void Assimilator::start_from(SpectralVorticityField u0) {
  if (expected_ != 0) throw ProtocolError("initial state set after the first frame");
  require_same_grid(u0.grid, integrator_.params().grid, "assimilator initial state");
  initial_ = std::move(u0);
}

void Assimilator::consume(const ObservationFrame& frame) {
  if (frame.step != expected_)
    throw ProtocolError("assimilator expected frame " + std::to_string(expected_) + ", got " +
                        std::to_string(frame.step));
  ++expected_;
  if (diverged()) return;
  const std::int64_t k = frame.step;
  const double dt = integrator_.params().dt;
  try {
    if (k == 0 && initial_) {
      state_ = std::move(*initial_);
      initial_.reset();
    } else if (k == 0) {
      state_ = J_->expand_band(*frame_ju(frame, 0, *J_));
      dealias_in_place(state_);
    } else if (scheme_.observes_at(k)) {
      insertion_update(state_, *frame_ju(frame, 0, *J_), scheme_.kappa_at(k, dt), *J_);
    }
    if (frame.truth) {
      const auto diff = *frame.truth - state_;
      const ErrorSample s{frame.time, velocity_norm(diff, 0), velocity_norm(diff, 1)};
      if (!std::isfinite(s.err_l2) || !std::isfinite(s.err_h1)) throw DivergenceError(k, "non-finite error");
      trajectory_.samples.push_back(s);
    }
    if (!frame.last) {
      if (scheme_.kind == SchemeKind::nudging) {
        hook_.set_frame(&frame);
        integrator_.step(state_, k + 1, &hook_);
        hook_.set_frame(nullptr);
      } else {
        integrator_.step(state_, k + 1, nullptr);
      }
    }
  } catch (const DivergenceError&) {
    hook_.set_frame(nullptr);
    trajectory_.meta.diverged = true;
  }
}

// ---------------------------------------------------------------------------
// Runners

void AssimilationConfig::validate() const {
  solver.validate();
  interpolant.validate();
  require_same_grid(solver.grid, interpolant.geometry.grid, "assimilation config");
  if (sample_stride < 1) throw ConfigError("sample stride must be >= 1");
  total_steps();
}

std::int64_t AssimilationConfig::total_steps() const {
  if (!(duration > 0.0)) throw ConfigError("assimilation duration must be positive");
  const double steps = duration / solver.dt;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps))
    throw ConfigError("assimilation duration must be a multiple of dt");
  return static_cast<std::int64_t>(rounded);
}

RunMetadata make_metadata(const AssimilationScheme& scheme, const AssimilationConfig& config) {
  RunMetadata m;
  m.scheme = to_string(scheme.kind);
  const double nan = std::nan("");
  m.delta = scheme.discrete() ? scheme.delta(config.solver.dt) : nan;
  m.kappa = scheme.discrete() ? scheme.kappa : nan;
  m.mu = scheme.mu;
  m.nu = config.solver.nu;
  m.n = config.solver.grid.n;
  m.dt = config.solver.dt;
  m.seed = config.seed;
  m.lambda = config.interpolant.lambda;
  m.h = config.interpolant.h();
  return m;
}

void drive(ReferenceRun& reference, const std::vector<Assimilator*>& consumers, const FrameCallback& after_frame) {
  ObservationStream stream;
  std::exception_ptr producer_error;
  std::thread producer([&] {
    try {
      while (!reference.done())
        if (!stream.publish(reference.next_frame())) break;
    } catch (...) {
      producer_error = std::current_exception();
    }
    stream.close();
  });
  try {
    while (auto frame = stream.next()) {
      for (auto* c : consumers) c->consume(*frame);
      if (after_frame) after_frame(*frame);
    }
  } catch (...) {
    stream.close();
    producer.join();
    throw;
  }
  producer.join();
  if (producer_error) std::rethrow_exception(producer_error);
}

namespace {

struct Shared {
  std::shared_ptr<const EtdCoefficients> coeffs;
  std::shared_ptr<const Interpolant> J;
};

Shared make_shared_parts(const AssimilationConfig& config) {
  config.validate();
  return {std::make_shared<const EtdCoefficients>(etd_coefficients(config.solver)),
          std::make_shared<const Interpolant>(config.interpolant)};
}

ReferenceRun make_reference(const SpectralVorticityField& U0, const AssimilationConfig& config, const Shared& s) {
  StreamOptions opts;
  opts.mode = config.mode;
  opts.sample_stride = config.sample_stride;
  opts.total_steps = config.total_steps();
  return ReferenceRun(config.solver, s.coeffs, s.J, U0, opts);
}

}  // namespace

std::vector<AssimilationResult> run_schemes(const SpectralVorticityField& U0,
                                            const std::vector<AssimilationScheme>& schemes,
                                            const AssimilationConfig& config) {
  const auto shared = make_shared_parts(config);
  std::vector<std::unique_ptr<Assimilator>> owned;
  std::vector<Assimilator*> consumers;
  for (const auto& s : schemes) {
    owned.push_back(std::make_unique<Assimilator>(s, config.solver, shared.coeffs, shared.J, make_metadata(s, config),
                                                  config.sample_stride));
    if (config.initial == InitialState::reference) owned.back()->start_from(U0);
    consumers.push_back(owned.back().get());
  }
  auto reference = make_reference(U0, config, shared);
  drive(reference, consumers);
  std::vector<AssimilationResult> out;
  for (auto& a : owned) out.push_back({a->take_trajectory(), a->state()});
  return out;
}

AssimilationResult run_discrete(const SpectralVorticityField& U0, const AssimilationScheme& scheme,
                                const AssimilationConfig& config) {
  if (!scheme.discrete()) throw ConfigError("run_discrete needs a direct or relaxed scheme");
  return std::move(run_schemes(U0, {scheme}, config).front());
}

AssimilationResult run_nudging(const SpectralVorticityField& U0, double mu, const AssimilationConfig& config) {
  return std::move(run_schemes(U0, {AssimilationScheme::nudging(mu)}, config).front());
}

std::vector<GapEntry> compare_discrete_vs_nudging(const SpectralVorticityField& U0,
                                                  const std::vector<int>& period_steps, double mu,
                                                  const AssimilationConfig& config) {
  if (period_steps.empty()) throw ConfigError("no observation intervals to compare");
  auto periods = period_steps;
  std::sort(periods.begin(), periods.end());
  if (std::adjacent_find(periods.begin(), periods.end()) != periods.end())
    throw ConfigError("duplicate observation interval");

  const auto shared = make_shared_parts(config);
  const double dt = config.solver.dt;
  const auto nudge = AssimilationScheme::nudging(mu);
  Assimilator v(nudge, config.solver, shared.coeffs, shared.J, make_metadata(nudge, config), config.sample_stride);
  std::vector<std::unique_ptr<Assimilator>> owned;
  std::vector<Assimilator*> consumers{&v};
  std::vector<GapEntry> gaps;
  for (int m : periods) {
    const auto s = AssimilationScheme::relaxed(mu, m, dt);
    owned.push_back(std::make_unique<Assimilator>(s, config.solver, shared.coeffs, shared.J, make_metadata(s, config),
                                                  config.sample_stride));
    consumers.push_back(owned.back().get());
    GapEntry e;
    e.period_steps = m;
    e.delta = m * dt;
    e.kappa = s.kappa;
    gaps.push_back(e);
  }
  auto reference = make_reference(U0, config, shared);
  drive(reference, consumers, [&](const ObservationFrame& f) {
    if (!f.truth) return;
    for (std::size_t i = 0; i < owned.size(); ++i) {
      auto& e = gaps[i];
      if (!e.valid) continue;
      if (v.diverged() || owned[i]->diverged()) {
        e.valid = false;
        continue;
      }
      const auto diff = owned[i]->state() - v.state();
      e.sup_gap_l2 = std::max(e.sup_gap_l2, velocity_norm(diff, 0));
      e.sup_gap_h1 = std::max(e.sup_gap_h1, velocity_norm(diff, 1));
    }
  });
  return gaps;
}

}  // namespace nudgekit
