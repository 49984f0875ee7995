#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nudgekit/channel.hpp"
#include "nudgekit/observation.hpp"
#include "nudgekit/solver.hpp"

namespace nudgekit {

enum class SchemeKind { direct, relaxed, nudging };

std::string to_string(SchemeKind kind);
SchemeKind parse_scheme_kind(const std::string& text);

/// Which assimilation method a consumer runs, with its parameters.
///
/// Discrete schemes observe every period_steps solver steps and apply
/// u <- u - kappa J u + kappa J U. Nudging adds mu J(U - v) to every stage.
struct AssimilationScheme {
  SchemeKind kind = SchemeKind::direct;
  double kappa = 1.0;
  double mu = 0.0;
  int period_steps = 1;
  /// Experimental: explicit increasing observation steps instead of a fixed
  /// period. For the relaxed scheme each interval uses kappa_n = min(1, mu delta_n).
  std::vector<std::int64_t> schedule;

  static AssimilationScheme direct(int period_steps);
  /// kappa = min(1, mu delta).
  static AssimilationScheme relaxed(double mu, int period_steps, double dt);
  /// Relaxed update with a prescribed kappa (sweeps); mu records kappa / delta.
  static AssimilationScheme insertion(double kappa, int period_steps, double dt);
  static AssimilationScheme nudging(double mu);

  void validate() const;
  bool discrete() const { return kind != SchemeKind::nudging; }
  double delta(double dt) const { return period_steps * dt; }
  /// Whether an observation is inserted at reference step k (k > 0).
  bool observes_at(std::int64_t step) const;
  /// Relaxation used for the insertion at step k.
  double kappa_at(std::int64_t step, double dt) const;
};

/// u_pred - kappa J u_pred + kappa JU for velocity fields.
SpectralVelocityField insertion_update(const SpectralVelocityField& u_pred, const SpectralVelocityField& obs_JU,
                                       double kappa, const Interpolant& J);

/// The same update on a vorticity state; obs_band is the vorticity of JU on J.band().
void insertion_update(SpectralVorticityField& w_pred, const std::vector<Complex>& obs_band, double kappa,
                      const Interpolant& J);

/// Physical velocity of a vorticity state.
PhysicalField physical_velocity(const SpectralVorticityField& w);

// ---------------------------------------------------------------------------
// Error trajectories

struct ErrorSample {
  double t = 0.0;
  double err_l2 = 0.0;  // |U - u|
  double err_h1 = 0.0;  // ||U - u||
};

/// Sidecar keys: scheme, delta, kappa, mu, nu, n, dt, seed, lambda, h, diverged.
struct RunMetadata {
  std::string scheme;
  double delta = 0.0;
  double kappa = 0.0;
  double mu = 0.0;
  double nu = 0.0;
  int n = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double h = 0.0;
  bool diverged = false;
};

struct ErrorTrajectory {
  std::vector<ErrorSample> samples;
  RunMetadata meta;

  /// Last sample; throws if empty.
  const ErrorSample& terminal() const;
};

void write_trajectory_csv(std::ostream& os, const ErrorTrajectory& traj);
ErrorTrajectory read_trajectory_csv(std::istream& is);
void write_metadata(std::ostream& os, const RunMetadata& meta);
RunMetadata read_metadata(std::istream& is);

/// Sidecar path for a trajectory CSV: same basename, ".meta" extension.
std::filesystem::path metadata_path(const std::filesystem::path& csv_path);
/// Writes the CSV and then the sidecar, each through a temporary file and a
/// rename, so a present sidecar implies a complete CSV.
void save_trajectory(const std::filesystem::path& csv_path, const ErrorTrajectory& traj);
ErrorTrajectory load_trajectory(const std::filesystem::path& csv_path);

// ---------------------------------------------------------------------------
// Observation stream

enum class StreamMode {
  smoothed,  // JU computed on the reference side (default)
  raw,       // observation vectors; consumers apply J themselves
};

/// Everything the reference publishes for step k: J U at the four ETDRK4
/// stages of the step leaving t_k (stage 0 is J U(t_k)), or the raw
/// observation vectors in raw mode. The final frame carries stage 0 only.
/// `truth` is the reference state, attached at sampling steps for error
/// bookkeeping; assimilators never read it.
struct ObservationFrame {
  std::int64_t step = 0;
  double time = 0.0;
  bool last = false;
  std::array<std::shared_ptr<const std::vector<Complex>>, 4> ju;
  std::array<std::shared_ptr<const ObservationVector>, 4> raw;
  std::shared_ptr<const SpectralVorticityField> truth;
};

/// Ordered one-way delivery of frames over a bounded channel. Frames must
/// carry consecutive step numbers; anything else is a ProtocolError on
/// either side.
class ObservationStream {
 public:
  explicit ObservationStream(std::size_t capacity = 4) : channel_(capacity) {}

  /// False if the stream was closed by the consumer side.
  bool publish(ObservationFrame frame);
  void close() { channel_.close(); }
  /// nullopt after close() once every frame was delivered.
  std::optional<ObservationFrame> next();

 private:
  Channel<ObservationFrame> channel_;
  std::int64_t last_published_ = -1;
  std::int64_t last_delivered_ = -1;
};

struct StreamOptions {
  StreamMode mode = StreamMode::smoothed;
  int sample_stride = 16;       // truth attached every this many steps
  std::int64_t total_steps = 0;  // frames 0..total_steps
};

/// The observed system U, co-stepped with the assimilators. Records J U (or
/// raw observations) at each stage of each step.
class ReferenceRun {
 public:
  ReferenceRun(SolverParams params, std::shared_ptr<const EtdCoefficients> coeffs,
               std::shared_ptr<const Interpolant> J, SpectralVorticityField U0, StreamOptions options);

  /// Frame for the current step. Advances the reference by one step unless
  /// this is the last frame. Throws DivergenceError if the reference fails.
  ObservationFrame next_frame();
  bool done() const { return step_ > options_.total_steps; }
  const SpectralVorticityField& state() const { return state_; }

 private:
  class Recorder;

  SolverParams params_;
  EtdIntegrator integrator_;
  std::shared_ptr<const Interpolant> J_;
  SpectralVorticityField state_;
  StreamOptions options_;
  std::int64_t step_ = 0;
};

/// Stage hook adding mu J(U_s - v_s) for the reference stage data of one frame.
class NudgingHook : public StageHook {
 public:
  NudgingHook(double mu, std::shared_ptr<const Interpolant> J) : mu_(mu), J_(std::move(J)) {}

  void set_frame(const ObservationFrame* frame) { frame_ = frame; }
  void on_stage(int stage, const SpectralVorticityField& state, const PhysicalField& velocity,
                SpectralVorticityField& rhs) override;

 private:
  double mu_;
  std::shared_ptr<const Interpolant> J_;
  const ObservationFrame* frame_ = nullptr;
};

/// Vorticity of J U at a stage of a frame, from either stream mode.
std::shared_ptr<const std::vector<Complex>> frame_ju(const ObservationFrame& frame, int stage, const Interpolant& J);

/// One assimilating run fed frame by frame. Divergence is caught and marks
/// the trajectory; later frames are then only checked for order.
class Assimilator {
 public:
  Assimilator(AssimilationScheme scheme, SolverParams params, std::shared_ptr<const EtdCoefficients> coeffs,
              std::shared_ptr<const Interpolant> J, RunMetadata meta, int sample_stride);

  /// Replaces the default u0 = J U(t0) by an explicit initial state. Must be
  /// called before the first frame.
  void start_from(SpectralVorticityField u0);

  void consume(const ObservationFrame& frame);

  const AssimilationScheme& scheme() const { return scheme_; }
  bool diverged() const { return trajectory_.meta.diverged; }
  const SpectralVorticityField& state() const { return state_; }
  const ErrorTrajectory& trajectory() const { return trajectory_; }
  ErrorTrajectory take_trajectory() { return std::move(trajectory_); }

 private:
  AssimilationScheme scheme_;
  EtdIntegrator integrator_;
  std::shared_ptr<const Interpolant> J_;
  NudgingHook hook_;
  SpectralVorticityField state_;
  ErrorTrajectory trajectory_;
  std::optional<SpectralVorticityField> initial_;
  int sample_stride_;
  std::int64_t expected_ = 0;
};

// ---------------------------------------------------------------------------
// Runners

enum class InitialState {
  interpolated,  // u0 = J U(t0)
  reference,     // u0 = U(t0); fixed-point checks
};

/// Shared inputs of a set of runs against one reference.
struct AssimilationConfig {
  SolverParams solver;
  InterpolantConfig interpolant;
  double duration = 64.0;  // T - t0
  int sample_stride = 16;
  StreamMode mode = StreamMode::smoothed;
  InitialState initial = InitialState::interpolated;
  std::uint64_t seed = 0;  // recorded in metadata only

  void validate() const;
  std::int64_t total_steps() const;
};

struct AssimilationResult {
  ErrorTrajectory trajectory;
  SpectralVorticityField final_state;
};

RunMetadata make_metadata(const AssimilationScheme& scheme, const AssimilationConfig& config);

using FrameCallback = std::function<void(const ObservationFrame&)>;

/// Runs every consumer against one reference started from U0. The reference
/// produces frames on its own thread; the calling thread consumes them.
/// `after_frame` runs once all consumers have processed a frame.
void drive(ReferenceRun& reference, const std::vector<Assimilator*>& consumers,
           const FrameCallback& after_frame = {});

std::vector<AssimilationResult> run_schemes(const SpectralVorticityField& U0,
                                            const std::vector<AssimilationScheme>& schemes,
                                            const AssimilationConfig& config);

AssimilationResult run_discrete(const SpectralVorticityField& U0, const AssimilationScheme& scheme,
                                const AssimilationConfig& config);
AssimilationResult run_nudging(const SpectralVorticityField& U0, double mu, const AssimilationConfig& config);

struct GapEntry {
  int period_steps = 0;
  double delta = 0.0;
  double kappa = 0.0;
  double sup_gap_l2 = 0.0;  // sup_t |u - v|
  double sup_gap_h1 = 0.0;  // sup_t ||u - v||
  bool valid = true;        // false if either run diverged
};

/// Relaxed runs with kappa = min(1, mu delta) against one nudging run, all from
/// u0 = v0 = J U(t0) and the same reference. Entries are ordered by delta.
std::vector<GapEntry> compare_discrete_vs_nudging(const SpectralVorticityField& U0,
                                                  const std::vector<int>& period_steps, double mu,
                                                  const AssimilationConfig& config);

}  // namespace nudgekit
