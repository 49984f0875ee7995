#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <vector>

#include "nudgekit/fields.hpp"

namespace nudgekit {

enum class ForcingKind { none, kolmogorov, custom_spectral };

/// One vorticity mode of a custom forcing; its conjugate partner is implied.
struct ForcingMode {
  int mx = 0;
  int my = 0;
  Complex vorticity;
};

/// Time-independent body force. Kolmogorov forcing is f = a (sin(k_f y), 0).
struct ForcingSpec {
  ForcingKind kind = ForcingKind::kolmogorov;
  double amplitude = 0.1;
  int wavenumber = 4;
  std::vector<ForcingMode> modes;  // custom_spectral only
};

/// Soft a-priori bounds on |u|, ||u|| and |Au|; exceeding one aborts the run.
struct MonitorThresholds {
  double max_l2 = std::numeric_limits<double>::infinity();
  double max_h1 = std::numeric_limits<double>::infinity();
  double max_h2 = std::numeric_limits<double>::infinity();

  bool active() const;
};

struct SolverParams {
  GridSpec grid;
  double nu = 5e-3;
  double dt = 1.0 / 128.0;
  ForcingSpec forcing;
  MonitorThresholds monitors;
  bool nonlinear = true;  // false drops advection (linear test mode)

  void validate() const;
};

/// Builds f as a divergence-free, zero-mean velocity spectrum. Throws
/// ConfigError if any forced mode is removed by dealiasing.
SpectralVelocityField make_forcing(const ForcingSpec& spec, const GridSpec& grid);

/// ETDRK4 weights for a single linear rate c (per unit time) and step dt,
/// evaluated as contour means over `contour_points` points on the unit circle
/// around c*dt. f2 is the combined weight applied to the sum of the two
/// midpoint stages, so at c = 0 the weights reduce to dt (1/6, 1/3, 1/6).
struct EtdWeights {
  double e = 1.0, e2 = 1.0, q = 0.0, f1 = 0.0, f2 = 0.0, f3 = 0.0;
  double imag_residue = 0.0;
};
EtdWeights etd_weights(double rate, double dt, int contour_points = 32);

/// Per-coefficient ETDRK4 tables for c = -nu |k|^2.
struct EtdCoefficients {
  double dt = 0.0;
  std::vector<double> e, e2, q, f1, f2, f3;
  double max_imag_residue = 0.0;
};
EtdCoefficients etd_coefficients(const SolverParams& params);

/// Called at each of the four ETDRK4 stages with the stage vorticity and the
/// physical velocity computed from it. Implementations may add an extra term
/// to the stage right-hand side (nudging) or only record the stage (reference).
class StageHook {
 public:
  virtual ~StageHook() = default;
  virtual void on_stage(int stage, const SpectralVorticityField& state, const PhysicalField& velocity,
                        SpectralVorticityField& rhs) = 0;
};

/// ETDRK4 integrator with preallocated workspace. Not thread-safe; one
/// instance per worker. Coefficient tables may be shared.
class EtdIntegrator {
 public:
  explicit EtdIntegrator(SolverParams params);
  EtdIntegrator(SolverParams params, std::shared_ptr<const EtdCoefficients> coeffs);

  const SolverParams& params() const { return params_; }
  const EtdCoefficients& coefficients() const { return *coeffs_; }
  const SpectralVorticityField& forcing_vorticity() const { return forcing_; }

  /// Advances w by dt in place. step_index is only used for error reporting.
  void step(SpectralVorticityField& w, std::int64_t step_index, StageHook* hook = nullptr);

  /// -(u.grad)w + curl f, dealiased, with the physical velocity of w left in velocity().
  void rhs(const SpectralVorticityField& w, SpectralVorticityField& out);
  const PhysicalField& velocity() const { return velocity_; }

 private:
  void evaluate(int stage, const SpectralVorticityField& w, SpectralVorticityField& out, StageHook* hook);
  void check(const SpectralVorticityField& w, std::int64_t step_index) const;

  SolverParams params_;
  std::shared_ptr<const SpectralLayout> layout_;
  std::shared_ptr<const class Fft> fft_;
  std::shared_ptr<const EtdCoefficients> coeffs_;
  SpectralVorticityField forcing_;
  PhysicalField velocity_;
  RealBuffer grad_x_, grad_y_, product_;
  ComplexBuffer scratch_;
  SpectralVorticityField nv_, na_, nb_, nc_, a_, b_, c_;
};

/// Advection term -(u.grad)w, dealiased, zero mean. Throws DivergenceError on
/// non-finite products.
SpectralVorticityField nonlinear_term(const SpectralVorticityField& w);

/// One ETDRK4 step without side effects on the input.
SpectralVorticityField step(const SpectralVorticityField& w, const SolverParams& params,
                            const EtdCoefficients& coeffs, StageHook* hook = nullptr);

using StepCallback = std::function<void(std::int64_t step, const SpectralVorticityField& state)>;

/// Composition of n_steps steps; the callback sees every state after a step.
SpectralVorticityField advance(const SpectralVorticityField& w, const SolverParams& params, std::int64_t n_steps,
                               const StepCallback& callback = {});

/// Stateful solver: current vorticity, step counter and time t0 + step * dt.
class Solver {
 public:
  Solver(SolverParams params, SpectralVorticityField initial, double t0 = 0.0, std::int64_t step = 0);
  Solver(SolverParams params, std::shared_ptr<const EtdCoefficients> coeffs, SpectralVorticityField initial,
         double t0 = 0.0);

  void step(StageHook* hook = nullptr);
  void advance(std::int64_t n_steps, const StepCallback& callback = {});

  const SolverParams& params() const { return integrator_.params(); }
  const SpectralVorticityField& state() const { return state_; }
  SpectralVorticityField& mutable_state() { return state_; }
  void set_state(SpectralVorticityField w);
  std::int64_t step_index() const { return step_; }
  double time() const { return t0_ + static_cast<double>(step_) * params().dt; }
  double start_time() const { return t0_; }

 private:
  EtdIntegrator integrator_;
  SpectralVorticityField state_;
  double t0_;
  std::int64_t step_;
};

/// Energy-type diagnostics of a vorticity state.
struct Diagnostics {
  double energy = 0.0;     // |u|^2 / 2
  double enstrophy = 0.0;  // ||u||^2 / 2
  double h1 = 0.0;         // ||u||
  double h2 = 0.0;         // |Au|
};
Diagnostics diagnostics(const SpectralVorticityField& w);

/// Taylor-Green vortex u = (sin x cos y, -cos x sin y) e^(-2 nu t) at time t, in vorticity form.
SpectralVorticityField taylor_green(const GridSpec& grid, double nu, double t);

/// Complete solver restart record.
struct Checkpoint {
  SolverParams params;
  SpectralVorticityField state;
  double time = 0.0;
  std::int64_t step = 0;
};

void write_checkpoint(std::ostream& os, const Checkpoint& cp);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nudgekit
