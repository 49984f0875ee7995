#include "nudgekit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <string>

#include "nudgekit/binary_io.hpp"
#include "nudgekit/errors.hpp"
#include "nudgekit/fft.hpp"
#include "nudgekit/snapshot.hpp"
#include "nudgekit/spectral_ops.hpp"

namespace nudgekit {

namespace {

constexpr Complex kI{0.0, 1.0};

int row_of(int mx, int n) { return mx >= 0 ? mx : mx + n; }

// Places a full-plane coefficient into half-spectrum storage, adding its conjugate where stored.
void place(ScalarSpectrum& s, int mx, int my, Complex value) {
  auto layout = SpectralLayout::get(s.grid);
  const int n = s.grid.n;
  if (my < 0) {
    mx = -mx;
    my = -my;
    value = std::conj(value);
  }
  s.coeffs[layout->index(row_of(mx, n), my)] += value;
  if (my == 0 && mx != 0) s.coeffs[layout->index(row_of(-mx, n), 0)] += std::conj(value);
}

}  // namespace

bool MonitorThresholds::active() const {
  return std::isfinite(max_l2) || std::isfinite(max_h1) || std::isfinite(max_h2);
}

void SolverParams::validate() const {
  grid.validate();
  if (!(nu > 0.0) || !std::isfinite(nu)) throw ConfigError("solver.nu must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("solver.dt must be positive");
  if (forcing.kind == ForcingKind::kolmogorov && forcing.wavenumber < 1)
    throw ConfigError("forcing.wavenumber must be >= 1");
}

SpectralVelocityField make_forcing(const ForcingSpec& spec, const GridSpec& grid) {
  grid.validate();
  const int n = grid.n;
  auto in_range = [&](int mx, int my) {
    return std::abs(mx) < n / 2 && std::abs(my) < n / 2 && survives_dealiasing(grid, mx, my);
  };
  switch (spec.kind) {
    case ForcingKind::none:
      return VectorSpectrum::zeros(grid);
    case ForcingKind::kolmogorov: {
      if (spec.wavenumber < 1 || !in_range(0, spec.wavenumber))
        throw ConfigError("forcing wavenumber " + std::to_string(spec.wavenumber) + " lies beyond the dealias cutoff");
      auto f = VectorSpectrum::zeros(grid);
      auto layout = SpectralLayout::get(grid);
      // sin(k y) = (e^{iky} - e^{-iky}) / 2i
      f.x[layout->index(0, spec.wavenumber)] = Complex(0.0, -0.5 * spec.amplitude);
      return f;
    }
    case ForcingKind::custom_spectral: {
      auto w = ScalarSpectrum::zeros(grid);
      for (const auto& m : spec.modes) {
        if (m.mx == 0 && m.my == 0) throw ConfigError("custom forcing may not include the mean mode");
        if (!in_range(m.mx, m.my))
          throw ConfigError("custom forcing mode (" + std::to_string(m.mx) + "," + std::to_string(m.my) +
                            ") lies beyond the dealias cutoff");
        place(w, m.mx, m.my, m.vorticity);
      }
      enforce_hermitian(w);
      return velocity_from_vorticity(w);
    }
  }
  throw ConfigError("unknown forcing kind");
}

EtdWeights etd_weights(double rate, double dt, int contour_points) {
  if (contour_points < 1) throw ConfigError("contour_points must be >= 1");
  const double c = rate * dt;
  EtdWeights w;
  w.e = std::exp(c);
  w.e2 = std::exp(c / 2.0);
  Complex q{}, f1{}, f2{}, f3{};
  for (int j = 1; j <= contour_points; ++j) {
    const Complex r = std::exp(kI * (2.0 * std::numbers::pi * (j - 0.5) / contour_points));
    const Complex lr = c + r;
    const Complex elr = std::exp(lr);
    const Complex lr3 = lr * lr * lr;
    q += (std::exp(lr / 2.0) - 1.0) / lr;
    f1 += (-4.0 - lr + elr * (4.0 - 3.0 * lr + lr * lr)) / lr3;
    f2 += 2.0 * (2.0 + lr + elr * (-2.0 + lr)) / lr3;
    f3 += (-4.0 - 3.0 * lr - lr * lr + elr * (4.0 - lr)) / lr3;
  }
  const double scale = dt / contour_points;
  q *= scale;
  f1 *= scale;
  f2 *= scale;
  f3 *= scale;
  w.q = q.real();
  w.f1 = f1.real();
  w.f2 = f2.real();
  w.f3 = f3.real();
  w.imag_residue = std::max({std::abs(q.imag()), std::abs(f1.imag()), std::abs(f2.imag()), std::abs(f3.imag())});
  return w;
}

EtdCoefficients etd_coefficients(const SolverParams& params) {
  params.validate();
  auto layout = SpectralLayout::get(params.grid);
  const std::size_t size = layout->size();
  EtdCoefficients out;
  out.dt = params.dt;
  for (auto* v : {&out.e, &out.e2, &out.q, &out.f1, &out.f2, &out.f3}) v->resize(size);
  const auto& k2 = layout->k2();
  // Many coefficients share |k|^2; evaluate each distinct rate once.
  std::map<double, EtdWeights> cache;
  for (std::size_t i = 0; i < size; ++i) {
    const double rate = -params.nu * k2[i];
    auto it = cache.find(rate);
    if (it == cache.end()) it = cache.emplace(rate, etd_weights(rate, params.dt)).first;
    const EtdWeights& w = it->second;
    out.e[i] = w.e;
    out.e2[i] = w.e2;
    out.q[i] = w.q;
    out.f1[i] = w.f1;
    out.f2[i] = w.f2;
    out.f3[i] = w.f3;
    out.max_imag_residue = std::max(out.max_imag_residue, w.imag_residue);
  }
  return out;
}

EtdIntegrator::EtdIntegrator(SolverParams params)
    : EtdIntegrator(params, std::make_shared<const EtdCoefficients>(etd_coefficients(params))) {}

EtdIntegrator::EtdIntegrator(SolverParams params, std::shared_ptr<const EtdCoefficients> coeffs)
    : params_(std::move(params)),
      layout_(SpectralLayout::get(params_.grid)),
      fft_(Fft::get(params_.grid.n)),
      coeffs_(std::move(coeffs)),
      forcing_(vorticity_from_velocity(make_forcing(params_.forcing, params_.grid))),
      velocity_(PhysicalField::zeros(params_.grid, 2)) {
  params_.validate();
  if (coeffs_->dt != params_.dt || coeffs_->e.size() != layout_->size())
    throw ConfigError("ETD coefficients were built for different solver parameters");
  const std::size_t points = static_cast<std::size_t>(params_.grid.n) * params_.grid.n;
  grad_x_.resize(points);
  grad_y_.resize(points);
  product_.resize(points);
  scratch_.resize(layout_->size());
  for (auto* s : {&nv_, &na_, &nb_, &nc_, &a_, &b_, &c_}) *s = ScalarSpectrum::zeros(params_.grid);
}

void EtdIntegrator::rhs(const SpectralVorticityField& w, SpectralVorticityField& out) {
  const std::size_t size = layout_->size();
  const auto& kx = layout_->kx();
  const auto& ky = layout_->ky();
  const auto& inv = layout_->inv_k2();
  const auto& keep = layout_->dealias_mask();
  const Complex* wc = w.coeffs.data();

  // Velocity from the stream function, then the vorticity gradient.
  // Multiplications by i k are spelled out; complex*complex goes through a slow NaN-safe path.
  for (std::size_t i = 0; i < size; ++i) {
    const double s = ky[i] * inv[i];
    scratch_[i] = Complex(-s * wc[i].imag(), s * wc[i].real());
  }
  fft_->inverse_destructive(scratch_.data(), velocity_.component(0));
  for (std::size_t i = 0; i < size; ++i) {
    const double s = -kx[i] * inv[i];
    scratch_[i] = Complex(-s * wc[i].imag(), s * wc[i].real());
  }
  fft_->inverse_destructive(scratch_.data(), velocity_.component(1));

  Complex* oc = out.coeffs.data();
  const Complex* fc = forcing_.coeffs.data();
  if (!params_.nonlinear) {
    for (std::size_t i = 0; i < size; ++i) oc[i] = fc[i];
    return;
  }

  for (std::size_t i = 0; i < size; ++i) scratch_[i] = Complex(-kx[i] * wc[i].imag(), kx[i] * wc[i].real());
  fft_->inverse_destructive(scratch_.data(), grad_x_.data());
  for (std::size_t i = 0; i < size; ++i) scratch_[i] = Complex(-ky[i] * wc[i].imag(), ky[i] * wc[i].real());
  fft_->inverse_destructive(scratch_.data(), grad_y_.data());

  const double* u = velocity_.component(0);
  const double* v = velocity_.component(1);
  const std::size_t points = product_.size();
  for (std::size_t p = 0; p < points; ++p) product_[p] = -(u[p] * grad_x_[p] + v[p] * grad_y_[p]);
  fft_->forward(product_.data(), oc);
  for (std::size_t i = 0; i < size; ++i) oc[i] = keep[i] ? oc[i] + fc[i] : Complex{};
  oc[0] = 0.0;
}

void EtdIntegrator::evaluate(int stage, const SpectralVorticityField& w, SpectralVorticityField& out,
                             StageHook* hook) {
  rhs(w, out);
  if (hook != nullptr) {
    hook->on_stage(stage, w, velocity_, out);
    const auto& keep = layout_->dealias_mask();
    for (std::size_t i = 0; i < out.coeffs.size(); ++i)
      if (!keep[i]) out.coeffs[i] = 0.0;
    out.coeffs[0] = 0.0;
  }
}

void EtdIntegrator::step(SpectralVorticityField& w, std::int64_t step_index, StageHook* hook) {
  const std::size_t size = layout_->size();
  const auto& E = coeffs_->e;
  const auto& E2 = coeffs_->e2;
  const auto& Q = coeffs_->q;
  const auto& f1 = coeffs_->f1;
  const auto& f2 = coeffs_->f2;
  const auto& f3 = coeffs_->f3;
  Complex* v = w.coeffs.data();
  Complex* a = a_.coeffs.data();
  Complex* b = b_.coeffs.data();
  Complex* c = c_.coeffs.data();
  const Complex* nv = nv_.coeffs.data();
  const Complex* na = na_.coeffs.data();
  const Complex* nb = nb_.coeffs.data();
  const Complex* nc = nc_.coeffs.data();

  evaluate(0, w, nv_, hook);
  for (std::size_t i = 0; i < size; ++i) a[i] = E2[i] * v[i] + Q[i] * nv[i];
  evaluate(1, a_, na_, hook);
  for (std::size_t i = 0; i < size; ++i) b[i] = E2[i] * v[i] + Q[i] * na[i];
  evaluate(2, b_, nb_, hook);
  for (std::size_t i = 0; i < size; ++i) c[i] = E2[i] * a[i] + Q[i] * (2.0 * nb[i] - nv[i]);
  evaluate(3, c_, nc_, hook);
  for (std::size_t i = 0; i < size; ++i)
    v[i] = E[i] * v[i] + f1[i] * nv[i] + f2[i] * (na[i] + nb[i]) + f3[i] * nc[i];
  v[0] = 0.0;
  check(w, step_index);
}

void EtdIntegrator::check(const SpectralVorticityField& w, std::int64_t step_index) const {
  if (!all_finite(w)) throw DivergenceError(step_index, "non-finite vorticity coefficient");
  const auto& m = params_.monitors;
  if (!m.active()) return;
  const double l2 = velocity_norm(w, 0);
  const double h1 = velocity_norm(w, 1);
  const double h2 = velocity_norm(w, 2);
  if (l2 > m.max_l2) throw DivergenceError(step_index, "|u| = " + std::to_string(l2) + " exceeds monitor bound");
  if (h1 > m.max_h1) throw DivergenceError(step_index, "||u|| = " + std::to_string(h1) + " exceeds monitor bound");
  if (h2 > m.max_h2) throw DivergenceError(step_index, "|Au| = " + std::to_string(h2) + " exceeds monitor bound");
}

SpectralVorticityField nonlinear_term(const SpectralVorticityField& w) {
  SolverParams params;
  params.grid = w.grid;
  params.forcing.kind = ForcingKind::none;
  EtdCoefficients dummy;
  dummy.dt = params.dt;
  auto layout = SpectralLayout::get(w.grid);
  for (auto* v : {&dummy.e, &dummy.e2, &dummy.q, &dummy.f1, &dummy.f2, &dummy.f3}) v->assign(layout->size(), 0.0);
  EtdIntegrator integrator(params, std::make_shared<const EtdCoefficients>(std::move(dummy)));
  auto out = ScalarSpectrum::zeros(w.grid);
  integrator.rhs(dealias(w), out);
  if (!all_finite(out)) throw DivergenceError(0, "non-finite advection term");
  return out;
}

SpectralVorticityField step(const SpectralVorticityField& w, const SolverParams& params,
                            const EtdCoefficients& coeffs, StageHook* hook) {
  EtdIntegrator integrator(params, std::make_shared<const EtdCoefficients>(coeffs));
  SpectralVorticityField out = w;
  integrator.step(out, 0, hook);
  return out;
}

SpectralVorticityField advance(const SpectralVorticityField& w, const SolverParams& params, std::int64_t n_steps,
                               const StepCallback& callback) {
  if (n_steps < 0) throw ConfigError("n_steps must be >= 0");
  Solver solver(params, w);
  solver.advance(n_steps, callback);
  return solver.state();
}

Solver::Solver(SolverParams params, SpectralVorticityField initial, double t0, std::int64_t step)
    : integrator_(std::move(params)), state_(std::move(initial)), t0_(t0), step_(step) {
  require_same_grid(state_.grid, integrator_.params().grid, "solver initial state");
}

Solver::Solver(SolverParams params, std::shared_ptr<const EtdCoefficients> coeffs, SpectralVorticityField initial,
               double t0)
    : integrator_(std::move(params), std::move(coeffs)), state_(std::move(initial)), t0_(t0), step_(0) {
  require_same_grid(state_.grid, integrator_.params().grid, "solver initial state");
}

void Solver::step(StageHook* hook) {
  integrator_.step(state_, step_ + 1, hook);
  ++step_;
}

void Solver::advance(std::int64_t n_steps, const StepCallback& callback) {
  if (n_steps < 0) throw ConfigError("n_steps must be >= 0");
  for (std::int64_t i = 0; i < n_steps; ++i) {
    step();
    if (callback) callback(step_, state_);
  }
}

void Solver::set_state(SpectralVorticityField w) {
  require_same_grid(w.grid, params().grid, "solver state");
  state_ = std::move(w);
}

Diagnostics diagnostics(const SpectralVorticityField& w) {
  Diagnostics d;
  const double l2 = velocity_norm(w, 0);
  d.h1 = velocity_norm(w, 1);
  d.h2 = velocity_norm(w, 2);
  d.energy = 0.5 * l2 * l2;
  d.enstrophy = 0.5 * d.h1 * d.h1;
  return d;
}

SpectralVorticityField taylor_green(const GridSpec& grid, double nu, double t) {
  auto w = ScalarSpectrum::zeros(grid);
  auto layout = SpectralLayout::get(grid);
  const double k1 = 2.0 * std::numbers::pi / grid.length;
  // w = 2 k1 sin(k1 x) sin(k1 y) e^{-2 nu k1^2 t}
  const double amp = 2.0 * k1 * std::exp(-2.0 * nu * k1 * k1 * t);
  w.coeffs[layout->index(1, 1)] = -0.25 * amp;
  w.coeffs[layout->index(grid.n - 1, 1)] = 0.25 * amp;
  return w;
}

namespace {
constexpr std::string_view kCheckpointMagic = "NKC1";
}

void write_checkpoint(std::ostream& os, const Checkpoint& cp) {
  using namespace binary;
  const auto& p = cp.params;
  put_magic(os, kCheckpointMagic);
  put_u32(os, static_cast<std::uint32_t>(p.grid.n));
  put_f64(os, p.grid.length);
  put_f64(os, p.grid.dealias_fraction);
  put_u32(os, static_cast<std::uint32_t>(p.grid.dealias_rule));
  put_f64(os, p.nu);
  put_f64(os, p.dt);
  put_u32(os, static_cast<std::uint32_t>(p.forcing.kind));
  put_f64(os, p.forcing.amplitude);
  put_u32(os, static_cast<std::uint32_t>(p.forcing.wavenumber));
  put_u32(os, static_cast<std::uint32_t>(p.forcing.modes.size()));
  for (const auto& m : p.forcing.modes) {
    put_u32(os, static_cast<std::uint32_t>(m.mx));
    put_u32(os, static_cast<std::uint32_t>(m.my));
    put_f64(os, m.vorticity.real());
    put_f64(os, m.vorticity.imag());
  }
  put_f64(os, p.monitors.max_l2);
  put_f64(os, p.monitors.max_h1);
  put_f64(os, p.monitors.max_h2);
  put_u32(os, p.nonlinear ? 1u : 0u);
  put_f64(os, cp.time);
  put_u64(os, static_cast<std::uint64_t>(cp.step));
  write_snapshot(os, cp.state);
}

Checkpoint read_checkpoint(std::istream& is) {
  using namespace binary;
  expect_magic(is, kCheckpointMagic);
  Checkpoint cp;
  auto& p = cp.params;
  p.grid.n = static_cast<int>(get_u32(is));
  p.grid.length = get_f64(is);
  p.grid.dealias_fraction = get_f64(is);
  p.grid.dealias_rule = static_cast<DealiasRule>(get_u32(is));
  p.nu = get_f64(is);
  p.dt = get_f64(is);
  p.forcing.kind = static_cast<ForcingKind>(get_u32(is));
  p.forcing.amplitude = get_f64(is);
  p.forcing.wavenumber = static_cast<int>(get_u32(is));
  const std::uint32_t modes = get_u32(is);
  for (std::uint32_t i = 0; i < modes; ++i) {
    ForcingMode m;
    m.mx = static_cast<std::int32_t>(get_u32(is));
    m.my = static_cast<std::int32_t>(get_u32(is));
    const double re = get_f64(is);
    const double im = get_f64(is);
    m.vorticity = {re, im};
    p.forcing.modes.push_back(m);
  }
  p.monitors.max_l2 = get_f64(is);
  p.monitors.max_h1 = get_f64(is);
  p.monitors.max_h2 = get_f64(is);
  p.nonlinear = get_u32(is) != 0;
  cp.time = get_f64(is);
  cp.step = static_cast<std::int64_t>(get_u64(is));
  p.validate();
  auto snap = read_snapshot(is);
  auto* w = std::get_if<SpectralVorticityField>(&snap);
  if (w == nullptr) throw ConfigError("checkpoint does not hold a vorticity field");
  if (w->grid.n != p.grid.n || w->grid.length != p.grid.length)
    throw ConfigError("checkpoint field does not match its grid");
  w->grid = p.grid;
  cp.state = std::move(*w);
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  write_checkpoint(os, cp);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + path.string());
  return read_checkpoint(is);
}

}  // namespace nudgekit
