#include "nudgekit/spectral_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nudgekit/errors.hpp"
#include "nudgekit/fft.hpp"

namespace nudgekit {

namespace {

constexpr Complex kI{0.0, 1.0};

void require_components(const PhysicalField& f, int components) {
  f.grid.validate();
  if (f.components != components)
    throw ConfigError("expected a " + std::to_string(components) + "-component physical field");
  if (f.values.size() != static_cast<std::size_t>(components) * f.grid.n * f.grid.n)
    throw ConfigError("physical field size does not match its grid");
}

void require_spectrum_size(const GridSpec& grid, std::size_t size) {
  grid.validate();
  if (size != static_cast<std::size_t>(grid.n) * (grid.n / 2 + 1))
    throw ConfigError("spectral coefficient count does not match the grid");
}

double defect_of(const SpectralLayout& layout, const ComplexBuffer& c, double scale) {
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  const int n = layout.n();
  for (int b : {0, n / 2}) {
    for (int a = 0; a < n; ++a) {
      const Complex here = c[layout.index(a, b)];
      const Complex there = c[layout.index(layout.mirror_row(a), b)];
      worst = std::max(worst, std::abs(here - std::conj(there)) / scale);
    }
  }
  return worst;
}

double weighted_sum(const SpectralLayout& layout, const ComplexBuffer& x, const ComplexBuffer* y,
                    double power) {
  const auto& k2 = layout.k2();
  const auto& w = layout.weight();
  double sum = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    double m = std::norm(x[i]);
    if (y != nullptr) m += std::norm((*y)[i]);
    if (m == 0.0) continue;
    sum += w[i] * std::pow(k2[i], power) * m;
  }
  return sum;
}

void check_alpha(int alpha) {
  if (alpha < 0 || alpha > 3) throw ConfigError("sobolev index must be 0, 1, 2 or 3");
}

}  // namespace

ScalarSpectrum transform(const PhysicalField& scalar) {
  require_components(scalar, 1);
  ScalarSpectrum out = ScalarSpectrum::zeros(scalar.grid);
  Fft::get(scalar.grid.n)->forward(scalar.values.data(), out.coeffs.data());
  return out;
}

VectorSpectrum transform_vector(const PhysicalField& vector) {
  require_components(vector, 2);
  VectorSpectrum out = VectorSpectrum::zeros(vector.grid);
  auto fft = Fft::get(vector.grid.n);
  fft->forward(vector.component(0), out.x.data());
  fft->forward(vector.component(1), out.y.data());
  return out;
}

PhysicalField inverse_transform(const ScalarSpectrum& spectrum) {
  require_spectrum_size(spectrum.grid, spectrum.coeffs.size());
  PhysicalField out = PhysicalField::zeros(spectrum.grid, 1);
  Fft::get(spectrum.grid.n)->inverse(spectrum.coeffs.data(), out.component(0));
  return out;
}

PhysicalField inverse_transform(const VectorSpectrum& spectrum) {
  require_spectrum_size(spectrum.grid, spectrum.x.size());
  require_spectrum_size(spectrum.grid, spectrum.y.size());
  PhysicalField out = PhysicalField::zeros(spectrum.grid, 2);
  auto fft = Fft::get(spectrum.grid.n);
  fft->inverse(spectrum.x.data(), out.component(0));
  fft->inverse(spectrum.y.data(), out.component(1));
  return out;
}

VectorSpectrum leray_project(const VectorSpectrum& v) {
  auto layout = SpectralLayout::get(v.grid);
  VectorSpectrum out = VectorSpectrum::zeros(v.grid);
  const auto& kx = layout->kx();
  const auto& ky = layout->ky();
  const auto& inv = layout->inv_k2();
  for (std::size_t i = 0; i < out.x.size(); ++i) {
    if (inv[i] == 0.0) continue;  // mean and Nyquist modes
    const Complex dot = kx[i] * v.x[i] + ky[i] * v.y[i];
    out.x[i] = v.x[i] - kx[i] * dot * inv[i];
    out.y[i] = v.y[i] - ky[i] * dot * inv[i];
  }
  return out;
}

double sobolev_norm(const VectorSpectrum& u, int alpha) {
  check_alpha(alpha);
  auto layout = SpectralLayout::get(u.grid);
  const double L = u.grid.length;
  return std::sqrt(L * L * weighted_sum(*layout, u.x, &u.y, alpha));
}

double sobolev_inner(const VectorSpectrum& u, const VectorSpectrum& v, int alpha) {
  check_alpha(alpha);
  require_same_grid(u.grid, v.grid, "sobolev_inner");
  auto layout = SpectralLayout::get(u.grid);
  const auto& k2 = layout->k2();
  const auto& w = layout->weight();
  double sum = 0.0;
  for (std::size_t i = 1; i < u.x.size(); ++i) {
    const double p = (u.x[i] * std::conj(v.x[i]) + u.y[i] * std::conj(v.y[i])).real();
    sum += w[i] * std::pow(k2[i], alpha) * p;
  }
  const double L = u.grid.length;
  return L * L * sum;
}

double velocity_norm(const SpectralVorticityField& w, int alpha) {
  check_alpha(alpha);
  auto layout = SpectralLayout::get(w.grid);
  const double L = w.grid.length;
  // |u_k| = |w_k| / |k|, so ||u||_alpha = ||w||_(alpha-1).
  const auto& k2 = layout->k2();
  const auto& wt = layout->weight();
  double sum = 0.0;
  for (std::size_t i = 1; i < w.coeffs.size(); ++i) {
    const double m = std::norm(w.coeffs[i]);
    if (m == 0.0) continue;
    sum += wt[i] * std::pow(k2[i], alpha - 1) * m;
  }
  return std::sqrt(L * L * sum);
}

SpectralVelocityField velocity_from_vorticity(const SpectralVorticityField& w) {
  auto layout = SpectralLayout::get(w.grid);
  SpectralVelocityField u = VectorSpectrum::zeros(w.grid);
  const auto& kx = layout->kx();
  const auto& ky = layout->ky();
  const auto& inv = layout->inv_k2();
  // Same operation order as the solver's right-hand side, so both give identical bits.
  for (std::size_t i = 0; i < w.coeffs.size(); ++i) {
    const Complex c = w.coeffs[i];
    const double sx = ky[i] * inv[i], sy = -kx[i] * inv[i];
    u.x[i] = Complex(-sx * c.imag(), sx * c.real());
    u.y[i] = Complex(-sy * c.imag(), sy * c.real());
  }
  return u;
}

SpectralVorticityField vorticity_from_velocity(const SpectralVelocityField& u) {
  auto layout = SpectralLayout::get(u.grid);
  SpectralVorticityField w = ScalarSpectrum::zeros(u.grid);
  const auto& kx = layout->kx();
  const auto& ky = layout->ky();
  for (std::size_t i = 0; i < w.coeffs.size(); ++i) w.coeffs[i] = kI * (kx[i] * u.y[i] - ky[i] * u.x[i]);
  return w;
}

ScalarSpectrum dealias(const ScalarSpectrum& c) {
  ScalarSpectrum out = c;
  dealias_in_place(out);
  return out;
}

void dealias_in_place(ScalarSpectrum& c) {
  auto layout = SpectralLayout::get(c.grid);
  const auto& keep = layout->dealias_mask();
  for (std::size_t i = 0; i < c.coeffs.size(); ++i)
    if (!keep[i]) c.coeffs[i] = 0.0;
}

VectorSpectrum dealias(const VectorSpectrum& c) {
  auto layout = SpectralLayout::get(c.grid);
  const auto& keep = layout->dealias_mask();
  VectorSpectrum out = c;
  for (std::size_t i = 0; i < out.x.size(); ++i) {
    if (!keep[i]) {
      out.x[i] = 0.0;
      out.y[i] = 0.0;
    }
  }
  return out;
}

double hermitian_defect(const ScalarSpectrum& c) {
  auto layout = SpectralLayout::get(c.grid);
  return defect_of(*layout, c.coeffs, max_abs(c));
}

double hermitian_defect(const VectorSpectrum& c) {
  auto layout = SpectralLayout::get(c.grid);
  const double scale = max_abs(c);
  return std::max(defect_of(*layout, c.x, scale), defect_of(*layout, c.y, scale));
}

bool is_hermitian(const ScalarSpectrum& c, double rel_tol) { return hermitian_defect(c) <= rel_tol; }
bool is_hermitian(const VectorSpectrum& c, double rel_tol) { return hermitian_defect(c) <= rel_tol; }

void enforce_hermitian(ScalarSpectrum& c) {
  auto layout = SpectralLayout::get(c.grid);
  const int n = layout->n();
  for (int b : {0, n / 2}) {
    for (int a = 0; a < n; ++a) {
      const int partner = layout->mirror_row(a);
      if (partner == a) {
        auto& v = c.coeffs[layout->index(a, b)];
        v = v.real();
      } else if (a > n / 2) {
        c.coeffs[layout->index(a, b)] = std::conj(c.coeffs[layout->index(partner, b)]);
      }
    }
  }
}

double divergence_defect(const VectorSpectrum& u) {
  auto layout = SpectralLayout::get(u.grid);
  const auto& kx = layout->kx();
  const auto& ky = layout->ky();
  double worst = 0.0;
  for (std::size_t i = 0; i < u.x.size(); ++i) {
    const double mag = std::sqrt(std::norm(u.x[i]) + std::norm(u.y[i]));
    if (mag == 0.0) continue;
    worst = std::max(worst, std::abs(kx[i] * u.x[i] + ky[i] * u.y[i]) / mag);
  }
  return worst;
}

}  // namespace nudgekit
