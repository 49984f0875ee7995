#include "nudgekit/random_fields.hpp"

#include <cmath>
#include <numbers>

#include "nudgekit/errors.hpp"
#include "nudgekit/spectral_ops.hpp"

namespace nudgekit {

SpectralVorticityField random_vorticity(const GridSpec& grid, double peak, double target_l2, CounterRng& rng) {
  if (!(peak > 0.0)) throw ConfigError("spectrum peak must be positive");
  auto layout = SpectralLayout::get(grid);
  auto w = ScalarSpectrum::zeros(grid);
  const auto& k2 = layout->k2();
  const auto& keep = layout->dealias_mask();
  const double k1sq = grid.lambda1();
  for (std::size_t i = 1; i < w.coeffs.size(); ++i) {
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    if (!keep[i]) continue;
    const int row = static_cast<int>(i / layout->columns());
    const int col = static_cast<int>(i % layout->columns());
    if (layout->is_nyquist(row, col)) continue;
    // |u_k|^2 ~ E(k)/k = exp(-(k/peak)^2) with k in units of the lowest wavenumber
    const double kk = k2[i] / k1sq;
    const double amp_u = std::exp(-0.5 * kk / (peak * peak));
    w.coeffs[i] = std::polar(std::sqrt(k2[i]) * amp_u, phase);
  }
  enforce_hermitian(w);
  w.coeffs[0] = 0.0;
  const double l2 = velocity_norm(w, 0);
  if (target_l2 > 0.0 && l2 > 0.0) w = (target_l2 / l2) * w;
  return w;
}

SpectralVelocityField random_velocity(const GridSpec& grid, int kmax, CounterRng& rng, double smoothness) {
  auto layout = SpectralLayout::get(grid);
  ScalarSpectrum cx = ScalarSpectrum::zeros(grid);
  ScalarSpectrum cy = ScalarSpectrum::zeros(grid);
  const auto& k2 = layout->k2();
  for (int a = 0; a < layout->n(); ++a) {
    for (int b = 0; b < layout->columns(); ++b) {
      const std::size_t i = layout->index(a, b);
      const double gx_re = rng.normal(), gx_im = rng.normal(), gy_re = rng.normal(), gy_im = rng.normal();
      if (layout->is_nyquist(a, b)) continue;
      if (std::abs(layout->mode_x(a)) > kmax || b > kmax) continue;
      const double damp = std::pow(1.0 + k2[i], -0.5 * smoothness);
      cx.coeffs[i] = damp * Complex(gx_re, gx_im);
      cy.coeffs[i] = damp * Complex(gy_re, gy_im);
    }
  }
  enforce_hermitian(cx);
  enforce_hermitian(cy);
  VectorSpectrum v{grid, std::move(cx.coeffs), std::move(cy.coeffs)};
  return leray_project(v);
}

PhysicalField random_physical(const GridSpec& grid, int components, CounterRng& rng) {
  auto f = PhysicalField::zeros(grid, components);
  for (auto& v : f.values) v = rng.normal();
  return f;
}

}  // namespace nudgekit
