#pragma once

// Test-only reference computations. Everything here works on the full Fourier
// plane or directly in physical space so it shares no code path with the
// half-spectrum routines under test.

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <utility>

#include "nudgekit/fields.hpp"

namespace oracle {

using nudgekit::Complex;
using Plane = std::map<std::pair<int, int>, Complex>;

// Coefficient of the full-plane mode (mx, my), mx, my in [-n/2, n/2), read
// from half-spectrum storage through Hermitian symmetry.
inline Complex coefficient(const nudgekit::ComplexBuffer& c, int n, int mx, int my) {
  const int cols = n / 2 + 1;
  auto wrap = [n](int m) { return ((m % n) + n) % n; };
  if (my >= 0) return c[static_cast<std::size_t>(wrap(mx)) * cols + my];
  if (my == -n / 2) return c[static_cast<std::size_t>(wrap(mx)) * cols + n / 2];
  return std::conj(c[static_cast<std::size_t>(wrap(-mx)) * cols + (-my)]);
}

// Brute-force sum L^2 sum_k |k|^(2 alpha) |u_k|^2 over the whole plane.
inline double sobolev_norm(const nudgekit::VectorSpectrum& u, int alpha) {
  const int n = u.grid.n;
  const double k1 = 2.0 * std::numbers::pi / u.grid.length;
  long double sum = 0.0L;
  for (int mx = -n / 2; mx < n / 2; ++mx) {
    for (int my = -n / 2; my < n / 2; ++my) {
      if (mx == 0 && my == 0) continue;
      const double k2 = k1 * k1 * (double(mx) * mx + double(my) * my);
      const double m = std::norm(coefficient(u.x, n, mx, my)) + std::norm(coefficient(u.y, n, mx, my));
      long double p = 1.0L;
      for (int i = 0; i < alpha; ++i) p *= k2;
      sum += p * m;
    }
  }
  const double L = u.grid.length;
  return std::sqrt(static_cast<double>(L * L * sum));
}

// Direct O(n^2) evaluation of one normalized Fourier coefficient.
inline Complex dft_coefficient(const nudgekit::PhysicalField& f, int component, int mx, int my) {
  const int n = f.grid.n;
  Complex sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double arg = -2.0 * std::numbers::pi * (double(mx) * i + double(my) * j) / n;
      sum += f.at(component, i, j) * Complex(std::cos(arg), std::sin(arg));
    }
  return sum / double(n * n);
}

// Physical samples of a function on the collocation grid.
inline nudgekit::PhysicalField sample(const nudgekit::GridSpec& g, const std::function<double(double, double)>& fx) {
  auto f = nudgekit::PhysicalField::zeros(g, 1);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) f.at(0, i, j) = fx(i * g.length / g.n, j * g.length / g.n);
  return f;
}

}  // namespace oracle
