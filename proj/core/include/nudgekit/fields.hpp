#pragma once

#include <cstddef>

#include "nudgekit/aligned.hpp"
#include "nudgekit/grid.hpp"

namespace nudgekit {

/// Fourier coefficients of a real scalar field in half-spectrum layout
/// (see SpectralLayout). Coefficients follow f(x) = sum_k f_k exp(i k.x).
struct ScalarSpectrum {
  GridSpec grid;
  ComplexBuffer coeffs;

  static ScalarSpectrum zeros(const GridSpec& grid);
};

/// Fourier coefficients of a real 2-vector field; one half-spectrum per component.
struct VectorSpectrum {
  GridSpec grid;
  ComplexBuffer x;
  ComplexBuffer y;

  static VectorSpectrum zeros(const GridSpec& grid);
};

/// Scalar vorticity; zero mean and Hermitian symmetric.
using SpectralVorticityField = ScalarSpectrum;
/// Velocity; additionally divergence-free.
using SpectralVelocityField = VectorSpectrum;

/// Real values on the n x n collocation grid. Point (i, j) sits at
/// (i L / n, j L / n); storage is component-major then row-major in i.
struct PhysicalField {
  GridSpec grid;
  int components = 1;
  RealBuffer values;

  static PhysicalField zeros(const GridSpec& grid, int components);

  std::size_t points() const { return static_cast<std::size_t>(grid.n) * grid.n; }
  double* component(int c) { return values.data() + c * points(); }
  const double* component(int c) const { return values.data() + c * points(); }
  double& at(int c, int i, int j) { return values[c * points() + static_cast<std::size_t>(i) * grid.n + j]; }
  double at(int c, int i, int j) const {
    return values[c * points() + static_cast<std::size_t>(i) * grid.n + j];
  }
};

// Coefficient-wise linear algebra; grids must match.
ScalarSpectrum operator+(const ScalarSpectrum& a, const ScalarSpectrum& b);
ScalarSpectrum operator-(const ScalarSpectrum& a, const ScalarSpectrum& b);
ScalarSpectrum operator*(double s, const ScalarSpectrum& a);
VectorSpectrum operator+(const VectorSpectrum& a, const VectorSpectrum& b);
VectorSpectrum operator-(const VectorSpectrum& a, const VectorSpectrum& b);
VectorSpectrum operator*(double s, const VectorSpectrum& a);

/// Largest coefficient modulus difference; grids must match.
double max_abs_difference(const ScalarSpectrum& a, const ScalarSpectrum& b);
double max_abs_difference(const VectorSpectrum& a, const VectorSpectrum& b);
double max_abs(const ScalarSpectrum& a);
double max_abs(const VectorSpectrum& a);

bool all_finite(const ScalarSpectrum& a);
bool all_finite(const PhysicalField& f);

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

}  // namespace nudgekit
