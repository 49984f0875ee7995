#include "nudgekit/fields.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nudgekit/errors.hpp"

namespace nudgekit {

namespace {

std::size_t half_size(const GridSpec& g) { return static_cast<std::size_t>(g.n) * (g.n / 2 + 1); }

ComplexBuffer combine(const ComplexBuffer& a, const ComplexBuffer& b, double sb) {
  ComplexBuffer out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + sb * b[i];
  return out;
}

ComplexBuffer scaled(const ComplexBuffer& a, double s) {
  ComplexBuffer out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return out;
}

double max_diff(const ComplexBuffer& a, const ComplexBuffer& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_mod(const ComplexBuffer& a) {
  double m = 0.0;
  for (const auto& c : a) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b))
    throw ConfigError(std::string(what) + ": grid mismatch (n=" + std::to_string(a.n) +
                      " vs n=" + std::to_string(b.n) + ")");
}

ScalarSpectrum ScalarSpectrum::zeros(const GridSpec& grid) {
  grid.validate();
  return {grid, ComplexBuffer(half_size(grid))};
}

VectorSpectrum VectorSpectrum::zeros(const GridSpec& grid) {
  grid.validate();
  return {grid, ComplexBuffer(half_size(grid)), ComplexBuffer(half_size(grid))};
}

PhysicalField PhysicalField::zeros(const GridSpec& grid, int components) {
  grid.validate();
  if (components != 1 && components != 2) throw ConfigError("physical field must have 1 or 2 components");
  return {grid, components, RealBuffer(static_cast<std::size_t>(components) * grid.n * grid.n)};
}

ScalarSpectrum operator+(const ScalarSpectrum& a, const ScalarSpectrum& b) {
  require_same_grid(a.grid, b.grid, "scalar add");
  return {a.grid, combine(a.coeffs, b.coeffs, 1.0)};
}
ScalarSpectrum operator-(const ScalarSpectrum& a, const ScalarSpectrum& b) {
  require_same_grid(a.grid, b.grid, "scalar subtract");
  return {a.grid, combine(a.coeffs, b.coeffs, -1.0)};
}
ScalarSpectrum operator*(double s, const ScalarSpectrum& a) { return {a.grid, scaled(a.coeffs, s)}; }

VectorSpectrum operator+(const VectorSpectrum& a, const VectorSpectrum& b) {
  require_same_grid(a.grid, b.grid, "vector add");
  return {a.grid, combine(a.x, b.x, 1.0), combine(a.y, b.y, 1.0)};
}
VectorSpectrum operator-(const VectorSpectrum& a, const VectorSpectrum& b) {
  require_same_grid(a.grid, b.grid, "vector subtract");
  return {a.grid, combine(a.x, b.x, -1.0), combine(a.y, b.y, -1.0)};
}
VectorSpectrum operator*(double s, const VectorSpectrum& a) {
  return {a.grid, scaled(a.x, s), scaled(a.y, s)};
}

double max_abs_difference(const ScalarSpectrum& a, const ScalarSpectrum& b) {
  require_same_grid(a.grid, b.grid, "difference");
  return max_diff(a.coeffs, b.coeffs);
}
double max_abs_difference(const VectorSpectrum& a, const VectorSpectrum& b) {
  require_same_grid(a.grid, b.grid, "difference");
  return std::max(max_diff(a.x, b.x), max_diff(a.y, b.y));
}
double max_abs(const ScalarSpectrum& a) { return max_mod(a.coeffs); }
double max_abs(const VectorSpectrum& a) { return std::max(max_mod(a.x), max_mod(a.y)); }

bool all_finite(const ScalarSpectrum& a) {
  return std::all_of(a.coeffs.begin(), a.coeffs.end(),
                     [](const Complex& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
}

bool all_finite(const PhysicalField& f) {
  return std::all_of(f.values.begin(), f.values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace nudgekit
