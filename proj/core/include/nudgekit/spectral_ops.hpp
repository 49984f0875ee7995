#pragma once

#include "nudgekit/fields.hpp"

namespace nudgekit {

// Transforms. Mismatched physical/spectral sizes raise ConfigError.
ScalarSpectrum transform(const PhysicalField& scalar);
VectorSpectrum transform_vector(const PhysicalField& vector);
PhysicalField inverse_transform(const ScalarSpectrum& spectrum);
PhysicalField inverse_transform(const VectorSpectrum& spectrum);

/// Orthogonal projection onto divergence-free, zero-mean fields:
/// u_k -> (I - k k^T / |k|^2) u_k, u_0 -> 0. Nyquist rows/columns, whose
/// wavenumber sign is ambiguous on an even grid, are dropped.
VectorSpectrum leray_project(const VectorSpectrum& v);

/// ||u||_alpha = (L^2 sum_k |k|^(2 alpha) |u_k|^2)^(1/2), alpha in {0,1,2,3}.
double sobolev_norm(const VectorSpectrum& u, int alpha);
/// ((u, v))_alpha, same weighting (real part; the imaginary part vanishes for real fields).
double sobolev_inner(const VectorSpectrum& u, const VectorSpectrum& v, int alpha);
/// ||u||_alpha of the velocity induced by a vorticity field, without materializing it.
double velocity_norm(const SpectralVorticityField& w, int alpha);

/// Biot-Savart: u_k = i k_perp w_k / |k|^2 with k_perp = (k_y, -k_x).
SpectralVelocityField velocity_from_vorticity(const SpectralVorticityField& w);
/// w_k = i (k_x v_k - k_y u_k).
SpectralVorticityField vorticity_from_velocity(const SpectralVelocityField& u);

/// Zeroes every coefficient removed by the grid's dealiasing rule.
ScalarSpectrum dealias(const ScalarSpectrum& c);
VectorSpectrum dealias(const VectorSpectrum& c);
void dealias_in_place(ScalarSpectrum& c);

/// Largest relative violation of c(-k) = conj(c(k)) (including realness of self-conjugate modes).
double hermitian_defect(const ScalarSpectrum& c);
double hermitian_defect(const VectorSpectrum& c);
bool is_hermitian(const ScalarSpectrum& c, double rel_tol = 1e-12);
bool is_hermitian(const VectorSpectrum& c, double rel_tol = 1e-12);
/// Overwrites the redundant halves of the b = 0 and b = n/2 columns with the
/// conjugates of their partners and makes self-conjugate modes real.
void enforce_hermitian(ScalarSpectrum& c);

/// max_k |k.u_k| / |u_k| over nonzero coefficients.
double divergence_defect(const VectorSpectrum& u);

}  // namespace nudgekit
