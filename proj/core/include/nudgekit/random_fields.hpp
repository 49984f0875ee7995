#pragma once

#include "nudgekit/fields.hpp"
#include "nudgekit/rng.hpp"

namespace nudgekit {

/// Random-phase vorticity whose energy spectrum is proportional to
/// k exp(-(k/peak)^2), dealiased and scaled so that |u| = target_l2.
SpectralVorticityField random_vorticity(const GridSpec& grid, double peak, double target_l2, CounterRng& rng);

/// Divergence-free, zero-mean velocity with independent Gaussian coefficients
/// on |m_x|, |m_y| <= kmax, damped by (1 + |k|^2)^(-smoothness / 2).
SpectralVelocityField random_velocity(const GridSpec& grid, int kmax, CounterRng& rng, double smoothness = 0.0);

/// Independent standard normal values at every grid point.
PhysicalField random_physical(const GridSpec& grid, int components, CounterRng& rng);

}  // namespace nudgekit
