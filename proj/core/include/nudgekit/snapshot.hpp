#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <variant>

#include "nudgekit/fields.hpp"

namespace nudgekit {

/// Field kind tag stored in the snapshot header.
enum class FieldKind : std::uint32_t { vorticity = 1, velocity = 2, observation = 3 };

// Snapshot layout (all little-endian):
//   "NKF1" | n : u32 | L : f64 | kind : u32 | payload
// Spectral payloads are the half-spectrum coefficients in row-major order
// (row = m_x in FFT order, column = m_y = 0..n/2), each as (re, im) f64 pairs.
// Velocity payloads hold the x component array followed by the y array.

void write_snapshot(std::ostream& os, const SpectralVorticityField& w);
void write_snapshot(std::ostream& os, const SpectralVelocityField& u);

using SpectralSnapshot = std::variant<SpectralVorticityField, SpectralVelocityField>;

/// Reads a vorticity or velocity snapshot. The returned grid carries the
/// stored n and L with default dealiasing settings.
SpectralSnapshot read_snapshot(std::istream& is);

void save_snapshot(const std::filesystem::path& path, const SpectralVorticityField& w);
SpectralVorticityField load_vorticity_snapshot(const std::filesystem::path& path);

}  // namespace nudgekit
