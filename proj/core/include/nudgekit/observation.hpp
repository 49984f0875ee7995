#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <vector>

#include "nudgekit/fields.hpp"

namespace nudgekit {

/// How a center's measurement is formed from grid values.
enum class Averaging {
  ball,    // mean over lattice points within radius_sq of the center
  square,  // mean over the whole interpolation square (consistency mode)
};

/// points_per_side^2 observation centers on the periodic grid. Center (s1, s2)
/// sits at x = ((2 s1 + 1), (2 s2 + 1)) L / (2 points_per_side), snapped to the
/// nearest grid index p = floor(x n / L + 0.5). Centers are numbered
/// i = s1 * points_per_side + s2.
///
/// Interpolation squares are the cells of the partition
/// s(j) = floor(j points_per_side / n) along each axis, i.e. half-open with the
/// lower-left edge included. Each square has side L / points_per_side and is
/// centered at x.
struct ObservationGeometry {
  GridSpec grid;
  int points_per_side = 9;
  int radius_sq = -1;  // negative: round(24 (n / 512)^2)
  Averaging averaging = Averaging::ball;

  void validate() const;

  int count() const { return points_per_side * points_per_side; }
  int effective_radius_sq() const;
  /// Observation length scale: the square side L / points_per_side.
  double h() const;

  int center_index(int s) const;
  std::array<int, 2> center(int i) const;
  /// Physical coordinates of the snapped center, p L / n.
  std::array<double, 2> center_position(int i) const;

  /// Square that grid index j falls into along one axis.
  int cell_of(int j) const;
  /// Grid indices [first, last) of square s along one axis.
  std::array<int, 2> cell_range(int s) const;

  /// Lattice offsets (dx, dy) with dx^2 + dy^2 <= radius_sq.
  std::vector<std::array<int, 2>> ball_offsets() const;
  /// Number of grid points averaged for one center.
  int stencil_size() const;
  /// Fraction of the grid covered by all stencils (overlaps counted twice).
  double coverage() const;

  /// Equal when every derived quantity agrees (an automatic radius equals its explicit value).
  friend bool operator==(const ObservationGeometry& a, const ObservationGeometry& b) {
    return a.grid == b.grid && a.points_per_side == b.points_per_side &&
           a.effective_radius_sq() == b.effective_radius_sq() && a.averaging == b.averaging;
  }
};

/// Default 9 x 9 layout for a grid.
ObservationGeometry standard_geometry(const GridSpec& grid);

/// One averaged velocity per center, in center order.
struct ObservationVector {
  ObservationGeometry geometry;
  std::vector<std::array<double, 2>> values;
  double timestamp = 0.0;
};

/// CSV with header i,cx,cy,ux,uy,t; one row per center.
void write_observation_csv(std::ostream& os, const ObservationVector& obs);
/// Reads rows written by write_observation_csv. Center count and positions
/// must match `geometry`.
ObservationVector read_observation_csv(std::istream& is, const ObservationGeometry& geometry);

// Binary container (field kind 3). After the common header the payload is
//   points_per_side : u32 | radius_sq : u32 | averaging : u32 | t : f64 |
//   count : u32 | count x (cx, cy, ux, uy) : f64
void write_observation_snapshot(std::ostream& os, const ObservationVector& obs);
ObservationVector read_observation_snapshot(std::istream& is);

/// Parameters of J = P_lambda P_H I_h.
struct InterpolantConfig {
  double lambda = 81.0;  // filter keeps 0 < |k|^2 <= lambda
  ObservationGeometry geometry;

  void validate() const;
  double h() const { return geometry.h(); }
};

InterpolantConfig standard_interpolant(const GridSpec& grid);

/// Precomputed stencils and separable square sums for one configuration.
/// Immutable after construction and safe to share between threads.
class Interpolant {
 public:
  explicit Interpolant(InterpolantConfig config);

  const InterpolantConfig& config() const { return config_; }
  const ObservationGeometry& geometry() const { return config_.geometry; }

  /// Mean of u over each stencil, with periodic wraparound.
  ObservationVector observe(const PhysicalField& velocity, double timestamp = 0.0) const;
  /// Piecewise-constant field sum_i U_i chi_i.
  PhysicalField interpolate(const ObservationVector& obs) const;
  /// P_lambda P_H of the interpolated field, evaluated mode by mode from
  /// closed square sums; equal to filtering the transform of interpolate().
  SpectralVelocityField smooth(const ObservationVector& obs) const;

  /// J u.
  SpectralVelocityField apply(const PhysicalField& velocity) const;
  SpectralVelocityField apply(const SpectralVelocityField& u) const;
  /// Vorticity of J u for a state given as vorticity.
  SpectralVorticityField apply_to_vorticity(const SpectralVorticityField& w) const;

  /// Stored coefficients that J can populate (0 < |k|^2 <= lambda, no Nyquist).
  const std::vector<std::size_t>& band() const { return band_; }
  /// Vorticity of smooth(obs) on band() only; everything else is zero.
  std::vector<Complex> smooth_vorticity_band(const ObservationVector& obs) const;
  /// Expands band coefficients into a full vorticity spectrum.
  SpectralVorticityField expand_band(const std::vector<Complex>& band_coeffs) const;

 private:
  void smooth_band(const ObservationVector& obs, Complex* bx, Complex* by) const;

  InterpolantConfig config_;
  std::shared_ptr<const SpectralLayout> layout_;
  std::vector<std::array<int, 2>> offsets_;
  // Square sums S[s][m] = sum_{j in square s} exp(-2 pi i m j / n), indexed
  // by stored row (x) and column (y).
  std::vector<Complex> row_sums_, col_sums_;
  // Stored coefficients kept by the filter (nonzero, non-Nyquist, |k|^2 <= lambda).
  std::vector<std::size_t> band_;
  int band_cols_ = 0;
};

ObservationVector observe(const PhysicalField& velocity, const ObservationGeometry& geometry, double timestamp = 0.0);
PhysicalField interpolate(const ObservationVector& obs);

/// Keeps modes with 0 < |k|^2 <= lambda.
ScalarSpectrum spectral_filter(const ScalarSpectrum& c, double lambda);
VectorSpectrum spectral_filter(const VectorSpectrum& c, double lambda);

/// P_lambda P_H I_h applied to a velocity field.
SpectralVelocityField apply_J(const SpectralVelocityField& u, const InterpolantConfig& config);
SpectralVelocityField apply_J(const PhysicalField& velocity, const InterpolantConfig& config);

/// P_H of the interpolated observations, without the spectral filter.
SpectralVelocityField project_interpolant(const Interpolant& interp, const SpectralVelocityField& u);

/// Empirical type-I constant: max over samples of |U - P_H I_h U| / (h ||U||).
struct Type1Estimate {
  double ratio = 0.0;  // estimate of c1^(1/2)
  double c1 = 0.0;     // ratio^2
  int samples = 0;     // samples that contributed
  int skipped = 0;     // samples with ||U|| = 0
  std::vector<double> ratios;
};

Type1Estimate estimate_type1_constant(const std::vector<SpectralVelocityField>& samples,
                                      const InterpolantConfig& config);

/// Random band-limited divergence-free samples (|m| <= kmax, smoothness 2).
Type1Estimate estimate_type1_constant(int sample_count, const InterpolantConfig& config, std::uint64_t seed,
                                      int kmax = 16);

/// Constants of the continuity bounds |JU| <= c2 ||U|| and ||JU|| <= c3 ||U||.
struct JConstants {
  double c2 = 0.0;
  double c3 = 0.0;
  double interp_sq = 0.0;  // 1/lambda + c1 h^2
};
JConstants j_constants(double c1, const InterpolantConfig& config);

}  // namespace nudgekit
