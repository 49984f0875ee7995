#pragma once

#include <cstddef>
#include <memory>
#include <numbers>
#include <vector>

namespace nudgekit {

enum class DealiasRule { square, circular };

/// Periodic n x n collocation grid on [0, length)^2.
struct GridSpec {
  int n = 128;
  double length = 2.0 * std::numbers::pi;
  double dealias_fraction = 2.0 / 3.0;
  DealiasRule dealias_rule = DealiasRule::square;

  /// Throws ConfigError unless n is even and >= 16, length > 0 and the
  /// dealias fraction lies in (0, 1].
  void validate() const;

  /// Lowest nonzero eigenvalue of the Stokes operator, (2 pi / L)^2.
  double lambda1() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Wavenumber tables for the half-spectrum layout produced by a real-to-complex
/// transform: rows a = 0..n-1 hold m_x in FFT order, columns b = 0..n/2 hold
/// m_y >= 0. The missing m_y < 0 half follows from Hermitian symmetry.
class SpectralLayout {
 public:
  explicit SpectralLayout(const GridSpec& grid);

  /// Shared immutable layout for a grid; safe to call from any thread.
  static std::shared_ptr<const SpectralLayout> get(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  int n() const { return grid_.n; }
  int columns() const { return grid_.n / 2 + 1; }
  std::size_t size() const { return static_cast<std::size_t>(grid_.n) * columns(); }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * columns() + col;
  }

  /// Signed integer wavenumber of a row (FFT order, n/2 maps to -n/2).
  int mode_x(int row) const { return mode_x_[row]; }
  int mode_y(int col) const { return col; }
  bool is_nyquist(int row, int col) const { return row == n() / 2 || col == n() / 2; }

  /// Physical wavenumbers 2 pi m / L used by derivatives; zero on Nyquist rows/columns.
  const std::vector<double>& kx() const { return kx_; }
  const std::vector<double>& ky() const { return ky_; }
  /// |k|^2 per stored coefficient.
  const std::vector<double>& k2() const { return k2_; }
  /// 1/|k|^2, zero at k = 0 and on Nyquist modes.
  const std::vector<double>& inv_k2() const { return inv_k2_; }
  /// Multiplicity of each stored coefficient in the full Fourier sum (1 or 2).
  const std::vector<double>& weight() const { return weight_; }
  /// True where a coefficient survives dealiasing.
  const std::vector<unsigned char>& dealias_mask() const { return keep_; }

  /// Row of the conjugate partner of (row, 0) or (row, n/2).
  int mirror_row(int row) const { return row == 0 ? 0 : n() - row; }

  /// Number of nonzero full-plane Fourier modes kept by dealiasing.
  std::size_t active_mode_count() const;

 private:
  GridSpec grid_;
  std::vector<int> mode_x_;
  std::vector<double> kx_, ky_, k2_, inv_k2_, weight_;
  std::vector<unsigned char> keep_;
};

/// Whether integer mode (mx, my) survives the grid's dealiasing rule.
bool survives_dealiasing(const GridSpec& grid, int mx, int my);

}  // namespace nudgekit
