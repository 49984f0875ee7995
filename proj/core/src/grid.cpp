#include "nudgekit/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <tuple>

#include "nudgekit/errors.hpp"

namespace nudgekit {

void GridSpec::validate() const {
  if (n < 16 || n % 2 != 0)
    throw ConfigError("grid.n must be even and >= 16, got " + std::to_string(n));
  if (!(length > 0.0) || !std::isfinite(length))
    throw ConfigError("grid.length must be positive");
  if (!(dealias_fraction > 0.0 && dealias_fraction <= 1.0))
    throw ConfigError("grid.dealias_fraction must lie in (0, 1]");
}

double GridSpec::lambda1() const {
  const double k1 = 2.0 * std::numbers::pi / length;
  return k1 * k1;
}

bool survives_dealiasing(const GridSpec& grid, int mx, int my) {
  const double cutoff = grid.dealias_fraction * (grid.n / 2);
  if (grid.dealias_rule == DealiasRule::square)
    return std::max(std::abs(mx), std::abs(my)) <= cutoff;
  return std::sqrt(static_cast<double>(mx) * mx + static_cast<double>(my) * my) <= cutoff;
}

SpectralLayout::SpectralLayout(const GridSpec& grid) : grid_(grid) {
  grid_.validate();
  const int n = grid_.n;
  const int cols = columns();
  const double k1 = 2.0 * std::numbers::pi / grid_.length;

  mode_x_.resize(n);
  for (int a = 0; a < n; ++a) mode_x_[a] = a < n / 2 ? a : a - n;

  const std::size_t total = size();
  kx_.resize(total);
  ky_.resize(total);
  k2_.resize(total);
  inv_k2_.resize(total);
  weight_.resize(total);
  keep_.resize(total);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < cols; ++b) {
      const std::size_t i = index(a, b);
      const double fx = k1 * mode_x_[a];
      const double fy = k1 * b;
      const bool nyq = is_nyquist(a, b);
      kx_[i] = nyq ? 0.0 : fx;
      ky_[i] = nyq ? 0.0 : fy;
      k2_[i] = fx * fx + fy * fy;
      inv_k2_[i] = (nyq || (a == 0 && b == 0)) ? 0.0 : 1.0 / k2_[i];
      weight_[i] = (b == 0 || b == n / 2) ? 1.0 : 2.0;
      keep_[i] = survives_dealiasing(grid_, mode_x_[a], b) ? 1 : 0;
    }
  }
}

std::shared_ptr<const SpectralLayout> SpectralLayout::get(const GridSpec& grid) {
  using Key = std::tuple<int, double, double, int>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const SpectralLayout>> cache;
  const Key key{grid.n, grid.length, grid.dealias_fraction, static_cast<int>(grid.dealias_rule)};
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto layout = std::make_shared<const SpectralLayout>(grid);
  cache.emplace(key, layout);
  return layout;
}

std::size_t SpectralLayout::active_mode_count() const {
  const int n = grid_.n;
  std::size_t count = 0;
  for (int mx = -n / 2; mx < n / 2; ++mx)
    for (int my = -n / 2; my < n / 2; ++my)
      if ((mx != 0 || my != 0) && survives_dealiasing(grid_, mx, my)) ++count;
  return count;
}

}  // namespace nudgekit
