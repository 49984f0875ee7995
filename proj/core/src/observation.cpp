#include "nudgekit/observation.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "nudgekit/binary_io.hpp"
#include "nudgekit/csv.hpp"
#include "nudgekit/errors.hpp"
#include "nudgekit/random_fields.hpp"
#include "nudgekit/snapshot.hpp"
#include "nudgekit/spectral_ops.hpp"

namespace nudgekit {

void ObservationGeometry::validate() const {
  grid.validate();
  if (points_per_side < 1 || points_per_side > grid.n)
    throw ConfigError("observation.points_per_side must lie in [1, n]");
  const int r2 = effective_radius_sq();
  const int r = static_cast<int>(std::floor(std::sqrt(static_cast<double>(r2))));
  if (2 * r + 1 > grid.n) throw ConfigError("observation ball wider than the grid");
}

int ObservationGeometry::effective_radius_sq() const {
  if (radius_sq >= 0) return radius_sq;
  const double s = grid.n / 512.0;
  return static_cast<int>(std::lround(24.0 * s * s));
}

double ObservationGeometry::h() const { return grid.length / points_per_side; }

int ObservationGeometry::center_index(int s) const {
  // floor(x n / L + 0.5) with x n / L = (2 s + 1) n / (2 pps), in exact integer arithmetic
  const long long num = static_cast<long long>(2 * s + 1) * grid.n + points_per_side;
  return static_cast<int>(num / (2LL * points_per_side)) % grid.n;
}

std::array<int, 2> ObservationGeometry::center(int i) const {
  return {center_index(i / points_per_side), center_index(i % points_per_side)};
}

std::array<double, 2> ObservationGeometry::center_position(int i) const {
  const auto p = center(i);
  return {p[0] * grid.length / grid.n, p[1] * grid.length / grid.n};
}

int ObservationGeometry::cell_of(int j) const {
  return static_cast<int>(static_cast<long long>(j) * points_per_side / grid.n);
}

std::array<int, 2> ObservationGeometry::cell_range(int s) const {
  auto first = [this](int c) {
    return static_cast<int>((static_cast<long long>(c) * grid.n + points_per_side - 1) / points_per_side);
  };
  return {first(s), first(s + 1)};
}

std::vector<std::array<int, 2>> ObservationGeometry::ball_offsets() const {
  const int r2 = effective_radius_sq();
  const int r = static_cast<int>(std::floor(std::sqrt(static_cast<double>(r2))));
  std::vector<std::array<int, 2>> out;
  for (int dx = -r; dx <= r; ++dx)
    for (int dy = -r; dy <= r; ++dy)
      if (dx * dx + dy * dy <= r2) out.push_back({dx, dy});
  return out;
}

int ObservationGeometry::stencil_size() const {
  if (averaging == Averaging::ball) return static_cast<int>(ball_offsets().size());
  // squares differ in size by at most one row/column; report the first
  const auto r = cell_range(0);
  return (r[1] - r[0]) * (r[1] - r[0]);
}

double ObservationGeometry::coverage() const {
  if (averaging == Averaging::square) return 1.0;
  return static_cast<double>(count()) * stencil_size() / (static_cast<double>(grid.n) * grid.n);
}

ObservationGeometry standard_geometry(const GridSpec& grid) {
  ObservationGeometry g;
  g.grid = grid;
  return g;
}

InterpolantConfig standard_interpolant(const GridSpec& grid) {
  InterpolantConfig c;
  c.geometry = standard_geometry(grid);
  return c;
}

void InterpolantConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("observation.lambda must be positive");
  geometry.validate();
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

const std::vector<std::string> kObsColumns = {"i", "cx", "cy", "ux", "uy", "t"};

void check_positions(const ObservationGeometry& g, int i, double cx, double cy) {
  const auto p = g.center_position(i);
  const double tol = 1e-12 * g.grid.length;
  if (std::abs(p[0] - cx) > tol || std::abs(p[1] - cy) > tol)
    throw ConfigError("observation center " + std::to_string(i) + " does not match the geometry");
}

}  // namespace

void write_observation_csv(std::ostream& os, const ObservationVector& obs) {
  csv::write_header(os, kObsColumns);
  for (int i = 0; i < static_cast<int>(obs.values.size()); ++i) {
    const auto c = obs.geometry.center_position(i);
    os << i;
    for (double v : {c[0], c[1], obs.values[i][0], obs.values[i][1], obs.timestamp}) os << ',' << csv::number(v);
    os << '\n';
  }
}

ObservationVector read_observation_csv(std::istream& is, const ObservationGeometry& geometry) {
  geometry.validate();
  csv::expect_header(is, kObsColumns);
  ObservationVector obs{geometry, {}, 0.0};
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != kObsColumns.size()) throw ConfigError("observation row has wrong field count");
    const auto i = csv::parse_int(f[0], "observation index");
    if (i != static_cast<long long>(obs.values.size())) throw ConfigError("observation rows out of order");
    if (i >= geometry.count()) throw ConfigError("more observation rows than centers");
    check_positions(geometry, static_cast<int>(i), csv::parse_double(f[1], "cx"), csv::parse_double(f[2], "cy"));
    obs.values.push_back({csv::parse_double(f[3], "ux"), csv::parse_double(f[4], "uy")});
    const double t = csv::parse_double(f[5], "t");
    if (i > 0 && t != obs.timestamp) throw ConfigError("observation rows disagree on the timestamp");
    obs.timestamp = t;
  }
  if (static_cast<int>(obs.values.size()) != geometry.count())
    throw ConfigError("observation csv has " + std::to_string(obs.values.size()) + " rows, expected " +
                      std::to_string(geometry.count()));
  return obs;
}

void write_observation_snapshot(std::ostream& os, const ObservationVector& obs) {
  const auto& g = obs.geometry;
  binary::put_magic(os, "NKF1");
  binary::put_u32(os, static_cast<std::uint32_t>(g.grid.n));
  binary::put_f64(os, g.grid.length);
  binary::put_u32(os, static_cast<std::uint32_t>(FieldKind::observation));
  binary::put_u32(os, static_cast<std::uint32_t>(g.points_per_side));
  binary::put_u32(os, static_cast<std::uint32_t>(g.effective_radius_sq()));
  binary::put_u32(os, static_cast<std::uint32_t>(g.averaging));
  binary::put_f64(os, obs.timestamp);
  binary::put_u32(os, static_cast<std::uint32_t>(obs.values.size()));
  for (int i = 0; i < static_cast<int>(obs.values.size()); ++i) {
    const auto c = g.center_position(i);
    for (double v : {c[0], c[1], obs.values[i][0], obs.values[i][1]}) binary::put_f64(os, v);
  }
}

ObservationVector read_observation_snapshot(std::istream& is) {
  binary::expect_magic(is, "NKF1");
  ObservationVector obs;
  auto& g = obs.geometry;
  g.grid.n = static_cast<int>(binary::get_u32(is));
  g.grid.length = binary::get_f64(is);
  if (binary::get_u32(is) != static_cast<std::uint32_t>(FieldKind::observation))
    throw ConfigError("snapshot does not hold an observation vector");
  g.points_per_side = static_cast<int>(binary::get_u32(is));
  g.radius_sq = static_cast<int>(binary::get_u32(is));
  const auto avg = binary::get_u32(is);
  if (avg > 1) throw ConfigError("unknown averaging mode in observation snapshot");
  g.averaging = static_cast<Averaging>(avg);
  g.validate();
  obs.timestamp = binary::get_f64(is);
  const auto count = binary::get_u32(is);
  if (static_cast<int>(count) != g.count()) throw ConfigError("observation snapshot count mismatch");
  obs.values.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const double cx = binary::get_f64(is), cy = binary::get_f64(is);
    check_positions(g, static_cast<int>(i), cx, cy);
    obs.values[i][0] = binary::get_f64(is);
    obs.values[i][1] = binary::get_f64(is);
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Interpolant

Interpolant::Interpolant(InterpolantConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& g = config_.geometry;
  layout_ = SpectralLayout::get(g.grid);
  offsets_ = g.ball_offsets();

  const int n = g.grid.n, cols = layout_->columns(), pps = g.points_per_side;
  std::vector<Complex> roots(n);
  for (int k = 0; k < n; ++k) roots[k] = std::polar(1.0, -2.0 * std::numbers::pi * k / n);
  auto square_sum = [&](int s, int m) {
    const auto r = g.cell_range(s);
    Complex sum = 0.0;
    const int mm = ((m % n) + n) % n;
    for (int j = r[0]; j < r[1]; ++j) sum += roots[static_cast<std::size_t>(mm) * j % n];
    return sum;
  };

  // Only rows/columns that can carry a mode with |k|^2 <= lambda are needed.
  const double k1 = 2.0 * std::numbers::pi / g.grid.length;
  const int mmax = std::min(n / 2, static_cast<int>(std::floor(std::sqrt(config_.lambda) / k1)) + 1);
  band_cols_ = std::min(cols, mmax + 1);
  col_sums_.resize(static_cast<std::size_t>(pps) * band_cols_);
  row_sums_.resize(static_cast<std::size_t>(pps) * n);
  for (int s = 0; s < pps; ++s) {
    for (int b = 0; b < band_cols_; ++b) col_sums_[static_cast<std::size_t>(s) * band_cols_ + b] = square_sum(s, b);
    for (int a = 0; a < n; ++a) {
      const int m = layout_->mode_x(a);
      row_sums_[static_cast<std::size_t>(s) * n + a] = std::abs(m) <= mmax ? square_sum(s, m) : Complex(0.0);
    }
  }

  const auto& k2 = layout_->k2();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < band_cols_; ++b) {
      const std::size_t idx = layout_->index(a, b);
      if (layout_->is_nyquist(a, b) || k2[idx] == 0.0 || k2[idx] > config_.lambda) continue;
      band_.push_back(idx);
    }
}

ObservationVector Interpolant::observe(const PhysicalField& velocity, double timestamp) const {
  const auto& g = config_.geometry;
  require_same_grid(velocity.grid, g.grid, "observe");
  if (velocity.components != 2) throw ConfigError("observe needs a 2-component velocity field");
  ObservationVector obs{g, std::vector<std::array<double, 2>>(g.count()), timestamp};
  const int n = g.grid.n;
  const double* ux = velocity.component(0);
  const double* uy = velocity.component(1);
  auto at = [n](int i, int j) { return static_cast<std::size_t>(i) * n + j; };
  for (int c = 0; c < g.count(); ++c) {
    double sx = 0.0, sy = 0.0;
    int count = 0;
    if (g.averaging == Averaging::ball) {
      const auto p = g.center(c);
      for (const auto& o : offsets_) {
        const int i = (p[0] + o[0] + n) % n, j = (p[1] + o[1] + n) % n;
        sx += ux[at(i, j)];
        sy += uy[at(i, j)];
      }
      count = static_cast<int>(offsets_.size());
    } else {
      const auto rx = g.cell_range(c / g.points_per_side), ry = g.cell_range(c % g.points_per_side);
      for (int i = rx[0]; i < rx[1]; ++i)
        for (int j = ry[0]; j < ry[1]; ++j) {
          sx += ux[at(i, j)];
          sy += uy[at(i, j)];
        }
      count = (rx[1] - rx[0]) * (ry[1] - ry[0]);
    }
    obs.values[c] = {sx / count, sy / count};
  }
  return obs;
}

PhysicalField Interpolant::interpolate(const ObservationVector& obs) const {
  const auto& g = config_.geometry;
  if (!(obs.geometry == g)) throw ConfigError("interpolate: observation geometry mismatch");
  if (static_cast<int>(obs.values.size()) != g.count()) throw ConfigError("interpolate: wrong observation count");
  auto f = PhysicalField::zeros(g.grid, 2);
  const int n = g.grid.n, pps = g.points_per_side;
  for (int i = 0; i < n; ++i) {
    const int s1 = g.cell_of(i);
    for (int j = 0; j < n; ++j) {
      const auto& v = obs.values[static_cast<std::size_t>(s1) * pps + g.cell_of(j)];
      f.at(0, i, j) = v[0];
      f.at(1, i, j) = v[1];
    }
  }
  return f;
}

void Interpolant::smooth_band(const ObservationVector& obs, Complex* bx, Complex* by) const {
  const auto& g = config_.geometry;
  if (!(obs.geometry == g)) throw ConfigError("smooth: observation geometry mismatch");
  if (static_cast<int>(obs.values.size()) != g.count()) throw ConfigError("smooth: wrong observation count");
  const int n = g.grid.n, pps = g.points_per_side;

  // t[c][s1][b] = sum_{s2} U_c(s1, s2) S[s2][b]
  std::vector<Complex> tx(static_cast<std::size_t>(pps) * band_cols_), ty(tx.size());
  for (int s1 = 0; s1 < pps; ++s1)
    for (int b = 0; b < band_cols_; ++b) {
      Complex ax = 0.0, ay = 0.0;
      for (int s2 = 0; s2 < pps; ++s2) {
        const auto& v = obs.values[static_cast<std::size_t>(s1) * pps + s2];
        const Complex s = col_sums_[static_cast<std::size_t>(s2) * band_cols_ + b];
        ax += v[0] * s;
        ay += v[1] * s;
      }
      tx[static_cast<std::size_t>(s1) * band_cols_ + b] = ax;
      ty[static_cast<std::size_t>(s1) * band_cols_ + b] = ay;
    }

  const double norm = 1.0 / (static_cast<double>(n) * n);
  const auto& kx = layout_->kx();
  const auto& ky = layout_->ky();
  const auto& k2 = layout_->k2();
  const int cols = layout_->columns();
  for (std::size_t q = 0; q < band_.size(); ++q) {
    const std::size_t idx = band_[q];
    const int a = static_cast<int>(idx / cols), b = static_cast<int>(idx % cols);
    Complex cx = 0.0, cy = 0.0;
    for (int s1 = 0; s1 < pps; ++s1) {
      const Complex r = row_sums_[static_cast<std::size_t>(s1) * n + a];
      cx += r * tx[static_cast<std::size_t>(s1) * band_cols_ + b];
      cy += r * ty[static_cast<std::size_t>(s1) * band_cols_ + b];
    }
    cx *= norm;
    cy *= norm;
    const Complex kdotu = (kx[idx] * cx + ky[idx] * cy) / k2[idx];
    bx[q] = cx - kx[idx] * kdotu;
    by[q] = cy - ky[idx] * kdotu;
  }
}

SpectralVelocityField Interpolant::smooth(const ObservationVector& obs) const {
  std::vector<Complex> bx(band_.size()), by(band_.size());
  smooth_band(obs, bx.data(), by.data());
  auto u = VectorSpectrum::zeros(config_.geometry.grid);
  for (std::size_t q = 0; q < band_.size(); ++q) {
    u.x[band_[q]] = bx[q];
    u.y[band_[q]] = by[q];
  }
  return u;
}

std::vector<Complex> Interpolant::smooth_vorticity_band(const ObservationVector& obs) const {
  std::vector<Complex> bx(band_.size()), by(band_.size());
  smooth_band(obs, bx.data(), by.data());
  const auto& kx = layout_->kx();
  const auto& ky = layout_->ky();
  for (std::size_t q = 0; q < band_.size(); ++q) {
    const std::size_t idx = band_[q];
    bx[q] = Complex(0.0, 1.0) * (kx[idx] * by[q] - ky[idx] * bx[q]);
  }
  return bx;
}

SpectralVorticityField Interpolant::expand_band(const std::vector<Complex>& band_coeffs) const {
  if (band_coeffs.size() != band_.size()) throw ConfigError("band coefficient count mismatch");
  auto w = ScalarSpectrum::zeros(config_.geometry.grid);
  for (std::size_t q = 0; q < band_.size(); ++q) w.coeffs[band_[q]] = band_coeffs[q];
  return w;
}

SpectralVelocityField Interpolant::apply(const PhysicalField& velocity) const { return smooth(observe(velocity)); }

SpectralVelocityField Interpolant::apply(const SpectralVelocityField& u) const {
  return apply(inverse_transform(u));
}

SpectralVorticityField Interpolant::apply_to_vorticity(const SpectralVorticityField& w) const {
  return vorticity_from_velocity(apply(velocity_from_vorticity(w)));
}

ObservationVector observe(const PhysicalField& velocity, const ObservationGeometry& geometry, double timestamp) {
  InterpolantConfig c;
  c.geometry = geometry;
  return Interpolant(c).observe(velocity, timestamp);
}

PhysicalField interpolate(const ObservationVector& obs) {
  InterpolantConfig c;
  c.geometry = obs.geometry;
  return Interpolant(c).interpolate(obs);
}

ScalarSpectrum spectral_filter(const ScalarSpectrum& c, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("spectral filter needs lambda > 0");
  auto layout = SpectralLayout::get(c.grid);
  const auto& k2 = layout->k2();
  ScalarSpectrum out = c;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i)
    if (k2[i] == 0.0 || k2[i] > lambda) out.coeffs[i] = 0.0;
  return out;
}

VectorSpectrum spectral_filter(const VectorSpectrum& c, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("spectral filter needs lambda > 0");
  auto layout = SpectralLayout::get(c.grid);
  const auto& k2 = layout->k2();
  VectorSpectrum out = c;
  for (std::size_t i = 0; i < out.x.size(); ++i)
    if (k2[i] == 0.0 || k2[i] > lambda) out.x[i] = out.y[i] = 0.0;
  return out;
}

SpectralVelocityField apply_J(const SpectralVelocityField& u, const InterpolantConfig& config) {
  return Interpolant(config).apply(u);
}

SpectralVelocityField apply_J(const PhysicalField& velocity, const InterpolantConfig& config) {
  return Interpolant(config).apply(velocity);
}

SpectralVelocityField project_interpolant(const Interpolant& interp, const SpectralVelocityField& u) {
  return leray_project(transform_vector(interp.interpolate(interp.observe(inverse_transform(u)))));
}

Type1Estimate estimate_type1_constant(const std::vector<SpectralVelocityField>& samples,
                                      const InterpolantConfig& config) {
  Interpolant interp(config);
  Type1Estimate est;
  for (const auto& u : samples) {
    const double h1 = sobolev_norm(u, 1);
    if (!(h1 > 0.0)) {
      ++est.skipped;
      continue;
    }
    const double r = sobolev_norm(u - project_interpolant(interp, u), 0) / (config.h() * h1);
    est.ratios.push_back(r);
    est.ratio = std::max(est.ratio, r);
    ++est.samples;
  }
  est.c1 = est.ratio * est.ratio;
  return est;
}

Type1Estimate estimate_type1_constant(int sample_count, const InterpolantConfig& config, std::uint64_t seed,
                                      int kmax) {
  if (sample_count < 1) throw ConfigError("type-I estimate needs at least one sample");
  std::vector<SpectralVelocityField> samples;
  samples.reserve(sample_count);
  for (int s = 0; s < sample_count; ++s) {
    CounterRng rng(seed, static_cast<std::uint64_t>(s));
    samples.push_back(random_velocity(config.geometry.grid, kmax, rng, 2.0));
  }
  return estimate_type1_constant(samples, config);
}

JConstants j_constants(double c1, const InterpolantConfig& config) {
  const double h = config.h(), lambda = config.lambda;
  JConstants c;
  c.interp_sq = 1.0 / lambda + c1 * h * h;
  c.c2 = std::sqrt(c.interp_sq) + 1.0 / std::sqrt(config.geometry.grid.lambda1());
  c.c3 = std::sqrt(1.0 + lambda * c1 * h * h) + 1.0;
  return c;
}

}  // namespace nudgekit
