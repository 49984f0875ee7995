#include "nudgekit/snapshot.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "nudgekit/binary_io.hpp"
#include "nudgekit/errors.hpp"

namespace nudgekit {

namespace {

constexpr std::string_view kMagic = "NKF1";

void put_header(std::ostream& os, const GridSpec& grid, FieldKind kind) {
  binary::put_magic(os, kMagic);
  binary::put_u32(os, static_cast<std::uint32_t>(grid.n));
  binary::put_f64(os, grid.length);
  binary::put_u32(os, static_cast<std::uint32_t>(kind));
}

void put_coeffs(std::ostream& os, const ComplexBuffer& c) {
  for (const auto& z : c) {
    binary::put_f64(os, z.real());
    binary::put_f64(os, z.imag());
  }
}

void get_coeffs(std::istream& is, ComplexBuffer& c) {
  for (auto& z : c) {
    const double re = binary::get_f64(is);
    const double im = binary::get_f64(is);
    z = {re, im};
  }
}

}  // namespace

void write_snapshot(std::ostream& os, const SpectralVorticityField& w) {
  put_header(os, w.grid, FieldKind::vorticity);
  put_coeffs(os, w.coeffs);
}

void write_snapshot(std::ostream& os, const SpectralVelocityField& u) {
  put_header(os, u.grid, FieldKind::velocity);
  put_coeffs(os, u.x);
  put_coeffs(os, u.y);
}

SpectralSnapshot read_snapshot(std::istream& is) {
  binary::expect_magic(is, kMagic);
  GridSpec grid;
  grid.n = static_cast<int>(binary::get_u32(is));
  grid.length = binary::get_f64(is);
  grid.validate();
  const auto kind = static_cast<FieldKind>(binary::get_u32(is));
  switch (kind) {
    case FieldKind::vorticity: {
      auto w = ScalarSpectrum::zeros(grid);
      get_coeffs(is, w.coeffs);
      return w;
    }
    case FieldKind::velocity: {
      auto u = VectorSpectrum::zeros(grid);
      get_coeffs(is, u.x);
      get_coeffs(is, u.y);
      return u;
    }
    default:
      throw ConfigError("snapshot does not hold a spectral field");
  }
}

void save_snapshot(const std::filesystem::path& path, const SpectralVorticityField& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  write_snapshot(os, w);
}

SpectralVorticityField load_vorticity_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + path.string());
  auto snap = read_snapshot(is);
  if (auto* w = std::get_if<SpectralVorticityField>(&snap)) return std::move(*w);
  throw ConfigError(path.string() + " holds a velocity snapshot, expected vorticity");
}

}  // namespace nudgekit
