#include "nudgekit/fft.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "nudgekit/errors.hpp"

namespace nudgekit {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlannerSettings {
  FftPlanner planner = FftPlanner::estimate;
  std::filesystem::path wisdom;
};

PlannerSettings& settings() {
  static PlannerSettings s;
  return s;
}
}  // namespace

void configure_fft(FftPlanner planner, const std::filesystem::path& wisdom) {
  std::lock_guard lock(planner_mutex());
  settings() = {planner, wisdom};
  if (planner == FftPlanner::measure && !wisdom.empty() && std::filesystem::exists(wisdom))
    if (!fftw_import_wisdom_from_filename(wisdom.c_str()))
      throw ConfigError("cannot import FFTW wisdom from " + wisdom.string());
}

FftPlanner fft_planner() {
  std::lock_guard lock(planner_mutex());
  return settings().planner;
}

Fft::Fft(int n) : n_(n) {
  if (n < 2 || n % 2 != 0) throw ConfigError("fft size must be even");
  const std::size_t real_size = static_cast<std::size_t>(n) * n;
  const std::size_t half_size = static_cast<std::size_t>(n) * (n / 2 + 1);
  RealBuffer r(real_size);
  ComplexBuffer c(half_size);
  auto* cp = reinterpret_cast<fftw_complex*>(c.data());
  std::lock_guard lock(planner_mutex());
  const auto& cfg = settings();
  const unsigned flags = cfg.planner == FftPlanner::measure ? FFTW_MEASURE : FFTW_ESTIMATE;
  r2c_ = fftw_plan_dft_r2c_2d(n, n, r.data(), cp, flags);
  c2r_ = fftw_plan_dft_c2r_2d(n, n, cp, r.data(), flags);
  if (r2c_ == nullptr || c2r_ == nullptr) throw ConfigError("FFTW planning failed");
  if (cfg.planner == FftPlanner::measure && !cfg.wisdom.empty()) fftw_export_wisdom_to_filename(cfg.wisdom.c_str());
}

Fft::~Fft() {
  std::lock_guard lock(planner_mutex());
  if (r2c_ != nullptr) fftw_destroy_plan(r2c_);
  if (c2r_ != nullptr) fftw_destroy_plan(c2r_);
}

std::shared_ptr<const Fft> Fft::get(int n) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const Fft>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const Fft>(n);
  return slot;
}

void Fft::forward(const double* in, Complex* out) const {
  // r2c with distinct arrays leaves its input untouched.
  fftw_execute_dft_r2c(r2c_, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  const double scale = 1.0 / (static_cast<double>(n_) * n_);
  const std::size_t half_size = static_cast<std::size_t>(n_) * (n_ / 2 + 1);
  for (std::size_t i = 0; i < half_size; ++i) out[i] *= scale;
}

void Fft::inverse_destructive(Complex* in, double* out) const {
  fftw_execute_dft_c2r(c2r_, reinterpret_cast<fftw_complex*>(in), out);
}

void Fft::inverse(const Complex* in, double* out) const {
  ComplexBuffer scratch(in, in + static_cast<std::size_t>(n_) * (n_ / 2 + 1));
  inverse_destructive(scratch.data(), out);
}

}  // namespace nudgekit
