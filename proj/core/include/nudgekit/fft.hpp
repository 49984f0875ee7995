#pragma once

#include <filesystem>
#include <memory>

#include <fftw3.h>

#include "nudgekit/aligned.hpp"

namespace nudgekit {

enum class FftPlanner {
  estimate,  // deterministic algorithm choice
  measure,   // timed choice; faster, reproducible only through a shared wisdom file
};

/// Selects the planner for plans created afterwards. With `measure` and a
/// wisdom path, existing wisdom is imported first and the result is written
/// back, so every process sharing the file executes the same plans.
void configure_fft(FftPlanner planner, const std::filesystem::path& wisdom = {});
FftPlanner fft_planner();

/// 2-D real <-> half-complex transforms for an n x n grid.
///
/// forward() returns normalized Fourier coefficients (the sum divided by n^2),
/// so inverse(forward(f)) == f. Plans are created once per size under a lock
/// and executed through FFTW's new-array interface, which is reentrant; buffers
/// must come from FftwAllocator. By default plans use FFTW_ESTIMATE so
/// repeated runs pick the same algorithm and produce identical bits.
class Fft {
 public:
  explicit Fft(int n);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  static std::shared_ptr<const Fft> get(int n);

  int n() const { return n_; }

  /// in: n*n reals (preserved). out: n*(n/2+1) coefficients.
  void forward(const double* in, Complex* out) const;
  /// in: n*(n/2+1) coefficients, overwritten. out: n*n reals.
  void inverse_destructive(Complex* in, double* out) const;
  /// Same as inverse_destructive but copies the input first.
  void inverse(const Complex* in, double* out) const;

 private:
  int n_;
  fftw_plan r2c_ = nullptr;
  fftw_plan c2r_ = nullptr;
};

}  // namespace nudgekit
