#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nudgekit {

/// Invalid parameters, mismatched grids, malformed files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite coefficients or a tripped a-priori monitor during time stepping.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t step, const std::string& what)
      : std::runtime_error("diverged at step " + std::to_string(step) + ": " + what), step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

/// Out-of-order, duplicated or missing observations on a stream.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nudgekit
