#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "qcap/matrix.hpp"

namespace qcap {

// Seeded generator with platform-independent uniform and Gaussian draws.
// std::normal_distribution is implementation-defined, so the Gaussian is
// produced here by Box-Muller from 53-bit uniforms; a given seed yields the
// same stream with any standard library.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 == 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Standard complex Gaussian: real and imaginary parts each N(0, 1/2).
  Complex complex_gaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

  ComplexMatrix gaussian_matrix(std::size_t rows, std::size_t cols) {
    ComplexMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = complex_gaussian();
    }
    return m;
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace qcap
