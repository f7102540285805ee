#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "qcap/channel.hpp"
#include "qcap/errors.hpp"
#include "qcap/matrix.hpp"
#include "qcap/random.hpp"

// Named channel families used by the CLI and the test suites.
namespace qcap::channels {

inline KrausChannel identity(std::size_t dim, std::size_t max_dim = kDefaultSizeLimit) {
  return validate_channel({ComplexMatrix::identity(dim)}, max_dim);
}

// Weyl operator X^a Z^b on C^d.
inline ComplexMatrix weyl(std::size_t dim, std::size_t a, std::size_t b) {
  ComplexMatrix w(dim, dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(b * j) /
                         static_cast<double>(dim);
    w((j + a) % dim, j) = std::polar(1.0, phase);
  }
  return w;
}

// ρ -> (1 − p) ρ + p tr{ρ} 1/d, via the d² Weyl operators. For d = 2 the
// Kraus set is √(1 − 3p/4) 1 and √(p/4) times the three Pauli matrices (up
// to phases).
inline KrausChannel depolarizing(std::size_t dim, double p,
                                 std::size_t max_dim = kDefaultSizeLimit) {
  const double d2 = static_cast<double>(dim * dim);
  if (!(p >= 0.0 && p <= d2 / (d2 - 1.0))) {
    throw InvalidChannel("depolarizing parameter " + std::to_string(p) + " out of range");
  }
  std::vector<ComplexMatrix> ops;
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = 0; b < dim; ++b) {
      const double w = (a == 0 && b == 0) ? 1.0 - p + p / d2 : p / d2;
      if (w == 0.0) continue;
      ops.push_back(std::sqrt(w) * weyl(dim, a, b));
    }
  }
  return validate_channel(std::move(ops), max_dim);
}

inline KrausChannel phase_damping(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidChannel("phase-damping parameter must lie in [0, 1]");
  }
  return validate_channel({ComplexMatrix::diagonal({1.0, std::sqrt(1.0 - lambda)}),
                           ComplexMatrix::diagonal({0.0, std::sqrt(lambda)})});
}

inline KrausChannel amplitude_damping(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw InvalidChannel("amplitude-damping parameter must lie in [0, 1]");
  }
  return validate_channel({ComplexMatrix{{1.0, 0.0}, {0.0, std::sqrt(1.0 - gamma)}},
                           ComplexMatrix{{0.0, std::sqrt(gamma)}, {0.0, 0.0}}});
}

// Random channel: a Gaussian (M D) x N stack turned into an isometry V with
// V (V†V)^{-1/2}, cut into M Kraus blocks.
inline KrausChannel random(std::size_t input_dim, std::size_t output_dim, std::size_t num_kraus,
                           std::uint64_t seed, std::size_t max_dim = kDefaultSizeLimit) {
  if (num_kraus * output_dim < input_dim) {
    throw InvalidChannel("random channel needs M*D >= N");
  }
  Rng rng(seed);
  const auto stack = rng.gaussian_matrix(num_kraus * output_dim, input_dim);
  const auto gram = adjoint(stack) * stack;
  const auto iso = stack * inverse_sqrt_psd(hermitian_part(gram));
  std::vector<ComplexMatrix> ops;
  for (std::size_t m = 0; m < num_kraus; ++m) {
    ComplexMatrix k(output_dim, input_dim);
    k.eigen() = iso.eigen().middleRows(static_cast<Eigen::Index>(m * output_dim),
                                       static_cast<Eigen::Index>(output_dim));
    ops.push_back(std::move(k));
  }
  return validate_channel(std::move(ops), max_dim);
}

}  // namespace qcap::channels
