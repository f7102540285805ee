#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qcap/errors.hpp"
#include "qcap/matrix.hpp"
#include "qcap/random.hpp"

namespace qcap {

inline constexpr double kCompletenessTolerance = 1e-10;
inline constexpr double kEnsembleTraceTolerance = 1e-12;
inline constexpr double kPovmTolerance = 1e-10;
inline constexpr std::size_t kDefaultSizeLimit = 30;

class ConstraintViolation : public Error {
public:
  using Error::Error;
};

// A CPTP map given by Kraus operators K_m of shape D x N (output x input).
class KrausChannel {
public:
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  std::size_t num_kraus() const noexcept { return ops_.size(); }
  const std::vector<ComplexMatrix>& kraus_ops() const noexcept { return ops_; }

  // max |Σ K_m† K_m − 1| elementwise.
  static double completeness_deviation(const std::vector<ComplexMatrix>& ops) {
    const auto n = ops.front().cols();
    ComplexMatrix::Storage sum = ComplexMatrix::Storage::Zero(static_cast<Eigen::Index>(n),
                                                              static_cast<Eigen::Index>(n));
    for (const auto& k : ops) sum.noalias() += k.eigen().adjoint() * k.eigen();
    return max_abs(ComplexMatrix(std::move(sum)) - ComplexMatrix::identity(n));
  }

  friend KrausChannel validate_channel(std::vector<ComplexMatrix> ops, std::size_t max_dim);

private:
  KrausChannel(std::vector<ComplexMatrix> ops)
      : input_dim_(ops.front().cols()), output_dim_(ops.front().rows()), ops_(std::move(ops)) {}

  std::size_t input_dim_;
  std::size_t output_dim_;
  std::vector<ComplexMatrix> ops_;
};

inline KrausChannel validate_channel(std::vector<ComplexMatrix> ops,
                                     std::size_t max_dim = kDefaultSizeLimit) {
  if (ops.empty()) throw InvalidChannel("channel needs at least one Kraus operator");
  const auto d = ops.front().rows();
  const auto n = ops.front().cols();
  if (d == 0 || n == 0) throw DimensionMismatch("Kraus operators must be non-empty");
  if (d > max_dim || n > max_dim) {
    throw InvalidChannel("Kraus operator dimensions " + ops.front().shape_string() +
                         " exceed the limit " + std::to_string(max_dim));
  }
  for (std::size_t m = 0; m < ops.size(); ++m) {
    if (ops[m].rows() != d || ops[m].cols() != n) {
      throw DimensionMismatch("Kraus operator " + std::to_string(m + 1) + " is " +
                              ops[m].shape_string() + ", expected " + ops.front().shape_string());
    }
    if (!ops[m].all_finite()) {
      throw InvalidChannel("Kraus operator " + std::to_string(m + 1) + " has non-finite entries");
    }
  }
  const double dev = KrausChannel::completeness_deviation(ops);
  if (!(dev <= kCompletenessTolerance)) throw CompletenessViolation(dev);
  return KrausChannel(std::move(ops));
}

// M(ρ) = Σ_m K_m ρ K_m†, mapping N x N to D x D.
inline ComplexMatrix apply_channel(const KrausChannel& ch, const ComplexMatrix& state) {
  if (state.rows() != ch.input_dim() || state.cols() != ch.input_dim()) {
    throw DimensionMismatch("channel input is " + std::to_string(ch.input_dim()) +
                            "-dimensional, state is " + state.shape_string());
  }
  const auto d = static_cast<Eigen::Index>(ch.output_dim());
  ComplexMatrix::Storage out = ComplexMatrix::Storage::Zero(d, d);
  for (const auto& k : ch.kraus_ops()) {
    out.noalias() += k.eigen() * state.eigen() * k.eigen().adjoint();
  }
  return ComplexMatrix(std::move(out));
}

// M†(E) = Σ_m K_m† E K_m, mapping D x D to N x N.
inline ComplexMatrix adjoint_channel_apply(const KrausChannel& ch, const ComplexMatrix& effect) {
  if (effect.rows() != ch.output_dim() || effect.cols() != ch.output_dim()) {
    throw DimensionMismatch("channel output is " + std::to_string(ch.output_dim()) +
                            "-dimensional, effect is " + effect.shape_string());
  }
  const auto n = static_cast<Eigen::Index>(ch.input_dim());
  ComplexMatrix::Storage out = ComplexMatrix::Storage::Zero(n, n);
  for (const auto& k : ch.kraus_ops()) {
    out.noalias() += k.eigen().adjoint() * effect.eigen() * k.eigen();
  }
  return ComplexMatrix(std::move(out));
}

namespace detail {

inline void require_uniform_square(const std::vector<ComplexMatrix>& factors, const char* what) {
  if (factors.empty()) throw DimensionMismatch(std::string(what) + " needs at least one factor");
  const auto n = factors.front().rows();
  for (const auto& f : factors) {
    if (f.rows() != n || f.cols() != n) {
      throw DimensionMismatch(std::string(what) + " factors must all be " + std::to_string(n) +
                              "x" + std::to_string(n) + ", got " + f.shape_string());
    }
  }
}

inline double total_trace(const std::vector<ComplexMatrix>& factors) {
  double t = 0.0;
  for (const auto& b : factors) t += b.eigen().squaredNorm();
  return t;
}

inline ComplexMatrix gram(const ComplexMatrix& f) {
  return ComplexMatrix(ComplexMatrix::Storage(f.eigen().adjoint() * f.eigen()));
}

}  // namespace detail

// Signal states ρ_j = B_j† B_j with Σ_j tr ρ_j = 1. Traces are the priors.
class Ensemble {
public:
  explicit Ensemble(std::vector<ComplexMatrix> factors) : factors_(std::move(factors)) {
    detail::require_uniform_square(factors_, "ensemble");
    if (!(trace_error() <= kEnsembleTraceTolerance)) {
      throw ConstraintViolation("ensemble traces sum to " +
                                std::to_string(detail::total_trace(factors_)));
    }
  }

  // Rescales all factors by one common constant so the traces sum to 1.
  static Ensemble normalized(std::vector<ComplexMatrix> factors) {
    detail::require_uniform_square(factors, "ensemble");
    const double t = detail::total_trace(factors);
    if (!(t > 0.0) || !std::isfinite(t)) throw SingularNormalization("ensemble has zero trace");
    const double s = 1.0 / std::sqrt(t);
    for (auto& b : factors) b *= s;
    return Ensemble(std::move(factors));
  }

  // Builds factors as PSD square roots of given subnormalized states. Traces
  // must sum to 1 within the completeness tolerance (hand-typed decimals);
  // the residual is removed by a common rescale.
  static Ensemble from_states(const std::vector<ComplexMatrix>& states) {
    std::vector<ComplexMatrix> factors;
    factors.reserve(states.size());
    for (const auto& rho : states) factors.push_back(sqrt_psd(rho));
    detail::require_uniform_square(factors, "ensemble");
    const double t = detail::total_trace(factors);
    if (!(std::abs(t - 1.0) <= kCompletenessTolerance)) {
      throw ConstraintViolation("ensemble traces sum to " + std::to_string(t));
    }
    return normalized(std::move(factors));
  }

  std::size_t size() const noexcept { return factors_.size(); }
  std::size_t dim() const noexcept { return factors_.front().rows(); }
  const std::vector<ComplexMatrix>& factors() const noexcept { return factors_; }

  ComplexMatrix state(std::size_t j) const { return detail::gram(factors_.at(j)); }
  std::vector<ComplexMatrix> states() const {
    std::vector<ComplexMatrix> out;
    out.reserve(size());
    for (const auto& b : factors_) out.push_back(detail::gram(b));
    return out;
  }

  double trace_error() const { return std::abs(detail::total_trace(factors_) - 1.0); }

  // B_j <- B_j + step * direction_j, then the global trace rescale.
  Ensemble stepped(const std::vector<ComplexMatrix>& direction, double step) const {
    if (direction.size() != size()) throw DimensionMismatch("ensemble direction size");
    std::vector<ComplexMatrix> moved = factors_;
    for (std::size_t j = 0; j < moved.size(); ++j) moved[j] += step * direction[j];
    return normalized(std::move(moved));
  }

private:
  std::vector<ComplexMatrix> factors_;
};

// Measurement outcomes Π_k = A_k† A_k with Σ_k Π_k = 1.
class Povm {
public:
  static constexpr double kRefinementThreshold = 1e-14;

  explicit Povm(std::vector<ComplexMatrix> factors) : factors_(std::move(factors)) {
    detail::require_uniform_square(factors_, "POVM");
    const double err = completeness_error();
    if (!(err <= kPovmTolerance)) {
      throw ConstraintViolation("POVM outcomes do not sum to identity (deviation " +
                                std::to_string(err) + ")");
    }
  }

  // A_k <- A_k S^{-1/2} with S = Σ_k A_k† A_k.
  static Povm normalized(std::vector<ComplexMatrix> factors, double floor = kDefaultEigenFloor) {
    detail::require_uniform_square(factors, "POVM");
    const auto d = factors.front().rows();
    ComplexMatrix s(d, d);
    for (const auto& a : factors) s.eigen().noalias() += a.eigen().adjoint() * a.eigen();
    const auto eig = hermitian_eigendecomposition(hermitian_part(s));
    if (!(eig.eigenvalues.front() > floor)) {
      throw SingularNormalization("POVM normalization matrix is singular (min eigenvalue " +
                                  std::to_string(eig.eigenvalues.front()) + ")");
    }
    const auto inv = hermitian_function(eig, [](double l) { return 1.0 / std::sqrt(l); });
    for (auto& a : factors) a = a * inv;
    // An ill-conditioned S leaves an error of about cond(S) ulps. One more
    // pass with the now near-identity S removes it.
    s = ComplexMatrix(d, d);
    for (const auto& a : factors) s.eigen().noalias() += a.eigen().adjoint() * a.eigen();
    if (max_abs(s - ComplexMatrix::identity(d)) <= kRefinementThreshold) {
      return Povm(std::move(factors), Checked{});
    }
    const auto fix = inverse_sqrt_psd(hermitian_part(s));
    for (auto& a : factors) a = a * fix;
    return Povm(std::move(factors));
  }

  static Povm from_outcomes(const std::vector<ComplexMatrix>& outcomes) {
    std::vector<ComplexMatrix> factors;
    factors.reserve(outcomes.size());
    for (const auto& pi : outcomes) factors.push_back(sqrt_psd(pi));
    return Povm(std::move(factors));
  }

  std::size_t size() const noexcept { return factors_.size(); }
  std::size_t dim() const noexcept { return factors_.front().rows(); }
  const std::vector<ComplexMatrix>& factors() const noexcept { return factors_; }

  ComplexMatrix outcome(std::size_t k) const { return detail::gram(factors_.at(k)); }
  std::vector<ComplexMatrix> outcomes() const {
    std::vector<ComplexMatrix> out;
    out.reserve(size());
    for (const auto& a : factors_) out.push_back(detail::gram(a));
    return out;
  }

  double completeness_error() const {
    const auto d = dim();
    ComplexMatrix s(d, d);
    for (const auto& a : factors_) s.eigen().noalias() += a.eigen().adjoint() * a.eigen();
    return max_abs(s - ComplexMatrix::identity(d));
  }

  // A_k <- (A_k + step * direction_k) S^{-1/2}.
  Povm stepped(const std::vector<ComplexMatrix>& direction, double step) const {
    if (direction.size() != size()) throw DimensionMismatch("POVM direction size");
    std::vector<ComplexMatrix> moved = factors_;
    for (std::size_t k = 0; k < moved.size(); ++k) moved[k] += step * direction[k];
    return normalized(std::move(moved));
  }

private:
  struct Checked {};
  // Completeness already verified by the caller.
  Povm(std::vector<ComplexMatrix> factors, Checked) : factors_(std::move(factors)) {}

  std::vector<ComplexMatrix> factors_;
};

inline Ensemble random_ensemble(std::size_t num_states, std::size_t dim, Rng& rng) {
  if (num_states == 0 || dim == 0) throw DimensionMismatch("ensemble needs J >= 1 and N >= 1");
  std::vector<ComplexMatrix> factors;
  factors.reserve(num_states);
  for (std::size_t j = 0; j < num_states; ++j) factors.push_back(rng.gaussian_matrix(dim, dim));
  return Ensemble::normalized(std::move(factors));
}

inline Povm random_povm(std::size_t num_outcomes, std::size_t dim, Rng& rng) {
  if (num_outcomes == 0 || dim == 0) throw DimensionMismatch("POVM needs K >= 1 and D >= 1");
  constexpr int kMaxAttempts = 10;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<ComplexMatrix> factors;
    factors.reserve(num_outcomes);
    for (std::size_t k = 0; k < num_outcomes; ++k) factors.push_back(rng.gaussian_matrix(dim, dim));
    try {
      return Povm::normalized(std::move(factors));
    } catch (const SingularNormalization&) {
    }
  }
  throw SingularNormalization("could not draw a non-singular random POVM");
}

}  // namespace qcap
