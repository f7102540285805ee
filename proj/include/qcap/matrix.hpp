#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcap/errors.hpp"

namespace qcap {

using Complex = std::complex<double>;

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kNegativeSpectrumTolerance = 1e-10;
inline constexpr double kDefaultEigenFloor = 1e-14;

// Dense complex matrix with value semantics. Thin wrapper over an Eigen
// matrix; the wrapper adds shape checks and the invariant that every entry
// is finite.
class ComplexMatrix {
public:
  using Storage = Eigen::MatrixXcd;

  ComplexMatrix() = default;

  ComplexMatrix(std::size_t rows, std::size_t cols)
      : data_(Storage::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))) {}

  explicit ComplexMatrix(Storage data) : data_(std::move(data)) {}

  // Row-major nested initializer: {{a, b}, {c, d}}.
  ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows) {
    const auto nrows = rows.size();
    const auto ncols = nrows ? rows.begin()->size() : 0;
    data_.resize(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(ncols));
    Eigen::Index i = 0;
    for (const auto& row : rows) {
      if (row.size() != ncols) throw DimensionMismatch("ragged initializer list");
      Eigen::Index j = 0;
      for (const auto& v : row) data_(i, j++) = v;
      ++i;
    }
  }

  static ComplexMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }

  static ComplexMatrix identity(std::size_t n) {
    const auto k = static_cast<Eigen::Index>(n);
    return ComplexMatrix(Storage::Identity(k, k));
  }

  static ComplexMatrix diagonal(const std::vector<Complex>& values) {
    ComplexMatrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
  }

  std::size_t rows() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(data_.cols()); }
  bool is_square() const noexcept { return data_.rows() == data_.cols(); }

  Complex& operator()(std::size_t i, std::size_t j) {
    return data_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Complex& operator()(std::size_t i, std::size_t j) const {
    return data_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  const Storage& eigen() const noexcept { return data_; }
  Storage& eigen() noexcept { return data_; }

  bool all_finite() const { return data_.allFinite(); }

  ComplexMatrix& operator+=(const ComplexMatrix& other) {
    require_same_shape(other, "add");
    data_ += other.data_;
    return *this;
  }
  ComplexMatrix& operator-=(const ComplexMatrix& other) {
    require_same_shape(other, "subtract");
    data_ -= other.data_;
    return *this;
  }
  ComplexMatrix& operator*=(Complex c) {
    data_ *= c;
    return *this;
  }

  friend bool operator==(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a.data_ == b.data_;
  }

  std::string shape_string() const {
    return std::to_string(rows()) + "x" + std::to_string(cols());
  }

private:
  void require_same_shape(const ComplexMatrix& other, const char* op) const {
    if (rows() != other.rows() || cols() != other.cols()) {
      throw DimensionMismatch(std::string(op) + ": " + shape_string() + " vs " +
                              other.shape_string());
    }
  }

  Storage data_;
};

inline ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
inline ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
inline ComplexMatrix operator*(Complex c, ComplexMatrix m) { return m *= c; }
inline ComplexMatrix operator*(ComplexMatrix m, Complex c) { return m *= c; }

inline ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionMismatch("multiply: " + a.shape_string() + " * " + b.shape_string());
  }
  return ComplexMatrix(ComplexMatrix::Storage(a.eigen() * b.eigen()));
}

inline ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  return multiply(a, b);
}

inline ComplexMatrix add(const ComplexMatrix& a, const ComplexMatrix& b) { return a + b; }
inline ComplexMatrix scale(Complex c, const ComplexMatrix& m) { return c * m; }

inline ComplexMatrix adjoint(const ComplexMatrix& m) {
  return ComplexMatrix(ComplexMatrix::Storage(m.eigen().adjoint()));
}

inline Complex trace(const ComplexMatrix& m) {
  if (!m.is_square()) throw DimensionMismatch("trace of non-square " + m.shape_string());
  return m.eigen().trace();
}

inline double frobenius_norm(const ComplexMatrix& m) { return m.eigen().norm(); }

// Re tr{a† b}: the real inner product on matrices viewed as real vectors.
inline double real_inner_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("inner product: " + a.shape_string() + " vs " + b.shape_string());
  }
  return a.eigen().cwiseProduct(b.eigen().conjugate()).sum().real();
}

inline double max_abs(const ComplexMatrix& m) {
  return m.eigen().size() == 0 ? 0.0 : m.eigen().cwiseAbs().maxCoeff();
}

inline double max_abs_difference(const ComplexMatrix& a, const ComplexMatrix& b) {
  return max_abs(a - b);
}

inline double hermiticity_deviation(const ComplexMatrix& m) {
  if (!m.is_square()) throw DimensionMismatch("square matrix expected, got " + m.shape_string());
  return (m.eigen() - m.eigen().adjoint()).cwiseAbs().maxCoeff();
}

inline ComplexMatrix hermitian_part(const ComplexMatrix& m) {
  return ComplexMatrix(ComplexMatrix::Storage(0.5 * (m.eigen() + m.eigen().adjoint())));
}

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  ComplexMatrix eigenvectors;       // columns, unitary
};

inline EigenDecomposition hermitian_eigendecomposition(const ComplexMatrix& m) {
  const double dev = hermiticity_deviation(m);
  if (!(dev <= kHermitianTolerance)) throw NotHermitian(dev);
  const auto sym = hermitian_part(m);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix::Storage> solver(sym.eigen());
  if (solver.info() != Eigen::Success) {
    throw ConvergenceFailure("Hermitian eigensolver did not converge");
  }
  const auto& ev = solver.eigenvalues();
  return {std::vector<double>(ev.data(), ev.data() + ev.size()),
          ComplexMatrix(solver.eigenvectors())};
}

// V diag(f(λ)) V† for a Hermitian m.
template <class Fn>
ComplexMatrix hermitian_function(const EigenDecomposition& eig, Fn&& f) {
  const auto& v = eig.eigenvectors.eigen();
  Eigen::VectorXcd fl(static_cast<Eigen::Index>(eig.eigenvalues.size()));
  for (std::size_t i = 0; i < eig.eigenvalues.size(); ++i) {
    fl(static_cast<Eigen::Index>(i)) = f(eig.eigenvalues[i]);
  }
  return ComplexMatrix(ComplexMatrix::Storage(v * fl.asDiagonal() * v.adjoint()));
}

inline double min_eigenvalue(const ComplexMatrix& m) {
  return hermitian_eigendecomposition(m).eigenvalues.front();
}

// Pseudo-inverse square root of a PSD matrix; eigenvalues at or below floor map to 0.
inline ComplexMatrix inverse_sqrt_psd(const ComplexMatrix& m, double floor = kDefaultEigenFloor) {
  auto eig = hermitian_eigendecomposition(m);
  if (eig.eigenvalues.front() < -kNegativeSpectrumTolerance) {
    throw NegativeSpectrum(eig.eigenvalues.front());
  }
  return hermitian_function(eig, [floor](double l) { return l > floor ? 1.0 / std::sqrt(l) : 0.0; });
}

inline ComplexMatrix sqrt_psd(const ComplexMatrix& m) {
  auto eig = hermitian_eigendecomposition(m);
  if (eig.eigenvalues.front() < -kNegativeSpectrumTolerance) {
    throw NegativeSpectrum(eig.eigenvalues.front());
  }
  return hermitian_function(eig, [](double l) { return l > 0.0 ? std::sqrt(l) : 0.0; });
}

}  // namespace qcap
