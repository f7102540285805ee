#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qcap {

// Root of every error the library throws. Numerical failures derive from
// NumericalError so callers can tell bad input apart from a solver breakdown.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class NotHermitian : public Error {
public:
  explicit NotHermitian(double deviation)
      : Error("matrix is not Hermitian (max deviation " + std::to_string(deviation) + ")"),
        deviation_(deviation) {}
  double deviation() const noexcept { return deviation_; }

private:
  double deviation_;
};

class NegativeSpectrum : public Error {
public:
  explicit NegativeSpectrum(double min_eigenvalue)
      : Error("matrix has negative eigenvalue " + std::to_string(min_eigenvalue)),
        min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
  double min_eigenvalue_;
};

class ConvergenceFailure : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class SingularNormalization : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class NonFiniteObjective : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class CompletenessViolation : public Error {
public:
  explicit CompletenessViolation(double deviation)
      : Error("Kraus operators violate completeness (max deviation " +
              std::to_string(deviation) + ")"),
        deviation_(deviation) {}
  double deviation() const noexcept { return deviation_; }

private:
  double deviation_;
};

class InvalidChannel : public Error {
public:
  using Error::Error;
};

// Text-format errors carry the 1-based line and column of the offending token.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
              what),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

class SyntaxError : public ParseError {
public:
  using ParseError::ParseError;
};

class RaggedRows : public ParseError {
public:
  using ParseError::ParseError;
};

class LowercaseImaginaryUnit : public ParseError {
public:
  LowercaseImaginaryUnit(std::size_t line, std::size_t column)
      : ParseError("imaginary unit must be upper-case 'I'", line, column) {}
};

class MisplacedImaginaryUnit : public ParseError {
public:
  MisplacedImaginaryUnit(std::size_t line, std::size_t column)
      : ParseError("imaginary unit 'I' must end the entry", line, column) {}
};

class HeaderMissing : public ParseError {
public:
  HeaderMissing(const std::string& field, std::size_t line)
      : ParseError("missing header field " + field, line, 1), field_(field) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

class WrongMatrixCount : public ParseError {
public:
  WrongMatrixCount(std::size_t expected, std::size_t found, std::size_t line)
      : ParseError("expected " + std::to_string(expected) + " matrix lines, found " +
                       std::to_string(found),
                   line, 1),
        expected_(expected),
        found_(found) {}
  std::size_t expected() const noexcept { return expected_; }
  std::size_t found() const noexcept { return found_; }

private:
  std::size_t expected_;
  std::size_t found_;
};

class MatrixShapeError : public ParseError {
public:
  using ParseError::ParseError;
};

}  // namespace qcap
