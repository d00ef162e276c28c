#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qps {

using cplx = std::complex<double>;

// Row-major so that mixing two modes (rows) touches contiguous memory.
using CMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CVector = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces an angle to [0, 2π).
double wrap_phase(double theta);

/// Reduces an angle to (-π, π].
double wrap_signed(double theta);

// Error hierarchy. The CLI maps StructuralError/ValidationError/DomainError/
// LookupError/DegenerateError to exit code 2 and ParseError to exit code 1.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed layouts, block sizes, graphs.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Input failing a numerical invariant (e.g. non-unitary matrix).
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, double defect) : Error(what), defect_(defect) {}
  double defect() const noexcept { return defect_; }

 private:
  double defect_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t index) : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Thrown by topological ordering; carries one cycle as vertex labels.
class CycleError : public StructuralError {
 public:
  CycleError(const std::string& what, std::vector<std::string> cycle)
      : StructuralError(what), cycle_(std::move(cycle)) {}
  const std::vector<std::string>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

}  // namespace qps
