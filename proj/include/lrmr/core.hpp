#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lrmr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error hierarchy. The CLI maps these onto exit codes (see tools/lrmr.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric argument is outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Input data is unusable (non-finite entries, bad file contents).
class DataError : public Error {
 public:
  using Error::Error;
};

// A configuration is incomplete or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A fixed step violates step * mu < 1.
class StepSizeError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

// The solver produced a non-finite objective.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Column-major vectorization, vec(X) stacks the columns of X.
inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) {
    throw ParameterError("unvec: size mismatch");
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

/// Trace inner product <<A, B>> = trace(B A^T).
inline double inner(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b).sum();
}

}  // namespace lrmr
