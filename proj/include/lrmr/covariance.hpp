#pragma once

#include <memory>
#include <string>

#include "lrmr/core.hpp"
#include "lrmr/random.hpp"

namespace lrmr {

/**
 * Covariance of vec(X) for a Sigma-ensemble, vec(X) ~ N(0, Sigma).
 *
 * Identity carries a nonnegative scale (scale 0 gives the noiseless limit);
 * Ar1 is scale * phi^|i-j| over the column-major vec index; Explicit must be
 * symmetric positive definite. Copies share immutable state.
 */
class Covariance {
 public:
  enum class Kind { Identity, Ar1, Explicit };

  static Covariance identity(Eigen::Index dim, double scale = 1.0);
  static Covariance ar1(Eigen::Index dim, double phi, double scale = 1.0);
  static Covariance explicit_matrix(const Matrix& sigma);

  Kind kind() const;
  Eigen::Index dim() const;
  double scale() const;
  double phi() const;

  Matrix dense() const;
  Vector apply(const Vector& v) const;
  Vector diagonal() const;
  double op_norm() const;
  double min_eigenvalue() const;
  /// Average variance trace(Sigma) / dim.
  double mean_variance() const;

  /// Draw L g with g ~ N(0, I) taken from `rng`.
  Vector sample(Rng& rng) const;
  /// Adds a draw L g to `out` (length dim).
  void add_sample(Rng& rng, Eigen::Ref<Vector> out) const;

  /// Short text form, e.g. "identity 0.25" or "ar1 0.3 1".
  std::string describe() const;
  /// Inverse of describe() for identity and ar1 (explicit is file-only).
  static Covariance parse(const std::string& text, Eigen::Index dim);

 private:
  struct State;
  explicit Covariance(std::shared_ptr<const State> state);
  std::shared_ptr<const State> state_;
};

}  // namespace lrmr
