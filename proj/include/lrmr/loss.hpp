#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lrmr/core.hpp"
#include "lrmr/model_sim.hpp"

namespace lrmr {

enum class Regime { Clean, Additive, Missing };

std::string to_string(Regime regime);

struct SurrogateProvenance {
  Regime regime = Regime::Clean;
  Eigen::Index n = 0;
  Eigen::Index d1 = 0;
  Eigen::Index d2 = 0;
  double rho = 0.0;           // Missing
  std::string sigma_w;        // Additive, Covariance::describe()
};

/**
 * Plug-in moments (Gamma, Upsilon) of the quadratic surrogate loss
 *
 *   L(Theta) = 0.5 <Gamma vec(Theta), vec(Theta)> - <Upsilon, vec(Theta)>.
 *
 * Gamma is held either materialized (M x M) or as an operator built from the
 * scaled design, Gamma v = Zs (Zs^T v) / N - C v, where C is Sigma_w for
 * additive noise and rho * diag(Zs Zs^T / N) for missing data. Immutable.
 */
class SurrogatePair {
 public:
  static constexpr Eigen::Index kMaterializeLimit = 4096;

  struct Options {
    /// Materialize Gamma when M <= this limit.
    Eigen::Index materialize_limit = kMaterializeLimit;
  };

  /// Regime follows the corruption metadata of `obs`.
  static SurrogatePair build(const ObservationSet& obs, Options options);
  static SurrogatePair build(const ObservationSet& obs) { return build(obs, Options{}); }

  /// A pair with explicit moments (always materialized).
  static SurrogatePair from_moments(Matrix gamma, Vector upsilon, Eigen::Index d1, Eigen::Index d2);

  Eigen::Index d1() const;
  Eigen::Index d2() const;
  Eigen::Index dim() const;
  Regime regime() const;
  const SurrogateProvenance& provenance() const;

  bool materialized() const;
  /// Throws if not materialized.
  const Matrix& gamma() const;
  /// Dense Gamma regardless of the stored form.
  Matrix materialize() const;
  const Vector& upsilon() const;

  Vector apply_gamma(const Vector& v) const;

  double value(const Matrix& theta) const;
  Matrix gradient(const Matrix& theta) const;

  /// Deterministic power-iteration estimate of ||Gamma||_op.
  double gamma_norm_estimate(int iterations = 100) const;

 private:
  struct Impl;
  explicit SurrogatePair(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

/// Z^T Z / N for an M x N block whose columns are the vectorized samples.
Matrix gramian(const Matrix& columns);

inline SurrogatePair build_surrogate(const ObservationSet& obs) { return SurrogatePair::build(obs); }
inline double loss_value(const SurrogatePair& pair, const Matrix& theta) { return pair.value(theta); }
inline Matrix loss_grad(const SurrogatePair& pair, const Matrix& theta) { return pair.gradient(theta); }

/// Outcome of a randomized regularity-condition check.
struct ConditionReport {
  int trials = 0;
  int violations = 0;
  /// LHS - RHS of the inequality per trial; negative means violated.
  std::vector<double> margins;
  double min_margin = 0.0;
  double median_margin = 0.0;
};

/// Relative slack used to call a margin a violation (scaled by |LHS| + |RHS|).
inline constexpr double kConditionSlack = 1e-10;

/**
 * Local strong convexity:
 *   <grad L(Theta* + D) - grad L(Theta*), D> >= alpha1 ||D||_F^2 - tau1 ||D||_*^2.
 *
 * Directions cycle through Gaussian, low-rank and sparse families. When Gamma
 * is materialized the first direction is its least-curvature eigenvector.
 */
ConditionReport verify_lsc(const SurrogatePair& pair, const Matrix& theta_star, int trials,
                           double alpha1, double tau1, std::uint64_t seed);

/**
 * Restricted strong convexity over the cone ||D_{T^c}||_* <= 7 ||D_T||_*:
 *   L(Theta + D) - L(Theta) - <grad L(Theta), D> >= alpha2 ||D||_F^2.
 */
ConditionReport verify_rsc(const SurrogatePair& pair, int trials, double alpha2, int r,
                           std::uint64_t seed);

/// Random cone member with ||D_{T^c}||_* <= 7 ||D_T||_* for T = {1..2r}.
Matrix sample_cone_direction(Eigen::Index d1, Eigen::Index d2, int r, Rng& rng);

struct BoundInputs {
  Covariance sigma_x = Covariance::identity(1);
  Corruption corruption = NoCorruption{};
  double sigma_eps = 0.0;
  double theta_star_frob = 0.0;
  int d1 = 0;
  int d2 = 0;
  Eigen::Index n = 0;
  double omega = 0.0;
  /// Multiplies the lambda floor.
  double constant = 1.0;
};

struct BoundQuantities {
  double tau = 0.0;
  double phi = 0.0;
  /// constant * max{phi sqrt(log dt / N), omega tau dt log dt / N}, dt = max(d1, d2).
  double lambda_floor = 0.0;
};

/// Clean data uses the additive-noise formulas with Sigma_w = 0.
BoundQuantities bound_quantities(const BoundInputs& in);

}  // namespace lrmr
