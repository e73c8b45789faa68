#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lrmr/core.hpp"
#include "lrmr/loss.hpp"
#include "lrmr/model_sim.hpp"
#include "lrmr/regularizers.hpp"

namespace lrmr {

/// Which constant splits the true spectrum into large (J1) and small (J2) values.
enum class SpectrumThreshold { Nu, Mu };

struct SpectrumClasses {
  std::vector<int> j1;  // 0-based indices with sigma_j >= threshold
  std::vector<int> j2;
  int r1 = 0;
  int r2 = 0;
};

SpectrumClasses classify_spectrum(const TrueModel& model, const RegularizerSpec& spec,
                                  SpectrumThreshold threshold = SpectrumThreshold::Nu);

struct GradientNorms {
  double full = 0.0;       // ||grad L(Theta*)||_op
  double projected = 0.0;  // ||U*_{J1}^T grad L(Theta*) V*_{J1}||_op
  bool empty_j1 = false;   // projected reported as 0
};

GradientNorms measure_gradient_norms(const SurrogatePair& pair, const TrueModel& model,
                                     const SpectrumClasses& classes);

struct RecoveryReport {
  double frob_error = 0.0;
  double nuclear_error = 0.0;
  int rank_hat = 0;
  int r1 = 0;
  int r2 = 0;
  double op_norm_full_grad = 0.0;
  double op_norm_proj_grad = 0.0;
  /// ||Delta_{T^c}||_* / ||Delta_T||_* with T = {1..2r}; 0 when Delta_T = 0 or 2r >= d.
  double cone_ratio = 0.0;
};

/// Relative threshold for rank_hat.
inline constexpr double kRankHatTolerance = 1e-6;

RecoveryReport recovery_report(const Matrix& theta_hat, const TrueModel& model,
                               const SurrogatePair& pair, const RegularizerSpec& spec,
                               SpectrumThreshold threshold = SpectrumThreshold::Nu);

/// ||D_{T^c}||_* / ||D_T||_* with T = {1..2r}.
double cone_ratio(const Matrix& delta, int r);

struct BoundEvaluation {
  double error = 0.0;
  /// sqrt(r1)/(2 alpha2 - mu) * proj + 5 sqrt(r2) / (2 (2 alpha2 - mu)) * lambda
  double rhs = 0.0;
  double ratio = 0.0;
};

/// Throws ParameterError unless 2 * alpha2 > mu.
BoundEvaluation evaluate_bound(const RecoveryReport& report, const RegularizerSpec& spec,
                               double alpha2);

/// lambda_min(Sigma_x) / 8.
double default_alpha2(const Covariance& sigma_x);

struct CheckResult {
  std::string name;
  int trials = 0;
  int violations = 0;
  /// Largest amount by which an inequality failed (<= 0 when all pass).
  double worst = -std::numeric_limits<double>::infinity();
};

struct CheckReport {
  std::vector<CheckResult> checks;

  int violations() const;
  bool passed() const { return violations() == 0; }
};

inline constexpr double kLemmaTolerance = 1e-8;

/**
 * Randomized checks of the penalty lemmas on matrices up to 8 x 6, SCAD and
 * MCP alternating: subadditivity of P_lambda (both directions), the four
 * curvature relations of Q_lambda, the 2r decomposition and the bound
 *   P(Theta*) - P(Theta) <= lambda (||Delta_T||_* - ||Delta_{T^c}||_*).
 */
CheckReport check_lemmas(int trials, std::uint64_t seed, double tol = kLemmaTolerance);

/// Central differences of L + Q_lambda against smooth_gradient, relative error.
double gradient_fd_error(const SurrogatePair& pair, const RegularizerSpec& spec, const Matrix& theta,
                         double h = 1e-5);

/// Random matrix with singular values separated from each other and from
/// the breakpoints {lambda, nu} of spec by at least min_gap.
Matrix well_separated_matrix(Eigen::Index d1, Eigen::Index d2, const RegularizerSpec& spec,
                             double min_gap, Rng& rng);

/// Finite-difference suite over clean, additive and missing regimes.
CheckReport check_gradients(int points, std::uint64_t seed, double tol = 1e-6);

/// scalar_prox against a grid oracle at resolution `resolution`.
CheckReport check_prox(int trials, std::uint64_t seed, double resolution = 1e-4);

/// LSC/RSC on a clean, well-conditioned design (N >> M).
CheckReport check_conditions(int trials, std::uint64_t seed);

}  // namespace lrmr
