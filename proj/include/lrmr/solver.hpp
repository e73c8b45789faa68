#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "lrmr/core.hpp"
#include "lrmr/loss.hpp"
#include "lrmr/regularizers.hpp"

namespace lrmr {

struct SolverConfig {
  /// Fixed step; backtracking when empty. Requires step * mu < 1.
  std::optional<double> step;
  int max_iters = 5000;
  /// Terminate once the stationarity gap is at most tol.
  double tol = 1e-6;
  /// Radius of the nuclear-norm ball; infinity disables the constraint.
  double omega = std::numeric_limits<double>::infinity();
  /// Backtracking factor in (0, 1).
  double shrink = 0.5;
  /// Record the objective every trace_every iterations; 0 disables the trace.
  int trace_every = 1;
  /// Step used by the gap; 1 / (||Gamma||_op + mu) when empty.
  std::optional<double> reference_step;

  void validate() const;
};

struct SolverResult {
  Matrix theta_hat;
  double stationarity_gap = 0.0;
  int iterations = 0;
  /// Objective L + P_lambda at recorded iterates, starting with the initial point.
  std::vector<double> objective_trace;
  bool converged = false;
  double reference_step = 0.0;
  /// Iterations whose spectral gradient was evaluated at a singular-value tie.
  int degenerate_iterations = 0;
};

/// L(Theta) + P_lambda(Theta).
double objective(const SurrogatePair& pair, const RegularizerSpec& spec, const Matrix& theta);

/// grad L + grad Q_lambda; `degenerate` reports a singular-value tie.
Matrix smooth_gradient(const SurrogatePair& pair, const RegularizerSpec& spec, const Matrix& theta,
                       bool* degenerate = nullptr);

/// 1 / (power-iteration ||Gamma||_op + mu).
double reference_step(const SurrogatePair& pair, const RegularizerSpec& spec);

/**
 * Projected composite proximal gradient for
 *   min L(Theta) + P_lambda(Theta)  subject to ||Theta||_* <= omega,
 * taking steps Theta+ = prox(Theta - eta * (grad L + grad Q_lambda), eta * lambda, omega).
 *
 * An infeasible `init` is projected onto the ball first. Throws StepSizeError
 * for a fixed step with step * mu >= 1 and DivergenceError on a non-finite objective.
 */
SolverResult solve(const SurrogatePair& pair, const RegularizerSpec& spec, const SolverConfig& config,
                   const Matrix& init);

inline SolverResult solve(const SurrogatePair& pair, const RegularizerSpec& spec,
                          const SolverConfig& config) {
  return solve(pair, spec, config, Matrix::Zero(pair.d1(), pair.d2()));
}

/// ||Theta - prox(Theta - eta * grad, eta * lambda, omega)||_F / eta at the reference step.
double stationarity_gap(const SurrogatePair& pair, const RegularizerSpec& spec,
                        const SolverConfig& config, const Matrix& theta);

/// Random rank-`rank` starting point with nuclear norm `scale`.
Matrix random_low_rank_init(Eigen::Index d1, Eigen::Index d2, int rank, double scale,
                            std::uint64_t seed);

}  // namespace lrmr
