#pragma once

#include <utility>
#include <vector>

#include "lrmr/core.hpp"
#include "lrmr/regularizers.hpp"

namespace lrmr {

/// Thin SVD, M = U diag(sigma) V^T with sigma nonincreasing and d = min(d1, d2).
struct SvdTriple {
  Matrix U;
  Vector sigma;
  Matrix V;

  Matrix reconstruct() const;
};

/// Throws DataError on non-finite entries.
SvdTriple svd_decompose(const Matrix& m);

Vector singular_values(const Matrix& m);
double nuclear_norm(const Matrix& m);
double operator_norm(const Matrix& m);

/// Relative rank tolerance used for every rank assertion in the library.
inline constexpr double kRankTolerance = 1e-8;

/// Number of singular values above rel_tol * sigma_1.
int numerical_rank(const Matrix& m, double rel_tol = kRankTolerance);

/// Sum_j p_lambda(sigma_j(M)).
double spectral_penalty(const Matrix& m, const RegularizerSpec& spec);

/// Q_lambda(M) = Sum_j q_lambda(sigma_j(M)).
double spectral_concave(const Matrix& m, const RegularizerSpec& spec);

struct SpectralGradient {
  Matrix gradient;
  /// Set when two positive singular values are closer than kTieGap.
  bool degenerate = false;

  static constexpr double kTieGap = 1e-8;
};

/// Gradient of Q_lambda at M: U diag(q'_lambda(sigma)) V^T.
SpectralGradient spectral_concave_grad(const Matrix& m, const RegularizerSpec& spec);
SpectralGradient spectral_concave_grad(const SvdTriple& svd, const RegularizerSpec& spec);

/**
 * Solves min_s 0.5*||s - sigma||^2 + threshold*||s||_1 over
 * {s >= 0, ||s||_1 <= omega} for a nonnegative sigma.
 *
 * Soft-thresholds first; when the ball is violated the effective threshold is
 * raised to the exact water level where ||s||_1 == omega.
 */
Vector shrink_into_l1_ball(const Vector& sigma, double threshold, double omega);

/// Exact prox of threshold*||.||_* plus the indicator of {||Theta||_* <= omega}.
Matrix prox_nuclear_in_ball(const Matrix& m, double threshold, double omega);

struct TopSplit {
  Matrix top;   // Delta_T, the 2r leading spectral components
  Matrix tail;  // Delta_{T^c}
};

/// Spectral split with T = {1, ..., 2r}. Requires 2r <= min(d1, d2).
TopSplit split_top(const Matrix& delta, int r);

/// Columns of U* and V* indexed by a set S.
class SubspacePair {
 public:
  /// Validates shapes and orthonormality (1e-10).
  SubspacePair(Matrix u, Matrix v);

  /// Columns `indices` (0-based) of the factors u and v.
  static SubspacePair select(const Matrix& u, const Matrix& v, const std::vector<int>& indices);

  const Matrix& u() const { return u_; }
  const Matrix& v() const { return v_; }
  Eigen::Index size() const { return u_.cols(); }

 private:
  Matrix u_;
  Matrix v_;
};

enum class Subspace { A, B };

/// A: U_S U_S^T M V_S V_S^T.  B: (I - U_S U_S^T) M (I - V_S V_S^T).
Matrix subspace_project(const Matrix& m, const SubspacePair& sub, Subspace which);

struct LowRankDecomposition {
  Matrix low;   // rank <= 2|J|: the Xi11, Xi12, Xi21 blocks
  Matrix perp;  // the Xi22 block, lies in B_J
};

/// Delta = low + perp with perp = Pi_B(Delta) for the subspaces of Theta*.
LowRankDecomposition decompose_2r(const Matrix& delta, const SubspacePair& star);

}  // namespace lrmr
