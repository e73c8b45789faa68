#include "lrmr/spectral_ops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace lrmr {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw DataError(std::string(what) + ": matrix has non-finite entries");
  }
}

double orthonormality_defect(const Matrix& q) {
  if (q.cols() == 0) return 0.0;
  const Matrix gram = q.transpose() * q;
  return (gram - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

Matrix SvdTriple::reconstruct() const {
  return U * sigma.asDiagonal() * V.transpose();
}

SvdTriple svd_decompose(const Matrix& m) {
  require_finite(m, "svd_decompose");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Vector singular_values(const Matrix& m) {
  require_finite(m, "singular_values");
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

double nuclear_norm(const Matrix& m) {
  return singular_values(m).sum();
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

int numerical_rank(const Matrix& m, double rel_tol) {
  const Vector s = singular_values(m);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = rel_tol * s(0);
  return static_cast<int>((s.array() > cut).count());
}

double spectral_penalty(const Matrix& m, const RegularizerSpec& spec) {
  const Vector s = singular_values(m);
  double total = 0.0;
  for (double v : s) total += scalar_penalty(v, spec);
  return total;
}

double spectral_concave(const Matrix& m, const RegularizerSpec& spec) {
  if (spec.kind() == PenaltyKind::Nuclear) return 0.0;
  const Vector s = singular_values(m);
  double total = 0.0;
  for (double v : s) total += scalar_concave(v, spec);
  return total;
}

SpectralGradient spectral_concave_grad(const SvdTriple& svd, const RegularizerSpec& spec) {
  SpectralGradient out;
  const Eigen::Index d = svd.sigma.size();
  Vector weights(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    weights(j) = scalar_concave_deriv(svd.sigma(j), spec);
  }
  for (Eigen::Index j = 0; j + 1 < d; ++j) {
    if (svd.sigma(j) > SpectralGradient::kTieGap &&
        svd.sigma(j) - svd.sigma(j + 1) < SpectralGradient::kTieGap) {
      out.degenerate = true;
      break;
    }
  }
  out.gradient = svd.U * weights.asDiagonal() * svd.V.transpose();
  return out;
}

SpectralGradient spectral_concave_grad(const Matrix& m, const RegularizerSpec& spec) {
  if (spec.kind() == PenaltyKind::Nuclear) {
    require_finite(m, "spectral_concave_grad");
    return {Matrix::Zero(m.rows(), m.cols()), false};
  }
  return spectral_concave_grad(svd_decompose(m), spec);
}

Vector shrink_into_l1_ball(const Vector& sigma, double threshold, double omega) {
  if (!(omega > 0.0)) throw ParameterError("shrink_into_l1_ball: omega must be > 0");
  if (!(threshold >= 0.0)) throw ParameterError("shrink_into_l1_ball: threshold must be >= 0");
  Vector s = (sigma.array() - threshold).cwiseMax(0.0);
  if (s.sum() <= omega) return s;

  // Water level theta with sum_j max(sigma_j - theta, 0) == omega.
  std::vector<double> sorted(sigma.data(), sigma.data() + sigma.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double level = threshold;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - omega) / static_cast<double>(k + 1);
    if (sorted[k] > candidate) level = candidate;
  }
  return (sigma.array() - level).cwiseMax(0.0);
}

Matrix prox_nuclear_in_ball(const Matrix& m, double threshold, double omega) {
  const SvdTriple svd = svd_decompose(m);
  const Vector s = shrink_into_l1_ball(svd.sigma, threshold, omega);
  return svd.U * s.asDiagonal() * svd.V.transpose();
}

TopSplit split_top(const Matrix& delta, int r) {
  const Eigen::Index d = std::min(delta.rows(), delta.cols());
  if (r < 1 || 2 * static_cast<Eigen::Index>(r) > d) {
    throw ParameterError("split_top: need 1 <= r and 2r <= min(d1, d2)");
  }
  const SvdTriple svd = svd_decompose(delta);
  const Eigen::Index k = 2 * r;
  TopSplit out;
  out.top = svd.U.leftCols(k) * svd.sigma.head(k).asDiagonal() * svd.V.leftCols(k).transpose();
  out.tail = svd.U.rightCols(d - k) * svd.sigma.tail(d - k).asDiagonal() *
             svd.V.rightCols(d - k).transpose();
  return out;
}

SubspacePair::SubspacePair(Matrix u, Matrix v) : u_(std::move(u)), v_(std::move(v)) {
  if (u_.cols() != v_.cols()) {
    throw ParameterError("SubspacePair: U_S and V_S must have the same number of columns");
  }
  if (orthonormality_defect(u_) > 1e-10 || orthonormality_defect(v_) > 1e-10) {
    throw ParameterError("SubspacePair: columns are not orthonormal");
  }
}

SubspacePair SubspacePair::select(const Matrix& u, const Matrix& v,
                                  const std::vector<int>& indices) {
  Matrix us(u.rows(), static_cast<Eigen::Index>(indices.size()));
  Matrix vs(v.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int j = indices[k];
    if (j < 0 || j >= u.cols() || j >= v.cols()) {
      throw ParameterError("SubspacePair::select: index out of range");
    }
    us.col(static_cast<Eigen::Index>(k)) = u.col(j);
    vs.col(static_cast<Eigen::Index>(k)) = v.col(j);
  }
  return {std::move(us), std::move(vs)};
}

Matrix subspace_project(const Matrix& m, const SubspacePair& sub, Subspace which) {
  if (m.rows() != sub.u().rows() || m.cols() != sub.v().rows()) {
    throw ParameterError("subspace_project: dimension mismatch");
  }
  const Matrix& u = sub.u();
  const Matrix& v = sub.v();
  if (which == Subspace::A) {
    return u * (u.transpose() * m * v) * v.transpose();
  }
  // (I - UU^T) M (I - VV^T), expanded to avoid forming the d x d projectors.
  const Matrix left = m - u * (u.transpose() * m);
  return left - (left * v) * v.transpose();
}

LowRankDecomposition decompose_2r(const Matrix& delta, const SubspacePair& star) {
  if (delta.rows() != star.u().rows() || delta.cols() != star.v().rows()) {
    throw ParameterError("decompose_2r: dimension mismatch");
  }
  LowRankDecomposition out;
  out.perp = subspace_project(delta, star, Subspace::B);
  out.low = delta - out.perp;
  return out;
}

}  // namespace lrmr
