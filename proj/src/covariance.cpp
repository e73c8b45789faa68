#include "lrmr/covariance.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace lrmr {

struct Covariance::State {
  Kind kind = Kind::Identity;
  Eigen::Index dim = 0;
  double scale = 1.0;
  double phi = 0.0;
  Matrix explicit_sigma;  // Explicit only
  Matrix lower;           // Explicit only: Cholesky factor
  double max_eig = 0.0;
  double min_eig = 0.0;
};

Covariance::Covariance(std::shared_ptr<const State> state) : state_(std::move(state)) {}

namespace {

void extreme_eigenvalues(const Matrix& sigma, double& lo, double& hi) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  lo = eig.eigenvalues().minCoeff();
  hi = eig.eigenvalues().maxCoeff();
}

}  // namespace

Covariance Covariance::identity(Eigen::Index dim, double scale) {
  if (dim < 1) throw ParameterError("covariance: dimension must be >= 1");
  if (!std::isfinite(scale) || scale < 0.0) {
    throw ParameterError("covariance: identity scale must be finite and >= 0");
  }
  auto s = std::make_shared<State>();
  s->kind = Kind::Identity;
  s->dim = dim;
  s->scale = scale;
  s->max_eig = scale;
  s->min_eig = scale;
  return Covariance(std::move(s));
}

Covariance Covariance::ar1(Eigen::Index dim, double phi, double scale) {
  if (dim < 1) throw ParameterError("covariance: dimension must be >= 1");
  if (!std::isfinite(phi) || !(phi > -1.0 && phi < 1.0)) {
    throw ParameterError("covariance: AR1 requires phi in (-1, 1)");
  }
  if (!std::isfinite(scale) || !(scale > 0.0)) {
    throw ParameterError("covariance: AR1 scale must be > 0");
  }
  auto s = std::make_shared<State>();
  s->kind = Kind::Ar1;
  s->dim = dim;
  s->scale = scale;
  s->phi = phi;
  if (phi == 0.0) {
    s->max_eig = s->min_eig = scale;
  } else {
    Matrix dense(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        dense(i, j) = scale * std::pow(phi, static_cast<double>(std::abs(i - j)));
      }
    }
    extreme_eigenvalues(dense, s->min_eig, s->max_eig);
  }
  return Covariance(std::move(s));
}

Covariance Covariance::explicit_matrix(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1) {
    throw ParameterError("covariance: explicit matrix must be square and non-empty");
  }
  if (!sigma.allFinite()) throw ParameterError("covariance: explicit matrix is not finite");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + sigma.cwiseAbs().maxCoeff())) {
    throw ParameterError("covariance: explicit matrix is not symmetric");
  }
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw ParameterError("covariance: explicit matrix is not positive definite");
  }
  auto s = std::make_shared<State>();
  s->kind = Kind::Explicit;
  s->dim = sigma.rows();
  s->explicit_sigma = sigma;
  s->lower = llt.matrixL();
  extreme_eigenvalues(sigma, s->min_eig, s->max_eig);
  return Covariance(std::move(s));
}

Covariance::Kind Covariance::kind() const { return state_->kind; }
Eigen::Index Covariance::dim() const { return state_->dim; }
double Covariance::scale() const { return state_->scale; }
double Covariance::phi() const { return state_->phi; }
double Covariance::op_norm() const { return state_->max_eig; }
double Covariance::min_eigenvalue() const { return state_->min_eig; }

Matrix Covariance::dense() const {
  const State& s = *state_;
  switch (s.kind) {
    case Kind::Identity:
      return s.scale * Matrix::Identity(s.dim, s.dim);
    case Kind::Ar1: {
      Matrix out(s.dim, s.dim);
      for (Eigen::Index i = 0; i < s.dim; ++i) {
        for (Eigen::Index j = 0; j < s.dim; ++j) {
          out(i, j) = s.scale * std::pow(s.phi, static_cast<double>(std::abs(i - j)));
        }
      }
      return out;
    }
    case Kind::Explicit:
      return s.explicit_sigma;
  }
  return {};
}

Vector Covariance::apply(const Vector& v) const {
  if (v.size() != dim()) throw ParameterError("covariance: apply dimension mismatch");
  const State& s = *state_;
  switch (s.kind) {
    case Kind::Identity:
      return s.scale * v;
    case Kind::Explicit:
      return s.explicit_sigma * v;
    case Kind::Ar1:
      break;
  }
  // Toeplitz product in O(dim) per sweep: forward and backward AR recursions.
  const Eigen::Index n = s.dim;
  Vector fwd(n), bwd(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc = s.phi * acc + v(i);
    fwd(i) = acc;
  }
  acc = 0.0;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    acc = s.phi * acc + v(i);
    bwd(i) = acc;
  }
  return s.scale * (fwd + bwd - v);
}

Vector Covariance::diagonal() const {
  if (state_->kind == Kind::Explicit) return state_->explicit_sigma.diagonal();
  return Vector::Constant(dim(), state_->scale);
}

double Covariance::mean_variance() const {
  return diagonal().mean();
}

void Covariance::add_sample(Rng& rng, Eigen::Ref<Vector> out) const {
  const State& s = *state_;
  if (out.size() != s.dim) throw ParameterError("covariance: sample dimension mismatch");
  switch (s.kind) {
    case Kind::Identity: {
      const double sd = std::sqrt(s.scale);
      for (Eigen::Index i = 0; i < s.dim; ++i) out(i) += sd * rng.gaussian();
      return;
    }
    case Kind::Ar1: {
      // Rows of the AR1 Cholesky factor: L(k,0) = phi^k, L(k,j) = phi^(k-j) sqrt(1-phi^2).
      const double sd = std::sqrt(s.scale);
      const double innov = std::sqrt(1.0 - s.phi * s.phi);
      double x = rng.gaussian();
      out(0) += sd * x;
      for (Eigen::Index i = 1; i < s.dim; ++i) {
        x = s.phi * x + innov * rng.gaussian();
        out(i) += sd * x;
      }
      return;
    }
    case Kind::Explicit: {
      Vector g(s.dim);
      for (Eigen::Index i = 0; i < s.dim; ++i) g(i) = rng.gaussian();
      out.noalias() += s.lower.triangularView<Eigen::Lower>() * g;
      return;
    }
  }
}

Vector Covariance::sample(Rng& rng) const {
  Vector out = Vector::Zero(dim());
  add_sample(rng, out);
  return out;
}

std::string Covariance::describe() const {
  std::ostringstream os;
  os << std::setprecision(17);
  switch (state_->kind) {
    case Kind::Identity:
      os << "identity " << state_->scale;
      break;
    case Kind::Ar1:
      os << "ar1 " << state_->phi << ' ' << state_->scale;
      break;
    case Kind::Explicit:
      os << "explicit";
      break;
  }
  return os.str();
}

Covariance Covariance::parse(const std::string& text, Eigen::Index dim) {
  std::istringstream is(text);
  std::string kind;
  is >> kind;
  if (kind == "identity") {
    double scale = 1.0;
    if (!(is >> scale)) scale = 1.0;
    return identity(dim, scale);
  }
  if (kind == "ar1") {
    double phi = 0.0;
    double scale = 1.0;
    if (!(is >> phi)) throw ConfigError("covariance: 'ar1' needs a phi value");
    if (!(is >> scale)) scale = 1.0;
    return ar1(dim, phi, scale);
  }
  throw ConfigError("covariance: unknown kind '" + kind + "' (expected identity or ar1)");
}

}  // namespace lrmr
