#include "lrmr/loss.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "lrmr/random.hpp"
#include "lrmr/spectral_ops.hpp"

namespace lrmr {

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::Clean:
      return "clean";
    case Regime::Additive:
      return "additive";
    case Regime::Missing:
      return "missing";
  }
  return "unknown";
}

struct SurrogatePair::Impl {
  SurrogateProvenance provenance;
  Vector upsilon;
  // Materialized form.
  Matrix gamma;
  bool materialized = false;
  // Operator form: Gamma v = zs (zs^T v) / n - correction(v).
  Matrix zs;
  std::optional<Covariance> sigma_w;
  Vector missing_diag;  // rho * diag(zs zs^T / n)
};

SurrogatePair::SurrogatePair(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

Matrix gramian(const Matrix& columns) {
  const Eigen::Index m = columns.rows();
  const double inv_n = 1.0 / static_cast<double>(columns.cols());
  Matrix g = Matrix::Zero(m, m);
  g.selfadjointView<Eigen::Lower>().rankUpdate(columns, inv_n);
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

SurrogatePair SurrogatePair::build(const ObservationSet& obs, Options options) {
  obs.validate();
  auto impl = std::make_shared<Impl>();
  SurrogateProvenance& p = impl->provenance;
  p.n = obs.size();
  p.d1 = obs.z.d1;
  p.d2 = obs.z.d2;
  const Eigen::Index m = obs.z.dim();
  const double inv_n = 1.0 / static_cast<double>(p.n);
  impl->materialized = m <= options.materialize_limit;

  if (const auto* add = std::get_if<AdditiveNoise>(&obs.corruption)) {
    p.regime = Regime::Additive;
    p.sigma_w = add->sigma_w.describe();
    if (add->sigma_w.dim() != m) throw ConfigError("surrogate: Sigma_w dimension != d1*d2");
    impl->sigma_w = add->sigma_w;
  } else if (const auto* mis = std::get_if<MissingData>(&obs.corruption)) {
    p.regime = Regime::Missing;
    p.rho = mis->rho;
    if (!(mis->rho >= 0.0 && mis->rho < 1.0)) throw ParameterError("surrogate: rho must lie in [0, 1)");
  }

  // Z~ = Z / (1 - rho); for rho = 0 this is Z itself.
  const bool rescale = p.regime == Regime::Missing && p.rho > 0.0;
  if (rescale) {
    impl->zs = obs.z.columns / (1.0 - p.rho);
  } else {
    impl->zs = obs.z.columns;
  }
  impl->upsilon = impl->zs * obs.y * inv_n;

  if (rescale) {
    impl->missing_diag = p.rho * impl->zs.rowwise().squaredNorm() * inv_n;
  }

  if (impl->materialized) {
    impl->gamma = gramian(impl->zs);
    if (impl->sigma_w) impl->gamma -= impl->sigma_w->dense();
    if (rescale) impl->gamma.diagonal() -= impl->missing_diag;
    impl->zs.resize(0, 0);
  }
  return SurrogatePair(std::move(impl));
}

SurrogatePair SurrogatePair::from_moments(Matrix gamma, Vector upsilon, Eigen::Index d1,
                                          Eigen::Index d2) {
  const Eigen::Index m = d1 * d2;
  if (d1 < 1 || d2 < 1) throw ParameterError("surrogate: dimensions must be >= 1");
  if (gamma.rows() != m || gamma.cols() != m || upsilon.size() != m) {
    throw ParameterError("surrogate: moment shapes do not match d1*d2");
  }
  if (!gamma.allFinite() || !upsilon.allFinite()) throw DataError("surrogate: non-finite moments");
  if ((gamma - gamma.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw ParameterError("surrogate: Gamma must be symmetric");
  }
  auto impl = std::make_shared<Impl>();
  impl->provenance.d1 = d1;
  impl->provenance.d2 = d2;
  impl->gamma = std::move(gamma);
  impl->upsilon = std::move(upsilon);
  impl->materialized = true;
  return SurrogatePair(std::move(impl));
}

Eigen::Index SurrogatePair::d1() const { return impl_->provenance.d1; }
Eigen::Index SurrogatePair::d2() const { return impl_->provenance.d2; }
Eigen::Index SurrogatePair::dim() const { return d1() * d2(); }
Regime SurrogatePair::regime() const { return impl_->provenance.regime; }
const SurrogateProvenance& SurrogatePair::provenance() const { return impl_->provenance; }
bool SurrogatePair::materialized() const { return impl_->materialized; }
const Vector& SurrogatePair::upsilon() const { return impl_->upsilon; }

const Matrix& SurrogatePair::gamma() const {
  if (!impl_->materialized) throw Error("surrogate: Gamma is held in operator form");
  return impl_->gamma;
}

Matrix SurrogatePair::materialize() const {
  if (impl_->materialized) return impl_->gamma;
  Matrix g = gramian(impl_->zs);
  if (impl_->sigma_w) g -= impl_->sigma_w->dense();
  if (impl_->missing_diag.size() != 0) g.diagonal() -= impl_->missing_diag;
  return g;
}

Vector SurrogatePair::apply_gamma(const Vector& v) const {
  if (v.size() != dim()) throw ParameterError("surrogate: vector length != d1*d2");
  if (impl_->materialized) return impl_->gamma * v;
  const double inv_n = 1.0 / static_cast<double>(impl_->provenance.n);
  const Vector t = impl_->zs.transpose() * v;
  Vector out = impl_->zs * t * inv_n;
  if (impl_->sigma_w) out -= impl_->sigma_w->apply(v);
  if (impl_->missing_diag.size() != 0) out -= impl_->missing_diag.cwiseProduct(v);
  return out;
}

namespace {

void check_shape(const SurrogatePair& pair, const Matrix& theta) {
  if (theta.rows() != pair.d1() || theta.cols() != pair.d2()) {
    throw ParameterError("surrogate: Theta has the wrong shape");
  }
}

}  // namespace

double SurrogatePair::value(const Matrix& theta) const {
  check_shape(*this, theta);
  const Vector v = vec(theta);
  return 0.5 * v.dot(apply_gamma(v)) - impl_->upsilon.dot(v);
}

Matrix SurrogatePair::gradient(const Matrix& theta) const {
  check_shape(*this, theta);
  const Vector v = vec(theta);
  return unvec(apply_gamma(v) - impl_->upsilon, d1(), d2());
}

double SurrogatePair::gamma_norm_estimate(int iterations) const {
  Rng rng(0x5eed, {static_cast<std::uint64_t>(Stream::Probe)});
  Vector x(dim());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.gaussian();
  x.normalize();
  double estimate = 0.0;
  for (int k = 0; k < iterations; ++k) {
    Vector y = apply_gamma(x);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    estimate = std::max(estimate, norm);
    x = y / norm;
  }
  return estimate;
}

namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.gaussian();
  }
  return m;
}

Matrix orthonormal_columns(Eigen::Index d, Eigen::Index k, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(d, k, rng));
  return qr.householderQ() * Matrix::Identity(d, k);
}

// Direction families for the LSC probe.
Matrix probe_direction(Eigen::Index d1, Eigen::Index d2, int family, Rng& rng) {
  const Eigen::Index d = std::min(d1, d2);
  switch (family % 3) {
    case 0:
      return gaussian_matrix(d1, d2, rng);
    case 1: {
      const Eigen::Index k = std::min<Eigen::Index>(d, 1 + rng.uniform_int(0, 2));
      return gaussian_matrix(d1, k, rng) * gaussian_matrix(d2, k, rng).transpose();
    }
    default: {
      // Geometrically decaying spectrum with random singular vectors.
      const Matrix u = orthonormal_columns(d1, d, rng);
      const Matrix v = orthonormal_columns(d2, d, rng);
      const double decay = rng.uniform(0.1, 0.7);
      Vector s(d);
      for (Eigen::Index j = 0; j < d; ++j) s(j) = std::pow(decay, static_cast<double>(j));
      return u * s.asDiagonal() * v.transpose();
    }
  }
}

void summarize(ConditionReport& report) {
  report.trials = static_cast<int>(report.margins.size());
  if (report.margins.empty()) return;
  std::vector<double> sorted = report.margins;
  std::sort(sorted.begin(), sorted.end());
  report.min_margin = sorted.front();
  const std::size_t n = sorted.size();
  report.median_margin = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

void record(ConditionReport& report, double lhs, double rhs) {
  const double margin = lhs - rhs;
  report.margins.push_back(margin);
  if (margin < -kConditionSlack * (std::abs(lhs) + std::abs(rhs))) ++report.violations;
}

}  // namespace

ConditionReport verify_lsc(const SurrogatePair& pair, const Matrix& theta_star, int trials,
                           double alpha1, double tau1, std::uint64_t seed) {
  if (trials < 1) throw ParameterError("verify_lsc: trials must be >= 1");
  check_shape(pair, theta_star);
  const Eigen::Index d1 = pair.d1();
  const Eigen::Index d2 = pair.d2();
  Rng rng(seed, {static_cast<std::uint64_t>(Stream::Probe), 1});
  const Matrix g0 = pair.gradient(theta_star);

  ConditionReport report;
  for (int t = 0; t < trials; ++t) {
    Matrix delta;
    if (t == 0 && pair.materialized()) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(pair.gamma());
      delta = unvec(eig.eigenvectors().col(0), d1, d2);
    } else {
      delta = probe_direction(d1, d2, t, rng);
    }
    delta *= std::exp(rng.uniform(-2.0, 2.0)) / std::max(delta.norm(), 1e-300);
    const double lhs = inner(pair.gradient(theta_star + delta) - g0, delta);
    const double nuc = nuclear_norm(delta);
    record(report, lhs, alpha1 * delta.squaredNorm() - tau1 * nuc * nuc);
  }
  summarize(report);
  return report;
}

Matrix sample_cone_direction(Eigen::Index d1, Eigen::Index d2, int r, Rng& rng) {
  if (r < 1) throw ParameterError("sample_cone_direction: r must be >= 1");
  const Eigen::Index d = std::min(d1, d2);
  const Eigen::Index top = std::min<Eigen::Index>(2 * r, d);
  const Matrix u = orthonormal_columns(d1, d, rng);
  const Matrix v = orthonormal_columns(d2, d, rng);
  Vector s = Vector::Zero(d);
  for (Eigen::Index j = 0; j < top; ++j) s(j) = rng.uniform(0.2, 1.0);
  if (d > top) {
    // Tail mass is a random fraction of the 7 * ||top||_* budget. Sorting can
    // only move mass into T, so the cone condition survives any reordering.
    Vector w(d - top);
    for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = rng.uniform();
    const double budget = 7.0 * s.head(top).sum() * rng.uniform();
    if (w.sum() > 0.0) s.tail(d - top) = w * (budget / w.sum());
  }
  return u * s.asDiagonal() * v.transpose();
}

ConditionReport verify_rsc(const SurrogatePair& pair, int trials, double alpha2, int r,
                           std::uint64_t seed) {
  if (trials < 1) throw ParameterError("verify_rsc: trials must be >= 1");
  const Eigen::Index d1 = pair.d1();
  const Eigen::Index d2 = pair.d2();
  Rng rng(seed, {static_cast<std::uint64_t>(Stream::Probe), 2});
  ConditionReport report;
  for (int t = 0; t < trials; ++t) {
    const Matrix theta = gaussian_matrix(d1, d2, rng);
    Matrix delta = sample_cone_direction(d1, d2, r, rng);
    delta *= std::exp(rng.uniform(-2.0, 2.0)) / std::max(delta.norm(), 1e-300);
    const double lhs = pair.value(theta + delta) - pair.value(theta) - inner(pair.gradient(theta), delta);
    record(report, lhs, alpha2 * delta.squaredNorm());
  }
  summarize(report);
  return report;
}

BoundQuantities bound_quantities(const BoundInputs& in) {
  if (in.d1 < 1 || in.d2 < 1 || in.n < 1) throw ParameterError("bound_quantities: invalid dimensions");
  const double lmin = in.sigma_x.min_eigenvalue();
  if (!(lmin > 0.0)) throw ParameterError("bound_quantities: Sigma_x must be positive definite");
  const double sx = in.sigma_x.op_norm();
  BoundQuantities out;
  if (const auto* mis = std::get_if<MissingData>(&in.corruption)) {
    const double k = sx / (1.0 - mis->rho);
    out.tau = lmin * std::max(k * k * k * k / (lmin * lmin), 1.0);
    out.phi = k * (k + in.sigma_eps) * in.theta_star_frob;
  } else {
    double sw = 0.0;
    if (const auto* add = std::get_if<AdditiveNoise>(&in.corruption)) sw = add->sigma_w.op_norm();
    out.tau = lmin * std::max((sx * sx + sw * sw) / (lmin * lmin), 1.0);
    out.phi = (sx + sw) * (sx + in.sigma_eps) * in.theta_star_frob;
  }
  const double dt = static_cast<double>(std::max(in.d1, in.d2));
  const double n = static_cast<double>(in.n);
  const double log_d = std::log(dt);
  out.lambda_floor = in.constant * std::max(out.phi * std::sqrt(log_d / n),
                                            in.omega * out.tau * dt * log_d / n);
  return out;
}

}  // namespace lrmr
