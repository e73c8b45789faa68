#include "lrmr/model_sim.hpp"

#include <cmath>

#include "lrmr/random.hpp"

namespace lrmr {

namespace {

// Haar-distributed d x k matrix with orthonormal columns (QR with sign fix).
Matrix haar_orthonormal(Eigen::Index d, Eigen::Index k, Rng& rng) {
  Matrix g(d, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = rng.gaussian();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, k);
  const Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace

TrueModel gen_true_low_rank(int d1, int d2, int r, const Vector& spectrum, std::uint64_t seed) {
  if (d1 < 1 || d2 < 1) throw ParameterError("gen_true_low_rank: dimensions must be >= 1");
  if (r < 1 || r > std::min(d1, d2)) {
    throw ParameterError("gen_true_low_rank: need 1 <= r <= min(d1, d2)");
  }
  if (spectrum.size() != r) throw ParameterError("gen_true_low_rank: spectrum length must equal r");
  for (Eigen::Index j = 0; j < spectrum.size(); ++j) {
    if (!std::isfinite(spectrum(j)) || !(spectrum(j) > 0.0)) {
      throw ParameterError("gen_true_low_rank: spectrum must be positive");
    }
    if (j > 0 && spectrum(j) > spectrum(j - 1)) {
      throw ParameterError("gen_true_low_rank: spectrum must be nonincreasing");
    }
  }
  Rng rng(seed, {static_cast<std::uint64_t>(Stream::Truth)});
  TrueModel out;
  out.u = haar_orthonormal(d1, r, rng);
  out.v = haar_orthonormal(d2, r, rng);
  out.spectrum = spectrum;
  out.theta = out.u * spectrum.asDiagonal() * out.v.transpose();
  return out;
}

Matrix CovariateStack::matrix(Eigen::Index i) const {
  return unvec(columns.col(i), d1, d2);
}

CovariateStack sample_design(Eigen::Index n, Eigen::Index d1, Eigen::Index d2,
                             const Covariance& sigma_x, std::uint64_t seed) {
  if (n < 1) throw ParameterError("sample_design: N must be >= 1");
  if (sigma_x.dim() != d1 * d2) throw ParameterError("sample_design: covariance dimension != d1*d2");
  CovariateStack out{d1, d2, Matrix::Zero(d1 * d2, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng(seed, {static_cast<std::uint64_t>(Stream::Design), static_cast<std::uint64_t>(i)});
    sigma_x.add_sample(rng, out.columns.col(i));
  }
  return out;
}

Vector observe(const CovariateStack& x, const TrueModel& model, double sigma_eps,
               std::uint64_t seed) {
  if (model.theta.rows() != x.d1 || model.theta.cols() != x.d2) {
    throw ParameterError("observe: covariate and parameter dimensions differ");
  }
  if (!std::isfinite(sigma_eps) || sigma_eps < 0.0) {
    throw ParameterError("observe: sigma_eps must be >= 0");
  }
  Vector y = x.columns.transpose() * vec(model.theta);
  if (sigma_eps > 0.0) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      Rng rng(seed, {static_cast<std::uint64_t>(Stream::ResponseNoise), static_cast<std::uint64_t>(i)});
      y(i) += sigma_eps * rng.gaussian();
    }
  }
  return y;
}

CovariateStack corrupt_additive(const CovariateStack& x, const Covariance& sigma_w,
                                std::uint64_t seed) {
  if (sigma_w.dim() != x.dim()) throw ParameterError("corrupt_additive: covariance dimension != d1*d2");
  CovariateStack z = x;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Rng rng(seed, {static_cast<std::uint64_t>(Stream::AdditiveNoise), static_cast<std::uint64_t>(i)});
    sigma_w.add_sample(rng, z.columns.col(i));
  }
  return z;
}

MissingObservation corrupt_missing(const CovariateStack& x, double rho, std::uint64_t seed) {
  if (!std::isfinite(rho) || rho < 0.0 || rho >= 1.0) {
    throw ParameterError("corrupt_missing: rho must lie in [0, 1)");
  }
  MissingObservation out{x, MissingMask::Constant(x.dim(), x.size(), false)};
  if (rho == 0.0) return out;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Rng rng(seed, {static_cast<std::uint64_t>(Stream::MissingMask), static_cast<std::uint64_t>(i)});
    for (Eigen::Index k = 0; k < x.dim(); ++k) {
      if (rng.uniform() < rho) {
        out.mask(k, i) = true;
        out.z.columns(k, i) = 0.0;
      }
    }
  }
  return out;
}

std::string corruption_name(const Corruption& c) {
  if (std::holds_alternative<AdditiveNoise>(c)) return "additive";
  if (std::holds_alternative<MissingData>(c)) return "missing";
  return "none";
}

double corruption_parameter(const Corruption& c) {
  if (const auto* add = std::get_if<AdditiveNoise>(&c)) return add->sigma_w.mean_variance();
  if (const auto* mis = std::get_if<MissingData>(&c)) return mis->rho;
  return 0.0;
}

void ObservationSet::validate() const {
  if (y.size() < 1) throw DataError("observations: N must be >= 1");
  if (z.size() != y.size()) throw DataError("observations: number of covariates != length of y");
  if (z.columns.rows() != z.dim()) throw DataError("observations: covariate block has wrong height");
  if (!y.allFinite() || !z.columns.allFinite()) throw DataError("observations: non-finite values");
  if (const auto* mis = std::get_if<MissingData>(&corruption)) {
    if (!(mis->rho >= 0.0 && mis->rho < 1.0)) throw ParameterError("observations: rho must lie in [0, 1)");
    if (mask.size() != 0) {
      if (mask.rows() != z.dim() || mask.cols() != z.size()) {
        throw DataError("observations: mask shape differs from covariates");
      }
      for (Eigen::Index i = 0; i < mask.cols(); ++i) {
        for (Eigen::Index k = 0; k < mask.rows(); ++k) {
          if (mask(k, i) && z.columns(k, i) != 0.0) {
            throw DataError("observations: masked entry is not stored as zero");
          }
        }
      }
    }
  } else if (mask.size() != 0) {
    throw DataError("observations: mask present without missing-data corruption");
  }
  if (const auto* add = std::get_if<AdditiveNoise>(&corruption)) {
    if (add->sigma_w.dim() != z.dim()) throw DataError("observations: Sigma_w dimension != d1*d2");
  }
}

double estimate_missing_rate(const MissingMask& mask) {
  if (mask.size() == 0) return 0.0;
  return static_cast<double>(mask.count()) / static_cast<double>(mask.size());
}

Covariance SimulationConfig::design_covariance() const {
  return sigma_x ? *sigma_x : Covariance::identity(static_cast<Eigen::Index>(d1) * d2);
}

Dataset simulate(const SimulationConfig& config, std::uint64_t seed, int replicate) {
  const std::uint64_t base = stream_seed(seed, {static_cast<std::uint64_t>(replicate)});
  Dataset out;
  out.sigma_x = config.design_covariance();
  out.sigma_eps = config.sigma_eps;
  out.truth = gen_true_low_rank(config.d1, config.d2, static_cast<int>(config.spectrum.size()),
                                config.spectrum, base);
  const CovariateStack x = sample_design(config.n, config.d1, config.d2, out.sigma_x, base);
  const TrueModel& truth = *out.truth;

  ObservationSet& obs = out.observations;
  obs.y = observe(x, truth, config.sigma_eps, base);
  obs.corruption = config.corruption;
  obs.seed = seed;
  if (const auto* add = std::get_if<AdditiveNoise>(&config.corruption)) {
    obs.z = corrupt_additive(x, add->sigma_w, base);
  } else if (const auto* mis = std::get_if<MissingData>(&config.corruption)) {
    MissingObservation m = corrupt_missing(x, mis->rho, base);
    obs.z = std::move(m.z);
    obs.mask = std::move(m.mask);
  } else {
    obs.z = x;
  }
  return out;
}

}  // namespace lrmr
