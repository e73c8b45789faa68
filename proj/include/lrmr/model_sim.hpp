#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lrmr/core.hpp"
#include "lrmr/covariance.hpp"

namespace lrmr {

/// Low-rank ground truth Theta* = U* diag(spectrum) V*^T.
struct TrueModel {
  Matrix theta;
  Vector spectrum;  // nonincreasing, positive, length r
  Matrix u;         // d1 x r, orthonormal columns
  Matrix v;         // d2 x r

  int rank() const { return static_cast<int>(spectrum.size()); }
};

/// Haar-random factors; deterministic in seed.
TrueModel gen_true_low_rank(int d1, int d2, int r, const Vector& spectrum, std::uint64_t seed);

/// N covariate matrices stored as an M x N block whose column i is vec(X_i).
struct CovariateStack {
  Eigen::Index d1 = 0;
  Eigen::Index d2 = 0;
  Matrix columns;

  Eigen::Index size() const { return columns.cols(); }
  Eigen::Index dim() const { return d1 * d2; }
  Matrix matrix(Eigen::Index i) const;
};

/// Missing-entry mask, M x N, true where an entry is missing.
using MissingMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// vec(X_i) drawn from stream (seed, Design, i); independent of N or scheduling.
CovariateStack sample_design(Eigen::Index n, Eigen::Index d1, Eigen::Index d2,
                             const Covariance& sigma_x, std::uint64_t seed);

/// y_i = <<X_i, Theta*>> + eps_i with eps_i ~ N(0, sigma_eps^2).
Vector observe(const CovariateStack& x, const TrueModel& model, double sigma_eps,
               std::uint64_t seed);

CovariateStack corrupt_additive(const CovariateStack& x, const Covariance& sigma_w,
                                std::uint64_t seed);

struct MissingObservation {
  CovariateStack z;  // masked entries stored as 0
  MissingMask mask;
};

MissingObservation corrupt_missing(const CovariateStack& x, double rho, std::uint64_t seed);

struct NoCorruption {};
struct AdditiveNoise {
  Covariance sigma_w;
};
struct MissingData {
  double rho = 0.0;
};
using Corruption = std::variant<NoCorruption, AdditiveNoise, MissingData>;

std::string corruption_name(const Corruption& c);
/// Scalar summary: rho for missing data, mean noise variance for additive, 0 otherwise.
double corruption_parameter(const Corruption& c);

/// What an estimator is allowed to see: y, corrupted Z and the corruption metadata.
struct ObservationSet {
  CovariateStack z;
  Vector y;
  Corruption corruption = NoCorruption{};
  MissingMask mask;  // empty unless corruption is MissingData
  std::uint64_t seed = 0;

  Eigen::Index size() const { return y.size(); }
  /// Checks sizes and the mask convention; throws DataError.
  void validate() const;
};

/// Estimate rho as the masked fraction. Not used by the default estimators.
double estimate_missing_rate(const MissingMask& mask);

struct SimulationConfig {
  int d1 = 0;
  int d2 = 0;
  Vector spectrum;  // length r
  std::optional<Covariance> sigma_x;  // defaults to identity
  Corruption corruption = NoCorruption{};
  double sigma_eps = 0.0;
  Eigen::Index n = 0;

  Covariance design_covariance() const;
};

/// An observation set together with the simulation sidecar used for evaluation.
struct Dataset {
  ObservationSet observations;
  std::optional<TrueModel> truth;
  Covariance sigma_x = Covariance::identity(1);
  double sigma_eps = 0.0;
};

/// Full generation pipeline; a pure function of (config, seed, replicate).
Dataset simulate(const SimulationConfig& config, std::uint64_t seed, int replicate);

}  // namespace lrmr
