#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lrmr/analysis.hpp"
#include "lrmr/config.hpp"
#include "lrmr/solver.hpp"

namespace lrmr {

/// One solve: a CSV row.
struct ExperimentRow {
  std::uint64_t seed = 0;
  int replicate = 0;
  int d1 = 0;
  int d2 = 0;
  int r = 0;
  Eigen::Index n = 0;
  std::string corruption;
  double corruption_param = 0.0;
  double sigma_eps = 0.0;
  std::string reg_kind;
  double lambda = 0.0;
  double shape = 0.0;
  double omega = 0.0;
  /// Empty when the dataset has no true model.
  std::optional<RecoveryReport> recovery;
  double stationarity_gap = 0.0;
  int iterations = 0;
  bool converged = false;
  std::optional<double> runtime_ms;
};

/// Lambda for one dataset; oracle rules need the true model.
double resolve_lambda(const LambdaRule& rule, const Dataset& data, const SurrogatePair& pair,
                      double omega);

double resolve_omega(const OmegaRule& rule, const Vector& spectrum);

RegularizerSpec make_spec(const RegularizerRule& rule, double lambda);

SolverConfig solver_config(const ExperimentConfig& config, double omega);

/// Rows ordered by (N, regularizer, replicate) whatever the thread count.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config);

std::string csv_header();
std::string csv_row(const ExperimentRow& row);
void write_csv(std::ostream& os, const std::vector<ExperimentRow>& rows);

/// %.17g with "nan", "inf", "-inf" for non-finite values.
std::string format_real(double v);

}  // namespace lrmr
