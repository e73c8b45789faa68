#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lrmr/analysis.hpp"
#include "lrmr/model_sim.hpp"
#include "lrmr/regularizers.hpp"

namespace lrmr {

inline constexpr int kConfigSchemaVersion = 1;

/// How lambda is chosen per dataset.
struct LambdaRule {
  enum class Kind {
    Fixed,      // the value itself
    Rate,       // c * max{phi sqrt(log dt / N), omega tau dt log dt / N}
    Gradient,   // c * ||grad L(Theta*)||_op (oracle)
  };
  Kind kind = Kind::Fixed;
  double value = 0.0;

  /// "fixed:0.5", "rate:0.25", "gradient:2"; a bare number means fixed.
  static LambdaRule parse(const std::string& text);
  std::string describe() const;
};

struct OmegaRule {
  enum class Kind { Ratio, Fixed };
  Kind kind = Kind::Ratio;
  double value = 1.5;

  /// "ratio 1.5" (times ||Theta*||_*) or "fixed 40".
  static OmegaRule parse(const std::string& text);
  std::string describe() const;
};

struct RegularizerRule {
  PenaltyKind kind = PenaltyKind::Scad;
  LambdaRule lambda;
  double shape = 0.0;  // 0 selects the default for the kind
};

enum class InitKind { Zero, Random };

struct ExperimentConfig {
  int d1 = 0;
  int d2 = 0;
  Vector spectrum;
  std::optional<Covariance> sigma_x;
  Corruption corruption = NoCorruption{};
  double sigma_eps = 0.0;
  std::vector<Eigen::Index> n_grid;
  int replicates = 1;
  std::vector<RegularizerRule> regularizers;
  OmegaRule omega;
  int max_iters = 5000;
  double tol = 1e-6;
  std::optional<double> step;
  double shrink = 0.5;
  InitKind init = InitKind::Zero;
  SpectrumThreshold threshold = SpectrumThreshold::Nu;
  std::uint64_t seed = 1;
  std::string output;
  int threads = 1;
  /// Fill runtime_ms; off by default so reruns are byte-identical.
  bool timing = false;

  int rank() const { return static_cast<int>(spectrum.size()); }
  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// Parses the key = value format; errors name the source and line.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);
/// Canonical text that parses back to the same configuration.
std::string to_text(const ExperimentConfig& config);

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
ExperimentConfig preset_config(const std::string& name);
std::string preset_text(const std::string& name);

}  // namespace lrmr
