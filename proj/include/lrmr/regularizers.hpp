#pragma once

#include <string>
#include <string_view>

namespace lrmr {

enum class PenaltyKind { Nuclear, Scad, Mcp };

std::string_view to_string(PenaltyKind kind);
PenaltyKind parse_penalty_kind(std::string_view name);

/**
 * Folded-concave penalty p_lambda applied to singular values.
 *
 * p_lambda = q_lambda + lambda*|t| where q_lambda is concave and smooth.
 * shape is the SCAD `a` (> 2) or the MCP `b` (> 0); Nuclear ignores it.
 * mu bounds the curvature of q_lambda and nu is where p_lambda goes flat.
 */
class RegularizerSpec {
 public:
  static constexpr double kDefaultScadShape = 3.7;
  static constexpr double kDefaultMcpShape = 2.0;

  RegularizerSpec(PenaltyKind kind, double lambda, double shape);

  static RegularizerSpec nuclear(double lambda);
  static RegularizerSpec scad(double lambda, double a = kDefaultScadShape);
  static RegularizerSpec mcp(double lambda, double b = kDefaultMcpShape);

  PenaltyKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double shape() const { return shape_; }
  double mu() const { return mu_; }
  /// +infinity for Nuclear.
  double nu() const { return nu_; }

  RegularizerSpec with_lambda(double lambda) const;

 private:
  PenaltyKind kind_;
  double lambda_;
  double shape_;
  double mu_;
  double nu_;
};

// Scalar machinery. All functions are pure.

double scalar_penalty(double t, const RegularizerSpec& spec);

/// p'_lambda(t). Returns lambda at t == 0 (right limit); odd in t.
double scalar_penalty_deriv(double t, const RegularizerSpec& spec);

double scalar_concave(double t, const RegularizerSpec& spec);

/// q'_lambda(t), with q'_lambda(0) = 0.
double scalar_concave_deriv(double t, const RegularizerSpec& spec);

/// argmin_x 0.5*(x - v)^2 + step * p_lambda(x). Requires step * mu < 1.
double scalar_prox(double v, const RegularizerSpec& spec, double step);

}  // namespace lrmr
