#include "lrmr/regularizers.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lrmr/core.hpp"

namespace lrmr {

std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::Nuclear:
      return "nuclear";
    case PenaltyKind::Scad:
      return "scad";
    case PenaltyKind::Mcp:
      return "mcp";
  }
  return "unknown";
}

PenaltyKind parse_penalty_kind(std::string_view name) {
  if (name == "nuclear") return PenaltyKind::Nuclear;
  if (name == "scad") return PenaltyKind::Scad;
  if (name == "mcp") return PenaltyKind::Mcp;
  throw ParameterError("unknown penalty kind '" + std::string(name) +
                       "' (expected nuclear, scad or mcp)");
}

RegularizerSpec::RegularizerSpec(PenaltyKind kind, double lambda, double shape)
    : kind_(kind), lambda_(lambda), shape_(shape) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw ParameterError("regularizer: lambda must be finite and >= 0");
  }
  switch (kind) {
    case PenaltyKind::Nuclear:
      mu_ = 0.0;
      nu_ = std::numeric_limits<double>::infinity();
      break;
    case PenaltyKind::Scad:
      if (!std::isfinite(shape) || !(shape > 2.0)) {
        throw ParameterError("regularizer: SCAD requires a > 2");
      }
      mu_ = 1.0 / (shape - 1.0);
      nu_ = shape * lambda;
      break;
    case PenaltyKind::Mcp:
      if (!std::isfinite(shape) || !(shape > 0.0)) {
        throw ParameterError("regularizer: MCP requires b > 0");
      }
      mu_ = 1.0 / shape;
      nu_ = shape * lambda;
      break;
  }
}

RegularizerSpec RegularizerSpec::nuclear(double lambda) {
  return {PenaltyKind::Nuclear, lambda, 0.0};
}

RegularizerSpec RegularizerSpec::scad(double lambda, double a) {
  return {PenaltyKind::Scad, lambda, a};
}

RegularizerSpec RegularizerSpec::mcp(double lambda, double b) {
  return {PenaltyKind::Mcp, lambda, b};
}

RegularizerSpec RegularizerSpec::with_lambda(double lambda) const {
  return {kind_, lambda, shape_};
}

double scalar_penalty(double t, const RegularizerSpec& spec) {
  const double x = std::abs(t);
  const double lam = spec.lambda();
  switch (spec.kind()) {
    case PenaltyKind::Nuclear:
      return lam * x;
    case PenaltyKind::Scad: {
      const double a = spec.shape();
      if (x <= lam) return lam * x;
      if (x <= a * lam) return -(x * x - 2.0 * a * lam * x + lam * lam) / (2.0 * (a - 1.0));
      return (a + 1.0) * lam * lam / 2.0;
    }
    case PenaltyKind::Mcp: {
      const double b = spec.shape();
      if (x <= b * lam) return lam * x - x * x / (2.0 * b);
      return b * lam * lam / 2.0;
    }
  }
  return 0.0;
}

namespace {

// p'_lambda on t >= 0; left limits at the breakpoints.
double penalty_deriv_nonneg(double x, const RegularizerSpec& spec) {
  const double lam = spec.lambda();
  switch (spec.kind()) {
    case PenaltyKind::Nuclear:
      return lam;
    case PenaltyKind::Scad: {
      const double a = spec.shape();
      if (x <= lam) return lam;
      if (x <= a * lam) return (a * lam - x) / (a - 1.0);
      return 0.0;
    }
    case PenaltyKind::Mcp: {
      const double b = spec.shape();
      if (x <= b * lam) return lam - x / b;
      return 0.0;
    }
  }
  return 0.0;
}

}  // namespace

double scalar_penalty_deriv(double t, const RegularizerSpec& spec) {
  const double d = penalty_deriv_nonneg(std::abs(t), spec);
  return t < 0.0 ? -d : d;
}

double scalar_concave(double t, const RegularizerSpec& spec) {
  const double x = std::abs(t);
  const double lam = spec.lambda();
  switch (spec.kind()) {
    case PenaltyKind::Nuclear:
      return 0.0;
    case PenaltyKind::Scad: {
      const double a = spec.shape();
      if (x <= lam) return 0.0;
      if (x <= a * lam) return -(x * x - 2.0 * lam * x + lam * lam) / (2.0 * (a - 1.0));
      return (a + 1.0) * lam * lam / 2.0 - lam * x;
    }
    case PenaltyKind::Mcp: {
      const double b = spec.shape();
      if (x <= b * lam) return -x * x / (2.0 * b);
      return b * lam * lam / 2.0 - lam * x;
    }
  }
  return 0.0;
}

double scalar_concave_deriv(double t, const RegularizerSpec& spec) {
  if (t == 0.0) return 0.0;
  const double x = std::abs(t);
  const double lam = spec.lambda();
  double d = 0.0;
  switch (spec.kind()) {
    case PenaltyKind::Nuclear:
      d = 0.0;
      break;
    case PenaltyKind::Scad: {
      const double a = spec.shape();
      if (x <= lam) {
        d = 0.0;
      } else if (x <= a * lam) {
        d = -(x - lam) / (a - 1.0);
      } else {
        d = -lam;
      }
      break;
    }
    case PenaltyKind::Mcp: {
      const double b = spec.shape();
      d = x <= b * lam ? -x / b : -lam;
      break;
    }
  }
  return t < 0.0 ? -d : d;
}

double scalar_prox(double v, const RegularizerSpec& spec, double step) {
  if (!std::isfinite(step) || !(step > 0.0)) {
    throw ParameterError("scalar_prox: step must be positive and finite");
  }
  if (!(step * spec.mu() < 1.0)) {
    throw StepSizeError("scalar_prox: step * mu must be < 1");
  }
  const double x = std::abs(v);
  const double sgn = v < 0.0 ? -1.0 : 1.0;
  const double lam = spec.lambda();
  double out = 0.0;
  switch (spec.kind()) {
    case PenaltyKind::Nuclear:
      out = std::max(x - step * lam, 0.0);
      break;
    case PenaltyKind::Scad: {
      const double a = spec.shape();
      if (x <= lam * (1.0 + step)) {
        out = std::max(x - step * lam, 0.0);
      } else if (x <= a * lam) {
        out = ((a - 1.0) * x - step * a * lam) / (a - 1.0 - step);
      } else {
        out = x;
      }
      break;
    }
    case PenaltyKind::Mcp: {
      const double b = spec.shape();
      if (x <= step * lam) {
        out = 0.0;
      } else if (x <= b * lam) {
        out = (x - step * lam) / (1.0 - step / b);
      } else {
        out = x;
      }
      break;
    }
  }
  return sgn * out;
}

}  // namespace lrmr
