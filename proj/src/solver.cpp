#include "lrmr/solver.hpp"

#include <algorithm>
#include <cmath>

#include "lrmr/random.hpp"
#include "lrmr/spectral_ops.hpp"

namespace lrmr {

void SolverConfig::validate() const {
  if (step && !(std::isfinite(*step) && *step > 0.0)) throw ParameterError("solver: step must be > 0");
  if (max_iters < 0) throw ParameterError("solver: max_iters must be >= 0");
  if (!(tol > 0.0)) throw ParameterError("solver: tol must be > 0");
  if (!(omega > 0.0)) throw ParameterError("solver: omega must be > 0");
  if (!(shrink > 0.0 && shrink < 1.0)) throw ParameterError("solver: shrink must lie in (0, 1)");
  if (trace_every < 0) throw ParameterError("solver: trace_every must be >= 0");
  if (reference_step && !(std::isfinite(*reference_step) && *reference_step > 0.0)) {
    throw ParameterError("solver: reference_step must be > 0");
  }
}

namespace {

double concave_part(const Vector& sigma, const RegularizerSpec& spec) {
  if (spec.kind() == PenaltyKind::Nuclear) return 0.0;
  double q = 0.0;
  for (Eigen::Index j = 0; j < sigma.size(); ++j) q += scalar_concave(sigma(j), spec);
  return q;
}

// An iterate together with its SVD, so the next gradient needs no new factorization.
struct Point {
  SvdTriple svd;
  Matrix theta;
  double smooth = 0.0;  // L + Q
  double nuclear = 0.0;
};

Point make_point(const SurrogatePair& pair, const RegularizerSpec& spec, SvdTriple svd) {
  Point p;
  p.theta = svd.reconstruct();
  p.smooth = pair.value(p.theta) + concave_part(svd.sigma, spec);
  p.nuclear = svd.sigma.sum();
  p.svd = std::move(svd);
  return p;
}

Matrix gradient_at(const SurrogatePair& pair, const RegularizerSpec& spec, const Point& p,
                   bool* degenerate) {
  Matrix g = pair.gradient(p.theta);
  if (spec.kind() != PenaltyKind::Nuclear) {
    SpectralGradient sg = spectral_concave_grad(p.svd, spec);
    g += sg.gradient;
    if (degenerate) *degenerate = sg.degenerate;
  } else if (degenerate) {
    *degenerate = false;
  }
  return g;
}

SvdTriple prox_step(const Matrix& point, double threshold, double omega) {
  SvdTriple svd = svd_decompose(point);
  svd.sigma = shrink_into_l1_ball(svd.sigma, threshold, omega);
  return svd;
}

double resolve_reference_step(const SurrogatePair& pair, const RegularizerSpec& spec,
                              const SolverConfig& config) {
  return config.reference_step ? *config.reference_step : reference_step(pair, spec);
}

}  // namespace

double objective(const SurrogatePair& pair, const RegularizerSpec& spec, const Matrix& theta) {
  return pair.value(theta) + spectral_penalty(theta, spec);
}

Matrix smooth_gradient(const SurrogatePair& pair, const RegularizerSpec& spec, const Matrix& theta,
                       bool* degenerate) {
  Matrix g = pair.gradient(theta);
  SpectralGradient sg = spectral_concave_grad(theta, spec);
  if (degenerate) *degenerate = sg.degenerate;
  return g + sg.gradient;
}

double reference_step(const SurrogatePair& pair, const RegularizerSpec& spec) {
  const double lip = pair.gamma_norm_estimate() + spec.mu();
  return lip > 0.0 ? 1.0 / lip : 1.0;
}

double stationarity_gap(const SurrogatePair& pair, const RegularizerSpec& spec,
                        const SolverConfig& config, const Matrix& theta) {
  config.validate();
  const double eta = resolve_reference_step(pair, spec, config);
  const Matrix g = smooth_gradient(pair, spec, theta);
  const Matrix next = prox_nuclear_in_ball(theta - eta * g, eta * spec.lambda(), config.omega);
  return (theta - next).norm() / eta;
}

SolverResult solve(const SurrogatePair& pair, const RegularizerSpec& spec, const SolverConfig& config,
                   const Matrix& init) {
  config.validate();
  if (init.rows() != pair.d1() || init.cols() != pair.d2()) {
    throw ParameterError("solver: init has the wrong shape");
  }
  if (config.step && *config.step * spec.mu() >= 1.0) {
    throw StepSizeError("solver: fixed step violates step * mu < 1");
  }
  const double lambda = spec.lambda();
  const double omega = config.omega;
  const double eta_ref = resolve_reference_step(pair, spec, config);

  SolverResult result;
  result.reference_step = eta_ref;

  // Projection onto the ball leaves feasible points untouched.
  Point cur = make_point(pair, spec, prox_step(init, 0.0, omega));
  auto psi = [lambda](const Point& p) { return p.smooth + lambda * p.nuclear; };
  auto check_finite = [](double value) {
    if (!std::isfinite(value)) throw DivergenceError("solver: objective is not finite");
  };
  check_finite(psi(cur));
  if (config.trace_every > 0) result.objective_trace.push_back(psi(cur));

  int it = 0;
  for (;; ++it) {
    bool degenerate = false;
    const Matrix g = gradient_at(pair, spec, cur, &degenerate);
    if (degenerate) ++result.degenerate_iterations;

    // The gap's prox candidate doubles as the first backtracking trial.
    SvdTriple ref_svd = prox_step(cur.theta - eta_ref * g, eta_ref * lambda, omega);
    Matrix ref_next = ref_svd.reconstruct();
    result.stationarity_gap = (cur.theta - ref_next).norm() / eta_ref;
    if (result.stationarity_gap <= config.tol) {
      result.converged = true;
      break;
    }
    if (it >= config.max_iters) break;

    Point next;
    if (config.step) {
      next = make_point(pair, spec, prox_step(cur.theta - *config.step * g, *config.step * lambda, omega));
    } else {
      double eta = eta_ref;
      SvdTriple trial = std::move(ref_svd);
      for (int k = 0;; ++k) {
        next = make_point(pair, spec, std::move(trial));
        const Matrix d = next.theta - cur.theta;
        const double model = cur.smooth + inner(g, d) + d.squaredNorm() / (2.0 * eta);
        const double slack = 1e-12 * std::max(1.0, std::abs(cur.smooth));
        if (next.smooth <= model + slack || k >= 60) break;
        eta *= config.shrink;
        trial = prox_step(cur.theta - eta * g, eta * lambda, omega);
      }
    }
    check_finite(psi(next));
    cur = std::move(next);
    if (config.trace_every > 0 && (it + 1) % config.trace_every == 0) {
      result.objective_trace.push_back(psi(cur));
    }
  }
  result.iterations = it;
  result.theta_hat = std::move(cur.theta);
  return result;
}

Matrix random_low_rank_init(Eigen::Index d1, Eigen::Index d2, int rank, double scale,
                            std::uint64_t seed) {
  if (rank < 1 || rank > std::min(d1, d2)) throw ParameterError("init: rank out of range");
  if (!(scale >= 0.0)) throw ParameterError("init: scale must be >= 0");
  Rng rng(seed, {static_cast<std::uint64_t>(Stream::Init)});
  Matrix a(d1, rank);
  Matrix b(d2, rank);
  for (Eigen::Index j = 0; j < rank; ++j) {
    for (Eigen::Index i = 0; i < d1; ++i) a(i, j) = rng.gaussian();
    for (Eigen::Index i = 0; i < d2; ++i) b(i, j) = rng.gaussian();
  }
  Matrix theta = a * b.transpose();
  const double nuc = nuclear_norm(theta);
  return nuc > 0.0 ? Matrix(theta * (scale / nuc)) : theta;
}

}  // namespace lrmr
