#include "lrmr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lrmr/random.hpp"
#include "lrmr/solver.hpp"
#include "lrmr/spectral_ops.hpp"

namespace lrmr {

SpectrumClasses classify_spectrum(const TrueModel& model, const RegularizerSpec& spec,
                                  SpectrumThreshold threshold) {
  if (model.rank() < 1) throw ParameterError("classify_spectrum: empty spectrum");
  const double cut = threshold == SpectrumThreshold::Nu ? spec.nu() : spec.mu();
  SpectrumClasses out;
  for (int j = 0; j < model.rank(); ++j) {
    (model.spectrum(j) >= cut ? out.j1 : out.j2).push_back(j);
  }
  out.r1 = static_cast<int>(out.j1.size());
  out.r2 = static_cast<int>(out.j2.size());
  return out;
}

GradientNorms measure_gradient_norms(const SurrogatePair& pair, const TrueModel& model,
                                     const SpectrumClasses& classes) {
  const Matrix g = pair.gradient(model.theta);
  GradientNorms out;
  out.full = operator_norm(g);
  if (classes.j1.empty()) {
    out.empty_j1 = true;
    return out;
  }
  const SubspacePair sub = SubspacePair::select(model.u, model.v, classes.j1);
  out.projected = operator_norm(sub.u().transpose() * g * sub.v());
  return out;
}

double cone_ratio(const Matrix& delta, int r) {
  const Vector s = singular_values(delta);
  const Eigen::Index top = 2 * static_cast<Eigen::Index>(r);
  if (top >= s.size()) return 0.0;
  const double head = s.head(top).sum();
  return head > 0.0 ? s.tail(s.size() - top).sum() / head : 0.0;
}

RecoveryReport recovery_report(const Matrix& theta_hat, const TrueModel& model,
                               const SurrogatePair& pair, const RegularizerSpec& spec,
                               SpectrumThreshold threshold) {
  const Matrix delta = theta_hat - model.theta;
  RecoveryReport out;
  out.frob_error = delta.norm();
  out.nuclear_error = nuclear_norm(delta);
  out.rank_hat = numerical_rank(theta_hat, kRankHatTolerance);
  const SpectrumClasses classes = classify_spectrum(model, spec, threshold);
  out.r1 = classes.r1;
  out.r2 = classes.r2;
  const GradientNorms norms = measure_gradient_norms(pair, model, classes);
  out.op_norm_full_grad = norms.full;
  out.op_norm_proj_grad = norms.projected;
  out.cone_ratio = cone_ratio(delta, model.rank());
  return out;
}

BoundEvaluation evaluate_bound(const RecoveryReport& report, const RegularizerSpec& spec,
                               double alpha2) {
  const double denom = 2.0 * alpha2 - spec.mu();
  if (!(denom > 0.0)) throw ParameterError("evaluate_bound: requires 2 * alpha2 > mu");
  BoundEvaluation out;
  out.error = report.frob_error;
  out.rhs = std::sqrt(static_cast<double>(report.r1)) / denom * report.op_norm_proj_grad +
            5.0 * std::sqrt(static_cast<double>(report.r2)) / (2.0 * denom) * spec.lambda();
  out.ratio = out.rhs > 0.0 ? out.error / out.rhs : std::numeric_limits<double>::infinity();
  if (out.error == 0.0 && out.rhs == 0.0) out.ratio = 0.0;
  return out;
}

double default_alpha2(const Covariance& sigma_x) { return sigma_x.min_eigenvalue() / 8.0; }

int CheckReport::violations() const {
  int total = 0;
  for (const CheckResult& c : checks) total += c.violations;
  return total;
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

RegularizerSpec random_spec(int trial, Rng& rng) {
  const double lambda = rng.uniform(0.1, 2.0);
  if (trial % 2 == 0) return RegularizerSpec::scad(lambda, rng.uniform(2.1, 6.0));
  return RegularizerSpec::mcp(lambda, rng.uniform(0.5, 4.0));
}

// Records lhs <= rhs with tolerance tol * max(1, scale).
void expect_le(CheckResult& c, double lhs, double rhs, double scale, double tol) {
  const double excess = lhs - rhs;
  c.worst = std::max(c.worst, excess);
  if (excess > tol * std::max(1.0, scale)) ++c.violations;
}

}  // namespace

CheckReport check_lemmas(int trials, std::uint64_t seed, double tol) {
  if (trials < 1) throw ParameterError("check_lemmas: trials must be >= 1");
  CheckResult sub_plus{"penalty/subadditive"}, sub_minus{"penalty/difference"};
  CheckResult q_lower{"concave/monotone_lower"}, q_upper{"concave/monotone_upper"};
  CheckResult q_quad{"concave/quadratic_lower"}, q_tangent{"concave/tangent_upper"};
  CheckResult dec{"split/decomposition"}, pen{"split/penalty_bound"};

  for (int t = 0; t < trials; ++t) {
    Rng rng(seed, {static_cast<std::uint64_t>(Stream::Probe), 100, static_cast<std::uint64_t>(t)});
    const Eigen::Index d1 = rng.uniform_int(2, 8);
    const Eigen::Index d2 = rng.uniform_int(2, 6);
    const RegularizerSpec spec = random_spec(t, rng);
    const double scale = std::exp(rng.uniform(-2.0, 2.5));

    // Subadditivity of P_lambda.
    {
      const Matrix a = scale * gaussian_matrix(d1, d2, rng);
      Matrix b = scale * gaussian_matrix(d1, d2, rng);
      if (t % 10 == 0) b.setZero();
      const double pa = spectral_penalty(a, spec);
      const double pb = spectral_penalty(b, spec);
      const double mag = pa + pb;
      expect_le(sub_plus, spectral_penalty(a + b, spec), pa + pb, mag, tol);
      expect_le(sub_minus, pa - pb, spectral_penalty(a - b, spec), mag, tol);
      sub_plus.trials++;
      sub_minus.trials++;
    }

    // Curvature of Q_lambda.
    {
      const Matrix a = scale * gaussian_matrix(d1, d2, rng);
      const Matrix b = scale * gaussian_matrix(d1, d2, rng);
      const Matrix d = a - b;
      const Matrix ga = spectral_concave_grad(a, spec).gradient;
      const Matrix gb = spectral_concave_grad(b, spec).gradient;
      const double qa = spectral_concave(a, spec);
      const double qb = spectral_concave(b, spec);
      const double cross = inner(ga - gb, d);
      const double sq = d.squaredNorm();
      const double tangent = qb + inner(gb, d);
      const double mag = std::abs(qa) + std::abs(qb) + spec.lambda() * nuclear_norm(d) + sq;
      expect_le(q_lower, -spec.mu() * sq, cross, mag, tol);
      expect_le(q_upper, cross, 0.0, mag, tol);
      expect_le(q_quad, tangent - 0.5 * spec.mu() * sq, qa, mag, tol);
      expect_le(q_tangent, qa, tangent, mag, tol);
      q_lower.trials++;
      q_upper.trials++;
      q_quad.trials++;
      q_tangent.trials++;
    }

    // The 2r decomposition and the penalty bound around a rank-r Theta*.
    {
      const Eigen::Index d = std::min(d1, d2);
      const int r = rng.uniform_int(1, static_cast<int>(std::max<Eigen::Index>(1, d / 2)));
      Vector spectrum(r);
      for (int j = 0; j < r; ++j) spectrum(j) = scale * rng.uniform(0.1, 3.0);
      std::sort(spectrum.data(), spectrum.data() + r, std::greater<>());
      const TrueModel star = gen_true_low_rank(static_cast<int>(d1), static_cast<int>(d2), r, spectrum,
                                               rng.engine()());
      Matrix theta;
      switch (t % 3) {
        case 0:
          theta = scale * gaussian_matrix(d1, d2, rng);
          break;
        case 1:
          theta = star.theta + 0.1 * scale * gaussian_matrix(d1, d2, rng);
          break;
        default:
          theta = star.theta + scale * gaussian_matrix(d1, d2, rng);
          break;
      }
      const Matrix delta = theta - star.theta;
      const LowRankDecomposition parts = decompose_2r(delta, SubspacePair(star.u, star.v));
      const double dn = delta.norm();
      const double rank_excess = numerical_rank(parts.low) - 2.0 * r;
      const double sum_err = (parts.low + parts.perp - delta).norm() - 1e-9 * (1.0 + dn);
      const double orth_err = std::abs(inner(parts.low, parts.perp)) - 1e-9 * (1.0 + dn * dn);
      const double worst = std::max({rank_excess, sum_err, orth_err});
      dec.worst = std::max(dec.worst, worst);
      if (worst > 0.0) ++dec.violations;
      dec.trials++;

      if (2 * r <= d) {
        const TopSplit split = split_top(delta, r);
        const double lhs = spectral_penalty(star.theta, spec) - spectral_penalty(theta, spec);
        const double rhs = spec.lambda() * (nuclear_norm(split.top) - nuclear_norm(split.tail));
        expect_le(pen, lhs, rhs, std::abs(lhs) + std::abs(rhs), tol);
        pen.trials++;
      }
    }
  }
  return CheckReport{{sub_plus, sub_minus, q_lower, q_upper, q_quad, q_tangent, dec, pen}};
}

double gradient_fd_error(const SurrogatePair& pair, const RegularizerSpec& spec, const Matrix& theta,
                         double h) {
  const Matrix g = smooth_gradient(pair, spec, theta);
  auto f = [&](const Matrix& m) { return pair.value(m) + spectral_concave(m, spec); };
  Matrix fd(theta.rows(), theta.cols());
  Matrix probe = theta;
  for (Eigen::Index j = 0; j < theta.cols(); ++j) {
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double up = f(probe);
      probe(i, j) = orig - h;
      const double down = f(probe);
      probe(i, j) = orig;
      fd(i, j) = (up - down) / (2.0 * h);
    }
  }
  return (fd - g).norm() / std::max(1.0, g.norm());
}

Matrix well_separated_matrix(Eigen::Index d1, Eigen::Index d2, const RegularizerSpec& spec,
                             double min_gap, Rng& rng) {
  const Eigen::Index d = std::min(d1, d2);
  std::vector<double> avoid = {0.0, spec.lambda()};
  if (std::isfinite(spec.nu())) avoid.push_back(spec.nu());
  const double hi = std::isfinite(spec.nu()) ? 2.0 * spec.nu() + 2.0 : 5.0 + 2.0 * spec.lambda();
  std::vector<double> s;
  while (static_cast<Eigen::Index>(s.size()) < d) {
    const double x = rng.uniform(0.0, hi);
    bool ok = true;
    for (double a : avoid) ok = ok && std::abs(x - a) >= min_gap;
    for (double a : s) ok = ok && std::abs(x - a) >= min_gap;
    if (ok) s.push_back(x);
  }
  std::sort(s.begin(), s.end(), std::greater<>());
  const Vector sv = Eigen::Map<const Vector>(s.data(), d);
  return orthonormal_columns(d1, d, rng) * sv.asDiagonal() * orthonormal_columns(d2, d, rng).transpose();
}

CheckReport check_gradients(int points, std::uint64_t seed, double tol) {
  if (points < 1) throw ParameterError("check_gradients: points must be >= 1");
  SimulationConfig cfg;
  cfg.d1 = 6;
  cfg.d2 = 5;
  cfg.spectrum = (Vector(2) << 3.0, 1.5).finished();
  cfg.sigma_x = Covariance::ar1(30, 0.3);
  cfg.sigma_eps = 0.5;
  cfg.n = 200;
  const std::vector<std::pair<std::string, Corruption>> regimes = {
      {"clean", NoCorruption{}},
      {"additive", AdditiveNoise{Covariance::identity(30, 0.25)}},
      {"missing", MissingData{0.2}},
  };
  CheckReport report;
  for (std::size_t k = 0; k < regimes.size(); ++k) {
    cfg.corruption = regimes[k].second;
    const Dataset data = simulate(cfg, seed, static_cast<int>(k));
    const SurrogatePair pair = SurrogatePair::build(data.observations);
    CheckResult c{"gradients/" + regimes[k].first};
    Rng rng(seed, {static_cast<std::uint64_t>(Stream::Probe), 200, k});
    for (int t = 0; t < points; ++t) {
      const RegularizerSpec spec = t % 3 == 0   ? RegularizerSpec::scad(1.0)
                                   : t % 3 == 1 ? RegularizerSpec::mcp(1.0)
                                                : RegularizerSpec::nuclear(1.0);
      const Matrix theta = well_separated_matrix(cfg.d1, cfg.d2, spec, 1e-3, rng);
      const double err = gradient_fd_error(pair, spec, theta);
      c.worst = std::max(c.worst, err - tol);
      if (err > tol) ++c.violations;
      c.trials++;
    }
    report.checks.push_back(c);
  }
  return report;
}

CheckReport check_prox(int trials, std::uint64_t seed, double resolution) {
  if (trials < 1) throw ParameterError("check_prox: trials must be >= 1");
  CheckResult value{"prox/objective"}, arg{"prox/argument"};
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed, {static_cast<std::uint64_t>(Stream::Probe), 300, static_cast<std::uint64_t>(t)});
    const RegularizerSpec spec = random_spec(t, rng);
    const double step = rng.uniform(0.05, 0.95) / spec.mu();
    const double v = rng.uniform(-12.0, 12.0);
    const double x = scalar_prox(v, spec, step);
    auto obj = [&](double z) { return 0.5 * (z - v) * (z - v) + step * scalar_penalty(z, spec); };
    const double half = std::abs(v) + spec.nu();
    const auto count = static_cast<long>(std::ceil(2.0 * half / resolution));
    double best = std::numeric_limits<double>::infinity();
    double best_z = 0.0;
    for (long i = 0; i <= count; ++i) {
      const double z = -half + static_cast<double>(i) * resolution;
      const double o = obj(z);
      if (o < best) {
        best = o;
        best_z = z;
      }
    }
    const double excess = obj(x) - best;
    value.worst = std::max(value.worst, excess);
    if (excess > 1e-8) ++value.violations;
    const double dist = std::abs(x - best_z);
    arg.worst = std::max(arg.worst, dist - 5e-4);
    if (dist > 5e-4) ++arg.violations;
    value.trials++;
    arg.trials++;
  }
  return CheckReport{{value, arg}};
}

CheckReport check_conditions(int trials, std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.d1 = 4;
  cfg.d2 = 4;
  cfg.spectrum = (Vector(1) << 2.0).finished();
  cfg.sigma_eps = 0.5;
  cfg.n = 4000;
  const Dataset data = simulate(cfg, seed, 0);
  const SurrogatePair pair = SurrogatePair::build(data.observations);
  const double lmin = data.sigma_x.min_eigenvalue();
  const ConditionReport lsc = verify_lsc(pair, data.truth->theta, trials, 0.5 * lmin, 0.0, seed);
  const ConditionReport rsc = verify_rsc(pair, trials, lmin / 8.0, 1, seed);
  CheckResult a{"lsc/clean", lsc.trials, lsc.violations, -lsc.min_margin};
  CheckResult b{"rsc/clean", rsc.trials, rsc.violations, -rsc.min_margin};
  return CheckReport{{a, b}};
}

}  // namespace lrmr
