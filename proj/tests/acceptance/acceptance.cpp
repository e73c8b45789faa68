// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Every tolerance below is fixed.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lrmr/analysis.hpp"
#include "lrmr/config.hpp"
#include "lrmr/experiment.hpp"
#include "lrmr/loss.hpp"
#include "lrmr/model_sim.hpp"
#include "lrmr/regularizers.hpp"
#include "lrmr/solver.hpp"
#include "lrmr/spectral_ops.hpp"

namespace {

using lrmr::Matrix;
using lrmr::RegularizerSpec;
using lrmr::Vector;

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int worker_threads() { return static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 8u)); }

// ---------------------------------------------------------------------------
// Independent oracles: literal piecewise penalties and a plain quadratic loss.

double scad_literal(double t, double lam, double a) {
  t = std::abs(t);
  if (t <= lam) return lam * t;
  if (t <= a * lam) return (2 * a * lam * t - t * t - lam * lam) / (2 * (a - 1));
  return lam * lam * (a + 1) / 2;
}

double mcp_literal(double t, double lam, double b) {
  t = std::abs(t);
  return t <= b * lam ? lam * t - t * t / (2 * b) : b * lam * lam / 2;
}

double literal(double t, const RegularizerSpec& s) {
  return s.kind() == lrmr::PenaltyKind::Scad ? scad_literal(t, s.lambda(), s.shape())
                                             : mcp_literal(t, s.lambda(), s.shape());
}

// 1/2 vec(T)' G vec(T) - <u, vec(T)> + sum_j (p(sigma_j) - lambda sigma_j).
struct SmoothOracle {
  Matrix g;
  Vector u;
  RegularizerSpec spec;

  double operator()(const Matrix& theta) const {
    const Eigen::Map<const Vector> v(theta.data(), theta.size());
    const Vector s = Eigen::JacobiSVD<Matrix>(theta).singularValues();
    double q = 0.0;
    for (Eigen::Index j = 0; j < s.size(); ++j) q += literal(s(j), spec) - spec.lambda() * s(j);
    return 0.5 * v.dot(g * v) - u.dot(v) + q;
  }
};

// Surrogate moments recomputed from raw observations.
void raw_moments(const lrmr::ObservationSet& obs, Matrix& g, Vector& u) {
  const double n = static_cast<double>(obs.size());
  Matrix z = obs.z.columns;
  double rho = 0.0;
  if (const auto* mis = std::get_if<lrmr::MissingData>(&obs.corruption)) {
    rho = mis->rho;
    z /= (1.0 - rho);
  }
  g = z * z.transpose() / n;
  u = z * obs.y / n;
  if (rho > 0.0) g.diagonal() *= (1.0 - rho);
  if (const auto* add = std::get_if<lrmr::AdditiveNoise>(&obs.corruption)) g -= add->sigma_w.dense();
}

RegularizerSpec random_spec(std::mt19937_64& gen, int i) {
  std::uniform_real_distribution<double> lam(0.01, 5.0);
  if (i % 2 == 0) return RegularizerSpec::scad(lam(gen), std::uniform_real_distribution<double>(2.01, 10.0)(gen));
  return RegularizerSpec::mcp(lam(gen), std::uniform_real_distribution<double>(0.1, 10.0)(gen));
}

// ---------------------------------------------------------------------------

Outcome regularizer_exactness() {
  std::mt19937_64 gen(kSeed);
  std::uniform_real_distribution<double> tdist(-50.0, 50.0);
  double worst_lit = 0.0;
  double worst_dec = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const RegularizerSpec s = random_spec(gen, i);
    // Half the points land inside [0, nu] where the pieces differ.
    const double t = i % 4 < 2 ? tdist(gen) : std::uniform_real_distribution<double>(-1.2, 1.2)(gen) * s.nu();
    const double p = lrmr::scalar_penalty(t, s);
    worst_lit = std::max(worst_lit, std::abs(p - literal(t, s)));
    worst_lit = std::max(worst_lit, std::abs(lrmr::scalar_concave(t, s) - (literal(t, s) - s.lambda() * std::abs(t))));
    worst_dec = std::max(worst_dec, std::abs(p - (lrmr::scalar_concave(t, s) + s.lambda() * std::abs(t))));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "max |lib - literal| = %.3g, max |p - q - lambda|t|| = %.3g (tol 1e-12)", worst_lit,
                worst_dec);
  return {worst_lit <= 1e-12 && worst_dec <= 1e-12, buf};
}

Outcome prox_oracle() {
  std::mt19937_64 gen(kSeed + 1);
  constexpr double kRes = 1e-4;
  int bad = 0;
  double worst_obj = -std::numeric_limits<double>::infinity();
  double worst_arg = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const RegularizerSpec s = random_spec(gen, i);
    const double step = std::uniform_real_distribution<double>(0.01, 0.99)(gen) / s.mu();
    const double v = std::uniform_real_distribution<double>(-10.0, 10.0)(gen);
    const double x = lrmr::scalar_prox(v, s, step);
    auto obj = [&](double z) { return 0.5 * (z - v) * (z - v) + step * literal(z, s); };
    const double half = std::abs(v) + s.nu();
    const long count = static_cast<long>(std::ceil(2 * half / kRes));
    double best = std::numeric_limits<double>::infinity();
    double best_z = 0.0;
    for (long k = 0; k <= count; ++k) {
      const double z = -half + static_cast<double>(k) * kRes;
      const double o = obj(z);
      if (o < best) {
        best = o;
        best_z = z;
      }
    }
    const double excess = obj(x) - best;
    const double dist = std::abs(x - best_z);
    worst_obj = std::max(worst_obj, excess);
    worst_arg = std::max(worst_arg, dist);
    if (excess > 1e-8 || dist > 5e-4) ++bad;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d/1000 failures, worst objective excess %.3g (tol 1e-8), worst distance %.3g (tol 5e-4)",
                bad, worst_obj, worst_arg);
  return {bad == 0, buf};
}

Outcome lemma_suites() {
  const auto report = lrmr::check_lemmas(1000, kSeed, 1e-8);
  std::ostringstream os;
  bool all_ran = true;
  for (const auto& c : report.checks) {
    os << c.name << " " << c.violations << "/" << c.trials << "; ";
    all_ran = all_ran && c.trials >= 500;
  }
  os << "tol 1e-8";
  return {report.passed() && all_ran, os.str()};
}

Outcome gradient_consistency() {
  constexpr double kH = 1e-5;
  constexpr double kTol = 1e-6;
  const lrmr::Corruption regimes[] = {
      lrmr::NoCorruption{}, lrmr::AdditiveNoise{lrmr::Covariance::identity(30, 0.25)}, lrmr::MissingData{0.2}};
  std::ostringstream os;
  bool pass = true;
  int index = 0;
  for (const auto& corr : regimes) {
    lrmr::SimulationConfig cfg;
    cfg.d1 = 6;
    cfg.d2 = 5;
    cfg.spectrum = (Vector(2) << 3.0, 1.5).finished();
    cfg.sigma_x = lrmr::Covariance::ar1(30, 0.3);
    cfg.corruption = corr;
    cfg.sigma_eps = 0.5;
    cfg.n = 200;
    const auto data = lrmr::simulate(cfg, kSeed, index);
    const auto pair = lrmr::SurrogatePair::build(data.observations);
    SmoothOracle f{Matrix(), Vector(), RegularizerSpec::nuclear(0.0)};
    raw_moments(data.observations, f.g, f.u);
    lrmr::Rng rng(kSeed, {99, static_cast<std::uint64_t>(index)});
    double worst = 0.0;
    for (int p = 0; p < 20; ++p) {
      f.spec = p % 2 == 0 ? RegularizerSpec::scad(rng.uniform(0.2, 1.5)) : RegularizerSpec::mcp(rng.uniform(0.2, 1.5));
      const Matrix theta = lrmr::well_separated_matrix(6, 5, f.spec, 1e-3, rng);
      const Matrix grad = pair.gradient(theta) + lrmr::spectral_concave_grad(theta, f.spec).gradient;
      Matrix fd(6, 5);
      for (Eigen::Index j = 0; j < 5; ++j) {
        for (Eigen::Index i = 0; i < 6; ++i) {
          Matrix up = theta, dn = theta;
          up(i, j) += kH;
          dn(i, j) -= kH;
          fd(i, j) = (f(up) - f(dn)) / (2 * kH);
        }
      }
      worst = std::max(worst, (grad - fd).norm() / std::max(1.0, fd.norm()));
    }
    os << lrmr::corruption_name(corr) << " " << worst << "; ";
    pass = pass && worst <= kTol;
    ++index;
  }
  os << "relative error tol 1e-6";
  return {pass, os.str()};
}

Outcome surrogate_unbiasedness() {
  constexpr int kReps = 200;
  constexpr Eigen::Index kN = 1000;
  const auto sigma_x = lrmr::Covariance::ar1(9, 0.3);
  const Matrix target = sigma_x.dense();
  std::ostringstream os;
  bool pass = true;
  const lrmr::Corruption regimes[] = {lrmr::AdditiveNoise{lrmr::Covariance::identity(9, 0.25)}, lrmr::MissingData{0.3}};
  for (const auto& corr : regimes) {
    lrmr::SimulationConfig cfg;
    cfg.d1 = 3;
    cfg.d2 = 3;
    cfg.spectrum = Vector::Constant(1, 1.0);
    cfg.sigma_x = sigma_x;
    cfg.corruption = corr;
    cfg.n = kN;
    Matrix sum = Matrix::Zero(9, 9), sumsq = Matrix::Zero(9, 9);
    for (int rep = 0; rep < kReps; ++rep) {
      const auto data = lrmr::simulate(cfg, kSeed + 5, rep);
      const Matrix g = lrmr::SurrogatePair::build(data.observations).gamma();
      sum += g;
      sumsq += g.cwiseProduct(g);
    }
    const Matrix mean = sum / kReps;
    const Matrix var = (sumsq / kReps - mean.cwiseProduct(mean)) * (kReps / (kReps - 1.0));
    const Matrix se = (var / kReps).cwiseSqrt();
    const double worst_z = ((mean - target).cwiseAbs().array() / se.array()).maxCoeff();
    os << lrmr::corruption_name(corr) << " max |z| = " << worst_z << "; ";
    pass = pass && worst_z <= 4.0;
  }

  // rho = 0 must take the clean path exactly.
  lrmr::SimulationConfig cfg;
  cfg.d1 = 3;
  cfg.d2 = 3;
  cfg.spectrum = Vector::Constant(1, 1.0);
  cfg.sigma_x = sigma_x;
  cfg.sigma_eps = 0.5;
  cfg.n = 500;
  auto data = lrmr::simulate(cfg, kSeed, 0);
  const auto clean = lrmr::SurrogatePair::build(data.observations);
  data.observations.corruption = lrmr::MissingData{0.0};
  data.observations.mask = lrmr::MissingMask::Constant(9, 500, false);
  const auto zero = lrmr::SurrogatePair::build(data.observations);
  const bool exact = clean.gamma() == zero.gamma() && clean.upsilon() == zero.upsilon();
  os << "N*R = " << kN * kReps << ", 4 standard errors; rho = 0 bit-exact: " << (exact ? "yes" : "no");
  return {pass && exact, os.str()};
}

struct Solved {
  lrmr::Dataset data;
  RegularizerSpec spec = RegularizerSpec::nuclear(0.0);
  lrmr::SolverResult result;
  lrmr::RecoveryReport report;
};

std::vector<Solved> solve_preset(const std::string& name) {
  const auto cfg = lrmr::preset_config(name);
  std::vector<Solved> out(static_cast<std::size_t>(cfg.replicates));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int rep; (rep = next.fetch_add(1)) < cfg.replicates;) {
      lrmr::SimulationConfig sim;
      sim.d1 = cfg.d1;
      sim.d2 = cfg.d2;
      sim.spectrum = cfg.spectrum;
      sim.sigma_x = cfg.sigma_x;
      sim.corruption = cfg.corruption;
      sim.sigma_eps = cfg.sigma_eps;
      sim.n = cfg.n_grid.front();
      Solved& s = out[static_cast<std::size_t>(rep)];
      s.data = lrmr::simulate(sim, cfg.seed, rep);
      const auto pair = lrmr::SurrogatePair::build(s.data.observations);
      const double omega = lrmr::resolve_omega(cfg.omega, cfg.spectrum);
      const auto& rule = cfg.regularizers.front();
      s.spec = lrmr::make_spec(rule, lrmr::resolve_lambda(rule.lambda, s.data, pair, omega));
      s.result = lrmr::solve(pair, s.spec, lrmr::solver_config(cfg, omega));
      s.report = lrmr::recovery_report(s.result.theta_hat, *s.data.truth, pair, s.spec);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < worker_threads(); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome stationarity_and_cone() {
  const auto runs = solve_preset("cone");
  int gap_ok = 0, cone_ok = 0, lambda_ok = 0;
  double worst_gap = 0.0, worst_lambda_ratio = std::numeric_limits<double>::infinity();
  for (const auto& s : runs) {
    const Matrix delta = s.result.theta_hat - s.data.truth->theta;
    const Vector sv = Eigen::JacobiSVD<Matrix>(delta).singularValues();
    const Eigen::Index top = 2 * s.data.truth->rank();
    const double head = sv.head(top).sum();
    const double tail = sv.tail(sv.size() - top).sum();
    cone_ok += tail <= 7.0 * head + 1e-6;
    gap_ok += s.result.stationarity_gap <= 1e-4;
    worst_gap = std::max(worst_gap, s.result.stationarity_gap);
    const double ratio = s.spec.lambda() / s.report.op_norm_full_grad;
    worst_lambda_ratio = std::min(worst_lambda_ratio, ratio);
    lambda_ok += ratio >= 2.0;
  }
  const int n = static_cast<int>(runs.size());
  char buf[240];
  std::snprintf(buf, sizeof buf,
                "gap <= 1e-4 in %d/%d (worst %.3g); cone in %d/%d (need >= 95%%); "
                "lambda >= 2 ||grad||op in %d/%d (min ratio %.3f)",
                gap_ok, n, worst_gap, cone_ok, n, lambda_ok, n, worst_lambda_ratio);
  return {gap_ok == n && cone_ok * 100 >= 95 * n && lambda_ok == n, buf};
}

double fitted_slope(const std::vector<lrmr::ExperimentRow>& rows, const std::string& kind) {
  std::map<Eigen::Index, std::vector<double>> by_n;
  for (const auto& r : rows)
    if (r.reg_kind == kind) by_n[r.n].push_back(r.recovery->frob_error);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(by_n.size()), 2);
  Vector b(a.rows());
  Eigen::Index i = 0;
  for (const auto& [n, errs] : by_n) {
    a(i, 0) = 1.0;
    a(i, 1) = std::log(static_cast<double>(n));
    b(i) = std::log(median(errs));
    ++i;
  }
  return a.colPivHouseholderQr().solve(b)(1);
}

Outcome scaling_law() {
  std::ostringstream os;
  bool pass = true;
  for (const std::string preset : {"scaling-additive", "scaling-missing"}) {
    auto cfg = lrmr::preset_config(preset);
    cfg.threads = worker_threads();
    const auto start = std::chrono::steady_clock::now();
    const auto rows = lrmr::run_experiment(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double slope = fitted_slope(rows, "scad");
    bool converged = true;
    for (const auto& r : rows) converged = converged && r.converged;
    const bool ok = slope >= -0.65 && slope <= -0.35 && secs < 600.0;
    os << preset << " slope " << slope << " (nuclear " << fitted_slope(rows, "nuclear") << ", "
       << secs << " s" << (converged ? "" : ", some unconverged") << "); ";
    pass = pass && ok;
  }
  os << "window [-0.65, -0.35], limit 600 s each";
  return {pass, os.str()};
}

lrmr::ExperimentConfig at_n(const std::string& preset, Eigen::Index n) {
  auto cfg = lrmr::preset_config(preset);
  cfg.n_grid = {n};
  cfg.threads = worker_threads();
  return cfg;
}

Outcome nonconvex_vs_nuclear() {
  std::ostringstream os;
  bool pass = true;
  for (const std::string preset : {"scaling-additive", "scaling-missing"}) {
    // Each (N, replicate) draw is independent of the rest of the grid.
    std::map<int, double> scad, nuc;
    for (const auto& r : lrmr::run_experiment(at_n(preset, 4000)))
      (r.reg_kind == "scad" ? scad : nuc)[r.replicate] = r.recovery->frob_error;
    std::vector<double> s, n;
    int wins = 0;
    for (const auto& [rep, e] : scad) {
      s.push_back(e);
      n.push_back(nuc.at(rep));
      wins += e < nuc.at(rep);
    }
    const double ms = median(s), mn = median(n);
    const bool ok = ms <= mn && wins * 10 >= 7 * static_cast<int>(s.size());
    os << preset << " median scad " << ms << " vs nuclear " << mn << ", wins " << wins << "/" << s.size() << "; ";
    pass = pass && ok;
  }
  os << "need median <= and >= 70% wins";
  return {pass, os.str()};
}

// Gradient norms at the truth for every (N, replicate, regularizer) of a preset.
// They do not depend on the solver, so no solves are needed.
std::vector<lrmr::GradientNorms> gradient_norms(const std::string& preset, std::vector<int>* r1 = nullptr) {
  const auto cfg = lrmr::preset_config(preset);
  std::vector<std::pair<Eigen::Index, int>> cells;
  for (Eigen::Index n : cfg.n_grid)
    for (int rep = 0; rep < cfg.replicates; ++rep) cells.emplace_back(n, rep);
  std::vector<std::vector<lrmr::GradientNorms>> norms(cells.size());
  std::vector<std::vector<int>> ranks(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < cells.size();) {
      lrmr::SimulationConfig sim;
      sim.d1 = cfg.d1;
      sim.d2 = cfg.d2;
      sim.spectrum = cfg.spectrum;
      sim.sigma_x = cfg.sigma_x;
      sim.corruption = cfg.corruption;
      sim.sigma_eps = cfg.sigma_eps;
      sim.n = cells[k].first;
      const auto data = lrmr::simulate(sim, cfg.seed, cells[k].second);
      // Operator form: only a few gradient evaluations are needed.
      const auto pair = lrmr::SurrogatePair::build(data.observations, {.materialize_limit = 0});
      const double omega = lrmr::resolve_omega(cfg.omega, cfg.spectrum);
      for (const auto& rule : cfg.regularizers) {
        const auto spec = lrmr::make_spec(rule, lrmr::resolve_lambda(rule.lambda, data, pair, omega));
        const auto classes = lrmr::classify_spectrum(*data.truth, spec, cfg.threshold);
        norms[k].push_back(lrmr::measure_gradient_norms(pair, *data.truth, classes));
        ranks[k].push_back(classes.r1);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < worker_threads(); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  std::vector<lrmr::GradientNorms> out;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    out.insert(out.end(), norms[k].begin(), norms[k].end());
    if (r1) r1->insert(r1->end(), ranks[k].begin(), ranks[k].end());
  }
  return out;
}

Outcome gradient_dominance() {
  int checked = 0, failed = 0;
  for (const std::string preset : {"cone", "scaling-additive", "scaling-missing"}) {
    for (const auto& g : gradient_norms(preset)) {
      ++checked;
      failed += g.projected > g.full * (1.0 + 1e-12);
    }
  }
  std::vector<int> r1;
  std::vector<double> ratios;
  for (const auto& g : gradient_norms("dominance", &r1)) {
    ++checked;
    failed += g.projected > g.full * (1.0 + 1e-12);
    ratios.push_back(g.projected / g.full);
  }
  const bool r1_ok = std::all_of(r1.begin(), r1.end(), [](int v) { return v == 3; });
  const double med = median(ratios);
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "proj <= full in %d/%d replicates (rel tol 1e-12); d=20, r1=3%s: median ratio %.4f over %zu",
                checked - failed, checked, r1_ok ? "" : " (r1 mismatch)", med, ratios.size());
  return {failed == 0 && r1_ok && med < 1.0, buf};
}

Outcome determinism() {
  auto cfg = lrmr::preset_config("scaling-additive");
  std::ostringstream serial, parallel;
  cfg.threads = 1;
  lrmr::write_csv(serial, lrmr::run_experiment(cfg));
  cfg.threads = std::max(3, worker_threads());
  lrmr::write_csv(parallel, lrmr::run_experiment(cfg));
  const bool same = serial.str() == parallel.str();
  char buf[160];
  std::snprintf(buf, sizeof buf, "threads 1 vs %d: %s (%zu bytes)", cfg.threads, same ? "byte-identical" : "DIFFERENT",
                serial.str().size());
  return {same, buf};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  Outcome (*run)();
};

constexpr Criterion kCriteria[] = {
    {1, "regularizer exactness", 5, regularizer_exactness},
    {2, "prox oracle", 30, prox_oracle},
    {3, "lemma suites", 120, lemma_suites},
    {4, "gradient consistency", 60, gradient_consistency},
    {5, "surrogate unbiasedness", 120, surrogate_unbiasedness},
    {6, "stationarity and cone", 300, stationarity_and_cone},
    {7, "scaling law", 1200, scaling_law},
    {8, "nonconvex vs nuclear", 300, nonconvex_vs_nuclear},
    {9, "projected-gradient dominance", 300, gradient_dominance},
    {10, "determinism", std::numeric_limits<double>::infinity(), determinism},
};

}  // namespace

// Usage: lrmr_acceptance [criterion ids...]; all criteria when none are given.
int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : kCriteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = o.pass && secs < c.limit_s;
    failures += !pass;
    std::printf("criterion %2d %s %s: %s [%.1f s, limit %g s]\n", c.id, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs, c.limit_s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
