#include "lrmr/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "lrmr/random.hpp"
#include "lrmr/spectral_ops.hpp"

namespace lrmr {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double resolve_omega(const OmegaRule& rule, const Vector& spectrum) {
  return rule.kind == OmegaRule::Kind::Ratio ? rule.value * spectrum.sum() : rule.value;
}

double resolve_lambda(const LambdaRule& rule, const Dataset& data, const SurrogatePair& pair,
                      double omega) {
  if (rule.kind == LambdaRule::Kind::Fixed) return rule.value;
  if (!data.truth) throw ConfigError("lambda rule '" + rule.describe() + "' needs the true model");
  const TrueModel& truth = *data.truth;
  if (rule.kind == LambdaRule::Kind::Gradient) {
    return rule.value * operator_norm(pair.gradient(truth.theta));
  }
  BoundInputs in;
  in.sigma_x = data.sigma_x;
  in.corruption = data.observations.corruption;
  in.sigma_eps = data.sigma_eps;
  in.theta_star_frob = truth.theta.norm();
  in.d1 = static_cast<int>(truth.theta.rows());
  in.d2 = static_cast<int>(truth.theta.cols());
  in.n = data.observations.size();
  in.omega = omega;
  in.constant = rule.value;
  return bound_quantities(in).lambda_floor;
}

RegularizerSpec make_spec(const RegularizerRule& rule, double lambda) {
  switch (rule.kind) {
    case PenaltyKind::Nuclear:
      return RegularizerSpec::nuclear(lambda);
    case PenaltyKind::Scad:
      return RegularizerSpec::scad(lambda, rule.shape != 0.0 ? rule.shape : RegularizerSpec::kDefaultScadShape);
    case PenaltyKind::Mcp:
      return RegularizerSpec::mcp(lambda, rule.shape != 0.0 ? rule.shape : RegularizerSpec::kDefaultMcpShape);
  }
  throw ParameterError("unknown penalty kind");
}

SolverConfig solver_config(const ExperimentConfig& config, double omega) {
  SolverConfig s;
  s.step = config.step;
  s.max_iters = config.max_iters;
  s.tol = config.tol;
  s.omega = omega;
  s.shrink = config.shrink;
  s.trace_every = 0;
  return s;
}

namespace {

// All solves of one (N, replicate) cell share a dataset.
std::vector<ExperimentRow> run_cell(const ExperimentConfig& config, Eigen::Index n, int replicate) {
  SimulationConfig sim;
  sim.d1 = config.d1;
  sim.d2 = config.d2;
  sim.spectrum = config.spectrum;
  sim.sigma_x = config.sigma_x;
  sim.corruption = config.corruption;
  sim.sigma_eps = config.sigma_eps;
  sim.n = n;
  const Dataset data = simulate(sim, config.seed, replicate);
  const SurrogatePair pair = SurrogatePair::build(data.observations);
  const double omega = resolve_omega(config.omega, config.spectrum);
  const SolverConfig solver = solver_config(config, omega);

  Matrix init = Matrix::Zero(config.d1, config.d2);
  if (config.init == InitKind::Random) {
    init = random_low_rank_init(config.d1, config.d2, config.rank(), 0.5 * omega,
                                stream_seed(config.seed, {static_cast<std::uint64_t>(replicate)}));
  }

  std::vector<ExperimentRow> rows;
  for (const RegularizerRule& rule : config.regularizers) {
    const RegularizerSpec spec = make_spec(rule, resolve_lambda(rule.lambda, data, pair, omega));
    const auto start = std::chrono::steady_clock::now();
    const SolverResult result = solve(pair, spec, solver, init);
    const auto stop = std::chrono::steady_clock::now();

    ExperimentRow row;
    row.seed = config.seed;
    row.replicate = replicate;
    row.d1 = config.d1;
    row.d2 = config.d2;
    row.r = config.rank();
    row.n = n;
    row.corruption = corruption_name(config.corruption);
    row.corruption_param = corruption_parameter(config.corruption);
    row.sigma_eps = config.sigma_eps;
    row.reg_kind = std::string(to_string(spec.kind()));
    row.lambda = spec.lambda();
    row.shape = spec.kind() == PenaltyKind::Nuclear ? 0.0 : spec.shape();
    row.omega = omega;
    row.recovery = recovery_report(result.theta_hat, *data.truth, pair, spec, config.threshold);
    row.stationarity_gap = result.stationarity_gap;
    row.iterations = result.iterations;
    row.converged = result.converged;
    if (config.timing) row.runtime_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::size_t n_count = config.n_grid.size();
  const std::size_t reps = static_cast<std::size_t>(config.replicates);
  const std::size_t cells = n_count * reps;
  std::vector<std::vector<ExperimentRow>> results(cells);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= cells) return;
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure) return;
      }
      try {
        results[k] = run_cell(config, config.n_grid[k / reps], static_cast<int>(k % reps));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(cells)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  // Canonical order: N, then regularizer, then replicate.
  std::vector<ExperimentRow> rows;
  rows.reserve(cells * config.regularizers.size());
  for (std::size_t i = 0; i < n_count; ++i) {
    for (std::size_t g = 0; g < config.regularizers.size(); ++g) {
      for (std::size_t rep = 0; rep < reps; ++rep) rows.push_back(results[i * reps + rep][g]);
    }
  }
  return rows;
}

std::string csv_header() {
  return "seed,replicate,d1,d2,r,N,corruption,corruption_param,sigma_eps,reg_kind,lambda,shape,omega,"
         "frob_error,nuclear_error,rank_hat,r1,r2,op_norm_full_grad,op_norm_proj_grad,cone_ratio,"
         "stationarity_gap,iterations,converged,runtime_ms";
}

std::string csv_row(const ExperimentRow& row) {
  std::string out;
  auto field = [&out](const std::string& s) {
    if (!out.empty()) out += ',';
    out += s;
  };
  field(std::to_string(row.seed));
  field(std::to_string(row.replicate));
  field(std::to_string(row.d1));
  field(std::to_string(row.d2));
  field(std::to_string(row.r));
  field(std::to_string(row.n));
  field(row.corruption);
  field(format_real(row.corruption_param));
  field(format_real(row.sigma_eps));
  field(row.reg_kind);
  field(format_real(row.lambda));
  field(format_real(row.shape));
  field(format_real(row.omega));
  if (row.recovery) {
    const RecoveryReport& rec = *row.recovery;
    field(format_real(rec.frob_error));
    field(format_real(rec.nuclear_error));
    field(std::to_string(rec.rank_hat));
    field(std::to_string(rec.r1));
    field(std::to_string(rec.r2));
    field(format_real(rec.op_norm_full_grad));
    field(format_real(rec.op_norm_proj_grad));
    field(format_real(rec.cone_ratio));
  } else {
    // Without a true model the recovery metrics are undefined.
    out += ",,,,,,,,";
  }
  field(format_real(row.stationarity_gap));
  field(std::to_string(row.iterations));
  field(row.converged ? "1" : "0");
  out += ',';
  if (row.runtime_ms) out += format_real(*row.runtime_ms);
  return out;
}

void write_csv(std::ostream& os, const std::vector<ExperimentRow>& rows) {
  os << csv_header() << '\n';
  for (const ExperimentRow& row : rows) os << csv_row(row) << '\n';
}

}  // namespace lrmr
