// lrmr command-line front end: simulate | solve | experiment | check.
//
// Exit codes: 0 success, 1 check violation, 2 configuration error,
// 3 runtime or divergence error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lrmr/analysis.hpp"
#include "lrmr/config.hpp"
#include "lrmr/dataset_io.hpp"
#include "lrmr/experiment.hpp"
#include "lrmr/solver.hpp"
#include "lrmr/spectral_ops.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
};

lrmr::ExperimentConfig resolve_config(const CommonOptions& o) {
  if (!o.config_path.empty() && !o.preset.empty()) {
    throw lrmr::ConfigError("--config and --preset are mutually exclusive");
  }
  lrmr::ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    cfg = lrmr::load_config(o.config_path);
  } else if (!o.preset.empty()) {
    cfg = lrmr::preset_config(o.preset);
  } else {
    throw lrmr::ConfigError("one of --config or --preset is required");
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (!o.out.empty()) cfg.output = o.out;
  cfg.validate();
  return cfg;
}

// Writes to `path`, or stdout when empty or "-".
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw lrmr::DataError("cannot open '" + path + "' for writing");
  fn(os);
  if (!os) throw lrmr::DataError("write to '" + path + "' failed");
}

nlohmann::json matrix_json(const lrmr::Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_simulate(const CommonOptions& common, std::optional<long long> n, int replicate) {
  const lrmr::ExperimentConfig cfg = resolve_config(common);
  if (cfg.output.empty()) throw lrmr::ConfigError("simulate needs --out PATH");
  lrmr::SimulationConfig sim;
  sim.d1 = cfg.d1;
  sim.d2 = cfg.d2;
  sim.spectrum = cfg.spectrum;
  sim.sigma_x = cfg.sigma_x;
  sim.corruption = cfg.corruption;
  sim.sigma_eps = cfg.sigma_eps;
  sim.n = n ? *n : cfg.n_grid.front();
  if (sim.n < 1) throw lrmr::ConfigError("--n must be >= 1");
  if (replicate < 0) throw lrmr::ConfigError("--replicate must be >= 0");
  lrmr::save_dataset(cfg.output, lrmr::simulate(sim, cfg.seed, replicate));
  std::cerr << "wrote " << cfg.output << " (N=" << sim.n << ", replicate " << replicate << ")\n";
  return kExitOk;
}

struct SolveOptions {
  std::string data;
  std::string reg = "scad";
  std::string lambda = "1";
  double shape = 0.0;
  std::optional<double> omega;
  double omega_ratio = 1.5;
  double tol = 1e-6;
  int max_iters = 5000;
  std::optional<double> step;
  std::string csv;
};

int cmd_solve(const SolveOptions& o, const std::string& out) {
  const lrmr::Dataset data = lrmr::load_dataset(o.data);
  const lrmr::SurrogatePair pair = lrmr::SurrogatePair::build(data.observations);

  double omega = 0.0;
  if (o.omega) {
    omega = *o.omega;
    if (data.truth && omega < data.truth->spectrum.sum()) {
      throw lrmr::ConfigError("--omega is below the nuclear norm of the true parameter");
    }
  } else {
    if (!data.truth) throw lrmr::ConfigError("--omega is required when the dataset has no true model");
    omega = o.omega_ratio * data.truth->spectrum.sum();
  }
  if (!(omega > 0.0)) throw lrmr::ConfigError("omega must be > 0");

  lrmr::RegularizerRule rule;
  rule.kind = lrmr::parse_penalty_kind(o.reg);
  rule.lambda = lrmr::LambdaRule::parse(o.lambda);
  rule.shape = o.shape;
  const lrmr::RegularizerSpec spec = lrmr::make_spec(rule, lrmr::resolve_lambda(rule.lambda, data, pair, omega));

  lrmr::SolverConfig solver;
  solver.omega = omega;
  solver.tol = o.tol;
  solver.max_iters = o.max_iters;
  solver.step = o.step;
  const lrmr::SolverResult result = lrmr::solve(pair, spec, solver);

  const lrmr::ObservationSet& obs = data.observations;
  lrmr::ExperimentRow row;
  row.seed = obs.seed;
  row.d1 = static_cast<int>(obs.z.d1);
  row.d2 = static_cast<int>(obs.z.d2);
  row.r = data.truth ? data.truth->rank() : 0;
  row.n = obs.size();
  row.corruption = lrmr::corruption_name(obs.corruption);
  row.corruption_param = lrmr::corruption_parameter(obs.corruption);
  row.sigma_eps = data.sigma_eps;
  row.reg_kind = std::string(lrmr::to_string(spec.kind()));
  row.lambda = spec.lambda();
  row.shape = spec.kind() == lrmr::PenaltyKind::Nuclear ? 0.0 : spec.shape();
  row.omega = omega;
  if (data.truth) row.recovery = lrmr::recovery_report(result.theta_hat, *data.truth, pair, spec);
  row.stationarity_gap = result.stationarity_gap;
  row.iterations = result.iterations;
  row.converged = result.converged;

  nlohmann::json j;
  j["regularizer"] = {{"kind", row.reg_kind}, {"lambda", spec.lambda()}, {"shape", row.shape},
                      {"mu", spec.mu()}};
  j["omega"] = omega;
  j["stationarity_gap"] = result.stationarity_gap;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["reference_step"] = result.reference_step;
  j["objective_trace"] = result.objective_trace;
  j["theta_hat"] = matrix_json(result.theta_hat);
  if (row.recovery) {
    const lrmr::RecoveryReport& rec = *row.recovery;
    j["recovery"] = {{"frob_error", rec.frob_error},
                     {"nuclear_error", rec.nuclear_error},
                     {"rank_hat", rec.rank_hat},
                     {"r1", rec.r1},
                     {"r2", rec.r2},
                     {"op_norm_full_grad", rec.op_norm_full_grad},
                     {"op_norm_proj_grad", rec.op_norm_proj_grad},
                     {"cone_ratio", rec.cone_ratio}};
  }
  with_output(out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  if (!o.csv.empty()) with_output(o.csv, [&](std::ostream& os) { lrmr::write_csv(os, {row}); });
  return result.converged ? kExitOk : kExitRuntime;
}

int cmd_experiment(const CommonOptions& common) {
  const lrmr::ExperimentConfig cfg = resolve_config(common);
  const auto rows = lrmr::run_experiment(cfg);
  with_output(cfg.output, [&](std::ostream& os) { lrmr::write_csv(os, rows); });
  if (!cfg.output.empty() && cfg.output != "-") {
    std::cerr << "wrote " << rows.size() << " rows to " << cfg.output << '\n';
  }
  return kExitOk;
}

int cmd_check(const std::string& suite, std::uint64_t seed, std::optional<int> trials) {
  lrmr::CheckReport report;
  auto add = [&report](const lrmr::CheckReport& r) {
    report.checks.insert(report.checks.end(), r.checks.begin(), r.checks.end());
  };
  const bool all = suite == "all";
  if (all || suite == "lemmas") add(lrmr::check_lemmas(trials.value_or(1000), seed));
  if (all || suite == "gradients") add(lrmr::check_gradients(trials.value_or(20), seed));
  if (all || suite == "prox") add(lrmr::check_prox(trials.value_or(1000), seed));
  if (all || suite == "lsc-rsc") add(lrmr::check_conditions(trials.value_or(200), seed));
  for (const lrmr::CheckResult& c : report.checks) {
    std::printf("%-4s %-26s trials=%-6d violations=%-4d worst=%s\n", c.violations == 0 ? "PASS" : "FAIL",
                c.name.c_str(), c.trials, c.violations, lrmr::format_real(c.worst).c_str());
  }
  return report.passed() ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonconvex spectral-regularized low-rank regression with corrupted covariates"};
  app.require_subcommand(1);

  CommonOptions common;
  auto add_common = [&common](CLI::App* sub, bool threads) {
    sub->add_option("--config", common.config_path, "Experiment config file")->check(CLI::ExistingFile);
    sub->add_option("--preset", common.preset, "Built-in scenario (see 'check --list-presets')");
    sub->add_option("--seed", common.seed, "Base seed");
    sub->add_option("--out", common.out, "Output path");
    if (threads) sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "Generate a dataset file");
  add_common(simulate, false);
  std::optional<long long> sim_n;
  int sim_replicate = 0;
  simulate->add_option("--n", sim_n, "Sample size (default: first n_grid entry)");
  simulate->add_option("--replicate", sim_replicate, "Replicate index");

  auto* solve = app.add_subcommand("solve", "Fit one estimator to a dataset file");
  SolveOptions solve_opts;
  std::string solve_out;
  solve->add_option("--data", solve_opts.data, "Dataset file")->required()->check(CLI::ExistingFile);
  solve->add_option("--reg", solve_opts.reg, "nuclear | scad | mcp");
  solve->add_option("--lambda", solve_opts.lambda, "Number or rule (fixed:, rate:, gradient:)");
  solve->add_option("--shape", solve_opts.shape, "SCAD a or MCP b (0 = default)");
  solve->add_option("--omega", solve_opts.omega, "Nuclear-ball radius");
  solve->add_option("--omega-ratio", solve_opts.omega_ratio, "Radius as a multiple of ||Theta*||_*");
  solve->add_option("--tol", solve_opts.tol, "Stationarity tolerance");
  solve->add_option("--max-iters", solve_opts.max_iters, "Iteration cap");
  solve->add_option("--step", solve_opts.step, "Fixed step (default: backtracking)");
  solve->add_option("--csv", solve_opts.csv, "Also write a CSV row here");
  solve->add_option("--out", solve_out, "Result JSON path (default: stdout)");

  auto* experiment = app.add_subcommand("experiment", "Run a grid and write CSV");
  add_common(experiment, true);

  auto* check = app.add_subcommand("check", "Run a verification suite");
  std::string suite = "all";
  std::uint64_t check_seed = 20240601;
  std::optional<int> check_trials;
  bool list_presets = false;
  check->add_option("suite", suite, "lemmas | gradients | prox | lsc-rsc | all")
      ->check(CLI::IsMember({"lemmas", "gradients", "prox", "lsc-rsc", "all"}));
  check->add_option("--seed", check_seed, "Seed");
  check->add_option("--trials", check_trials, "Trials per check");
  check->add_flag("--list-presets", list_presets, "Print preset names and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(common, sim_n, sim_replicate);
    if (*solve) return cmd_solve(solve_opts, solve_out);
    if (*experiment) return cmd_experiment(common);
    if (*check) {
      if (list_presets) {
        for (const auto& name : lrmr::preset_names()) std::cout << name << '\n';
        return kExitOk;
      }
      return cmd_check(suite, check_seed, check_trials);
    }
  } catch (const lrmr::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const lrmr::ParameterError& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return kExitConfig;
  } catch (const lrmr::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
