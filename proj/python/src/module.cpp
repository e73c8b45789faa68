#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lrmr/analysis.hpp"
#include "lrmr/config.hpp"
#include "lrmr/dataset_io.hpp"
#include "lrmr/experiment.hpp"
#include "lrmr/solver.hpp"
#include "lrmr/spectral_ops.hpp"

namespace py = pybind11;
using namespace lrmr;

namespace {

Corruption make_corruption(std::optional<double> additive, std::optional<double> missing, Eigen::Index m) {
  if (additive && missing) throw ParameterError("choose one of additive and missing");
  if (additive) return AdditiveNoise{Covariance::identity(m, *additive)};
  if (missing) return MissingData{*missing};
  return NoCorruption{};
}

py::dict report_dict(const RecoveryReport& r) {
  py::dict d;
  d["frob_error"] = r.frob_error;
  d["nuclear_error"] = r.nuclear_error;
  d["rank_hat"] = r.rank_hat;
  d["r1"] = r.r1;
  d["r2"] = r.r2;
  d["op_norm_full_grad"] = r.op_norm_full_grad;
  d["op_norm_proj_grad"] = r.op_norm_proj_grad;
  d["cone_ratio"] = r.cone_ratio;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nonconvex spectral regularization for low-rank matrix regression";

  static py::exception<Error> base(m, "Error");
  static py::exception<ConfigError> config_exc(m, "ConfigError", base.ptr());
  static py::exception<ParameterError> param_exc(m, "ParameterError", base.ptr());
  static py::exception<DivergenceError> div_exc(m, "DivergenceError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_exc, e.what());
    } catch (const ParameterError& e) {
      py::set_error(param_exc, e.what());
    } catch (const DivergenceError& e) {
      py::set_error(div_exc, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  py::class_<RegularizerSpec>(m, "RegularizerSpec")
      .def_static("scad", &RegularizerSpec::scad, py::arg("lam"), py::arg("a") = RegularizerSpec::kDefaultScadShape)
      .def_static("mcp", &RegularizerSpec::mcp, py::arg("lam"), py::arg("b") = RegularizerSpec::kDefaultMcpShape)
      .def_static("nuclear", &RegularizerSpec::nuclear, py::arg("lam"))
      .def_property_readonly("kind", [](const RegularizerSpec& s) { return std::string(to_string(s.kind())); })
      .def_property_readonly("lam", &RegularizerSpec::lambda)
      .def_property_readonly("shape", &RegularizerSpec::shape)
      .def_property_readonly("mu", &RegularizerSpec::mu)
      .def_property_readonly("nu", &RegularizerSpec::nu)
      .def("__repr__", [](const RegularizerSpec& s) {
        std::ostringstream os;
        os << "RegularizerSpec(" << to_string(s.kind()) << ", lam=" << s.lambda() << ")";
        return os.str();
      });

  m.def("scalar_penalty", py::vectorize([](double t, RegularizerSpec s) { return scalar_penalty(t, s); }),
        py::arg("t"), py::arg("spec"));
  m.def("scalar_concave", py::vectorize([](double t, RegularizerSpec s) { return scalar_concave(t, s); }),
        py::arg("t"), py::arg("spec"));
  m.def("scalar_prox",
        py::vectorize([](double v, RegularizerSpec s, double step) { return scalar_prox(v, s, step); }),
        py::arg("v"), py::arg("spec"), py::arg("step"));
  m.def("spectral_penalty", [](const Matrix& x, const RegularizerSpec& s) { return spectral_penalty(x, s); });
  m.def("prox_nuclear_in_ball", [](const Matrix& x, double thr, double omega) {
    return prox_nuclear_in_ball(x, thr, omega);
  }, py::arg("x"), py::arg("threshold"), py::arg("omega") = std::numeric_limits<double>::infinity());

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("theta_star", [](const Dataset& d) -> py::object {
        return d.truth ? py::cast(d.truth->theta) : py::none();
      })
      .def_property_readonly("z", [](const Dataset& d) { return d.observations.z.columns; },
                             "M x N matrix of vectorized (column-major) covariates")
      .def_property_readonly("y", [](const Dataset& d) { return d.observations.y; })
      .def_property_readonly("corruption", [](const Dataset& d) { return corruption_name(d.observations.corruption); })
      .def("save", [](const Dataset& d, const std::string& path) { save_dataset(path, d); });
  m.def("load_dataset", &load_dataset, py::arg("path"));

  m.def(
      "simulate",
      [](int d1, int d2, const Vector& spectrum, Eigen::Index n, std::optional<double> additive,
         std::optional<double> missing, double sigma_eps, std::uint64_t seed, int replicate) {
        SimulationConfig cfg;
        cfg.d1 = d1;
        cfg.d2 = d2;
        cfg.spectrum = spectrum;
        cfg.n = n;
        cfg.corruption = make_corruption(additive, missing, static_cast<Eigen::Index>(d1) * d2);
        cfg.sigma_eps = sigma_eps;
        return simulate(cfg, seed, replicate);
      },
      py::arg("d1"), py::arg("d2"), py::arg("spectrum"), py::arg("n"), py::kw_only(), py::arg("additive") = py::none(),
      py::arg("missing") = py::none(), py::arg("sigma_eps") = 0.0, py::arg("seed") = 1, py::arg("replicate") = 0,
      "Draw a dataset; `additive` is the noise variance, `missing` the missing rate.");

  m.def(
      "solve",
      [](const Dataset& data, const RegularizerSpec& spec, double omega, double tol, int max_iters) {
        const SurrogatePair pair = SurrogatePair::build(data.observations);
        SolverConfig cfg;
        cfg.omega = omega;
        cfg.tol = tol;
        cfg.max_iters = max_iters;
        SolverResult res;
        {
          py::gil_scoped_release release;
          res = solve(pair, spec, cfg);
        }
        py::dict out;
        out["theta_hat"] = res.theta_hat;
        out["stationarity_gap"] = res.stationarity_gap;
        out["iterations"] = res.iterations;
        out["converged"] = res.converged;
        out["objective_trace"] = res.objective_trace;
        if (data.truth) out["recovery"] = report_dict(recovery_report(res.theta_hat, *data.truth, pair, spec));
        return out;
      },
      py::arg("data"), py::arg("spec"), py::kw_only(), py::arg("omega") = std::numeric_limits<double>::infinity(),
      py::arg("tol") = 1e-6, py::arg("max_iters") = 5000);

  m.def("preset_names", &preset_names);
  m.def("preset_text", &preset_text, py::arg("name"));
  m.def(
      "run_experiment",
      [](const std::string& config_text, int threads) {
        ExperimentConfig cfg = parse_config(config_text, "<python>");
        if (threads > 0) cfg.threads = threads;
        std::ostringstream os;
        {
          py::gil_scoped_release release;
          write_csv(os, run_experiment(cfg));
        }
        return os.str();
      },
      py::arg("config_text"), py::arg("threads") = 0, "Run a configured grid and return the CSV text.");

  m.def(
      "check_lemmas",
      [](int trials, std::uint64_t seed) {
        std::vector<py::dict> out;
        for (const auto& c : check_lemmas(trials, seed).checks) {
          py::dict d;
          d["name"] = c.name;
          d["trials"] = c.trials;
          d["violations"] = c.violations;
          out.push_back(d);
        }
        return out;
      },
      py::arg("trials") = 200, py::arg("seed") = 20240601);
}
