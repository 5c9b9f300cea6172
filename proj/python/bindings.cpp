#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "spdelab/concepts.hpp"
#include "spdelab/experiments.hpp"
#include "spdelab/stochastic_integral.hpp"

namespace py = pybind11;

namespace {

using spde::QSpec;
using spde::SolutionPath;
using spde::SPDEProblem;
using spde::TimeGrid;
using spde::Vector;
using spde::WienerPath;

QSpec build_spectrum(const std::string& fixture, const std::string& kind,
                     int noise_modes,
                     const std::vector<double>& eigenvalues) {
  if (!eigenvalues.empty()) {
    Vector lambda(static_cast<int>(eigenvalues.size()));
    for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
      lambda[static_cast<int>(j)] = eigenvalues[j];
    }
    return QSpec::from_eigenvalues(lambda);
  }
  const auto defaults = spde::fixtures::problem_defaults(fixture);
  const int modes =
      noise_modes != 0
          ? noise_modes
          : (defaults.fixed_noise != 0 ? defaults.fixed_noise
                                       : defaults.noise_modes);
  return spde::fixtures::make_spectrum(kind, modes);
}

std::vector<std::vector<double>> states_as_lists(const SolutionPath& path) {
  std::vector<std::vector<double>> out;
  out.reserve(path.states.size());
  for (const Vector& state : path.states) {
    out.emplace_back(state.data(), state.data() + state.size());
  }
  return out;
}

py::dict solve(const std::string& fixture, const std::string& semigroup,
               int dim, int noise_modes, const std::string& spectrum,
               const std::vector<double>& eigenvalues, double horizon,
               int steps, std::uint64_t seed, std::uint64_t path_index,
               const std::string& scheme) {
  const QSpec q = build_spectrum(fixture, spectrum, noise_modes, eigenvalues);
  const SPDEProblem prob =
      spde::fixtures::make_problem(fixture, semigroup, dim, q);
  const TimeGrid grid = TimeGrid::uniform(horizon, steps);
  const WienerPath noise = spde::sample_path(q, grid, seed, path_index);

  SolutionPath path;
  if (scheme == "exponential_euler") {
    path = spde::exponential_euler_solve(prob, noise, q);
  } else if (scheme == "exact_ou") {
    path = spde::exact_ou_solve(prob, noise, q);
  } else if (scheme == "picard") {
    path = spde::picard_solve(prob, noise, q, 1e-10, 25).path;
  } else {
    throw spde::PreconditionError(
        "scheme must be exponential_euler, exact_ou, or picard");
  }
  const auto residual = spde::mild_residual(path, prob, noise, q);

  py::dict out;
  out["scheme"] = path.scheme;
  out["times"] = path.grid.times();
  out["states"] = states_as_lists(path);
  out["mild_residual_max"] = residual.max_abs;
  out["blew_up"] = path.lifetime_index.has_value();
  return out;
}

py::dict manifest_dict(const spde::RunManifest& manifest) {
  py::dict out;
  out["kind"] = manifest.kind;
  out["config_hash"] = manifest.config_hash;
  out["seed"] = manifest.seed;
  out["library_version"] = manifest.library_version;
  out["wall_clock_seconds"] = manifest.wall_clock_seconds;
  out["passed"] = manifest.passed;
  out["files"] = manifest.files;
  return out;
}

py::list run_config(const std::string& text) {
  py::list manifests;
  for (const spde::ExperimentConfig& cfg : spde::parse_config_text(text)) {
    manifests.append(manifest_dict(spde::run_experiment(cfg)));
  }
  return manifests;
}

py::list validate_config(const std::string& text) {
  py::list canonical;
  for (const spde::ExperimentConfig& cfg : spde::parse_config_text(text)) {
    canonical.append(cfg.canonical.dump());
  }
  return canonical;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Numerical laboratory for semilinear stochastic evolution "
            "equations: fixture registry, mild-solution schemes, and the "
            "declarative experiment runner.";

  py::register_exception<spde::ConfigError>(m, "ConfigError",
                                            PyExc_ValueError);

  m.def("version", [] { return std::string(spde::kLibraryVersion); },
        "Library version string.");
  m.def("semigroup_names", &spde::fixtures::semigroup_names,
        "Registered generator fixtures.");
  m.def("problem_names", &spde::fixtures::problem_names,
        "Registered coefficient fixtures.");
  m.def("chart_names", &spde::fixtures::chart_names,
        "Registered manifold charts.");
  m.def("describe_registry", &spde::fixtures::describe_registry,
        "Human-readable registry table, as printed by the CLI.");
  m.def("moment_bound_constant", &spde::moment_bound_constant, py::arg("p"),
        "Moment-inequality constant (p(2p-1))^p (2p/(2p-1))^{2p^2}.");
  m.def("solve", &solve, py::arg("fixture"), py::arg("semigroup") = "",
        py::arg("dim") = 0, py::arg("noise_modes") = 0,
        py::arg("spectrum") = "geometric",
        py::arg("eigenvalues") = std::vector<double>{},
        py::arg("horizon") = 1.0, py::arg("steps") = 64, py::arg("seed") = 0,
        py::arg("path_index") = 0, py::arg("scheme") = "exponential_euler",
        "Samples one noise path for the named fixture and integrates it.\n"
        "Returns times, per-node states, the scheme label, and the maximal\n"
        "residual of the discrete variation-of-constants identity.");
  m.def("run_config", &run_config, py::arg("text"),
        "Parses a JSON experiment config (single suite or {'experiments':\n"
        "...}) and runs every suite, writing artifacts to each suite's\n"
        "output directory. Returns one manifest dict per suite.");
  m.def("validate_config", &validate_config, py::arg("text"),
        "Parses and validates a JSON experiment config without running it.\n"
        "Returns the canonical form of each suite; raises ConfigError with\n"
        "the offending field path otherwise.");
}
