#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "spdelab/fixtures.hpp"
#include "spdelab/solver.hpp"

namespace spde {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// One declarative experiment run, parsed from a JSON suite object:
///
///   {
///     "experiment": "ou_oracle",
///     "problem": {"fixture": "ou_unit", "semigroup": "heat_diagonal",
///                  "dim": 1, "noise_modes": 1, "spectrum": "polynomial"},
///     "grid": {"horizon": 1.0, "dt": 0.0009765625, "ladder_depth": 1},
///     "ensemble": 10000,
///     "seed": 2026,
///     "output": "runs/ou",
///     "thresholds": {"n_sigma": 3.0}
///   }
///
/// `spectrum` is "geometric", "polynomial", or an explicit eigenvalue array.
/// Ladder levels refine the base step by factors of 2; suites that compare
/// against a master grid refine once more beyond the finest level.
struct ExperimentConfig {
  std::string name = "run";  // suite key in a multi-suite file
  std::string kind;
  std::string fixture;
  std::string semigroup;  // empty: fixture default
  std::string chart;      // manifold_invariance only
  int dim = 0;            // 0: fixture default
  int noise_modes = 0;    // 0: fixture default
  std::string spectrum_kind = "geometric";
  Vector spectrum_lambda;  // explicit spectra only
  double horizon = 1.0;
  double dt = 0.0;
  int ladder_depth = 1;
  int ensemble = 1;
  std::uint64_t seed = 0;
  std::string output = "out";
  int threads = 0;  // 0: hardware concurrency
  nlohmann::json thresholds = nlohmann::json::object();
  /// Effective scientific identity: kind, problem, grid, ensemble, seed,
  /// thresholds, with fixture defaults resolved. Excludes output and thread
  /// count, which do not influence results. The FNV-1a hash of its dump is
  /// the manifest's config hash and is stable under re-serialization.
  nlohmann::json canonical;

  int base_steps() const;
};

/// Parses and validates one suite object. `where` prefixes field paths in
/// ConfigError (e.g. "experiments.ou"). Throws ConfigError on any violation.
ExperimentConfig parse_experiment(const nlohmann::json& node,
                                  const std::string& where);

/// Parses a whole config: either a single suite object or
/// {"experiments": {name: suite, ...}}. Multi-suite entries come back in
/// sorted name order.
std::vector<ExperimentConfig> parse_config_text(const std::string& text);

/// Rebuilds `canonical` after fields were overridden (CLI flags).
void refresh_canonical(ExperimentConfig& cfg);

struct RunManifest {
  std::string kind;
  std::string config_hash;  // 16 hex digits
  std::uint64_t seed = 0;
  std::string library_version;
  double wall_clock_seconds = 0.0;
  bool passed = false;
  std::vector<std::string> files;  // everything emitted, manifest included
};

/// Executes the suite deterministically for (canonical config, seed) and
/// writes CSV/JSON artifacts plus manifest.json into cfg.output. CSV bytes
/// are independent of the thread count. The returned manifest mirrors the
/// written one.
RunManifest run_experiment(const ExperimentConfig& cfg);

}  // namespace spde
