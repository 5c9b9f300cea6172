#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "spdelab/experiments.hpp"
#include "spdelab/fixtures.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw spde::ConfigError("config", "cannot read file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spde_lab: numerical experiments for semilinear SPDEs"};
  std::string config_path;
  std::string out_dir;
  std::string only;
  std::uint64_t seed = 0;
  int threads = 0;
  bool list_fixtures = false;
  app.add_option("--config", config_path,
                 "experiment configuration (JSON file)");
  auto* seed_opt = app.add_option("--seed", seed, "override the RNG seed");
  auto* out_opt =
      app.add_option("--out", out_dir, "override the output directory");
  auto* only_opt =
      app.add_option("--experiment", only, "run only the named suite");
  auto* threads_opt =
      app.add_option("--threads", threads, "worker threads (0 = auto)");
  app.add_flag("--list-fixtures", list_fixtures,
               "print the fixture registry and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list_fixtures) {
    std::cout << spde::fixtures::describe_registry();
    return 0;
  }
  if (config_path.empty()) {
    std::cerr << "config error: --config is required\n";
    return 2;
  }

  try {
    std::vector<spde::ExperimentConfig> suites =
        spde::parse_config_text(read_file(config_path));
    if (*only_opt) {
      std::vector<spde::ExperimentConfig> picked;
      for (auto& suite : suites) {
        if (suite.name == only) {
          picked.push_back(std::move(suite));
        }
      }
      if (picked.empty()) {
        std::cerr << "config error: no experiment named '" << only << "'\n";
        return 2;
      }
      suites = std::move(picked);
    }
    const bool multi = suites.size() > 1;
    bool all_passed = true;
    for (auto& suite : suites) {
      if (*seed_opt) {
        suite.seed = seed;
      }
      if (*threads_opt) {
        suite.threads = threads;
      }
      if (*out_opt) {
        suite.output =
            multi ? (std::filesystem::path(out_dir) / suite.name).string()
                  : out_dir;
      }
      spde::refresh_canonical(suite);
      const spde::RunManifest manifest = spde::run_experiment(suite);
      all_passed = all_passed && manifest.passed;
      std::cout << "suite " << suite.name << " [" << suite.kind
                << "]: " << (manifest.passed ? "PASS" : "FAIL") << " -> "
                << suite.output << "\n";
    }
    return all_passed ? 0 : 1;
  } catch (const spde::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
