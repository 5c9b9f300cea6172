#include "spdelab/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace spde::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) {
      line += ',';
    }
    line += fields[i];
  }
  line += '\n';
  return line;
}

void write_text(const std::filesystem::path& path,
                const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw std::runtime_error("short write: " + path.string());
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::string wiener_csv(const WienerPath& path) {
  std::string out = "t,j,beta\n";
  for (int k = 0; k < path.grid.points(); ++k) {
    for (int j = 0; j < path.modes(); ++j) {
      out += csv_line({format_double(path.grid.time(k)),
                       std::to_string(j + 1),
                       format_double(path.betas(j, k))});
    }
  }
  return out;
}

std::string solution_csv(const SolutionPath& path) {
  std::string out = "t,mode,value\n";
  for (int k = 0; k <= path.last_index(); ++k) {
    const Vector& state = path.state(k);
    for (int i = 0; i < state.size(); ++i) {
      out += csv_line({format_double(path.grid.time(k)),
                       std::to_string(i + 1), format_double(state[i])});
    }
  }
  return out;
}

std::string residual_csv(const ResidualReport& report) {
  std::string out = "t,residual\n";
  for (std::size_t k = 0; k < report.residuals.size(); ++k) {
    out += csv_line({format_double(report.grid.time(static_cast<int>(k))),
                     format_double(report.residuals[k])});
  }
  return out;
}

}  // namespace spde::io
