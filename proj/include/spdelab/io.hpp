#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spdelab/concepts.hpp"
#include "spdelab/solver.hpp"
#include "spdelab/wiener.hpp"

namespace spde::io {

/// Full double precision: 17 significant digits, enough to round-trip.
std::string format_double(double v);

/// Comma-joined row with trailing newline. Fields must not contain commas;
/// nothing is quoted.
std::string csv_line(const std::vector<std::string>& fields);

/// Writes the content in binary mode, creating parent directories on demand.
void write_text(const std::filesystem::path& path, const std::string& content);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(std::string_view bytes);

/// 16-digit lowercase hex rendering.
std::string hex64(std::uint64_t v);

/// Component Brownian motions, one row per (node, mode): t, j, beta.
/// Mode indices are 1-based.
std::string wiener_csv(const WienerPath& path);

/// Solution path, one row per (node, mode): t, mode, value. Rows stop at the
/// path's last computed index; mode indices are 1-based.
std::string solution_csv(const SolutionPath& path);

/// Residual trace, one row per evaluated node: t, residual.
std::string residual_csv(const ResidualReport& report);

}  // namespace spde::io
