#pragma once

#include "spdelab/hilbert.hpp"
#include "spdelab/types.hpp"

#include <cstdint>
#include <vector>

namespace spde {

/// Covariance spectrum of a trace-class operator Q: strictly positive,
/// nonincreasing eigenvalues (lambda_j) with respect to the fixed
/// orthonormal noise basis.
struct QSpec {
  Vector lambda;

  /// lambda_j = j^{-2}, j = 1..j_modes.
  static QSpec polynomial(int j_modes);
  /// lambda_j = 2^{-j}, j = 1..j_modes.
  static QSpec geometric(int j_modes);
  static QSpec from_eigenvalues(Vector lambda);

  int modes() const { return static_cast<int>(lambda.size()); }
  double trace() const { return lambda.sum(); }
};

/// Throws SpectrumError unless all eigenvalues are positive, finite, and
/// nonincreasing.
void validate(const QSpec& q);

/// Hilbert-Schmidt norm of Phi against the covariance spectrum,
/// (sum_j lambda_j ||Phi e_j||^2)^{1/2}.
inline double hs_norm(const HSOperator& op, const QSpec& q) {
  return hs_norm(op, q.lambda);
}

/// Strictly increasing times t_0 = 0 < t_1 < ... < t_K.
class TimeGrid {
 public:
  TimeGrid() = default;

  /// steps equal cells: t_k = horizon * (k / steps).
  static TimeGrid uniform(double horizon, int steps);
  static TimeGrid from_times(std::vector<double> times);

  int steps() const { return static_cast<int>(t_.size()) - 1; }
  int points() const { return static_cast<int>(t_.size()); }
  double time(int k) const;
  double dt(int k) const;
  double horizon() const { return t_.back(); }
  const std::vector<double>& times() const { return t_; }

  /// Keeps every factor-th node (the step count must divide evenly).
  /// Retained times are bitwise identical to the fine grid's, so noise
  /// sampled on the fine grid restricts consistently.
  TimeGrid subsample(int factor) const;

  /// Index of a node matching t (tolerance 1e-12 relative to the horizon);
  /// throws GridError when t is not a grid node.
  int index_of(double t) const;

  /// Bitwise equality of the node arrays.
  bool same_grid(const TimeGrid& other) const;

 private:
  std::vector<double> t_;
};

/// Sampled component Brownian motions: row j of `betas` holds
/// beta^j(t_0), ..., beta^j(t_K) with beta^j(0) = 0. Increments over cell k
/// are i.i.d. N(0, dt_k), keyed by (seed, path_index, j, k) in a
/// counter-based generator, so ensembles are reproducible and can be
/// generated in parallel with no shared state.
struct WienerPath {
  TimeGrid grid;
  Matrix betas;  // J x (K+1); column k = values at t_k
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;

  int modes() const { return static_cast<int>(betas.rows()); }

  /// Restriction to every factor-th node: the same Brownian motion seen on
  /// the coarser grid (coarse increments are sums of fine ones).
  WienerPath subsample(int factor) const;
};

/// Karhunen-Loeve sampling of W = sum_j sqrt(lambda_j) beta^j e_j:
/// deterministic given (q, grid, seed, path_index).
WienerPath sample_path(const QSpec& q, const TimeGrid& grid,
                       std::uint64_t seed, std::uint64_t path_index = 0);

/// W(t_k) in noise-basis coordinates: j-th coefficient
/// sqrt(lambda_j) beta^j(t_k).
Vector reconstruct_state(const WienerPath& path, const QSpec& q, int k);

/// Coordinates of W(t_{k_to}) - W(t_{k_from}).
Vector state_increment(const WienerPath& path, const QSpec& q, int k_from,
                       int k_to);

/// Empirical covariance of the increments W(t_{k_to}) - W(t_{k_from}) over
/// the ensemble (at least 100 paths); expected value
/// (t_{k_to} - t_{k_from}) * diag(lambda).
Matrix increment_covariance(const std::vector<WienerPath>& ensemble,
                            const QSpec& q, int k_from, int k_to);

}  // namespace spde
