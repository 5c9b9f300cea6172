#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace spde {

/// Coefficient vector of a state-space element over the fixed orthonormal basis.
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Operator from the noise space into the state space, stored densely as
/// dim_state x dim_noise. Column j is the image of the j-th noise basis
/// vector, before the sqrt(lambda_j) covariance weighting; the weighted
/// column sqrt(lambda_j) * col(j) is the j-th diffusion vector field.
using HSOperator = Eigen::MatrixXd;

/// Input with mismatched dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Vector not representable in the generator domain under the descriptor's
/// domain rule (at finite truncation this reduces to a dimension check).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid time grid (empty, not starting at zero, or not strictly increasing).
class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid covariance spectrum (nonpositive or increasing eigenvalues).
class SpectrumError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation called on inputs outside its contract (e.g. negative time).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Scheme produced a non-finite state. `step` is the first offending grid index.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& what, int step_index)
      : std::runtime_error(what), step(step_index) {}
  int step;
};

/// Chart Jacobian lost full column rank at a sampled point.
class DegenerateChartError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point handed to a chart operation does not lie on the manifold patch.
class OffManifoldError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration rejected during validation; `field_path` names the offending
/// entry (e.g. "grid.dt[2]").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), field_path(std::move(path)) {}
  std::string field_path;
};

}  // namespace spde
