#pragma once

#include "spdelab/wiener.hpp"

#include <functional>
#include <vector>

namespace spde {

/// Operator-valued step process adapted to the grid: values[k] is the
/// integrand on the cell (t_k, t_{k+1}], measurable at t_k.
class StepIntegrand {
 public:
  /// Produces the cell-k operator from the cell's left endpoint and the
  /// Brownian prefix beta^j(t_0..t_k) (columns 0..k only), so anticipation
  /// is impossible by construction.
  using PrefixRule = std::function<HSOperator(
      int k, double t_k, const Eigen::Ref<const Matrix>& beta_prefix)>;

  static StepIntegrand make_adapted(const WienerPath& path,
                                    const PrefixRule& rule);

  /// Constant integrand (trivially adapted).
  static StepIntegrand constant(const TimeGrid& grid, const HSOperator& value);

  /// Raw cell values with no adaptedness guarantee; used as the negative
  /// control that violates the isometry.
  static StepIntegrand from_values(TimeGrid grid,
                                   std::vector<HSOperator> values);

  const TimeGrid& grid() const { return grid_; }
  const HSOperator& value(int k) const;
  int cells() const { return static_cast<int>(values_.size()); }
  int rows() const { return static_cast<int>(values_.front().rows()); }
  int noise_modes() const { return static_cast<int>(values_.front().cols()); }
  /// Whether the construction route guaranteed adaptedness.
  bool adapted() const { return adapted_; }

 private:
  StepIntegrand(TimeGrid grid, std::vector<HSOperator> values, bool adapted);

  TimeGrid grid_;
  std::vector<HSOperator> values_;
  bool adapted_ = false;
};

/// Ito integral int_0^t X dW = sum_k value_k (W_{t_{k+1}} - W_{t_k}),
/// accumulated over time cells (outer) and noise components (inner) with
/// compensated summation. t must be a grid node; the result at t = 0 is
/// the zero vector.
Vector ito_integrate(const StepIntegrand& x, const WienerPath& path,
                     const QSpec& q, double t);

/// The same finite sum in series order, sum_j int_0^t X^j d beta^j with
/// X^j = sqrt(lambda_j) X e_j: noise components outer, time cells inner.
/// Agrees with ito_integrate up to summation-order roundoff.
Vector ito_integrate_series(const StepIntegrand& x, const WienerPath& path,
                            const QSpec& q, double t);

/// Produces the integrand for one sampled path of the ensemble.
using IntegrandFactory = std::function<StepIntegrand(const WienerPath& path)>;

/// Monte-Carlo two-sided estimate of the Ito isometry
/// E||int_0^t X dW||^2 = E int_0^t ||X_s||^2 ds.
struct IsometryReport {
  double lhs = 0.0;        // mean of ||int X dW||^2
  double rhs = 0.0;        // mean of sum_k dt_k ||X_k||^2
  double stderr_lhs = 0.0; // standard error of the lhs mean
  bool within(double n_sigma) const {
    return std::abs(lhs - rhs) <= n_sigma * stderr_lhs;
  }
};

IsometryReport isometry_estimate(const IntegrandFactory& factory,
                                 const QSpec& q, const TimeGrid& grid,
                                 double t, int ensemble, std::uint64_t seed);

/// Moment-inequality constant (p(2p-1))^p (2p/(2p-1))^{2p^2}; equals 4 at
/// p = 1. Defined for p >= 1.
double moment_bound_constant(double p);

/// Checks E||int X dW||^{2p} <= C_p (E int ||X||^2 ds)^p by Monte Carlo.
struct MomentBoundReport {
  double lhs = 0.0;        // mean of ||int X dW||^{2p}
  double bound = 0.0;      // C_p * (mean of int ||X||^2 ds)^p
  double stderr_lhs = 0.0;
  bool satisfied = false;  // lhs <= bound + 3 stderr
};

MomentBoundReport moment_bound_check(const IntegrandFactory& factory,
                                     const QSpec& q, const TimeGrid& grid,
                                     double t, double p, int ensemble,
                                     std::uint64_t seed);

}  // namespace spde
