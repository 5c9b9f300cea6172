#pragma once

#include "spdelab/semigroup.hpp"
#include "spdelab/stochastic_integral.hpp"
#include "spdelab/wiener.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spde {

/// Semilinear problem dX = (A X + alpha(t, X)) dt + sigma(t, X) dW in mild
/// form. sigma returns the unweighted operator (column j acts on noise basis
/// vector e_j); the sqrt(lambda_j) weights enter through the integrals. The
/// declared constants are verified against samples by validate_coefficients:
/// L bounds the drift's Lipschitz ratio, K the diffusion's linear growth,
/// and kappa_j the per-component growth of the weighted columns
/// sqrt(lambda_j) sigma(t,h) e_j.
struct SPDEProblem {
  // placeholder so the struct stays default-constructible; always assigned
  Semigroup sg = Semigroup::diagonal(Vector::Zero(1));
  std::function<Vector(double t, const Vector& h)> alpha;
  std::function<HSOperator(double t, const Vector& h)> sigma;
  /// Optional analytic Jacobian of sigma's column j w.r.t. h (N x N), with
  /// no spectral weight applied (consumers weight it); finite differences
  /// are the fallback when absent.
  std::function<Matrix(double t, const Vector& h, int j)> sigma_jacobian;
  Vector h0;
  /// Optional random initial condition; initial() falls back to h0.
  std::function<Vector(std::uint64_t path_index)> h0_sampler;
  double lipschitz_l = 0.0;
  double growth_k = 0.0;
  Vector kappa;                 // weighted per-column growth bounds
  double kappa_tail_sq = -1.0;  // sum of kappa_j^2 beyond resolved modes;
                                // negative means undeclared
  bool time_homogeneous = true;

  int dim() const { return sg.dim(); }
  Vector initial(std::uint64_t path_index) const;
};

/// Discrete trajectory on a grid. When a stopping rule fired, states run up
/// to lifetime_index inclusive and the path ends there.
struct SolutionPath {
  TimeGrid grid;
  std::vector<Vector> states;
  std::optional<int> lifetime_index;
  std::string scheme;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;

  /// Last defined grid index (lifetime or the final node).
  int last_index() const {
    return lifetime_index ? *lifetime_index : grid.steps();
  }
  const Vector& state(int k) const;
};

/// Left-endpoint convolution quadrature sum_{k: t_{k+1} <= t} dt_k
/// S_{t - t_k} f(t_k), with semigroup factors evaluated directly at each
/// gap (not composed). f_cells[k] holds f(t_k) for every cell.
Vector deterministic_convolution(const Semigroup& sg, const TimeGrid& grid,
                                 const std::vector<Vector>& f_cells, double t);

/// Convenience overload evaluating f at the cells' left endpoints.
Vector deterministic_convolution(const Semigroup& sg, const TimeGrid& grid,
                                 const std::function<Vector(double)>& f,
                                 double t);

/// Stochastic convolution sum_{k: t_{k+1} <= t} S_{t - t_k} value_k dW_k:
/// the noise term of the mild formulation, sharing the semigroup-factor
/// convention with deterministic_convolution.
Vector stochastic_convolution(const Semigroup& sg, const StepIntegrand& x,
                              const WienerPath& path, const QSpec& q,
                              double t);

/// One-step scheme X_{k+1} = S_D X_k + D S_D alpha(t_k, X_k)
///                          + S_D (sigma(t_k, X_k) dW_k).
/// A norm cap realizes the local-solution stopping rule: reaching
/// ||X|| >= cap sets lifetime_index and ends the path. Non-finite states
/// raise DivergedError with the offending step.
SolutionPath exponential_euler_solve(const SPDEProblem& prob,
                                     const WienerPath& path, const QSpec& q,
                                     double cap = 1e6);

/// Exact linear oracle for diagonal semigroups with state-independent drift
/// and constant diffusion: per mode,
///   X_j(t_{k+1}) = e^{-mu_j D} X_j(t_k) + a_j(t_k) (1 - e^{-mu_j D}) / mu_j
///                + e^{-mu_j D} (sigma dW_k)_j,
/// the deterministic cell integral in closed form and the noise convolved
/// with the same left-frozen factor as the grid convolution. Preconditions
/// are verified by probing alpha and sigma; violations raise
/// PreconditionError.
SolutionPath exact_ou_solve(const SPDEProblem& prob, const WienerPath& path,
                            const QSpec& q);

/// picard_solve outcome: the fixed-point path, the index of the returned
/// iterate, and the successive sup-norm differences d_n = sup_k
/// ||X^n_k - X^{n-1}_k|| (one entry per operator application). The returned
/// path is the iterate whose mild-identity residual the final history entry
/// certifies: d_n <= tol means iterate n-1 satisfies the identity to tol.
struct PicardResult {
  SolutionPath path;
  int iterates = 0;
  std::vector<double> contraction_history;
};

/// Raised when the iteration exhausts n_max without meeting tol; carries
/// the performed applications and their contraction history.
class PicardNonConvergence : public std::runtime_error {
 public:
  PicardNonConvergence(const std::string& what,
                       std::vector<double> history_in, int iterates_in)
      : std::runtime_error(what),
        contraction_history(std::move(history_in)),
        iterates(iterates_in) {}
  std::vector<double> contraction_history;
  int iterates = 0;
};

/// Pathwise fixed point of the variation-of-constants map
///   (Phi X)_m = S_{t_m} h0 + conv(alpha(., X)) + stochconv(sigma(., X))
/// on a frozen noise path, starting from the constant-h0 path (or the
/// supplied initial guess) and iterating until the successive difference
/// falls below tol.
PicardResult picard_solve(const SPDEProblem& prob, const WienerPath& path,
                          const QSpec& q, double tol, int n_max,
                          const std::optional<std::vector<Vector>>&
                              initial_guess = std::nullopt);

/// Sampled verification of the declared coefficient bounds.
struct ValidationReport {
  double max_lipschitz_ratio = 0.0;  // drift: ||da|| / ||dh||
  double max_growth_ratio = 0.0;     // diffusion: hs_norm / (1 + ||h||)
  std::vector<double> kappa_ratios;  // per weighted column j
  bool lipschitz_ok = false;
  bool growth_ok = false;
  bool kappa_ok = false;  // vacuously true when no kappa declared
  bool pass = false;
  // witness of the worst drift pair
  Vector witness_h1, witness_h2;
  double witness_t = 0.0;
};

ValidationReport validate_coefficients(const SPDEProblem& prob,
                                       const QSpec& q, int samples,
                                       std::uint64_t seed = 0x434F4546ull);

}  // namespace spde
