#ifndef SPDELAB_CONCEPTS_HPP
#define SPDELAB_CONCEPTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "spdelab/solver.hpp"

namespace spde {

/// Functional zeta tested against the state, together with the precomputed
/// action of the adjoint generator on it. Membership in the adjoint domain is
/// checked at construction.
struct TestFunctional {
  Vector zeta;
  Vector adjoint_action;

  static TestFunctional make(const Semigroup& sg, Vector z);
};

/// Basis functionals plus `extra` random unit functionals (all admissible at
/// finite truncation). Deterministic in `seed`.
std::vector<TestFunctional> standard_test_set(const Semigroup& sg, int extra,
                                              std::uint64_t seed);

/// Per-node identity violation along a solution path. `residuals[k]` is the
/// defect of the identity evaluated at grid node k; entries exist up to the
/// path's last computed index.
struct ResidualReport {
  TimeGrid grid;
  std::vector<double> residuals;
  double max_abs = 0.0;
  std::string scheme;
  /// At finite truncation every state lies in the generator domain, so the
  /// strong-identity domain requirement holds automatically. Recorded so a
  /// passing strong residual is not over-read.
  bool domain_automatic = false;
};

/// Defect of the variation-of-constants identity
///   X_t = S_t h0 + int_0^t S_{t-s} alpha(s, X_s) ds
///              + int_0^t S_{t-s} sigma(s, X_s) dW_s
/// using the solvers' left-endpoint quadratures, so the report measures
/// identity violation rather than quadrature mismatch.
ResidualReport mild_residual(const SolutionPath& x, const SPDEProblem& prob,
                             const WienerPath& path, const QSpec& q);

/// Defect of the tested identity
///   <z, X_t> = <z, h0> + int_0^t (<A*z, X_s> + <z, alpha>) ds
///                      + int_0^t <z, sigma dW>.
ResidualReport weak_residual(const SolutionPath& x, const SPDEProblem& prob,
                             const WienerPath& path, const QSpec& q,
                             const TestFunctional& zeta);

/// Defect of the pathwise identity
///   X_t = h0 + int_0^t (A X_s + alpha) ds + int_0^t sigma dW,
/// with the generator applied at each node. Requires every state in the
/// generator domain; the report flags that this is automatic here.
ResidualReport strong_residual(const SolutionPath& x, const SPDEProblem& prob,
                               const WienerPath& path, const QSpec& q);

struct EquivalenceLevel {
  double dt = 0.0;
  double mild_max = 0.0;
  double weak_max = 0.0;    // max over the functional test set
  double strong_max = 0.0;
};

struct EquivalenceReport {
  std::vector<EquivalenceLevel> levels;
  double mild_order = 0.0;
  double weak_order = 0.0;
  double strong_order = 0.0;
  bool anticipating_control = false;
};

/// Solves once on the master grid, restricts the states to each coarser grid
/// (master steps divided by each factor), and evaluates all three residuals
/// on the restricted path against the coarse quadratures and the same noise.
/// A solution of the continuous problem violates each coarse discrete
/// identity by the quadrature refinement error, so all three maxima contract
/// at first order and their joint decay is comparable level by level.
///
/// With `anticipating_control` the stochastic sums inside the residuals pair
/// each increment with the integrand at the right endpoint. The integrand
/// then depends on the increment it multiplies, the compensator no longer
/// cancels, and the residuals stall at the quadratic-covariation gap instead
/// of converging. Negative control only.
EquivalenceReport equivalence_suite(const SPDEProblem& prob,
                                    const WienerPath& master, const QSpec& q,
                                    const std::vector<int>& coarsen_factors,
                                    bool anticipating_control = false);

struct UniquenessReport {
  TimeGrid grid;
  std::vector<double> gaps;
  double sup_gap = 0.0;
  double delta = 0.0;  // ||h0 - g0||
  /// delta == 0: sup_gap <= 1e-12. delta > 0: every gap within the
  /// exponential envelope delta * e^{L t} * (1 + 1e-6). The envelope is a
  /// pathwise theorem for state-independent diffusion, where the noise terms
  /// cancel in the difference of the two recursions.
  bool bounded = false;
};

/// Solves the problem twice on identical noise from initial values h0 and g0
/// and reports the per-node gap. Equal inputs run through identical
/// arithmetic, so the gap vanishes; distinct inputs are controlled by the
/// declared Lipschitz constant.
UniquenessReport uniqueness_check(const SPDEProblem& prob, const Vector& h0,
                                  const Vector& g0, const WienerPath& path,
                                  const QSpec& q);

struct GronwallCertificate {
  /// f(t_k) <= beta * sum_{i<k} dt_i f(t_i) + eps held at every node.
  bool hypothesis_holds = false;
  /// eps * e^{beta T}: the bound implied by the discrete inequality.
  double certified_bound = 0.0;
  double max_f = 0.0;
  bool bound_respected = false;
};

/// Discrete integral-inequality certificate: if f is trapped by its own
/// running integral up to eps, then max f <= eps * e^{beta T}. With eps at
/// the solver tolerance this turns "two solutions, same data" into a
/// quantitative uniqueness statement.
GronwallCertificate gronwall_certify(const TimeGrid& grid,
                                     const std::vector<double>& f, double beta,
                                     double eps);

}  // namespace spde

#endif  // SPDELAB_CONCEPTS_HPP
