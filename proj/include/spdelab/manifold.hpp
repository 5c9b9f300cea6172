#ifndef SPDELAB_MANIFOLD_HPP
#define SPDELAB_MANIFOLD_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "spdelab/concepts.hpp"
#include "spdelab/solver.hpp"

namespace spde {

/// Parametrized m-dimensional submanifold patch. `phi` maps coordinates to
/// states, `dphi` is its N x m Jacobian, and `d2phi(y)[k]` holds the N x m
/// block of second derivatives d2phi / (dy_k dy_l) in column l. The `zeta`
/// functionals invert the parametrization on the patch: phi(<zeta, h>) = h
/// for h on the manifold, which pins <zeta_i, dphi e_k> to the identity on
/// the open box `patch_lo < y < patch_hi`.
struct Chart {
  int m = 0;
  std::function<Vector(const Vector& y)> phi;
  std::function<Matrix(const Vector& y)> dphi;
  std::function<std::vector<Matrix>(const Vector& y)> d2phi;
  std::vector<TestFunctional> zeta;
  Vector patch_lo;
  Vector patch_hi;
  /// False downgrades tangency thresholds (finite-difference Jacobians).
  bool analytic_derivatives = true;

  Vector coordinates(const Vector& h) const;
  bool in_patch(const Vector& y) const;
};

/// Second derivative as a bilinear map: D2phi(y)(u, v).
Vector d2_apply(const Chart& chart, const Vector& y, const Vector& u,
                const Vector& v);

struct ChartValidation {
  bool rank_ok = false;         // Dphi full column rank at every sample
  bool consistency_ok = false;  // phi(<zeta, phi(y)>) returns phi(y)
  bool coordinates_ok = false;  // <zeta_i, Dphi e_k> invertible
  double max_consistency_defect = 0.0;
  bool pass = false;
};

/// Samples the patch box and checks the chart invariants.
ChartValidation validate_chart(const Chart& chart, int samples,
                               std::uint64_t seed);

/// Columns of Dphi(y): a basis of the tangent space at phi(y). Throws
/// DegenerateChartError when the columns are rank deficient.
Matrix tangent_basis(const Chart& chart, const Vector& y);

/// Projection onto the tangent space at h along the null space of the zeta
/// functionals: P = Dphi(y) Z^{-1} <zeta, .> with Z_ik = <zeta_i, Dphi e_k>.
/// Requires h on the patch: phi(<zeta, h>) must reproduce h to `tol`
/// relative, else OffManifoldError.
Matrix projection(const Chart& chart, const Vector& h, double tol = 1e-8);

struct ItoCorrection {
  Vector value;
  /// (1 + ||h||) * declared tail sum of squared per-mode growth bounds: the
  /// contribution the truncated modes could add to the correction.
  double tail_bound = 0.0;
};

/// One half of the spectrum-weighted sum of directional derivatives
/// D(sigma e_j)(h) applied to sigma(h) e_j: the drift adjustment that makes
/// tangency of the corrected drift the right invariance condition. Uses the
/// problem's analytic Jacobians when declared and central differences
/// otherwise. Requires a declared truncation tail (kappa_tail_sq >= 0) so
/// the report can state what the discarded modes might contribute.
ItoCorrection ito_correction(const SPDEProblem& prob, const QSpec& q,
                             const Vector& h);

struct TangencyReport {
  bool domain_ok = false;
  /// At finite truncation the generator domain is the whole space, so the
  /// membership condition holds structurally. Flagged to prevent over-claims.
  bool domain_automatic = true;
  std::vector<double> diffusion_residuals;  // per sample, max over modes
  std::vector<double> drift_residuals;      // per sample
  double max_diffusion = 0.0;
  double max_drift = 0.0;
  double threshold = 0.0;
  bool diffusion_ok = false;
  bool drift_ok = false;
  bool pass = false;
  int witness_mode = -1;  // mode index of the worst diffusion residual
  Vector witness_diffusion_y;
  Vector witness_drift_y;
};

/// Samples the patch and evaluates the three invariance conditions at
/// h = phi(y): (i) generator-domain membership, (ii) every weighted
/// diffusion column lies in the tangent space, (iii) the corrected drift
/// A h + alpha(h) - ito_correction lies in the tangent space. Distances are
/// least-squares residuals against the tangent frame, relative to the
/// tested vector's norm, so verdicts are scale-free.
TangencyReport check_invariance_conditions(const Chart& chart,
                                           const SPDEProblem& prob,
                                           const QSpec& q, int samples,
                                           double threshold,
                                           std::uint64_t seed);

/// Coordinate process of a manifold-valued solution: an m-dimensional
/// problem with zero generator, drift <A* zeta_i, phi(y)> + <zeta_i,
/// alpha(phi(y))> and diffusion <zeta_i, sigma(phi(y)) e_j>. The returned
/// closures copy the chart and the coefficients.
SPDEProblem reduced_sde(const Chart& chart, const SPDEProblem& prob);

struct InvarianceLevel {
  double dt = 0.0;
  double max_distance = 0.0;       // over paths and retained nodes
  double mean_sup_distance = 0.0;  // ensemble mean of per-path suprema
  double exit_fraction = 0.0;      // paths whose coordinates left the patch
  std::vector<double> sup_distances;  // per-path suprema, ensemble order
};

struct InvarianceReport {
  std::vector<InvarianceLevel> levels;
  double order = 0.0;  // of max_distance against dt
};

/// Starts on the manifold, solves the full problem with the explicit scheme
/// on each coarsening of the master grid, and measures the distance
/// ||X_k - phi(<zeta, X_k>)|| while the coordinates stay inside the patch
/// box (paths stop contributing at their first exit). When the tangency
/// conditions hold the distance is pure discretization drift and contracts
/// with the step; when they fail it stalls at the violation scale.
InvarianceReport invariance_experiment(const Chart& chart,
                                       const SPDEProblem& prob,
                                       const QSpec& q, const TimeGrid& master,
                                       const std::vector<int>& coarsen_factors,
                                       int ensemble, std::uint64_t seed);

}  // namespace spde

#endif  // SPDELAB_MANIFOLD_HPP
