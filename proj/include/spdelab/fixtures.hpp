#pragma once

#include <string>
#include <vector>

#include "spdelab/manifold.hpp"
#include "spdelab/solver.hpp"
#include "spdelab/wiener.hpp"

namespace spde::fixtures {

/// Built-in semigroups, selectable by name:
///   heat_diagonal   diagonal spectral rates mu_j = j^2, any dimension
///   shift_grid      periodic transport on an odd uniform grid, period 1
///   matrix_generic  dense nonnormal 3x3 generator (dimension fixed at 3)
Semigroup make_semigroup(const std::string& name, int dim);

/// Covariance spectra by kind: "geometric" (2^-j) or "polynomial" (j^-2).
QSpec make_spectrum(const std::string& kind, int modes);

/// Built-in coefficient sets. `semigroup` may be empty to take the fixture's
/// default; `dim` may be 0 likewise. Fixtures that carry their own generator
/// (matrix_affine and the manifold family) reject other choices. The
/// returned problem declares constants that pass validate_coefficients
/// against the supplied spectrum.
///
///   zero                 alpha = 0, sigma = 0: pure semigroup orbit
///   ou_unit              alpha = 0, sigma = identity injection, h0 = 0
///   constant_drift       constant drift, constant diagonal diffusion
///   linear_damping       alpha = -h/2, constant diagonal diffusion
///   sin_diffusion        alpha = -h/2, bounded state-dependent diffusion
///   matrix_affine        affine drift and constant rectangular diffusion
///                        over the dense 3x3 generator
///   manifold_affine      plane-invariant affine dynamics (3d, 2 modes)
///   manifold_affine_tilted  same with an orthogonal drift defect 0.05
///   manifold_parabola    tangent diffusion on the curve (y, y^2) with the
///                        compensating second-order drift
SPDEProblem make_problem(const std::string& name, const std::string& semigroup,
                         int dim, const QSpec& q);

/// Built-in charts, paired with the problem they describe:
///   affine_plane       {(y1, y2, 1)} with coordinate functionals, patch 3
///   affine_plane_rot   the same plane under a sheared parametrization
///   parabola           {(y, y^2)} with the first-coordinate functional
Chart make_chart(const std::string& name, const SPDEProblem& prob);

std::vector<std::string> semigroup_names();
std::vector<std::string> problem_names();
std::vector<std::string> chart_names();

/// Registry metadata consulted by config validation.
struct ProblemDefaults {
  std::string semigroup;  // empty: the fixture builds its own generator
  int dim = 0;
  int noise_modes = 0;
  bool pins_semigroup = false;
  int fixed_dim = 0;    // 0: any dimension
  int fixed_noise = 0;  // 0: any mode count
};
ProblemDefaults problem_defaults(const std::string& name);

/// The coefficient fixture a chart pairs with in self-tests.
std::string chart_problem(const std::string& name);

/// Human-readable listing of every fixture with the declared constants
/// (L, K, kappa) evaluated at the fixture's defaults under the geometric
/// spectrum.
std::string describe_registry();

}  // namespace spde::fixtures
