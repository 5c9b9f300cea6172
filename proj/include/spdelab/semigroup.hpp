#pragma once

#include "spdelab/types.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace spde {

enum class SemigroupKind { diagonal, matrix_exponential, grid_shift };

/// Growth estimate ||S_t|| <= m * exp(omega * t) with m >= 1.
struct GrowthBound {
  double m = 1.0;
  double omega = 0.0;
};

struct SemigroupClassification {
  bool contraction = false;
  bool pseudo_contraction = false;
  bool norm_continuous = false;
};

/// A C0-semigroup S_t at finite truncation, one of three kinds:
///
///  - diagonal: S_t = diag(exp(-mu_j t)); the generator is A = diag(-mu_j).
///    Realizes heat-type semigroups spectrally (e.g. mu_j = j^2).
///  - matrix_exponential: S_t = exp(tA) for a dense generator A, computed by
///    scaling-and-squaring with Pade approximants (relative target 1e-12).
///  - grid_shift: periodic transport S_t f = f(. + t) on a uniform grid of an
///    odd number of cells, realized through the trigonometric interpolant.
///    Shifts by whole cells are exact cyclic permutations; the generator is
///    the dense antisymmetric spectral difference matrix consistent with the
///    shift, so the semigroup law holds to roundoff. Even cell counts are
///    rejected: the unpaired Nyquist mode cannot be transported by a real
///    matrix semigroup.
///
/// Immutable after construction; all operations are const and thread-safe.
class Semigroup {
 public:
  static Semigroup diagonal(Vector mu);
  static Semigroup matrix(Matrix a);
  /// `cells` must be odd and >= 3; `period` is the length of the periodic
  /// domain, so the grid spacing is period / cells.
  static Semigroup grid_shift(int cells, double period);

  SemigroupKind kind() const { return kind_; }
  int dim() const;

  /// S_t x for t >= 0. apply(0, x) == x exactly; negative t is rejected.
  Vector apply(double t, const Vector& x) const;

  /// Applies S_t to every column (convenience for operator-valued integrands).
  Matrix apply_columns(double t, const Matrix& ops) const;

  /// A x. At finite truncation every correctly-sized vector lies in the
  /// generator domain; mismatched sizes throw DomainError.
  Vector generator_apply(const Vector& x) const;

  /// Dense generator matrix A.
  const Matrix& generator_matrix() const;

  /// Descriptor of the adjoint semigroup S_t^*; its generator is A^T.
  /// Involutive: adjoint(adjoint(sg)) acts identically to sg.
  Semigroup adjoint() const;

  /// Bochner integral of the orbit, int_0^t S_s x ds. Closed form per mode
  /// for the diagonal kind; composite Simpson quadrature otherwise (`panels`
  /// must be even). Satisfies A * integrate_orbit(t, x) ~= S_t x - x.
  Vector integrate_orbit(double t, const Vector& x, int panels = 1024) const;

  /// Tightest stored growth pair. Contractions report (1, 0); other diagonal
  /// kinds report (1, max_j(-mu_j)); the matrix kind reports (1, log-norm)
  /// where the log-norm is the spectral bound of the symmetric part, which
  /// majorizes ||exp(tA)|| with m = 1 in the 2-norm.
  GrowthBound growth() const { return growth_; }

  /// Classification flags. At finite truncation every kind has a bounded
  /// generator and is therefore norm-continuous; contraction and
  /// pseudo-contraction follow from the growth pair.
  SemigroupClassification classify() const;

  bool is_contraction() const { return classify().contraction; }

  /// grid_shift parameters (throws PreconditionError for other kinds).
  int cells() const;
  double period() const;
  /// Diagonal rates mu (throws PreconditionError for other kinds).
  const Vector& mu() const;

 private:
  Semigroup() = default;

  Vector apply_diagonal(double t, const Vector& x) const;
  Vector apply_matrix_kind(double t, const Vector& x) const;
  Vector apply_shift(double t, const Vector& x) const;
  Matrix exp_at(double t) const;

  SemigroupKind kind_ = SemigroupKind::diagonal;
  Vector mu_;        // diagonal kind
  Matrix a_;         // dense generator (all kinds; assembled at construction)
  int cells_ = 0;    // grid_shift kind
  double period_ = 0.0;
  int direction_ = 1;  // grid_shift transport direction; adjoint flips it
  // Matrix-kind adjoint applies the transpose of the primal exponential, so
  // S_t and its adjoint are exact transposes of each other and the shared
  // cache is computed once.
  bool transposed_ = false;
  GrowthBound growth_;

  // Cache of exp(tA) keyed by t for the matrix kind; uniform grids hit a
  // handful of distinct gaps. Guarded so const access stays thread-safe.
  struct ExpCache {
    std::mutex lock;
    std::map<double, Matrix> entries;
  };
  std::shared_ptr<ExpCache> exp_cache_;
};

/// Read-only view of a semigroup's generator: A-action and the domain rule.
/// At finite truncation, domain membership reduces to a dimension-and-
/// finiteness check (recorded as such in verification reports).
class Generator {
 public:
  explicit Generator(const Semigroup& sg) : sg_(&sg) {}
  Vector apply(const Vector& x) const { return sg_->generator_apply(x); }
  bool domain_contains(const Vector& x) const;
  const Matrix& dense() const { return sg_->generator_matrix(); }
  int dim() const { return sg_->dim(); }

 private:
  const Semigroup* sg_;
};

/// Graph norm sqrt(||x||^2 + ||Ax||^2); always >= ||x||. Throws DomainError
/// when x fails the generator's domain rule.
double graph_norm(const Vector& x, const Generator& a);

/// exp(A) by scaling-and-squaring with the Pade-13 approximant family
/// (relative accuracy target 1e-12).
Matrix matrix_exponential(const Matrix& a);

/// Smallest m with ||S_t|| <= m * exp(omega * t) across the sampled t grid;
/// an empirical upper-estimate used when no analytic pair is available.
double fit_growth_m(const Semigroup& sg, double omega,
                    const std::vector<double>& t_samples);

}  // namespace spde
