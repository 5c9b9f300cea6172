#include "spdelab/semigroup.hpp"

#include "spdelab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spde {

namespace {

// Pade coefficient tables and 1-norm thresholds for scaling-and-squaring
// (degrees 3..13). The degree-13 threshold keeps the approximant's relative
// error near 1e-13 before squaring.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068;
constexpr double kTheta13 = 5.371920351148152;

Matrix pade_solve(const Matrix& u, const Matrix& v) {
  // r = (v - u)^{-1} (v + u)
  return (v - u).partialPivLu().solve(v + u);
}

Matrix expm_pade3(const Matrix& a, const Matrix& a2) {
  const Matrix eye = Matrix::Identity(a.rows(), a.cols());
  const Matrix u = a * (a2 + 60.0 * eye);
  const Matrix v = 12.0 * a2 + 120.0 * eye;
  return pade_solve(u, v);
}

Matrix expm_pade5(const Matrix& a, const Matrix& a2, const Matrix& a4) {
  const Matrix eye = Matrix::Identity(a.rows(), a.cols());
  const Matrix u = a * (a4 + 420.0 * a2 + 15120.0 * eye);
  const Matrix v = 30.0 * a4 + 3360.0 * a2 + 30240.0 * eye;
  return pade_solve(u, v);
}

Matrix expm_pade7(const Matrix& a, const Matrix& a2, const Matrix& a4,
                  const Matrix& a6) {
  const Matrix eye = Matrix::Identity(a.rows(), a.cols());
  const Matrix u = a * (a6 + 1512.0 * a4 + 277200.0 * a2 + 8648640.0 * eye);
  const Matrix v = 56.0 * a6 + 25200.0 * a4 + 1995840.0 * a2 + 17297280.0 * eye;
  return pade_solve(u, v);
}

Matrix expm_pade9(const Matrix& a, const Matrix& a2, const Matrix& a4,
                  const Matrix& a6) {
  const Matrix eye = Matrix::Identity(a.rows(), a.cols());
  const Matrix a8 = a4 * a4;
  const Matrix u = a * (a8 + 3960.0 * a6 + 2162160.0 * a4 + 302702400.0 * a2 +
                        8821612800.0 * eye);
  const Matrix v = 90.0 * a8 + 110880.0 * a6 + 30270240.0 * a4 +
                   2075673600.0 * a2 + 17643225600.0 * eye;
  return pade_solve(u, v);
}

Matrix expm_pade13(const Matrix& a, const Matrix& a2, const Matrix& a4,
                   const Matrix& a6) {
  const Matrix eye = Matrix::Identity(a.rows(), a.cols());
  const Matrix u =
      a * (a6 * (a6 + 16380.0 * a4 + 40840800.0 * a2) +
           33522128640.0 * a6 + 10559470521600.0 * a4 +
           1187353796428800.0 * a2 + 32382376266240000.0 * eye);
  const Matrix v = a6 * (182.0 * a6 + 960960.0 * a4 + 1323241920.0 * a2) +
                   670442572800.0 * a6 + 129060195264000.0 * a4 +
                   7771770303897600.0 * a2 + 64764752532480000.0 * eye;
  return pade_solve(u, v);
}

// Periodic interpolation kernel for an odd number of cells:
// K(x) = sin(n pi x / L) / (n sin(pi x / L)), period L, even, K(0) = 1.
double shift_kernel(double x, int n, double length) {
  const double a = x / length;
  const double u = a - std::floor(a + 0.5);  // wrap into [-1/2, 1/2)
  if (u == 0.0) return 1.0;
  const double pi = 3.14159265358979323846;
  return std::sin(static_cast<double>(n) * pi * u) /
         (static_cast<double>(n) * std::sin(pi * u));
}

}  // namespace

Matrix matrix_exponential(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("matrix_exponential: matrix must be square");
  }
  const double nrm = a.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
  const Matrix a2 = a * a;
  if (nrm <= kTheta3) return expm_pade3(a, a2);
  const Matrix a4 = a2 * a2;
  if (nrm <= kTheta5) return expm_pade5(a, a2, a4);
  const Matrix a6 = a2 * a4;
  if (nrm <= kTheta7) return expm_pade7(a, a2, a4, a6);
  if (nrm <= kTheta9) return expm_pade9(a, a2, a4, a6);
  int squarings = 0;
  double scale = 1.0;
  if (nrm > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(nrm / kTheta13)));
    scale = std::ldexp(1.0, -squarings);
  }
  const Matrix as = a * scale;
  const Matrix as2 = as * as;
  const Matrix as4 = as2 * as2;
  const Matrix as6 = as2 * as4;
  Matrix r = expm_pade13(as, as2, as4, as6);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

Semigroup Semigroup::diagonal(Vector mu) {
  if (mu.size() < 1) {
    throw DimensionError("Semigroup::diagonal: empty rate vector");
  }
  Semigroup sg;
  sg.kind_ = SemigroupKind::diagonal;
  sg.mu_ = std::move(mu);
  sg.a_ = Matrix((-sg.mu_).asDiagonal());
  const double mu_min = sg.mu_.minCoeff();
  sg.growth_ = (mu_min >= 0.0) ? GrowthBound{1.0, 0.0}
                               : GrowthBound{1.0, -mu_min};
  return sg;
}

Semigroup Semigroup::matrix(Matrix a) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw DimensionError("Semigroup::matrix: generator must be square");
  }
  Semigroup sg;
  sg.kind_ = SemigroupKind::matrix_exponential;
  sg.a_ = std::move(a);
  // The log-norm (spectral bound of the symmetric part) gives
  // ||exp(tA)|| <= exp(lognorm * t) with m = 1 in the 2-norm.
  const Matrix sym = 0.5 * (sg.a_ + sg.a_.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const double lognorm = es.eigenvalues().maxCoeff();
  sg.growth_ = (lognorm <= 0.0) ? GrowthBound{1.0, 0.0}
                                : GrowthBound{1.0, lognorm};
  sg.exp_cache_ = std::make_shared<ExpCache>();
  return sg;
}

Semigroup Semigroup::grid_shift(int cells, double period) {
  if (cells < 3 || cells % 2 == 0) {
    throw PreconditionError(
        "Semigroup::grid_shift: cell count must be odd and >= 3");
  }
  if (!(period > 0.0)) {
    throw PreconditionError("Semigroup::grid_shift: period must be positive");
  }
  Semigroup sg;
  sg.kind_ = SemigroupKind::grid_shift;
  sg.cells_ = cells;
  sg.period_ = period;
  sg.direction_ = 1;
  // Spectral difference matrix of the periodic grid (antisymmetric
  // circulant); it is the derivative of the shift at t = 0, so exp(tA)
  // reproduces apply() and the semigroup law holds to roundoff.
  const double pi = 3.14159265358979323846;
  sg.a_ = Matrix::Zero(cells, cells);
  for (int m = 0; m < cells; ++m) {
    for (int j = 0; j < cells; ++j) {
      if (m == j) continue;
      const int d = m - j;
      const double sign = (d % 2 == 0) ? 1.0 : -1.0;
      sg.a_(m, j) = sign * (pi / period) /
                    std::sin(pi * static_cast<double>(d) /
                             static_cast<double>(cells));
    }
  }
  sg.growth_ = GrowthBound{1.0, 0.0};  // transport is an isometry
  return sg;
}

int Semigroup::dim() const {
  return static_cast<int>(a_.rows());
}

Vector Semigroup::apply(double t, const Vector& x) const {
  if (t < 0.0) {
    throw PreconditionError("Semigroup::apply: negative time");
  }
  if (x.size() != dim()) {
    throw DimensionError("Semigroup::apply: state has length " +
                         std::to_string(x.size()) + ", expected " +
                         std::to_string(dim()));
  }
  if (t == 0.0) return x;
  switch (kind_) {
    case SemigroupKind::diagonal:
      return apply_diagonal(t, x);
    case SemigroupKind::matrix_exponential:
      return apply_matrix_kind(t, x);
    case SemigroupKind::grid_shift:
      return apply_shift(t, x);
  }
  throw std::logic_error("Semigroup::apply: unknown kind");
}

Matrix Semigroup::apply_columns(double t, const Matrix& ops) const {
  Matrix out(ops.rows(), ops.cols());
  for (Eigen::Index j = 0; j < ops.cols(); ++j) {
    out.col(j) = apply(t, ops.col(j));
  }
  return out;
}

Vector Semigroup::apply_diagonal(double t, const Vector& x) const {
  Vector y(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    y[j] = std::exp(-mu_[j] * t) * x[j];
  }
  return y;
}

Matrix Semigroup::exp_at(double t) const {
  // The cache always holds exponentials of the primal generator; a
  // transposed descriptor recovers it from its own stored A^T.
  {
    std::lock_guard<std::mutex> guard(exp_cache_->lock);
    auto it = exp_cache_->entries.find(t);
    if (it != exp_cache_->entries.end()) return it->second;
  }
  const Matrix primal = transposed_ ? Matrix(a_.transpose()) : a_;
  Matrix e = matrix_exponential(t * primal);
  std::lock_guard<std::mutex> guard(exp_cache_->lock);
  auto [it, inserted] = exp_cache_->entries.emplace(t, std::move(e));
  (void)inserted;
  return it->second;
}

Vector Semigroup::apply_matrix_kind(double t, const Vector& x) const {
  const Matrix e = exp_at(t);
  if (transposed_) return e.transpose() * x;
  return e * x;
}

Vector Semigroup::apply_shift(double t, const Vector& x) const {
  const int n = cells_;
  const double h = period_ / static_cast<double>(n);
  const double s = static_cast<double>(direction_) * t;
  // Split the shift into whole cells (exact cyclic permutation) plus a
  // fractional remainder |r| <= h/2 handled by the interpolation kernel.
  const double qd = std::nearbyint(s / h);
  const double r = s - qd * h;
  const long q = static_cast<long>(std::fmod(qd, static_cast<double>(n)));
  const long q_mod = ((q % n) + n) % n;
  Vector z(n);
  for (int m = 0; m < n; ++m) {
    z[m] = x[(m + q_mod) % n];
  }
  if (r == 0.0) return z;
  Vector w(n);
  for (int c = 0; c < n; ++c) {
    w[c] = shift_kernel(static_cast<double>(c) * h + r, n, period_);
  }
  Vector y(n);
  for (int m = 0; m < n; ++m) {
    double acc = 0.0;
    for (int c = 0; c < n; ++c) {
      acc += w[c] * z[(m - c + n) % n];
    }
    y[m] = acc;
  }
  return y;
}

Vector Semigroup::generator_apply(const Vector& x) const {
  if (x.size() != dim()) {
    throw DomainError("generator_apply: state has length " +
                      std::to_string(x.size()) + ", expected " +
                      std::to_string(dim()));
  }
  if (kind_ == SemigroupKind::diagonal) {
    return (-mu_.array() * x.array()).matrix();
  }
  return a_ * x;
}

const Matrix& Semigroup::generator_matrix() const { return a_; }

Semigroup Semigroup::adjoint() const {
  switch (kind_) {
    case SemigroupKind::diagonal:
      return *this;  // real diagonal is self-adjoint
    case SemigroupKind::matrix_exponential: {
      Semigroup sg = *this;  // shares the exponential cache
      sg.a_ = a_.transpose();
      sg.transposed_ = !transposed_;
      return sg;
    }
    case SemigroupKind::grid_shift: {
      Semigroup sg = *this;
      sg.direction_ = -direction_;
      sg.a_ = a_.transpose();
      return sg;
    }
  }
  throw std::logic_error("Semigroup::adjoint: unknown kind");
}

Vector Semigroup::integrate_orbit(double t, const Vector& x,
                                  int panels) const {
  if (t < 0.0) {
    throw PreconditionError("integrate_orbit: negative time");
  }
  if (x.size() != dim()) {
    throw DimensionError("integrate_orbit: dimension mismatch");
  }
  if (t == 0.0) return Vector::Zero(x.size());
  if (kind_ == SemigroupKind::diagonal) {
    // Closed form per mode: (1 - exp(-mu t)) / mu, with the mu -> 0 limit t.
    Vector y(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double mu = mu_[j];
      y[j] = (mu == 0.0) ? t * x[j] : (-std::expm1(-mu * t) / mu) * x[j];
    }
    return y;
  }
  if (panels < 2 || panels % 2 != 0) {
    throw PreconditionError("integrate_orbit: panel count must be even");
  }
  // Composite Simpson over s -> S_s x.
  const double h = t / static_cast<double>(panels);
  KahanVector acc(x.size());
  acc.add(x);  // S_0 x, weight 1
  for (int i = 1; i < panels; ++i) {
    const double weight = (i % 2 == 1) ? 4.0 : 2.0;
    acc.add(weight * apply(static_cast<double>(i) * h, x));
  }
  acc.add(apply(t, x));
  return (h / 3.0) * acc.value();
}

SemigroupClassification Semigroup::classify() const {
  SemigroupClassification c;
  // Bounded generator at finite truncation, for every kind.
  c.norm_continuous = true;
  switch (kind_) {
    case SemigroupKind::diagonal:
      c.contraction = mu_.minCoeff() >= 0.0;
      break;
    case SemigroupKind::matrix_exponential:
      // Contraction iff the log-norm is nonpositive; the stored growth pair
      // is (1, 0) exactly in that case.
      c.contraction = growth_.omega <= 0.0;
      break;
    case SemigroupKind::grid_shift:
      c.contraction = true;
      break;
  }
  c.pseudo_contraction = growth_.m == 1.0;
  return c;
}

int Semigroup::cells() const {
  if (kind_ != SemigroupKind::grid_shift) {
    throw PreconditionError("cells(): not a grid_shift semigroup");
  }
  return cells_;
}

double Semigroup::period() const {
  if (kind_ != SemigroupKind::grid_shift) {
    throw PreconditionError("period(): not a grid_shift semigroup");
  }
  return period_;
}

const Vector& Semigroup::mu() const {
  if (kind_ != SemigroupKind::diagonal) {
    throw PreconditionError("mu(): not a diagonal semigroup");
  }
  return mu_;
}

bool Generator::domain_contains(const Vector& x) const {
  return x.size() == sg_->dim() && x.allFinite();
}

double graph_norm(const Vector& x, const Generator& a) {
  if (!a.domain_contains(x)) {
    throw DomainError("graph_norm: vector fails the generator domain rule");
  }
  const Vector ax = a.apply(x);
  return std::sqrt(x.squaredNorm() + ax.squaredNorm());
}

double fit_growth_m(const Semigroup& sg, double omega,
                    const std::vector<double>& t_samples) {
  const int n = sg.dim();
  double m = 1.0;
  for (const double t : t_samples) {
    Matrix st(n, n);
    for (int i = 0; i < n; ++i) {
      st.col(i) = sg.apply(t, Vector::Unit(n, i));
    }
    const double ratio = operator_2norm(st) / std::exp(omega * t);
    m = std::max(m, ratio);
  }
  return m;
}

}  // namespace spde
