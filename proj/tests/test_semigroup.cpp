#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "spdelab/hilbert.hpp"
#include "spdelab/numerics.hpp"
#include "spdelab/rng.hpp"
#include "spdelab/semigroup.hpp"

using spde::Matrix;
using spde::Semigroup;
using spde::Vector;

namespace {

Vector random_vector(int dim, std::uint64_t tag) {
  Vector x(dim);
  for (int i = 0; i < dim; ++i) {
    x[i] = spde::rng::normal(0x53474Du, spde::rng::kStreamValidate, tag, i);
  }
  return x;
}

Matrix random_matrix(int dim, std::uint64_t tag) {
  Matrix a(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      a(i, j) = spde::rng::normal(0x4D4154u, spde::rng::kStreamValidate, tag,
                                  static_cast<std::uint64_t>(dim) * i + j);
    }
  }
  return a;
}

// Slow reference oracle: plain truncated power series sum_k A^k / k!.
// Independent of the production scaling-and-squaring route; adequate for
// the moderate-norm matrices used below.
Matrix expm_series(const Matrix& a, int terms = 60) {
  Matrix sum = Matrix::Identity(a.rows(), a.cols());
  Matrix term = Matrix::Identity(a.rows(), a.cols());
  for (int k = 1; k <= terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

Matrix dense_semigroup_matrix(const Semigroup& sg, double t) {
  const int n = sg.dim();
  Matrix st(n, n);
  for (int i = 0; i < n; ++i) st.col(i) = sg.apply(t, Vector::Unit(n, i));
  return st;
}

}  // namespace

TEST_CASE("construction rejects bad parameters") {
  CHECK_THROWS_AS(Semigroup::diagonal(Vector()), spde::DimensionError);
  CHECK_THROWS_AS(Semigroup::matrix(Matrix::Zero(2, 3)),
                  spde::DimensionError);
  CHECK_THROWS_AS(Semigroup::grid_shift(4, 1.0), spde::PreconditionError);
  CHECK_THROWS_AS(Semigroup::grid_shift(1, 1.0), spde::PreconditionError);
  CHECK_THROWS_AS(Semigroup::grid_shift(5, 0.0), spde::PreconditionError);
  CHECK_THROWS_AS(Semigroup::grid_shift(5, -2.0), spde::PreconditionError);
}

TEST_CASE("apply at time zero is the identity, negative time rejected") {
  Vector mu(3);
  mu << 1.0, 2.0, 3.0;
  const auto kinds = {Semigroup::diagonal(mu),
                      Semigroup::matrix(random_matrix(3, 1)),
                      Semigroup::grid_shift(3, 1.0)};
  for (const auto& sg : kinds) {
    const Vector x = random_vector(3, 11);
    const Vector y = sg.apply(0.0, x);
    CHECK(y == x);
    CHECK_THROWS_AS(sg.apply(-1e-12, x), spde::PreconditionError);
  }
}

TEST_CASE("diagonal apply solves each mode's scalar equation") {
  Vector mu(2);
  mu << 1.0, 4.0;
  const auto sg = Semigroup::diagonal(mu);
  Vector x(2);
  x << 1.0, 1.0;
  const Vector y = sg.apply(1.0, x);
  CHECK(y[0] == std::exp(-1.0));
  CHECK(y[1] == std::exp(-4.0));
}

TEST_CASE("grid shift by whole cells permutes coefficients exactly") {
  const int n = 7;
  const auto sg = Semigroup::grid_shift(n, static_cast<double>(n));  // h = 1
  const Vector x = Vector::Unit(n, 3);
  // transport moves the sample at cell 3 to cell 2: y_m = x_{m+1}
  const Vector y = sg.apply(1.0, x);
  for (int m = 0; m < n; ++m) {
    CHECK(y[m] == (m == 2 ? 1.0 : 0.0));
  }
  // a full period returns the exact input
  const Vector w = random_vector(n, 12);
  CHECK(sg.apply(static_cast<double>(n), w) == w);
}

TEST_CASE("matrix exponential matches the power-series oracle") {
  for (int k = 0; k < 20; ++k) {
    const Matrix a = random_matrix(4, 100 + k);
    const Matrix pade = spde::matrix_exponential(a);
    const Matrix series = expm_series(a);
    const double rel = (pade - series).norm() / series.norm();
    CHECK(rel <= 1e-12);
  }
}

TEST_CASE("matrix exponential closed forms") {
  // nilpotent block: exp(A) = I + A
  Matrix nil = Matrix::Zero(2, 2);
  nil(0, 1) = 1.0;
  const Matrix en = spde::matrix_exponential(nil);
  CHECK((en - (Matrix::Identity(2, 2) + nil)).norm() <= 1e-14);

  // rotation block: exp maps to (cos, sin) entries
  const double theta = 0.7;
  Matrix rot = Matrix::Zero(2, 2);
  rot(0, 1) = -theta;
  rot(1, 0) = theta;
  const Matrix er = spde::matrix_exponential(rot);
  CHECK(std::abs(er(0, 0) - std::cos(theta)) <= 1e-14);
  CHECK(std::abs(er(1, 0) - std::sin(theta)) <= 1e-14);

  // large norm exercises the scaling path
  const Matrix big = 40.0 * random_matrix(3, 500);
  const Matrix half = spde::matrix_exponential(0.5 * big);
  const Matrix whole = spde::matrix_exponential(big);
  CHECK((half * half - whole).norm() / whole.norm() <= 1e-11);
}

TEST_CASE("semigroup law on all kinds") {
  Vector mu(4);
  mu << 0.0, 1.0, 2.5, 4.0;
  const auto diag = Semigroup::diagonal(mu);
  const auto matk = Semigroup::matrix(random_matrix(4, 2));
  const auto shift = Semigroup::grid_shift(31, 1.0);

  for (int k = 0; k < 25; ++k) {
    const double s =
        2.0 * spde::rng::uniform(0x4C4157u, spde::rng::kStreamValidate, k, 0);
    const double t =
        2.0 * spde::rng::uniform(0x4C4157u, spde::rng::kStreamValidate, k, 1);
    const Vector x4 = random_vector(4, 300 + k);
    const Vector x31 = random_vector(31, 300 + k);
    CHECK((diag.apply(s + t, x4) - diag.apply(s, diag.apply(t, x4))).norm() <=
          1e-10 * x4.norm());
    CHECK((matk.apply(s + t, x4) - matk.apply(s, matk.apply(t, x4))).norm() <=
          1e-10 * x4.norm());
    CHECK((shift.apply(s + t, x31) -
           shift.apply(s, shift.apply(t, x31))).norm() <= 1e-10 * x31.norm());
  }
}

TEST_CASE("generator action closed forms") {
  Vector mu(2);
  mu << 1.0, 2.0;
  const auto diag = Semigroup::diagonal(mu);
  Vector ones(2);
  ones << 1.0, 1.0;
  const Vector ax = diag.generator_apply(ones);
  CHECK(ax[0] == -1.0);
  CHECK(ax[1] == -2.0);

  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = 1.0;
  const auto matk = Semigroup::matrix(a);
  Vector e2(2);
  e2 << 0.0, 1.0;
  const Vector ay = matk.generator_apply(e2);
  CHECK(ay[0] == 1.0);
  CHECK(ay[1] == 0.0);

  CHECK_THROWS_AS(diag.generator_apply(Vector::Zero(3)), spde::DomainError);
}

TEST_CASE("generator is the small-time difference-quotient limit") {
  Vector mu(5);
  mu << 0.5, 1.0, 1.5, 2.0, 2.5;
  const std::vector<Semigroup> kinds = {Semigroup::diagonal(mu),
                                        Semigroup::matrix(random_matrix(5, 3)),
                                        Semigroup::grid_shift(5, 1.0)};
  const std::vector<double> hs = {1e-3, 1e-4, 1e-5};
  for (const auto& sg : kinds) {
    for (int k = 0; k < 20; ++k) {
      const Vector x = random_vector(5, 700 + k);
      const Vector ax = sg.generator_apply(x);
      std::vector<double> errs;
      for (const double h : hs) {
        errs.push_back(((sg.apply(h, x) - x) / h - ax).norm());
      }
      // first-order limit: error shrinks linearly with h
      const double order = spde::fit_convergence_order(hs, errs);
      CHECK(order >= 0.9);
      CHECK(errs.back() <= 1e-3 * (1.0 + ax.norm()));
    }
  }
}

TEST_CASE("generator commutes with the semigroup") {
  const std::vector<Semigroup> kinds = {
      Semigroup::diagonal((Vector(3) << 1.0, 2.0, 3.0).finished()),
      Semigroup::matrix(random_matrix(3, 4)), Semigroup::grid_shift(3, 2.0)};
  for (const auto& sg : kinds) {
    for (int k = 0; k < 10; ++k) {
      const Vector x = random_vector(3, 800 + k);
      const double t =
          spde::rng::uniform(0x434F4Du, spde::rng::kStreamValidate, k, 0);
      const Vector lhs = sg.generator_apply(sg.apply(t, x));
      const Vector rhs = sg.apply(t, sg.generator_apply(x));
      CHECK((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }
  }
}

TEST_CASE("adjoint closed forms and involution") {
  // real diagonal kinds are self-adjoint
  Vector mu(3);
  mu << 1.0, 2.0, 3.0;
  const auto diag = Semigroup::diagonal(mu);
  const auto diag_adj = diag.adjoint();
  const Vector x = random_vector(3, 21);
  CHECK(diag.apply(0.5, x) == diag_adj.apply(0.5, x));

  // matrix kind: the adjoint descriptor carries A^T
  const Matrix a = random_matrix(3, 22);
  const auto matk = Semigroup::matrix(a);
  const auto matk_adj = matk.adjoint();
  CHECK(matk_adj.generator_matrix() == a.transpose());
  // involution acts identically (shared exponentials, transposed twice)
  const auto matk_back = matk_adj.adjoint();
  CHECK(matk_back.apply(0.7, x) == matk.apply(0.7, x));

  const auto shift = Semigroup::grid_shift(9, 1.0);
  const auto shift_back = shift.adjoint().adjoint();
  const Vector x9 = random_vector(9, 23);
  CHECK(shift.apply(0.37, x9) == shift_back.apply(0.37, x9));
}

TEST_CASE("adjoint duality holds at transpose-arithmetic precision") {
  const std::vector<Semigroup> kinds = {
      Semigroup::diagonal((Vector(4) << 0.5, 1.0, 2.0, 3.0).finished()),
      Semigroup::matrix(random_matrix(4, 31)), Semigroup::grid_shift(5, 1.0)};
  for (const auto& sg : kinds) {
    const auto adj = sg.adjoint();
    const int n = sg.dim();
    for (int k = 0; k < 20; ++k) {
      const Vector x = random_vector(n, 900 + 2 * k);
      const Vector y = random_vector(n, 900 + 2 * k + 1);
      const double t =
          spde::rng::uniform(0x414A44u, spde::rng::kStreamValidate, k, 0);
      const double lhs = spde::inner_product(sg.apply(t, x), y);
      const double rhs = spde::inner_product(x, adj.apply(t, y));
      CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + x.norm() * y.norm()));
    }
  }
}

TEST_CASE("orbit integral closed forms") {
  const auto sg = Semigroup::diagonal(Vector::Ones(1));
  const Vector one = Vector::Ones(1);
  CHECK(sg.integrate_orbit(0.0, one) == Vector::Zero(1));
  const Vector r = sg.integrate_orbit(1.0, one);
  CHECK(r[0] == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));

  // zero rate integrates to t * x
  const auto zero_sg = Semigroup::diagonal(Vector::Zero(2));
  const Vector v = random_vector(2, 41);
  CHECK((zero_sg.integrate_orbit(0.75, v) - 0.75 * v).norm() <= 1e-15);
}

TEST_CASE("orbit integral satisfies the generator identity") {
  // A * int_0^t S_s x ds = S_t x - x
  const auto diag =
      Semigroup::diagonal((Vector(4) << 0.0, 1.0, 2.0, 4.0).finished());
  const auto matk = Semigroup::matrix(random_matrix(4, 51));
  for (int k = 0; k < 10; ++k) {
    const Vector x = random_vector(4, 1100 + k);
    const double t =
        0.1 + 1.9 * spde::rng::uniform(0x4F5242u, spde::rng::kStreamValidate,
                                       k, 0);
    const Vector gap_diag =
        diag.generator_apply(diag.integrate_orbit(t, x)) -
        (diag.apply(t, x) - x);
    CHECK(gap_diag.norm() <= 1e-13 * (1.0 + x.norm()));
    const Vector gap_mat =
        matk.generator_apply(matk.integrate_orbit(t, x)) -
        (matk.apply(t, x) - x);
    CHECK(gap_mat.norm() <= 1e-10 * (1.0 + x.norm()));
  }

  // transport kind: smooth data meets the tight quadrature tolerance;
  // rough data is limited by the h^4 ||A^4 x|| Simpson bound
  const int n = 31;
  const auto shift = Semigroup::grid_shift(n, 1.0);
  Vector smooth(n);
  for (int m = 0; m < n; ++m) {
    smooth[m] = std::sin(2.0 * 3.14159265358979323846 * m / n);
  }
  const Vector gap_smooth =
      shift.generator_apply(shift.integrate_orbit(0.4, smooth)) -
      (shift.apply(0.4, smooth) - smooth);
  CHECK(gap_smooth.norm() <= 1e-9);
  const Vector rough = random_vector(n, 1200);
  const Vector gap_rough =
      shift.generator_apply(shift.integrate_orbit(0.4, rough)) -
      (shift.apply(0.4, rough) - rough);
  CHECK(gap_rough.norm() <= 1e-4 * rough.norm());

  CHECK_THROWS_AS(diag.integrate_orbit(-0.1, Vector::Zero(4)),
                  spde::PreconditionError);
  CHECK_THROWS_AS(matk.integrate_orbit(1.0, Vector::Zero(4), 3),
                  spde::PreconditionError);
}

TEST_CASE("growth bound majorizes the orbit norm") {
  const std::vector<Semigroup> kinds = {
      Semigroup::diagonal((Vector(3) << -0.5, 1.0, 2.0).finished()),
      Semigroup::matrix(random_matrix(3, 61)),
      Semigroup::grid_shift(7, 1.0)};
  for (const auto& sg : kinds) {
    const auto gb = sg.growth();
    CHECK(gb.m >= 1.0);
    const int n = sg.dim();
    for (int k = 0; k < 30; ++k) {
      const Vector x = random_vector(n, 1300 + k);
      const double t =
          3.0 * spde::rng::uniform(0x475257u, spde::rng::kStreamValidate, k, 0);
      CHECK(sg.apply(t, x).norm() <=
            gb.m * std::exp(gb.omega * t) * x.norm() * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("classification flags") {
  const auto diag =
      Semigroup::diagonal((Vector(3) << 1.0, 2.0, 3.0).finished());
  const auto cd = diag.classify();
  CHECK(cd.contraction);
  CHECK(cd.pseudo_contraction);
  CHECK(cd.norm_continuous);
  CHECK(diag.is_contraction());
  CHECK(diag.growth().m == 1.0);
  CHECK(diag.growth().omega == 0.0);

  // symmetric generator with spectral bound 2: pseudo-contraction, omega = 2
  Matrix sym(2, 2);
  sym << 2.0, 0.0, 0.0, -1.0;
  const auto matk = Semigroup::matrix(sym);
  const auto cm = matk.classify();
  CHECK_FALSE(cm.contraction);
  CHECK(cm.pseudo_contraction);
  CHECK(cm.norm_continuous);
  CHECK(matk.growth().omega == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(matk.growth().m == 1.0);
  // sharp: ||exp(tA)|| = exp(2t) for symmetric A
  const Matrix st = dense_semigroup_matrix(matk, 0.5);
  CHECK(spde::operator_2norm(st) ==
        doctest::Approx(std::exp(1.0)).epsilon(1e-12));

  const auto shift = Semigroup::grid_shift(5, 1.0);
  CHECK(shift.classify().contraction);
  CHECK(shift.growth().omega == 0.0);

  // expanding diagonal mode: still pseudo-contractive with omega = -min(mu)
  const auto expanding =
      Semigroup::diagonal((Vector(2) << -1.5, 2.0).finished());
  CHECK_FALSE(expanding.classify().contraction);
  CHECK(expanding.classify().pseudo_contraction);
  CHECK(expanding.growth().omega == doctest::Approx(1.5));
}

TEST_CASE("strong continuity, monotone for diagonal contractions") {
  const auto diag =
      Semigroup::diagonal((Vector(4) << 0.0, 0.5, 2.0, 5.0).finished());
  const Vector x = random_vector(4, 1400);
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 20; ++k) {
    const double h = std::ldexp(1.0, -k);  // 1, 1/2, ..., 2^-20
    const double gap = (diag.apply(h, x) - x).norm();
    CHECK(gap <= prev * (1.0 + 1e-12));
    prev = gap;
  }
  CHECK(prev <= 1e-5 * x.norm());

  const auto shift = Semigroup::grid_shift(9, 1.0);
  const Vector y = random_vector(9, 1401);
  CHECK((shift.apply(1e-9, y) - y).norm() <= 1e-6 * y.norm());
}

TEST_CASE("isometry of the transport kind") {
  const auto shift = Semigroup::grid_shift(31, 2.0);
  for (int k = 0; k < 20; ++k) {
    const Vector x = random_vector(31, 1500 + k);
    const double t =
        4.0 * spde::rng::uniform(0x49534Fu, spde::rng::kStreamValidate, k, 0);
    CHECK(shift.apply(t, x).norm() ==
          doctest::Approx(x.norm()).epsilon(1e-12));
  }
}

TEST_CASE("kind accessors guard their parameters") {
  const auto diag = Semigroup::diagonal(Vector::Ones(2));
  const auto shift = Semigroup::grid_shift(5, 2.5);
  CHECK(shift.cells() == 5);
  CHECK(shift.period() == 2.5);
  CHECK(diag.mu() == Vector::Ones(2));
  CHECK_THROWS_AS(diag.cells(), spde::PreconditionError);
  CHECK_THROWS_AS(diag.period(), spde::PreconditionError);
  CHECK_THROWS_AS(shift.mu(), spde::PreconditionError);
}

TEST_CASE("empirical growth fit upper-estimates m") {
  // log-norm pair: fitted m stays at 1
  const auto matk = Semigroup::matrix(random_matrix(3, 71));
  const std::vector<double> ts = {0.01, 0.1, 0.5, 1.0, 2.0};
  const double m_lognorm = spde::fit_growth_m(matk, matk.growth().omega, ts);
  CHECK(m_lognorm <= 1.0 + 1e-9);

  // nilpotent block grows linearly, so omega = 0 forces m > 1
  Matrix nil = Matrix::Zero(2, 2);
  nil(0, 1) = 1.0;
  const auto jordan = Semigroup::matrix(nil);
  const double m_fit = spde::fit_growth_m(jordan, 0.0, ts);
  CHECK(m_fit > 1.5);  // ||exp(2A)|| >= 2
  CHECK(m_fit >= 1.0);
}
