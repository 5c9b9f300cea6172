#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spdelab/hilbert.hpp"
#include "spdelab/rng.hpp"
#include "spdelab/semigroup.hpp"

using spde::HSOperator;
using spde::Matrix;
using spde::Vector;

namespace {

// Deterministic test vectors from the counter RNG's validation stream.
Vector random_vector(int dim, std::uint64_t tag) {
  Vector x(dim);
  for (int i = 0; i < dim; ++i) {
    x[i] = spde::rng::normal(0x48494C42u, spde::rng::kStreamValidate, tag, i);
  }
  return x;
}

}  // namespace

TEST_CASE("hilbert spec validation") {
  spde::HilbertSpec ok;
  ok.dim_state = 3;
  ok.dim_noise = 2;
  CHECK_NOTHROW(spde::validate(ok));

  spde::HilbertSpec bad_state = ok;
  bad_state.dim_state = 0;
  CHECK_THROWS_AS(spde::validate(bad_state), spde::DimensionError);

  spde::HilbertSpec bad_noise = ok;
  bad_noise.dim_noise = -1;
  CHECK_THROWS_AS(spde::validate(bad_noise), spde::DimensionError);
}

TEST_CASE("inner product evaluates the component sum") {
  Vector x(2), y(2);
  x << 3.0, 4.0;
  y << 3.0, 4.0;
  CHECK(spde::inner_product(x, y) == 25.0);

  // brute-force oracle on random dim-5 pairs
  for (int k = 0; k < 20; ++k) {
    const Vector a = random_vector(5, 2 * k);
    const Vector b = random_vector(5, 2 * k + 1);
    double brute = 0.0;
    for (int i = 0; i < 5; ++i) brute += a[i] * b[i];
    CHECK(spde::inner_product(a, b) == doctest::Approx(brute).epsilon(1e-14));
  }
}

TEST_CASE("inner product rejects mismatched dimensions") {
  Vector x(2), y(3);
  x.setZero();
  y.setZero();
  CHECK_THROWS_AS(spde::inner_product(x, y), spde::DimensionError);
}

TEST_CASE("norm is definite") {
  Vector z = Vector::Zero(4);
  CHECK(spde::norm(z) == 0.0);
  for (int k = 0; k < 20; ++k) {
    const Vector x = random_vector(4, 100 + k);
    if (x.isZero()) continue;
    CHECK(spde::norm(x) > 0.0);
    CHECK(spde::norm(x) ==
          doctest::Approx(std::sqrt(x.squaredNorm())).epsilon(1e-15));
  }
}

TEST_CASE("Cauchy-Schwarz holds on sampled pairs") {
  for (int k = 0; k < 100; ++k) {
    const Vector x = random_vector(6, 1000 + 2 * k);
    const Vector y = random_vector(6, 1000 + 2 * k + 1);
    const double lhs = std::abs(spde::inner_product(x, y));
    const double rhs = spde::norm(x) * spde::norm(y);
    CHECK(lhs <= rhs * (1.0 + 1e-12));
  }
}

TEST_CASE("graph norm closed forms") {
  // zero generator: graph norm degenerates to the plain norm
  const auto zero_sg = spde::Semigroup::diagonal(Vector::Zero(3));
  const spde::Generator zero_gen(zero_sg);
  const Vector x = random_vector(3, 7);
  CHECK(spde::graph_norm(x, zero_gen) ==
        doctest::Approx(spde::norm(x)).epsilon(1e-14));

  // diagonal rates mu = (1,2), x = (1,1): sqrt(2 + 1 + 4) = sqrt(7)
  Vector mu(2);
  mu << 1.0, 2.0;
  const auto diag_sg = spde::Semigroup::diagonal(mu);
  const spde::Generator diag_gen(diag_sg);
  Vector ones(2);
  ones << 1.0, 1.0;
  CHECK(spde::graph_norm(ones, diag_gen) ==
        doctest::Approx(std::sqrt(7.0)).epsilon(1e-14));
}

TEST_CASE("graph norm dominates the plain norm") {
  Vector mu(5);
  mu << 0.5, 1.0, 2.0, 3.0, 4.0;
  const auto sg = spde::Semigroup::diagonal(mu);
  const spde::Generator gen(sg);
  for (int k = 0; k < 100; ++k) {
    const Vector x = random_vector(5, 5000 + k);
    CHECK(spde::graph_norm(x, gen) >= spde::norm(x));
  }
}

TEST_CASE("graph norm rejects vectors outside the domain rule") {
  const auto sg = spde::Semigroup::diagonal(Vector::Ones(3));
  const spde::Generator gen(sg);
  Vector wrong = Vector::Zero(4);
  CHECK_THROWS_AS(spde::graph_norm(wrong, gen), spde::DomainError);
  Vector inf3 = Vector::Zero(3);
  inf3[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(spde::graph_norm(inf3, gen), spde::DomainError);
}

TEST_CASE("hs_norm closed forms and oracle") {
  Vector lambda2(2);
  lambda2 << 1.0, 0.25;

  const HSOperator zero = Matrix::Zero(2, 2);
  CHECK(spde::hs_norm(zero, lambda2) == 0.0);

  const HSOperator eye = Matrix::Identity(2, 2);
  CHECK(spde::hs_norm(eye, lambda2) ==
        doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));

  // random operators against the direct double-sum oracle
  for (int k = 0; k < 20; ++k) {
    Matrix phi(3, 2);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 2; ++j) {
        phi(i, j) = spde::rng::normal(0x4853u, spde::rng::kStreamValidate,
                                      9000 + k, 2 * i + j);
      }
    }
    double brute = 0.0;
    for (int j = 0; j < 2; ++j) {
      for (int i = 0; i < 3; ++i) {
        brute += lambda2[j] * phi(i, j) * phi(i, j);
      }
    }
    CHECK(spde::hs_norm(phi, lambda2) ==
          doctest::Approx(std::sqrt(brute)).epsilon(1e-13));
  }
}

TEST_CASE("hs_norm scales absolutely homogeneously") {
  Vector lambda(3);
  lambda << 1.0, 0.5, 0.25;
  Matrix phi(2, 3);
  phi << 1.0, -2.0, 0.5, 0.25, 3.0, -1.5;
  const double base = spde::hs_norm(phi, lambda);
  for (const double c : {-3.0, -0.5, 0.0, 0.125, 7.0}) {
    CHECK(spde::hs_norm(c * phi, lambda) ==
          doctest::Approx(std::abs(c) * base).epsilon(1e-13));
  }
}

TEST_CASE("hs_norm input validation") {
  Matrix phi = Matrix::Identity(2, 2);
  Vector lambda3 = Vector::Ones(3);
  CHECK_THROWS_AS(spde::hs_norm(phi, lambda3), spde::DimensionError);
  Vector bad(2);
  bad << 1.0, 0.0;  // eigenvalues must stay strictly positive
  CHECK_THROWS_AS(spde::hs_norm(phi, bad), spde::SpectrumError);
}
