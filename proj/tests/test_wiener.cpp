#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "spdelab/rng.hpp"
#include "spdelab/wiener.hpp"

using spde::Matrix;
using spde::QSpec;
using spde::TimeGrid;
using spde::Vector;
using spde::WienerPath;

TEST_CASE("spectrum factories and validation") {
  const QSpec poly = QSpec::polynomial(3);
  CHECK(poly.lambda[0] == 1.0);
  CHECK(poly.lambda[1] == 0.25);
  CHECK(poly.lambda[2] == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
  CHECK(poly.trace() == doctest::Approx(1.0 + 0.25 + 1.0 / 9.0));

  const QSpec geo = QSpec::geometric(4);
  CHECK(geo.lambda[0] == 0.5);
  CHECK(geo.lambda[3] == 0.0625);

  Vector increasing(2);
  increasing << 0.5, 1.0;
  CHECK_THROWS_AS(QSpec::from_eigenvalues(increasing), spde::SpectrumError);
  Vector nonpositive(2);
  nonpositive << 1.0, 0.0;
  CHECK_THROWS_AS(QSpec::from_eigenvalues(nonpositive), spde::SpectrumError);
}

TEST_CASE("time grid construction and lookup") {
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  CHECK(g.steps() == 8);
  CHECK(g.time(0) == 0.0);
  CHECK(g.time(8) == 1.0);  // dyadic step count keeps the horizon exact
  CHECK(g.dt(3) == 0.125);
  CHECK(g.index_of(0.5) == 4);
  CHECK_THROWS_AS(g.index_of(0.3), spde::GridError);
  CHECK_THROWS_AS(g.time(9), spde::GridError);

  CHECK_THROWS_AS(TimeGrid::uniform(0.0, 4), spde::GridError);
  CHECK_THROWS_AS(TimeGrid::uniform(1.0, 0), spde::GridError);
  CHECK_THROWS_AS(TimeGrid::from_times({0.0}), spde::GridError);
  CHECK_THROWS_AS(TimeGrid::from_times({0.1, 0.2}), spde::GridError);
  CHECK_THROWS_AS(TimeGrid::from_times({0.0, 0.2, 0.2}), spde::GridError);

  const TimeGrid coarse = g.subsample(4);
  CHECK(coarse.steps() == 2);
  CHECK(coarse.time(1) == g.time(4));
  CHECK_THROWS_AS(g.subsample(3), spde::GridError);
  CHECK(g.same_grid(TimeGrid::uniform(1.0, 8)));
  CHECK_FALSE(g.same_grid(coarse));
}

TEST_CASE("paths start at zero and are reproducible") {
  const QSpec q = QSpec::polynomial(3);
  const TimeGrid g = TimeGrid::uniform(1.0, 16);
  for (std::uint64_t seed : {1ull, 42ull, 0xDEADull}) {
    const WienerPath p = spde::sample_path(q, g, seed);
    CHECK(p.betas.col(0).isZero(0.0));
    const WienerPath again = spde::sample_path(q, g, seed);
    CHECK(p.betas == again.betas);  // bitwise determinism
  }
  const WienerPath a = spde::sample_path(q, g, 7, 0);
  const WienerPath b = spde::sample_path(q, g, 7, 1);
  CHECK(a.betas != b.betas);  // distinct ensemble members
}

TEST_CASE("terminal value has unit variance across seeds") {
  const QSpec q = QSpec::from_eigenvalues(Vector::Ones(1));
  const TimeGrid g = TimeGrid::from_times({0.0, 1.0});
  const int m = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < m; ++s) {
    const WienerPath p =
        spde::sample_path(q, g, static_cast<std::uint64_t>(s));
    const double b1 = p.betas(0, 1);
    sum += b1;
    sum2 += b1 * b1;
  }
  const double mean = sum / m;
  const double var = (sum2 - m * mean * mean) / (m - 1);
  // sampling error of the variance of N(0,1): sigma ~ sqrt(2/m)
  const double sigma = std::sqrt(2.0 / m);
  CHECK(std::abs(var - 1.0) <= 3.0 * sigma);
  CHECK(std::abs(mean) <= 3.0 / std::sqrt(double(m)));
}

TEST_CASE("state reconstruction applies the spectral weights") {
  QSpec q;
  q.lambda = (Vector(2) << 1.0, 0.25).finished();
  WienerPath p;
  p.grid = TimeGrid::from_times({0.0, 1.0});
  p.betas = Matrix::Zero(2, 2);
  p.betas(0, 1) = 2.0;
  p.betas(1, 1) = -1.0;

  const Vector w0 = spde::reconstruct_state(p, q, 0);
  CHECK(w0.isZero(0.0));
  const Vector w1 = spde::reconstruct_state(p, q, 1);
  CHECK(w1[0] == 2.0);
  CHECK(w1[1] == -0.5);
  CHECK_THROWS_AS(spde::reconstruct_state(p, q, 2), spde::GridError);
  CHECK_THROWS_AS(spde::reconstruct_state(p, QSpec::polynomial(3), 1),
                  spde::DimensionError);
}

TEST_CASE("mean squared norm grows like t times the trace") {
  const QSpec q = QSpec::polynomial(4);
  const TimeGrid g = TimeGrid::uniform(2.0, 4);
  const int m = 10000;
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const WienerPath p =
        spde::sample_path(q, g, 2024, static_cast<std::uint64_t>(i));
    acc += spde::reconstruct_state(p, q, 4).squaredNorm();
  }
  const double mean = acc / m;
  const double target = 2.0 * q.trace();
  // Var ||W_t||^2 = 2 t^2 sum lambda_j^2
  const double sigma =
      std::sqrt(2.0 * 4.0 * q.lambda.squaredNorm() / double(m));
  CHECK(std::abs(mean - target) <= 3.0 * sigma);
}

TEST_CASE("increment covariance matches (t - s) Q") {
  QSpec q;
  q.lambda = (Vector(2) << 1.0, 0.25).finished();
  const TimeGrid g = TimeGrid::uniform(2.0, 2);
  const int m = 10000;
  std::vector<WienerPath> ensemble;
  ensemble.reserve(m);
  for (int i = 0; i < m; ++i) {
    ensemble.push_back(
        spde::sample_path(q, g, 99, static_cast<std::uint64_t>(i)));
  }
  const Matrix cov = spde::increment_covariance(ensemble, q, 0, 2);
  // diagonal: (t - s) lambda_j with variance-of-variance stderr
  const double dt = 2.0;
  for (int j = 0; j < 2; ++j) {
    const double target = dt * q.lambda[j];
    const double sigma = std::sqrt(2.0 / (m - 1)) * target;
    CHECK(std::abs(cov(j, j) - target) <= 3.0 * sigma);
  }
  // off-diagonal: zero within 3 stderr of a product of independents
  const double sigma_off =
      std::sqrt(dt * q.lambda[0] * dt * q.lambda[1] / double(m));
  CHECK(std::abs(cov(0, 1)) <= 3.0 * sigma_off);

  // component independence as correlation
  const double corr =
      cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1));
  CHECK(std::abs(corr) <= 3.0 / std::sqrt(double(m)));

  std::vector<WienerPath> tiny(ensemble.begin(), ensemble.begin() + 50);
  CHECK_THROWS_AS(spde::increment_covariance(tiny, q, 0, 2),
                  spde::PreconditionError);
}

TEST_CASE("deterministic flat ensemble has zero covariance") {
  QSpec q;
  q.lambda = (Vector(1) << 1.0).finished();
  WienerPath flat;
  flat.grid = TimeGrid::uniform(1.0, 2);
  flat.betas = Matrix::Zero(1, 3);
  const std::vector<WienerPath> ensemble(100, flat);
  const Matrix cov = spde::increment_covariance(ensemble, q, 0, 2);
  CHECK(cov(0, 0) == 0.0);
}

TEST_CASE("disjoint increments are uncorrelated") {
  const QSpec q = QSpec::from_eigenvalues(Vector::Ones(1));
  const TimeGrid g = TimeGrid::uniform(2.0, 2);
  const int m = 10000;
  double s01 = 0.0, s0 = 0.0, s1 = 0.0, s00 = 0.0, s11 = 0.0;
  for (int i = 0; i < m; ++i) {
    const WienerPath p =
        spde::sample_path(q, g, 77, static_cast<std::uint64_t>(i));
    const double d0 = p.betas(0, 1) - p.betas(0, 0);
    const double d1 = p.betas(0, 2) - p.betas(0, 1);
    s0 += d0;
    s1 += d1;
    s00 += d0 * d0;
    s11 += d1 * d1;
    s01 += d0 * d1;
  }
  const double cov01 = (s01 - s0 * s1 / m) / (m - 1);
  const double v0 = (s00 - s0 * s0 / m) / (m - 1);
  const double v1 = (s11 - s1 * s1 / m) / (m - 1);
  const double corr = cov01 / std::sqrt(v0 * v1);
  CHECK(std::abs(corr) <= 3.0 / std::sqrt(double(m)));
}

TEST_CASE("spectral scaling acts linearly on reconstructions") {
  QSpec q;
  q.lambda = (Vector(3) << 1.0, 0.5, 0.25).finished();
  QSpec half;
  half.lambda = 0.5 * q.lambda;
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  // the component Brownian motions do not depend on the spectrum
  const WienerPath p = spde::sample_path(q, g, 5);
  const WienerPath ph = spde::sample_path(half, g, 5);
  CHECK(p.betas == ph.betas);
  for (int k = 0; k <= 8; ++k) {
    const Vector w = spde::reconstruct_state(p, q, k);
    const Vector wh = spde::reconstruct_state(ph, half, k);
    // coefficients scale by sqrt(1/2), so squared norms halve
    CHECK(wh.squaredNorm() ==
          doctest::Approx(0.5 * w.squaredNorm()).epsilon(1e-13));
    CHECK((std::sqrt(2.0) * wh - w).norm() <= 1e-13 * (1.0 + w.norm()));
  }
}

TEST_CASE("subsampled paths restrict the same Brownian motion") {
  const QSpec q = QSpec::polynomial(2);
  const TimeGrid g = TimeGrid::uniform(1.0, 64);
  const WienerPath fine = spde::sample_path(q, g, 2718);
  const WienerPath coarse = fine.subsample(8);
  CHECK(coarse.grid.steps() == 8);
  for (int k = 0; k <= 8; ++k) {
    CHECK(coarse.grid.time(k) == g.time(8 * k));  // bitwise equal nodes
    CHECK(coarse.betas.col(k) == fine.betas.col(8 * k));
  }
  // coarse increments telescope the fine ones exactly
  const Vector inc_coarse = spde::state_increment(coarse, q, 2, 3);
  const Vector inc_fine = spde::state_increment(fine, q, 16, 24);
  CHECK(inc_coarse == inc_fine);
}
