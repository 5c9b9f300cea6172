#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "spdelab/rng.hpp"
#include "spdelab/stochastic_integral.hpp"

using spde::HSOperator;
using spde::Matrix;
using spde::QSpec;
using spde::StepIntegrand;
using spde::TimeGrid;
using spde::Vector;
using spde::WienerPath;

namespace {

QSpec q_two() {
  QSpec q;
  q.lambda = (Vector(2) << 1.0, 0.25).finished();
  return q;
}

// deterministic pseudo-random integrand values (adapted trivially: no
// path dependence at all)
StepIntegrand random_constant_integrand(const TimeGrid& grid, int rows,
                                        int noise, std::uint64_t tag) {
  std::vector<HSOperator> values;
  values.reserve(static_cast<std::size_t>(grid.steps()));
  for (int k = 0; k < grid.steps(); ++k) {
    Matrix v(rows, noise);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < noise; ++j) {
        v(i, j) = spde::rng::normal(
            0x494E54u, tag, static_cast<std::uint64_t>(k),
            static_cast<std::uint64_t>(i * noise + j));
      }
    }
    values.push_back(v);
  }
  return StepIntegrand::from_values(grid, std::move(values));
}

}  // namespace

TEST_CASE("integrand constructors validate shapes and record the route") {
  const TimeGrid g = TimeGrid::uniform(1.0, 4);
  const StepIntegrand c = StepIntegrand::constant(g, Matrix::Identity(2, 2));
  CHECK(c.cells() == 4);
  CHECK(c.adapted());
  CHECK(c.value(3) == Matrix::Identity(2, 2));
  CHECK_THROWS_AS(c.value(4), spde::GridError);

  std::vector<HSOperator> too_few(3, Matrix::Zero(2, 2));
  CHECK_THROWS_AS(StepIntegrand::from_values(g, too_few),
                  spde::DimensionError);
  std::vector<HSOperator> ragged(4, Matrix::Zero(2, 2));
  ragged[2] = Matrix::Zero(3, 2);
  CHECK_THROWS_AS(StepIntegrand::from_values(g, ragged),
                  spde::DimensionError);
  CHECK_FALSE(
      StepIntegrand::from_values(g, std::vector<HSOperator>(4, Matrix::Zero(
                                                                   2, 2)))
          .adapted());
}

TEST_CASE("adapted construction hands the rule only the prefix") {
  const QSpec q = q_two();
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  const WienerPath path = spde::sample_path(q, g, 31);
  const StepIntegrand x = StepIntegrand::make_adapted(
      path,
      [&](int k, double t_k, const Eigen::Ref<const Matrix>& prefix) {
        CHECK(prefix.cols() == k + 1);  // nodes 0..k and nothing later
        CHECK(t_k == g.time(k));
        return Matrix::Identity(2, 2) * prefix(0, prefix.cols() - 1);
      });
  CHECK(x.adapted());
  for (int k = 0; k < 8; ++k) {
    CHECK(x.value(k)(0, 0) == path.betas(0, k));
  }
}

TEST_CASE("zero integrand integrates to zero") {
  const QSpec q = q_two();
  const TimeGrid g = TimeGrid::uniform(1.0, 16);
  const WienerPath path = spde::sample_path(q, g, 1);
  const StepIntegrand x = StepIntegrand::constant(g, Matrix::Zero(3, 2));
  CHECK(spde::ito_integrate(x, path, q, 1.0) == Vector::Zero(3));
  CHECK(spde::ito_integrate(x, path, q, 0.0) == Vector::Zero(3));
}

TEST_CASE("identity integrand reconstructs the driving noise") {
  const QSpec q = q_two();
  const TimeGrid g = TimeGrid::uniform(1.0, 64);
  const WienerPath path = spde::sample_path(q, g, 9);
  const StepIntegrand x = StepIntegrand::constant(g, Matrix::Identity(2, 2));
  for (const int k : {16, 32, 64}) {
    const Vector integral = spde::ito_integrate(x, path, q, g.time(k));
    const Vector w = spde::reconstruct_state(path, q, k);
    CHECK((integral - w).norm() <= 1e-13 * (1.0 + w.norm()));
  }
}

TEST_CASE("martingale start: every integrand vanishes at t = 0") {
  const QSpec q = q_two();
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  const WienerPath path = spde::sample_path(q, g, 17);
  for (std::uint64_t tag = 0; tag < 5; ++tag) {
    const StepIntegrand x = random_constant_integrand(g, 3, 2, tag);
    CHECK(spde::ito_integrate(x, path, q, 0.0) == Vector::Zero(3));
  }
}

TEST_CASE("direct and series summation orders agree") {
  const QSpec q = QSpec::polynomial(3);
  const TimeGrid g = TimeGrid::uniform(1.0, 32);
  for (std::uint64_t tag = 0; tag < 10; ++tag) {
    const WienerPath path = spde::sample_path(q, g, 100 + tag);
    const StepIntegrand x = random_constant_integrand(g, 2, 3, tag);
    const Vector direct = spde::ito_integrate(x, path, q, 1.0);
    const Vector series = spde::ito_integrate_series(x, path, q, 1.0);
    CHECK((direct - series).norm() <= 1e-12 * (1.0 + direct.norm()));
  }
}

TEST_CASE("integration is linear per path") {
  const QSpec q = q_two();
  const TimeGrid g = TimeGrid::uniform(1.0, 16);
  const WienerPath path = spde::sample_path(q, g, 55);
  const StepIntegrand x = random_constant_integrand(g, 2, 2, 21);
  const StepIntegrand y = random_constant_integrand(g, 2, 2, 22);
  const double a = 1.75, b = -0.375;
  std::vector<HSOperator> combo_values;
  for (int k = 0; k < 16; ++k) {
    combo_values.push_back(a * x.value(k) + b * y.value(k));
  }
  const StepIntegrand combo =
      StepIntegrand::from_values(g, std::move(combo_values));
  const Vector lhs = spde::ito_integrate(combo, path, q, 1.0);
  const Vector rhs = a * spde::ito_integrate(x, path, q, 1.0) +
                     b * spde::ito_integrate(y, path, q, 1.0);
  CHECK((lhs - rhs).norm() <= 1e-13 * (1.0 + rhs.norm()));
}

TEST_CASE("grid and dimension mismatches are rejected") {
  const QSpec q = q_two();
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  const TimeGrid other = TimeGrid::uniform(2.0, 8);
  const WienerPath path = spde::sample_path(q, g, 3);
  const StepIntegrand x = StepIntegrand::constant(other,
                                                  Matrix::Identity(2, 2));
  CHECK_THROWS_AS(spde::ito_integrate(x, path, q, 1.0), spde::GridError);
  const StepIntegrand wrong_modes =
      StepIntegrand::constant(g, Matrix::Identity(2, 3));
  CHECK_THROWS_AS(spde::ito_integrate(wrong_modes, path, q, 1.0),
                  spde::DimensionError);
  const StepIntegrand ok = StepIntegrand::constant(g, Matrix::Identity(2, 2));
  CHECK_THROWS_AS(spde::ito_integrate(ok, path, q, 0.33), spde::GridError);
}

TEST_CASE("isometry: identity integrand hits the exact trace value") {
  const QSpec q = q_two();
  const TimeGrid g = TimeGrid::uniform(1.0, 64);
  const auto factory = [&](const WienerPath&) {
    return StepIntegrand::constant(g, Matrix::Identity(2, 2));
  };
  const auto report = spde::isometry_estimate(factory, q, g, 1.0, 4000, 808);
  // deterministic trace * t, up to the hs_norm sqrt/square roundtrip
  CHECK(report.rhs == doctest::Approx(1.25).epsilon(1e-14));
  CHECK(report.within(3.0));
  CHECK(report.stderr_lhs > 0.0);
  CHECK_THROWS_AS(spde::isometry_estimate(factory, q, g, 1.0, 100, 808),
                  spde::PreconditionError);
}

TEST_CASE("isometry holds for a state-dependent adapted integrand") {
  const QSpec q = q_two();
  const TimeGrid g = TimeGrid::uniform(1.0, 64);
  const auto factory = [&](const WienerPath& path) {
    return StepIntegrand::make_adapted(
        path, [&](int, double, const Eigen::Ref<const Matrix>& prefix) {
          const double w1 = std::sqrt(q.lambda[0]) *
                            prefix(0, prefix.cols() - 1);
          const double w2 = std::sqrt(q.lambda[1]) *
                            prefix(1, prefix.cols() - 1);
          Matrix v = Matrix::Zero(2, 2);
          v(0, 0) = 1.0 + 0.5 * std::sin(w1);
          v(1, 1) = 1.0 + 0.5 * std::cos(w2);
          return v;
        });
  };
  const auto report = spde::isometry_estimate(factory, q, g, 1.0, 10000, 4242);
  CHECK(report.within(3.0));
}

TEST_CASE("anticipating integrand breaks the isometry") {
  // negative control: the cell value uses the cell's own future increment,
  // inflating the lhs by roughly a factor of (K + 2) / 1
  const QSpec q = q_two();
  const int steps = 64;
  const TimeGrid g = TimeGrid::uniform(1.0, steps);
  const auto factory = [&](const WienerPath& path) {
    std::vector<HSOperator> values;
    for (int k = 0; k < steps; ++k) {
      Matrix v = Matrix::Zero(2, 2);
      const double sqrt_dt = std::sqrt(g.dt(k));
      v(0, 0) = (path.betas(0, k + 1) - path.betas(0, k)) / sqrt_dt;
      v(1, 1) = (path.betas(1, k + 1) - path.betas(1, k)) / sqrt_dt;
      values.push_back(v);
    }
    return StepIntegrand::from_values(g, std::move(values));
  };
  const auto report = spde::isometry_estimate(factory, q, g, 1.0, 4000, 99);
  CHECK_FALSE(report.within(3.0));
  CHECK(report.lhs > 10.0 * report.rhs);
}

TEST_CASE("moment-inequality constant closed forms") {
  CHECK(spde::moment_bound_constant(1.0) == 4.0);
  // frozen value of (2*3)^2 * (4/3)^8 = 2359296 / 6561
  CHECK(spde::moment_bound_constant(2.0) ==
        doctest::Approx(2359296.0 / 6561.0).epsilon(1e-12));
  CHECK(spde::moment_bound_constant(2.0) > spde::moment_bound_constant(1.0));
  CHECK_THROWS_AS(spde::moment_bound_constant(0.5), spde::PreconditionError);
}

TEST_CASE("moment bound: trivial and equality cases") {
  const QSpec q = q_two();
  const TimeGrid g = TimeGrid::uniform(1.0, 16);
  const auto zero_factory = [&](const WienerPath&) {
    return StepIntegrand::constant(g, Matrix::Zero(2, 2));
  };
  const auto rz = spde::moment_bound_check(zero_factory, q, g, 1.0, 1.0, 1000,
                                           5);
  CHECK(rz.lhs == 0.0);
  CHECK(rz.bound == 0.0);
  CHECK(rz.satisfied);

  // p = 1 reduces to the isometry, so the C_1 = 4 bound holds with slack
  const auto id_factory = [&](const WienerPath&) {
    return StepIntegrand::constant(g, Matrix::Identity(2, 2));
  };
  const auto r1 = spde::moment_bound_check(id_factory, q, g, 1.0, 1.0, 4000,
                                           6);
  CHECK(r1.satisfied);
  CHECK(r1.bound == doctest::Approx(4.0 * 1.25).epsilon(1e-12));
  CHECK(std::abs(r1.lhs - 1.25) <= 3.0 * r1.stderr_lhs);
}

TEST_CASE("moment bound against Gaussian-moment oracles") {
  // scalar reduction: integral = beta(1), so lhs estimates E beta^{4} at
  // p = 2 (oracle 3) and E beta^{8} at p = 4 (oracle 105)
  QSpec q;
  q.lambda = (Vector(1) << 1.0).finished();
  const TimeGrid g = TimeGrid::uniform(1.0, 2);
  const auto factory = [&](const WienerPath&) {
    return StepIntegrand::constant(g, Matrix::Identity(1, 1));
  };
  const auto r2 = spde::moment_bound_check(factory, q, g, 1.0, 2.0, 20000, 7);
  CHECK(std::abs(r2.lhs - 3.0) <= 3.0 * r2.stderr_lhs);
  CHECK(r2.bound == doctest::Approx(2359296.0 / 6561.0).epsilon(1e-12));
  CHECK(r2.satisfied);

  const auto r4 = spde::moment_bound_check(factory, q, g, 1.0, 4.0, 20000, 7);
  CHECK(std::abs(r4.lhs - 105.0) <= 3.0 * r4.stderr_lhs);
  CHECK(r4.satisfied);

  CHECK_THROWS_AS(
      spde::moment_bound_check(factory, q, g, 1.0, 0.9, 2000, 7),
      spde::PreconditionError);
}
