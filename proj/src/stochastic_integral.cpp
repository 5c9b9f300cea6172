#include "spdelab/stochastic_integral.hpp"

#include "spdelab/numerics.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace spde {

StepIntegrand::StepIntegrand(TimeGrid grid, std::vector<HSOperator> values,
                             bool adapted)
    : grid_(std::move(grid)), values_(std::move(values)), adapted_(adapted) {
  if (values_.size() != static_cast<std::size_t>(grid_.steps())) {
    throw DimensionError("StepIntegrand: need one operator per grid cell");
  }
  const auto rows = values_.front().rows();
  const auto cols = values_.front().cols();
  for (const auto& v : values_) {
    if (v.rows() != rows || v.cols() != cols) {
      throw DimensionError("StepIntegrand: inconsistent operator shapes");
    }
  }
}

StepIntegrand StepIntegrand::make_adapted(const WienerPath& path,
                                          const PrefixRule& rule) {
  const int cells = path.grid.steps();
  std::vector<HSOperator> values;
  values.reserve(static_cast<std::size_t>(cells));
  for (int k = 0; k < cells; ++k) {
    // the rule sees only nodes 0..k of the path
    values.push_back(
        rule(k, path.grid.time(k), path.betas.leftCols(k + 1)));
  }
  return StepIntegrand(path.grid, std::move(values), true);
}

StepIntegrand StepIntegrand::constant(const TimeGrid& grid,
                                      const HSOperator& value) {
  return StepIntegrand(
      grid, std::vector<HSOperator>(static_cast<std::size_t>(grid.steps()),
                                    value),
      true);
}

StepIntegrand StepIntegrand::from_values(TimeGrid grid,
                                         std::vector<HSOperator> values) {
  return StepIntegrand(std::move(grid), std::move(values), false);
}

const HSOperator& StepIntegrand::value(int k) const {
  if (k < 0 || k >= cells()) {
    throw GridError("StepIntegrand::value: cell index " + std::to_string(k) +
                    " out of range");
  }
  return values_[static_cast<std::size_t>(k)];
}

namespace {

void check_compatible(const StepIntegrand& x, const WienerPath& path,
                      const QSpec& q) {
  if (!x.grid().same_grid(path.grid)) {
    throw GridError("ito_integrate: integrand and path grids differ");
  }
  if (x.noise_modes() != q.modes() || path.modes() != q.modes()) {
    throw DimensionError("ito_integrate: noise mode count mismatch");
  }
}

}  // namespace

Vector ito_integrate(const StepIntegrand& x, const WienerPath& path,
                     const QSpec& q, double t) {
  check_compatible(x, path, q);
  const int m = x.grid().index_of(t);
  KahanVector acc(x.rows());
  for (int k = 0; k < m; ++k) {
    // value_k (W_{t_{k+1}} - W_{t_k}); the matrix product sums the noise
    // components, so time is the outer loop and noise the inner one
    acc.add(x.value(k) * state_increment(path, q, k, k + 1));
  }
  return acc.value();
}

Vector ito_integrate_series(const StepIntegrand& x, const WienerPath& path,
                            const QSpec& q, double t) {
  check_compatible(x, path, q);
  const int m = x.grid().index_of(t);
  KahanVector total(x.rows());
  for (int j = 0; j < q.modes(); ++j) {
    const double root = std::sqrt(q.lambda[j]);
    KahanVector component(x.rows());
    for (int k = 0; k < m; ++k) {
      const double dbeta = path.betas(j, k + 1) - path.betas(j, k);
      component.add((root * dbeta) * x.value(k).col(j));
    }
    total.add(component.value());
  }
  return total.value();
}

IsometryReport isometry_estimate(const IntegrandFactory& factory,
                                 const QSpec& q, const TimeGrid& grid,
                                 double t, int ensemble, std::uint64_t seed) {
  if (ensemble < 1000) {
    throw PreconditionError(
        "isometry_estimate: need an ensemble of at least 1000 paths");
  }
  const int m = grid.index_of(t);
  std::vector<double> lhs_samples(static_cast<std::size_t>(ensemble));
  KahanScalar lhs_mean;
  KahanScalar rhs_mean;
  for (int i = 0; i < ensemble; ++i) {
    const WienerPath path =
        sample_path(q, grid, seed, static_cast<std::uint64_t>(i));
    const StepIntegrand x = factory(path);
    const double a = ito_integrate(x, path, q, t).squaredNorm();
    KahanScalar b;
    for (int k = 0; k < m; ++k) {
      const double h = hs_norm(x.value(k), q);
      b.add(grid.dt(k) * h * h);
    }
    lhs_samples[static_cast<std::size_t>(i)] = a;
    lhs_mean.add(a);
    rhs_mean.add(b.value());
  }
  IsometryReport report;
  report.lhs = lhs_mean.value() / ensemble;
  report.rhs = rhs_mean.value() / ensemble;
  KahanScalar var;
  for (const double a : lhs_samples) {
    const double d = a - report.lhs;
    var.add(d * d);
  }
  report.stderr_lhs =
      std::sqrt(var.value() / (ensemble - 1)) / std::sqrt(double(ensemble));
  return report;
}

double moment_bound_constant(double p) {
  if (!(p >= 1.0)) {
    throw PreconditionError("moment_bound_constant: p must be >= 1");
  }
  const double q = 2.0 * p - 1.0;
  return std::pow(p * q, p) * std::pow(2.0 * p / q, 2.0 * p * p);
}

MomentBoundReport moment_bound_check(const IntegrandFactory& factory,
                                     const QSpec& q, const TimeGrid& grid,
                                     double t, double p, int ensemble,
                                     std::uint64_t seed) {
  if (!(p >= 1.0)) {
    throw PreconditionError("moment_bound_check: p must be >= 1");
  }
  if (ensemble < 1000) {
    throw PreconditionError(
        "moment_bound_check: need an ensemble of at least 1000 paths");
  }
  const int m = grid.index_of(t);
  std::vector<double> lhs_samples(static_cast<std::size_t>(ensemble));
  KahanScalar lhs_mean;
  KahanScalar rhs_mean;
  for (int i = 0; i < ensemble; ++i) {
    const WienerPath path =
        sample_path(q, grid, seed, static_cast<std::uint64_t>(i));
    const StepIntegrand x = factory(path);
    const double norm2 = ito_integrate(x, path, q, t).squaredNorm();
    const double a = std::pow(norm2, p);
    KahanScalar b;
    for (int k = 0; k < m; ++k) {
      const double h = hs_norm(x.value(k), q);
      b.add(grid.dt(k) * h * h);
    }
    lhs_samples[static_cast<std::size_t>(i)] = a;
    lhs_mean.add(a);
    rhs_mean.add(b.value());
  }
  MomentBoundReport report;
  report.lhs = lhs_mean.value() / ensemble;
  report.bound =
      moment_bound_constant(p) * std::pow(rhs_mean.value() / ensemble, p);
  KahanScalar var;
  for (const double a : lhs_samples) {
    const double d = a - report.lhs;
    var.add(d * d);
  }
  report.stderr_lhs =
      std::sqrt(var.value() / (ensemble - 1)) / std::sqrt(double(ensemble));
  report.satisfied = report.lhs <= report.bound + 3.0 * report.stderr_lhs;
  return report;
}

}  // namespace spde
