#include "spdelab/wiener.hpp"

#include "spdelab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace spde {

QSpec QSpec::polynomial(int j_modes) {
  if (j_modes < 1) throw DimensionError("QSpec::polynomial: need >= 1 mode");
  Vector lambda(j_modes);
  for (int j = 0; j < j_modes; ++j) {
    const double jj = static_cast<double>(j + 1);
    lambda[j] = 1.0 / (jj * jj);
  }
  return QSpec{std::move(lambda)};
}

QSpec QSpec::geometric(int j_modes) {
  if (j_modes < 1) throw DimensionError("QSpec::geometric: need >= 1 mode");
  Vector lambda(j_modes);
  for (int j = 0; j < j_modes; ++j) {
    lambda[j] = std::ldexp(1.0, -(j + 1));
  }
  return QSpec{std::move(lambda)};
}

QSpec QSpec::from_eigenvalues(Vector lambda) {
  QSpec q{std::move(lambda)};
  validate(q);
  return q;
}

void validate(const QSpec& q) {
  if (q.lambda.size() < 1) {
    throw DimensionError("QSpec: eigenvalue array is empty");
  }
  for (Eigen::Index j = 0; j < q.lambda.size(); ++j) {
    if (!(q.lambda[j] > 0.0) || !std::isfinite(q.lambda[j])) {
      throw SpectrumError("QSpec: eigenvalue " + std::to_string(j) +
                          " is not strictly positive and finite");
    }
    if (j > 0 && q.lambda[j] > q.lambda[j - 1]) {
      throw SpectrumError("QSpec: eigenvalues must be nonincreasing (index " +
                          std::to_string(j) + ")");
    }
  }
}

TimeGrid TimeGrid::uniform(double horizon, int steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw GridError("TimeGrid::uniform: horizon must be positive");
  }
  if (steps < 1) {
    throw GridError("TimeGrid::uniform: need at least one step");
  }
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    // k/steps is exact for dyadic step counts, so t_K == horizon exactly
    t[k] = horizon * (static_cast<double>(k) / static_cast<double>(steps));
  }
  TimeGrid g;
  g.t_ = std::move(t);
  return g;
}

TimeGrid TimeGrid::from_times(std::vector<double> times) {
  if (times.size() < 2) {
    throw GridError("TimeGrid: need at least two nodes");
  }
  if (times.front() != 0.0) {
    throw GridError("TimeGrid: grid must start at t = 0");
  }
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    if (!(times[k] < times[k + 1]) || !std::isfinite(times[k + 1])) {
      throw GridError("TimeGrid: nodes must increase strictly (index " +
                      std::to_string(k + 1) + ")");
    }
  }
  TimeGrid g;
  g.t_ = std::move(times);
  return g;
}

double TimeGrid::time(int k) const {
  if (k < 0 || k >= points()) {
    throw GridError("TimeGrid::time: index " + std::to_string(k) +
                    " out of range");
  }
  return t_[static_cast<std::size_t>(k)];
}

double TimeGrid::dt(int k) const {
  if (k < 0 || k >= steps()) {
    throw GridError("TimeGrid::dt: cell index " + std::to_string(k) +
                    " out of range");
  }
  return t_[static_cast<std::size_t>(k) + 1] - t_[static_cast<std::size_t>(k)];
}

TimeGrid TimeGrid::subsample(int factor) const {
  if (factor < 1) {
    throw GridError("TimeGrid::subsample: factor must be >= 1");
  }
  if (steps() % factor != 0) {
    throw GridError("TimeGrid::subsample: factor " + std::to_string(factor) +
                    " does not divide " + std::to_string(steps()) + " steps");
  }
  std::vector<double> coarse;
  coarse.reserve(static_cast<std::size_t>(steps() / factor) + 1);
  for (int k = 0; k <= steps(); k += factor) {
    coarse.push_back(t_[static_cast<std::size_t>(k)]);
  }
  TimeGrid g;
  g.t_ = std::move(coarse);
  return g;
}

int TimeGrid::index_of(double t) const {
  const double tol = 1e-12 * std::max(1.0, horizon());
  const auto it = std::lower_bound(t_.begin(), t_.end(), t - tol);
  if (it != t_.end() && std::abs(*it - t) <= tol) {
    return static_cast<int>(it - t_.begin());
  }
  throw GridError("TimeGrid::index_of: t = " + std::to_string(t) +
                  " is not a grid node");
}

bool TimeGrid::same_grid(const TimeGrid& other) const {
  return t_ == other.t_;
}

WienerPath WienerPath::subsample(int factor) const {
  WienerPath coarse;
  coarse.grid = grid.subsample(factor);
  coarse.seed = seed;
  coarse.path_index = path_index;
  coarse.betas.resize(betas.rows(), coarse.grid.points());
  for (int k = 0; k < coarse.grid.points(); ++k) {
    coarse.betas.col(k) = betas.col(static_cast<Eigen::Index>(k) * factor);
  }
  return coarse;
}

WienerPath sample_path(const QSpec& q, const TimeGrid& grid,
                       std::uint64_t seed, std::uint64_t path_index) {
  validate(q);
  const int j_modes = q.modes();
  const int steps = grid.steps();
  WienerPath path;
  path.grid = grid;
  path.seed = seed;
  path.path_index = path_index;
  path.betas.setZero(j_modes, steps + 1);
  for (int j = 0; j < j_modes; ++j) {
    double b = 0.0;
    for (int k = 0; k < steps; ++k) {
      const double z = rng::normal(seed, path_index,
                                   static_cast<std::uint64_t>(j),
                                   static_cast<std::uint64_t>(k));
      b += std::sqrt(grid.dt(k)) * z;
      path.betas(j, k + 1) = b;
    }
  }
  return path;
}

Vector reconstruct_state(const WienerPath& path, const QSpec& q, int k) {
  if (path.modes() != q.modes()) {
    throw DimensionError("reconstruct_state: path has " +
                         std::to_string(path.modes()) + " modes, spectrum " +
                         std::to_string(q.modes()));
  }
  if (k < 0 || k >= path.grid.points()) {
    throw GridError("reconstruct_state: node index " + std::to_string(k) +
                    " out of range");
  }
  Vector w(q.modes());
  for (int j = 0; j < q.modes(); ++j) {
    w[j] = std::sqrt(q.lambda[j]) * path.betas(j, k);
  }
  return w;
}

Vector state_increment(const WienerPath& path, const QSpec& q, int k_from,
                       int k_to) {
  if (path.modes() != q.modes()) {
    throw DimensionError("state_increment: mode count mismatch");
  }
  if (k_from < 0 || k_to >= path.grid.points() || k_from > k_to) {
    throw GridError("state_increment: invalid node indices");
  }
  Vector w(q.modes());
  for (int j = 0; j < q.modes(); ++j) {
    w[j] = std::sqrt(q.lambda[j]) * (path.betas(j, k_to) -
                                     path.betas(j, k_from));
  }
  return w;
}

Matrix increment_covariance(const std::vector<WienerPath>& ensemble,
                            const QSpec& q, int k_from, int k_to) {
  if (ensemble.size() < 100) {
    throw PreconditionError(
        "increment_covariance: need an ensemble of at least 100 paths");
  }
  const int j_modes = q.modes();
  Vector mean = Vector::Zero(j_modes);
  for (const auto& path : ensemble) {
    mean += state_increment(path, q, k_from, k_to);
  }
  mean /= static_cast<double>(ensemble.size());
  Matrix cov = Matrix::Zero(j_modes, j_modes);
  for (const auto& path : ensemble) {
    const Vector d = state_increment(path, q, k_from, k_to) - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(ensemble.size() - 1);
  return cov;
}

}  // namespace spde
