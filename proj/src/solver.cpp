#include "spdelab/solver.hpp"

#include "spdelab/numerics.hpp"
#include "spdelab/rng.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace spde {

Vector SPDEProblem::initial(std::uint64_t path_index) const {
  if (h0_sampler) return h0_sampler(path_index);
  return h0;
}

const Vector& SolutionPath::state(int k) const {
  if (k < 0 || k > last_index()) {
    throw GridError("SolutionPath::state: index " + std::to_string(k) +
                    " beyond the path lifetime");
  }
  return states[static_cast<std::size_t>(k)];
}

Vector deterministic_convolution(const Semigroup& sg, const TimeGrid& grid,
                                 const std::vector<Vector>& f_cells,
                                 double t) {
  if (f_cells.size() != static_cast<std::size_t>(grid.steps())) {
    throw DimensionError(
        "deterministic_convolution: need one drift value per cell");
  }
  const int m = grid.index_of(t);
  KahanVector acc(sg.dim());
  for (int k = 0; k < m; ++k) {
    acc.add(grid.dt(k) *
            sg.apply(t - grid.time(k), f_cells[static_cast<std::size_t>(k)]));
  }
  return acc.value();
}

Vector deterministic_convolution(const Semigroup& sg, const TimeGrid& grid,
                                 const std::function<Vector(double)>& f,
                                 double t) {
  std::vector<Vector> cells;
  cells.reserve(static_cast<std::size_t>(grid.steps()));
  for (int k = 0; k < grid.steps(); ++k) cells.push_back(f(grid.time(k)));
  return deterministic_convolution(sg, grid, cells, t);
}

Vector stochastic_convolution(const Semigroup& sg, const StepIntegrand& x,
                              const WienerPath& path, const QSpec& q,
                              double t) {
  if (!x.grid().same_grid(path.grid)) {
    throw GridError("stochastic_convolution: integrand and path grids differ");
  }
  if (x.noise_modes() != q.modes() || path.modes() != q.modes()) {
    throw DimensionError("stochastic_convolution: noise mode count mismatch");
  }
  const int m = path.grid.index_of(t);
  KahanVector acc(sg.dim());
  for (int k = 0; k < m; ++k) {
    const Vector kick = x.value(k) * state_increment(path, q, k, k + 1);
    acc.add(sg.apply(t - path.grid.time(k), kick));
  }
  return acc.value();
}

SolutionPath exponential_euler_solve(const SPDEProblem& prob,
                                     const WienerPath& path, const QSpec& q,
                                     double cap) {
  if (path.modes() != q.modes()) {
    throw DimensionError("exponential_euler_solve: noise mode mismatch");
  }
  const TimeGrid& grid = path.grid;
  SolutionPath out;
  out.grid = grid;
  out.scheme = "exponential_euler";
  out.seed = path.seed;
  out.path_index = path.path_index;
  out.states.reserve(static_cast<std::size_t>(grid.points()));

  Vector x = prob.initial(path.path_index);
  if (x.size() != prob.dim()) {
    throw DimensionError("exponential_euler_solve: initial state dimension");
  }
  out.states.push_back(x);
  if (x.norm() >= cap) {
    out.lifetime_index = 0;
    return out;
  }
  for (int k = 0; k < grid.steps(); ++k) {
    const double t_k = grid.time(k);
    const double dt = grid.dt(k);
    const Vector drift = prob.alpha(t_k, x);
    const Vector kick =
        prob.sigma(t_k, x) * state_increment(path, q, k, k + 1);
    x = prob.sg.apply(dt, x) + dt * prob.sg.apply(dt, drift) +
        prob.sg.apply(dt, kick);
    if (!x.allFinite()) {
      throw DivergedError(
          "exponential_euler_solve: non-finite state at step " +
              std::to_string(k + 1),
          k + 1);
    }
    out.states.push_back(x);
    if (x.norm() >= cap) {
      out.lifetime_index = k + 1;
      break;
    }
  }
  return out;
}

SolutionPath exact_ou_solve(const SPDEProblem& prob, const WienerPath& path,
                            const QSpec& q) {
  if (prob.sg.kind() != SemigroupKind::diagonal) {
    throw PreconditionError("exact_ou_solve: needs a diagonal semigroup");
  }
  const TimeGrid& grid = path.grid;
  const int n = prob.dim();
  // probe state-independence of the drift and constancy of the diffusion
  {
    const Vector probe_a = Vector::Zero(n);
    const Vector probe_b = Vector::Constant(n, 0.8125);
    const double t_probe = grid.time(grid.steps() / 2);
    if (prob.alpha(t_probe, probe_a) != prob.alpha(t_probe, probe_b)) {
      throw PreconditionError(
          "exact_ou_solve: drift must not depend on the state");
    }
    const HSOperator s00 = prob.sigma(0.0, probe_a);
    if (s00 != prob.sigma(t_probe, probe_b) ||
        s00 != prob.sigma(grid.horizon(), probe_a)) {
      throw PreconditionError("exact_ou_solve: diffusion must be constant");
    }
  }
  const Vector& mu = prob.sg.mu();
  SolutionPath out;
  out.grid = grid;
  out.scheme = "exact_ou";
  out.seed = path.seed;
  out.path_index = path.path_index;
  out.states.reserve(static_cast<std::size_t>(grid.points()));
  Vector x = prob.initial(path.path_index);
  if (x.size() != n) {
    throw DimensionError("exact_ou_solve: initial state dimension");
  }
  out.states.push_back(x);
  const HSOperator sigma = prob.sigma(0.0, Vector::Zero(n));
  for (int k = 0; k < grid.steps(); ++k) {
    const double dt = grid.dt(k);
    const Vector a = prob.alpha(grid.time(k), x);
    const Vector kick = sigma * state_increment(path, q, k, k + 1);
    Vector next(n);
    for (int j = 0; j < n; ++j) {
      const double decay = std::exp(-mu[j] * dt);
      // closed-form cell integral of the frozen drift
      const double drift_weight =
          (mu[j] == 0.0) ? dt : -std::expm1(-mu[j] * dt) / mu[j];
      next[j] = decay * x[j] + drift_weight * a[j] + decay * kick[j];
    }
    x = next;
    out.states.push_back(x);
  }
  return out;
}

namespace {

// One application of the variation-of-constants map to the grid path
// `current`, reusing the shared convolution quadratures.
std::vector<Vector> apply_mild_map(const SPDEProblem& prob,
                                   const WienerPath& path, const QSpec& q,
                                   const std::vector<Vector>& current) {
  const TimeGrid& grid = path.grid;
  const int cells = grid.steps();
  std::vector<Vector> drift_cells;
  std::vector<HSOperator> sigma_cells;
  drift_cells.reserve(static_cast<std::size_t>(cells));
  sigma_cells.reserve(static_cast<std::size_t>(cells));
  for (int k = 0; k < cells; ++k) {
    const double t_k = grid.time(k);
    drift_cells.push_back(prob.alpha(t_k, current[static_cast<std::size_t>(k)]));
    sigma_cells.push_back(prob.sigma(t_k, current[static_cast<std::size_t>(k)]));
  }
  const StepIntegrand integrand =
      StepIntegrand::from_values(grid, std::move(sigma_cells));
  std::vector<Vector> next(static_cast<std::size_t>(grid.points()));
  next[0] = current[0];
  for (int m = 1; m <= cells; ++m) {
    const double t_m = grid.time(m);
    next[static_cast<std::size_t>(m)] =
        prob.sg.apply(t_m, current[0]) +
        deterministic_convolution(prob.sg, grid, drift_cells, t_m) +
        stochastic_convolution(prob.sg, integrand, path, q, t_m);
  }
  return next;
}

double sup_gap(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  double gap = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    gap = std::max(gap, (a[k] - b[k]).norm());
  }
  return gap;
}

}  // namespace

PicardResult picard_solve(const SPDEProblem& prob, const WienerPath& path,
                          const QSpec& q, double tol, int n_max,
                          const std::optional<std::vector<Vector>>&
                              initial_guess) {
  if (!(tol > 0.0)) {
    throw PreconditionError("picard_solve: tolerance must be positive");
  }
  if (n_max < 1) {
    throw PreconditionError("picard_solve: need at least one application");
  }
  const TimeGrid& grid = path.grid;
  const Vector start = prob.initial(path.path_index);
  std::vector<Vector> prev;
  if (initial_guess) {
    if (initial_guess->size() != static_cast<std::size_t>(grid.points())) {
      throw DimensionError("picard_solve: initial guess node count");
    }
    prev = *initial_guess;
    prev[0] = start;  // the map pins the initial node
  } else {
    prev.assign(static_cast<std::size_t>(grid.points()), start);
  }
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    std::vector<Vector> next = apply_mild_map(prob, path, q, prev);
    const double d_n = sup_gap(next, prev);
    history.push_back(d_n);
    if (d_n <= tol && std::isfinite(d_n)) {
      // d_n certifies the residual of the PREVIOUS iterate, so that is the
      // path returned; its index is n - 1
      PicardResult result;
      result.path.grid = grid;
      result.path.states = std::move(prev);
      result.path.scheme = "picard";
      result.path.seed = path.seed;
      result.path.path_index = path.path_index;
      result.iterates = n - 1;
      result.contraction_history = std::move(history);
      return result;
    }
    prev = std::move(next);
  }
  throw PicardNonConvergence(
      "picard_solve: no convergence to tol " + std::to_string(tol) +
          " within " + std::to_string(n_max) + " applications",
      std::move(history), n_max);
}

ValidationReport validate_coefficients(const SPDEProblem& prob,
                                       const QSpec& q, int samples,
                                       std::uint64_t seed) {
  if (samples < 1) {
    throw PreconditionError("validate_coefficients: need samples >= 1");
  }
  const int n = prob.dim();
  ValidationReport report;
  report.kappa_ratios.assign(static_cast<std::size_t>(q.modes()), 0.0);
  for (int s = 0; s < samples; ++s) {
    const std::uint64_t tag = static_cast<std::uint64_t>(s);
    Vector h1(n), h2(n);
    for (int i = 0; i < n; ++i) {
      h1[i] = 3.0 * rng::normal(seed, rng::kStreamValidate, 2 * tag,
                                static_cast<std::uint64_t>(i));
      h2[i] = 3.0 * rng::normal(seed, rng::kStreamValidate, 2 * tag + 1,
                                static_cast<std::uint64_t>(i));
    }
    const double t =
        prob.time_homogeneous
            ? 0.0
            : rng::uniform(seed, rng::kStreamValidate, tag, 0x54u);
    const double dh = (h1 - h2).norm();
    if (dh > 0.0) {
      const double ratio = (prob.alpha(t, h1) - prob.alpha(t, h2)).norm() / dh;
      if (ratio > report.max_lipschitz_ratio) {
        report.max_lipschitz_ratio = ratio;
        report.witness_h1 = h1;
        report.witness_h2 = h2;
        report.witness_t = t;
      }
    }
    const HSOperator sig = prob.sigma(t, h1);
    const double denom = 1.0 + h1.norm();
    report.max_growth_ratio =
        std::max(report.max_growth_ratio, hs_norm(sig, q) / denom);
    for (int j = 0; j < q.modes(); ++j) {
      const double col =
          std::sqrt(q.lambda[j]) * sig.col(j).norm() / denom;
      auto& slot = report.kappa_ratios[static_cast<std::size_t>(j)];
      slot = std::max(slot, col);
    }
  }
  const double slack = 1e-9;
  report.lipschitz_ok =
      report.max_lipschitz_ratio <= prob.lipschitz_l + slack;
  report.growth_ok = report.max_growth_ratio <= prob.growth_k + slack;
  report.kappa_ok = true;
  if (prob.kappa.size() > 0) {
    if (prob.kappa.size() != q.modes()) {
      report.kappa_ok = false;
    } else {
      for (int j = 0; j < q.modes(); ++j) {
        if (report.kappa_ratios[static_cast<std::size_t>(j)] >
            prob.kappa[j] + slack) {
          report.kappa_ok = false;
        }
      }
    }
  }
  report.pass = report.lipschitz_ok && report.growth_ok && report.kappa_ok;
  return report;
}

}  // namespace spde
