#include "spdelab/concepts.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "spdelab/numerics.hpp"
#include "spdelab/rng.hpp"

namespace spde {

namespace {

// Which endpoint of each cell feeds the stochastic sums. kRight couples the
// integrand to the increment it multiplies and exists only as the
// adaptedness-violation control in equivalence_suite.
enum class NoiseRule { kLeft, kRight };

struct PathContext {
  Vector h0;
  int last = 0;
  std::vector<Vector> drift_cells;       // alpha at left endpoints
  std::vector<HSOperator> noise_cells;   // sigma per the rule
};

PathContext make_context(const SolutionPath& x, const SPDEProblem& prob,
                         const WienerPath& path, const QSpec& q,
                         NoiseRule rule) {
  if (!x.grid.same_grid(path.grid)) {
    throw GridError("solution and noise live on different grids");
  }
  if (path.modes() != q.modes()) {
    throw DimensionError("noise path and spectrum disagree on mode count");
  }
  PathContext ctx;
  ctx.h0 = prob.initial(x.path_index);
  if (ctx.h0.size() != x.state(0).size()) {
    throw DimensionError("problem initial value and path states disagree");
  }
  ctx.last = x.last_index();
  const int cells = x.grid.steps();
  const Eigen::Index n = ctx.h0.size();
  ctx.drift_cells.reserve(static_cast<std::size_t>(cells));
  ctx.noise_cells.reserve(static_cast<std::size_t>(cells));
  for (int k = 0; k < cells; ++k) {
    if (k < ctx.last) {
      ctx.drift_cells.push_back(prob.alpha(x.grid.time(k), x.state(k)));
      const int kn = rule == NoiseRule::kLeft ? k : k + 1;
      ctx.noise_cells.push_back(prob.sigma(x.grid.time(kn), x.state(kn)));
    } else {
      // past the lifetime; never referenced because residuals stop at last
      ctx.drift_cells.push_back(Vector::Zero(n));
      ctx.noise_cells.push_back(Matrix::Zero(n, q.modes()));
    }
  }
  return ctx;
}

ResidualReport finish(const SolutionPath& x, std::vector<double> residuals) {
  ResidualReport report;
  report.grid = x.grid;
  report.residuals = std::move(residuals);
  report.max_abs = 0.0;
  for (const double r : report.residuals) {
    report.max_abs = std::max(report.max_abs, r);
  }
  report.scheme = x.scheme;
  return report;
}

ResidualReport mild_core(const SolutionPath& x, const SPDEProblem& prob,
                         const WienerPath& path, const QSpec& q,
                         NoiseRule rule) {
  const PathContext ctx = make_context(x, prob, path, q, rule);
  const StepIntegrand integrand =
      StepIntegrand::from_values(x.grid, std::vector<HSOperator>(
                                             ctx.noise_cells));
  std::vector<double> residuals;
  residuals.reserve(static_cast<std::size_t>(ctx.last) + 1);
  for (int m = 0; m <= ctx.last; ++m) {
    const double t = x.grid.time(m);
    const Vector rhs =
        prob.sg.apply(t, ctx.h0) +
        deterministic_convolution(prob.sg, x.grid, ctx.drift_cells, t) +
        stochastic_convolution(prob.sg, integrand, path, q, t);
    residuals.push_back((x.state(m) - rhs).norm());
  }
  return finish(x, std::move(residuals));
}

ResidualReport weak_core(const SolutionPath& x, const SPDEProblem& prob,
                         const WienerPath& path, const QSpec& q,
                         const TestFunctional& zeta, NoiseRule rule) {
  if (zeta.zeta.size() != x.state(0).size()) {
    throw DimensionError("functional dimension does not match the state");
  }
  const PathContext ctx = make_context(x, prob, path, q, rule);
  std::vector<double> residuals;
  residuals.reserve(static_cast<std::size_t>(ctx.last) + 1);
  const double anchor = zeta.zeta.dot(ctx.h0);
  residuals.push_back(std::abs(zeta.zeta.dot(x.state(0)) - anchor));
  KahanScalar time_sum;
  KahanScalar noise_sum;
  for (int m = 1; m <= ctx.last; ++m) {
    const int k = m - 1;
    const double cell = zeta.adjoint_action.dot(x.state(k)) +
                        zeta.zeta.dot(ctx.drift_cells[k]);
    time_sum.add(x.grid.dt(k) * cell);
    const Vector dw = state_increment(path, q, k, k + 1);
    noise_sum.add(zeta.zeta.dot(ctx.noise_cells[k] * dw));
    residuals.push_back(std::abs(zeta.zeta.dot(x.state(m)) - anchor -
                                 time_sum.value() - noise_sum.value()));
  }
  return finish(x, std::move(residuals));
}

ResidualReport strong_core(const SolutionPath& x, const SPDEProblem& prob,
                           const WienerPath& path, const QSpec& q,
                           NoiseRule rule) {
  const PathContext ctx = make_context(x, prob, path, q, rule);
  const Generator a(prob.sg);
  for (int k = 0; k <= ctx.last; ++k) {
    if (!a.domain_contains(x.state(k))) {
      throw DomainError("state left the generator domain");
    }
  }
  const Eigen::Index n = ctx.h0.size();
  std::vector<double> residuals;
  residuals.reserve(static_cast<std::size_t>(ctx.last) + 1);
  residuals.push_back((x.state(0) - ctx.h0).norm());
  KahanVector time_acc(n);
  KahanVector noise_acc(n);
  for (int m = 1; m <= ctx.last; ++m) {
    const int k = m - 1;
    time_acc.add(x.grid.dt(k) * (a.apply(x.state(k)) + ctx.drift_cells[k]));
    noise_acc.add(ctx.noise_cells[k] * state_increment(path, q, k, k + 1));
    residuals.push_back((x.state(m) - ctx.h0 - time_acc.value() -
                         noise_acc.value())
                            .norm());
  }
  ResidualReport report = finish(x, std::move(residuals));
  report.domain_automatic = true;
  return report;
}

}  // namespace

TestFunctional TestFunctional::make(const Semigroup& sg, Vector z) {
  const Semigroup adj = sg.adjoint();
  const Generator a_star(adj);
  if (!a_star.domain_contains(z)) {
    throw DomainError("functional is outside the adjoint generator domain");
  }
  Vector action = a_star.apply(z);
  return TestFunctional{std::move(z), std::move(action)};
}

std::vector<TestFunctional> standard_test_set(const Semigroup& sg, int extra,
                                              std::uint64_t seed) {
  if (extra < 0) {
    throw PreconditionError("extra functional count must be nonnegative");
  }
  const int n = sg.dim();
  std::vector<TestFunctional> set;
  set.reserve(static_cast<std::size_t>(n + extra));
  for (int i = 0; i < n; ++i) {
    set.push_back(TestFunctional::make(sg, Vector::Unit(n, i)));
  }
  for (int s = 0; s < extra; ++s) {
    Vector z(n);
    for (int i = 0; i < n; ++i) {
      z[i] = rng::normal(seed, rng::kStreamZeta,
                         static_cast<std::uint64_t>(s),
                         static_cast<std::uint64_t>(i));
    }
    set.push_back(TestFunctional::make(sg, z / z.norm()));
  }
  return set;
}

ResidualReport mild_residual(const SolutionPath& x, const SPDEProblem& prob,
                             const WienerPath& path, const QSpec& q) {
  return mild_core(x, prob, path, q, NoiseRule::kLeft);
}

ResidualReport weak_residual(const SolutionPath& x, const SPDEProblem& prob,
                             const WienerPath& path, const QSpec& q,
                             const TestFunctional& zeta) {
  return weak_core(x, prob, path, q, zeta, NoiseRule::kLeft);
}

ResidualReport strong_residual(const SolutionPath& x, const SPDEProblem& prob,
                               const WienerPath& path, const QSpec& q) {
  return strong_core(x, prob, path, q, NoiseRule::kLeft);
}

EquivalenceReport equivalence_suite(const SPDEProblem& prob,
                                    const WienerPath& master, const QSpec& q,
                                    const std::vector<int>& coarsen_factors,
                                    bool anticipating_control) {
  if (coarsen_factors.size() < 3) {
    throw PreconditionError("equivalence ladder needs at least 3 levels");
  }
  for (const int f : coarsen_factors) {
    if (f < 1 || master.grid.steps() % f != 0) {
      throw PreconditionError(
          "each coarsening factor must divide the master step count");
    }
  }
  const NoiseRule rule =
      anticipating_control ? NoiseRule::kRight : NoiseRule::kLeft;
  const SolutionPath fine = exponential_euler_solve(prob, master, q);
  if (fine.lifetime_index) {
    throw PreconditionError(
        "master solution stopped before the horizon; no restriction exists");
  }
  const std::vector<TestFunctional> zetas =
      standard_test_set(prob.sg, 10, master.seed);

  EquivalenceReport report;
  report.anticipating_control = anticipating_control;
  std::vector<double> dts, mild_maxes, weak_maxes, strong_maxes;
  for (const int factor : coarsen_factors) {
    const WienerPath coarse = master.subsample(factor);
    SolutionPath restricted;
    restricted.grid = coarse.grid;
    restricted.states.reserve(
        static_cast<std::size_t>(coarse.grid.steps()) + 1);
    for (int k = 0; k <= coarse.grid.steps(); ++k) {
      restricted.states.push_back(fine.state(k * factor));
    }
    restricted.scheme = fine.scheme + "+restrict";
    restricted.seed = fine.seed;
    restricted.path_index = fine.path_index;

    EquivalenceLevel level;
    level.dt = coarse.grid.dt(0);
    level.mild_max = mild_core(restricted, prob, coarse, q, rule).max_abs;
    for (const TestFunctional& z : zetas) {
      level.weak_max = std::max(
          level.weak_max,
          weak_core(restricted, prob, coarse, q, z, rule).max_abs);
    }
    level.strong_max = strong_core(restricted, prob, coarse, q, rule).max_abs;
    report.levels.push_back(level);
    dts.push_back(level.dt);
    mild_maxes.push_back(level.mild_max);
    weak_maxes.push_back(level.weak_max);
    strong_maxes.push_back(level.strong_max);
  }
  report.mild_order = fit_convergence_order(dts, mild_maxes);
  report.weak_order = fit_convergence_order(dts, weak_maxes);
  report.strong_order = fit_convergence_order(dts, strong_maxes);
  return report;
}

UniquenessReport uniqueness_check(const SPDEProblem& prob, const Vector& h0,
                                  const Vector& g0, const WienerPath& path,
                                  const QSpec& q) {
  if (h0.size() != g0.size()) {
    throw DimensionError("initial values differ in dimension");
  }
  SPDEProblem first = prob;
  first.h0 = h0;
  first.h0_sampler = nullptr;
  SPDEProblem second = prob;
  second.h0 = g0;
  second.h0_sampler = nullptr;
  const SolutionPath xa = exponential_euler_solve(first, path, q);
  const SolutionPath xb = exponential_euler_solve(second, path, q);
  const int last = std::min(xa.last_index(), xb.last_index());

  UniquenessReport report;
  report.grid = path.grid;
  report.delta = (h0 - g0).norm();
  report.gaps.reserve(static_cast<std::size_t>(last) + 1);
  for (int k = 0; k <= last; ++k) {
    report.gaps.push_back((xa.state(k) - xb.state(k)).norm());
    report.sup_gap = std::max(report.sup_gap, report.gaps.back());
  }
  if (report.delta == 0.0) {
    report.bounded = report.sup_gap <= 1e-12;
  } else {
    report.bounded = true;
    for (int k = 0; k <= last; ++k) {
      const double envelope = report.delta *
                              std::exp(prob.lipschitz_l * path.grid.time(k)) *
                              (1.0 + 1e-6);
      if (report.gaps[static_cast<std::size_t>(k)] > envelope) {
        report.bounded = false;
        break;
      }
    }
  }
  return report;
}

GronwallCertificate gronwall_certify(const TimeGrid& grid,
                                     const std::vector<double>& f, double beta,
                                     double eps) {
  if (static_cast<int>(f.size()) != grid.steps() + 1) {
    throw GridError("sample count must match grid nodes");
  }
  if (beta < 0.0 || eps < 0.0 || !std::isfinite(beta) || !std::isfinite(eps)) {
    throw PreconditionError("beta and eps must be finite and nonnegative");
  }
  GronwallCertificate cert;
  for (const double v : f) {
    if (!(v >= 0.0)) {
      throw PreconditionError("samples must be nonnegative");
    }
    cert.max_f = std::max(cert.max_f, v);
  }
  cert.hypothesis_holds = true;
  KahanScalar integral;
  for (int k = 0; k <= grid.steps(); ++k) {
    if (f[static_cast<std::size_t>(k)] > beta * integral.value() + eps) {
      cert.hypothesis_holds = false;
      break;
    }
    if (k < grid.steps()) {
      integral.add(grid.dt(k) * f[static_cast<std::size_t>(k)]);
    }
  }
  cert.certified_bound = eps * std::exp(beta * grid.horizon());
  cert.bound_respected =
      cert.hypothesis_holds &&
      cert.max_f <= cert.certified_bound * (1.0 + 1e-9);
  return cert;
}

}  // namespace spde
