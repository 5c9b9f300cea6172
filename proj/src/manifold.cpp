#include "spdelab/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>

#include "spdelab/numerics.hpp"
#include "spdelab/rng.hpp"

namespace spde {

namespace {

void require_chart_shape(const Chart& chart) {
  if (chart.m < 1) {
    throw PreconditionError("chart dimension must be positive");
  }
  if (!chart.phi || !chart.dphi) {
    throw PreconditionError("chart needs phi and its Jacobian");
  }
  if (static_cast<int>(chart.zeta.size()) != chart.m) {
    throw PreconditionError("chart needs one functional per coordinate");
  }
  if (chart.patch_lo.size() != chart.m || chart.patch_hi.size() != chart.m) {
    throw PreconditionError("patch box must match the chart dimension");
  }
}

Vector sample_in_patch(const Chart& chart, std::uint64_t seed,
                       std::uint64_t index) {
  Vector y(chart.m);
  for (int i = 0; i < chart.m; ++i) {
    const double u = rng::uniform(seed, rng::kStreamManifold, index,
                                  static_cast<std::uint64_t>(i));
    y[i] = chart.patch_lo[i] + (chart.patch_hi[i] - chart.patch_lo[i]) * u;
  }
  return y;
}

// relative least-squares distance of v from the column span of b
double span_residual(const Matrix& b, const Vector& v) {
  const double scale = v.norm();
  if (scale == 0.0) {
    return 0.0;
  }
  const Vector c = b.colPivHouseholderQr().solve(v);
  return (v - b * c).norm() / scale;
}

Matrix functional_rows(const Chart& chart) {
  Matrix z(chart.m, chart.zeta[0].zeta.size());
  for (int i = 0; i < chart.m; ++i) {
    z.row(i) = chart.zeta[static_cast<std::size_t>(i)].zeta.transpose();
  }
  return z;
}

}  // namespace

Vector Chart::coordinates(const Vector& h) const {
  Vector y(m);
  for (int i = 0; i < m; ++i) {
    const Vector& z = zeta[static_cast<std::size_t>(i)].zeta;
    if (z.size() != h.size()) {
      throw DimensionError("state does not match the chart functionals");
    }
    y[i] = z.dot(h);
  }
  return y;
}

bool Chart::in_patch(const Vector& y) const {
  if (y.size() != m) {
    throw DimensionError("coordinate dimension does not match the chart");
  }
  for (int i = 0; i < m; ++i) {
    if (!(patch_lo[i] < y[i] && y[i] < patch_hi[i])) {
      return false;
    }
  }
  return true;
}

Vector d2_apply(const Chart& chart, const Vector& y, const Vector& u,
                const Vector& v) {
  require_chart_shape(chart);
  if (!chart.d2phi) {
    throw PreconditionError("chart has no second derivative");
  }
  if (u.size() != chart.m || v.size() != chart.m) {
    throw DimensionError("bilinear arguments must be chart coordinates");
  }
  const std::vector<Matrix> hess = chart.d2phi(y);
  if (static_cast<int>(hess.size()) != chart.m) {
    throw DimensionError("second derivative needs one block per coordinate");
  }
  KahanVector acc(hess[0].rows());
  for (int k = 0; k < chart.m; ++k) {
    acc.add(u[k] * (hess[static_cast<std::size_t>(k)] * v));
  }
  return acc.value();
}

ChartValidation validate_chart(const Chart& chart, int samples,
                               std::uint64_t seed) {
  require_chart_shape(chart);
  if (samples < 1) {
    throw PreconditionError("need at least one sample");
  }
  ChartValidation report;
  report.rank_ok = true;
  report.consistency_ok = true;
  report.coordinates_ok = true;
  for (int s = 0; s < samples; ++s) {
    const Vector y = sample_in_patch(chart, seed, static_cast<std::uint64_t>(s));
    const Vector h = chart.phi(y);
    const Matrix b = chart.dphi(y);
    if (b.colPivHouseholderQr().rank() < chart.m) {
      report.rank_ok = false;
    }
    const double defect =
        (chart.phi(chart.coordinates(h)) - h).norm() / (1.0 + h.norm());
    report.max_consistency_defect =
        std::max(report.max_consistency_defect, defect);
    if (defect > 1e-8) {
      report.consistency_ok = false;
    }
    const Matrix z = functional_rows(chart) * b;
    if (!Eigen::FullPivLU<Matrix>(z).isInvertible()) {
      report.coordinates_ok = false;
    }
  }
  report.pass =
      report.rank_ok && report.consistency_ok && report.coordinates_ok;
  return report;
}

Matrix tangent_basis(const Chart& chart, const Vector& y) {
  require_chart_shape(chart);
  if (!chart.in_patch(y)) {
    throw PreconditionError("coordinates are outside the chart patch");
  }
  Matrix b = chart.dphi(y);
  if (b.cols() != chart.m) {
    throw DimensionError("Jacobian column count must equal the chart dim");
  }
  if (b.colPivHouseholderQr().rank() < chart.m) {
    throw DegenerateChartError("chart Jacobian lost full column rank");
  }
  return b;
}

Matrix projection(const Chart& chart, const Vector& h, double tol) {
  require_chart_shape(chart);
  const Vector y = chart.coordinates(h);
  if ((chart.phi(y) - h).norm() > tol * (1.0 + h.norm())) {
    throw OffManifoldError("state is not on the manifold patch");
  }
  const Matrix b = tangent_basis(chart, y);
  const Matrix zrows = functional_rows(chart);
  const Matrix z = zrows * b;
  // P = B Z^{-1} <zeta, .>; idempotent with range span(B) and kernel
  // the joint null space of the functionals
  return b * z.partialPivLu().solve(zrows);
}

ItoCorrection ito_correction(const SPDEProblem& prob, const QSpec& q,
                             const Vector& h) {
  if (!prob.time_homogeneous) {
    throw PreconditionError("correction is defined for autonomous problems");
  }
  if (prob.kappa_tail_sq < 0.0) {
    throw PreconditionError(
        "tail reporting requires a declared kappa tail (kappa_tail_sq)");
  }
  validate(q);
  const HSOperator sigma0 = prob.sigma(0.0, h);
  if (sigma0.cols() != q.modes()) {
    throw DimensionError("diffusion column count must match the spectrum");
  }
  KahanVector acc(sigma0.rows());
  const double fd_step =
      std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + h.norm());
  for (int j = 0; j < q.modes(); ++j) {
    const Vector col = sigma0.col(j);
    Vector directional;
    if (prob.sigma_jacobian) {
      directional = prob.sigma_jacobian(0.0, h, j) * col;
    } else {
      const double len = col.norm();
      if (len == 0.0) {
        continue;
      }
      const Vector u = col / len;
      directional = (prob.sigma(0.0, h + fd_step * u).col(j) -
                     prob.sigma(0.0, h - fd_step * u).col(j)) *
                    (len / (2.0 * fd_step));
    }
    acc.add(q.lambda[j] * directional);
  }
  ItoCorrection result;
  result.value = 0.5 * acc.value();
  result.tail_bound = (1.0 + h.norm()) * prob.kappa_tail_sq;
  return result;
}

TangencyReport check_invariance_conditions(const Chart& chart,
                                           const SPDEProblem& prob,
                                           const QSpec& q, int samples,
                                           double threshold,
                                           std::uint64_t seed) {
  require_chart_shape(chart);
  if (samples < 1) {
    throw PreconditionError("need at least one sample");
  }
  if (threshold <= 0.0) {
    throw PreconditionError("threshold must be positive");
  }
  if (!prob.time_homogeneous) {
    throw PreconditionError("conditions are defined for autonomous problems");
  }
  const Generator a(prob.sg);
  TangencyReport report;
  report.threshold = threshold;
  report.domain_ok = true;
  report.diffusion_residuals.reserve(static_cast<std::size_t>(samples));
  report.drift_residuals.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    const Vector y = sample_in_patch(chart, seed, static_cast<std::uint64_t>(s));
    const Vector h = chart.phi(y);
    const Matrix b = tangent_basis(chart, y);
    if (!a.domain_contains(h)) {
      report.domain_ok = false;
    }
    const HSOperator sigma0 = prob.sigma(0.0, h);
    double worst_here = 0.0;
    for (int j = 0; j < q.modes(); ++j) {
      // span membership is scale-free, so the spectral weight drops out
      const double r = span_residual(b, sigma0.col(j));
      if (r > worst_here) {
        worst_here = r;
      }
      if (r > report.max_diffusion) {
        report.max_diffusion = r;
        report.witness_mode = j;
        report.witness_diffusion_y = y;
      }
    }
    report.diffusion_residuals.push_back(worst_here);

    const Vector corrected =
        a.apply(h) + prob.alpha(0.0, h) - ito_correction(prob, q, h).value;
    const double rd = span_residual(b, corrected);
    report.drift_residuals.push_back(rd);
    if (rd > report.max_drift) {
      report.max_drift = rd;
      report.witness_drift_y = y;
    }
  }
  report.diffusion_ok = report.max_diffusion <= threshold;
  report.drift_ok = report.max_drift <= threshold;
  report.pass = report.domain_ok && report.diffusion_ok && report.drift_ok;
  return report;
}

SPDEProblem reduced_sde(const Chart& chart, const SPDEProblem& prob) {
  require_chart_shape(chart);
  SPDEProblem reduced;
  reduced.sg = Semigroup::diagonal(Vector::Zero(chart.m));
  reduced.alpha = [chart, alpha = prob.alpha](double t, const Vector& y) {
    const Vector h = chart.phi(y);
    const Vector a = alpha(t, h);
    Vector r(chart.m);
    for (int i = 0; i < chart.m; ++i) {
      const TestFunctional& z = chart.zeta[static_cast<std::size_t>(i)];
      r[i] = z.adjoint_action.dot(h) + z.zeta.dot(a);
    }
    return r;
  };
  reduced.sigma = [chart, sigma = prob.sigma](double t, const Vector& y) {
    const HSOperator s = sigma(t, chart.phi(y));
    HSOperator r(chart.m, s.cols());
    for (int i = 0; i < chart.m; ++i) {
      r.row(i) =
          chart.zeta[static_cast<std::size_t>(i)].zeta.transpose() * s;
    }
    return r;
  };
  reduced.h0 = chart.coordinates(prob.h0);
  reduced.time_homogeneous = prob.time_homogeneous;
  return reduced;
}

InvarianceReport invariance_experiment(const Chart& chart,
                                       const SPDEProblem& prob,
                                       const QSpec& q, const TimeGrid& master,
                                       const std::vector<int>& coarsen_factors,
                                       int ensemble, std::uint64_t seed) {
  require_chart_shape(chart);
  if (coarsen_factors.size() < 2) {
    throw PreconditionError("distance ladder needs at least 2 levels");
  }
  for (const int f : coarsen_factors) {
    if (f < 1 || master.steps() % f != 0) {
      throw PreconditionError(
          "each coarsening factor must divide the master step count");
    }
  }
  if (ensemble < 1) {
    throw PreconditionError("ensemble must be positive");
  }
  const Vector y0 = chart.coordinates(prob.h0);
  if ((chart.phi(y0) - prob.h0).norm() > 1e-8 * (1.0 + prob.h0.norm())) {
    throw OffManifoldError("initial value is not on the manifold patch");
  }
  if (!chart.in_patch(y0)) {
    throw PreconditionError("initial coordinates must lie inside the patch");
  }

  InvarianceReport report;
  std::vector<double> dts, maxes;
  for (const int factor : coarsen_factors) {
    InvarianceLevel level;
    KahanScalar sup_sum;
    int exits = 0;
    for (int i = 0; i < ensemble; ++i) {
      const WienerPath fine =
          sample_path(q, master, seed, static_cast<std::uint64_t>(i));
      const WienerPath coarse = fine.subsample(factor);
      const SolutionPath sol = exponential_euler_solve(prob, coarse, q);
      double sup = 0.0;
      bool exited = false;
      for (int k = 0; k <= sol.last_index(); ++k) {
        const Vector yk = chart.coordinates(sol.state(k));
        if (!chart.in_patch(yk)) {
          exited = true;
          break;
        }
        sup = std::max(sup, (sol.state(k) - chart.phi(yk)).norm());
      }
      level.max_distance = std::max(level.max_distance, sup);
      level.sup_distances.push_back(sup);
      sup_sum.add(sup);
      if (exited) {
        ++exits;
      }
    }
    level.dt = master.horizon() * factor / master.steps();
    level.mean_sup_distance = sup_sum.value() / ensemble;
    level.exit_fraction = static_cast<double>(exits) / ensemble;
    report.levels.push_back(level);
    dts.push_back(level.dt);
    maxes.push_back(level.max_distance);
  }
  report.order = fit_convergence_order(dts, maxes);
  return report;
}

}  // namespace spde
