#include "spdelab/fixtures.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <map>

#include "spdelab/concepts.hpp"

namespace spde::fixtures {

namespace {

double operator_2norm(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

Vector default_initial(int n) {
  Vector h0(n);
  for (int i = 0; i < n; ++i) {
    h0[i] = 1.0 / (1.0 + i);
  }
  return h0;
}

/// sigma(i, j) = scale_j on the diagonal of the N x J rectangle.
HSOperator rectangular_diagonal(int n, int j_modes,
                                const std::function<double(int)>& scale) {
  HSOperator s = HSOperator::Zero(n, j_modes);
  for (int j = 0; j < std::min(n, j_modes); ++j) {
    s(j, j) = scale(j);
  }
  return s;
}

Vector constant_column_kappas(const HSOperator& s, const QSpec& q) {
  Vector kappa(q.modes());
  for (int j = 0; j < q.modes(); ++j) {
    kappa[j] = std::sqrt(q.lambda[j]) * s.col(j).norm();
  }
  return kappa;
}

Matrix generic_generator() {
  Matrix a(3, 3);
  a << -1.0, 0.6, 0.0, -0.3, -0.8, 0.2, 0.1, 0.0, -1.2;
  return a;
}

Matrix plane_generator() {
  Matrix a(3, 3);
  a << -1.0, 0.4, 0.3, 0.0, -2.0, 0.5, 0.0, 0.0, -0.5;
  return a;
}

void require_pins(const ProblemDefaults& d, const std::string& name,
                  const std::string& semigroup, int dim, const QSpec& q) {
  if (!semigroup.empty() && semigroup != d.semigroup) {
    throw PreconditionError("fixture " + name +
                            " carries its own generator; leave the semigroup "
                            "unset or name its default");
  }
  if (d.fixed_dim > 0 && dim != 0 && dim != d.fixed_dim) {
    throw PreconditionError("fixture " + name + " is fixed at dimension " +
                            std::to_string(d.fixed_dim));
  }
  if (d.fixed_noise > 0 && q.modes() != d.fixed_noise) {
    throw PreconditionError("fixture " + name + " needs exactly " +
                            std::to_string(d.fixed_noise) + " noise modes");
  }
}

SPDEProblem flexible_base(const std::string& name,
                          const std::string& semigroup, int dim) {
  const ProblemDefaults d = problem_defaults(name);
  SPDEProblem prob;
  prob.sg = make_semigroup(semigroup.empty() ? d.semigroup : semigroup,
                           dim != 0 ? dim : d.dim);
  prob.h0 = default_initial(prob.sg.dim());
  return prob;
}

SPDEProblem build_zero(const std::string& semigroup, int dim,
                       const QSpec& q) {
  SPDEProblem prob = flexible_base("zero", semigroup, dim);
  const int n = prob.dim();
  const int j = q.modes();
  prob.alpha = [n](double, const Vector&) { return Vector(Vector::Zero(n)); };
  prob.sigma = [n, j](double, const Vector&) {
    return HSOperator(HSOperator::Zero(n, j));
  };
  prob.lipschitz_l = 0.0;
  prob.growth_k = 0.0;
  prob.kappa = Vector::Zero(j);
  prob.kappa_tail_sq = 0.0;
  return prob;
}

SPDEProblem build_ou_unit(const std::string& semigroup, int dim,
                          const QSpec& q) {
  SPDEProblem prob = flexible_base("ou_unit", semigroup, dim);
  const int n = prob.dim();
  const HSOperator s =
      rectangular_diagonal(n, q.modes(), [](int) { return 1.0; });
  prob.alpha = [n](double, const Vector&) { return Vector(Vector::Zero(n)); };
  prob.sigma = [s](double, const Vector&) { return s; };
  prob.h0 = Vector::Zero(n);
  prob.lipschitz_l = 0.0;
  prob.growth_k = hs_norm(s, q);
  prob.kappa = constant_column_kappas(s, q);
  prob.kappa_tail_sq = 0.0;
  return prob;
}

SPDEProblem build_constant_drift(const std::string& semigroup, int dim,
                                 const QSpec& q) {
  SPDEProblem prob = flexible_base("constant_drift", semigroup, dim);
  const int n = prob.dim();
  Vector b(n);
  for (int i = 0; i < n; ++i) {
    b[i] = 0.5 / (1.0 + i);
  }
  const HSOperator s =
      rectangular_diagonal(n, q.modes(), [](int) { return 0.3; });
  prob.alpha = [b](double, const Vector&) { return b; };
  prob.sigma = [s](double, const Vector&) { return s; };
  prob.lipschitz_l = 0.0;
  prob.growth_k = hs_norm(s, q);
  prob.kappa = constant_column_kappas(s, q);
  prob.kappa_tail_sq = 0.0;
  return prob;
}

SPDEProblem build_linear_damping(const std::string& semigroup, int dim,
                                 const QSpec& q) {
  SPDEProblem prob = flexible_base("linear_damping", semigroup, dim);
  const int n = prob.dim();
  const HSOperator s = rectangular_diagonal(
      n, q.modes(), [](int j) { return 0.25 / (1.0 + j); });
  prob.alpha = [](double, const Vector& h) { return Vector(-0.5 * h); };
  prob.sigma = [s](double, const Vector&) { return s; };
  prob.lipschitz_l = 0.5;
  prob.growth_k = hs_norm(s, q);
  prob.kappa = constant_column_kappas(s, q);
  prob.kappa_tail_sq = 0.0;
  return prob;
}

SPDEProblem build_sin_diffusion(const std::string& semigroup, int dim,
                                const QSpec& q) {
  SPDEProblem prob = flexible_base("sin_diffusion", semigroup, dim);
  const int n = prob.dim();
  const int jm = q.modes();
  if (jm > n) {
    throw PreconditionError(
        "sin_diffusion needs noise modes <= state dimension");
  }
  prob.alpha = [](double, const Vector& h) { return Vector(-0.5 * h); };
  prob.sigma = [n, jm](double, const Vector& h) {
    HSOperator s = HSOperator::Zero(n, jm);
    for (int j = 0; j < jm; ++j) {
      s(j, j) = 0.4 * std::sin(h[j] + 0.5 * (1.0 + j));
    }
    return s;
  };
  prob.sigma_jacobian = [n](double, const Vector& h, int j) {
    Matrix d = Matrix::Zero(n, n);
    d(j, j) = 0.4 * std::cos(h[j] + 0.5 * (1.0 + j));
    return d;
  };
  prob.lipschitz_l = 0.5;
  prob.growth_k = 0.4 * std::sqrt(q.trace());
  Vector kappa(jm);
  for (int j = 0; j < jm; ++j) {
    kappa[j] = 0.4 * std::sqrt(q.lambda[j]);
  }
  prob.kappa = kappa;
  prob.kappa_tail_sq = 0.0;
  return prob;
}

SPDEProblem build_matrix_affine(const std::string& semigroup, int dim,
                                const QSpec& q) {
  const ProblemDefaults d = problem_defaults("matrix_affine");
  require_pins(d, "matrix_affine", semigroup, dim, q);
  SPDEProblem prob;
  prob.sg = Semigroup::matrix(generic_generator());
  Matrix m(3, 3);
  m << -0.4, 0.1, 0.0, 0.0, -0.2, 0.1, 0.2, 0.0, -0.3;
  Vector b(3);
  b << 0.3, -0.1, 0.2;
  HSOperator s(3, 2);
  s << 0.3, 0.06, -0.12, 0.18, 0.0, 0.24;
  prob.alpha = [m, b](double, const Vector& h) { return Vector(m * h + b); };
  prob.sigma = [s](double, const Vector&) { return s; };
  prob.h0 = (Vector(3) << 1.0, -0.5, 0.25).finished();
  prob.lipschitz_l = operator_2norm(m);
  prob.growth_k = hs_norm(s, q);
  prob.kappa = constant_column_kappas(s, q);
  prob.kappa_tail_sq = 0.0;
  return prob;
}

SPDEProblem build_manifold_affine(const std::string& name,
                                  const std::string& semigroup, int dim,
                                  const QSpec& q, double tilt) {
  const ProblemDefaults d = problem_defaults(name);
  require_pins(d, name, semigroup, dim, q);
  SPDEProblem prob;
  prob.sg = Semigroup::matrix(plane_generator());
  Vector b(3);
  b << 0.1, -0.2, 0.5;
  b[2] += tilt;
  HSOperator s(3, 2);
  s << 0.3, 0.05, -0.1, 0.2, 0.0, 0.0;
  prob.alpha = [b](double, const Vector&) { return b; };
  prob.sigma = [s](double, const Vector&) { return s; };
  prob.h0 = (Vector(3) << 0.5, -0.25, 1.0).finished();
  prob.lipschitz_l = 0.0;
  prob.growth_k = hs_norm(s, q);
  prob.kappa = constant_column_kappas(s, q);
  prob.kappa_tail_sq = 0.0;
  return prob;
}

SPDEProblem build_manifold_parabola(const std::string& semigroup, int dim,
                                    const QSpec& q) {
  const ProblemDefaults d = problem_defaults("manifold_parabola");
  require_pins(d, "manifold_parabola", semigroup, dim, q);
  SPDEProblem prob;
  prob.sg = Semigroup::diagonal(Vector::Zero(2));
  const double lambda1 = q.lambda[0];
  const auto column = [](const Vector& h) {
    return Vector((Vector(2) << 0.3 * std::cos(h[0]),
                   0.6 * h[0] * std::cos(h[0]))
                      .finished());
  };
  const auto column_derivative = [](const Vector& h) {
    return Vector((Vector(2) << -0.3 * std::sin(h[0]),
                   0.6 * std::cos(h[0]) - 0.6 * h[0] * std::sin(h[0]))
                      .finished());
  };
  prob.sigma = [column](double, const Vector& h) {
    HSOperator s(2, 1);
    s.col(0) = column(h);
    return s;
  };
  prob.sigma_jacobian = [column_derivative](double, const Vector& h, int) {
    Matrix d = Matrix::Zero(2, 2);
    d.col(0) = column_derivative(h);
    return d;
  };
  // second-order compensation: the corrected drift vanishes, so the curve
  // is invariant for the resulting dynamics
  prob.alpha = [lambda1, column, column_derivative](double, const Vector& h) {
    return Vector(0.5 * lambda1 * column(h)[0] * column_derivative(h));
  };
  prob.h0 = (Vector(2) << 0.4, 0.16).finished();
  prob.lipschitz_l = 2.0 * lambda1;  // covers the sampled coordinate range
  prob.growth_k = 0.6 * std::sqrt(lambda1);
  prob.kappa = Vector::Constant(1, 0.6 * std::sqrt(lambda1));
  prob.kappa_tail_sq = 0.0;
  return prob;
}

Chart build_affine_plane(const SPDEProblem& prob, const Matrix& frame,
                         double halfwidth) {
  Chart chart;
  chart.m = 2;
  const Matrix b = frame;
  chart.phi = [b](const Vector& y) {
    return Vector(Vector::Unit(3, 2) + b * y);
  };
  chart.dphi = [b](const Vector&) { return b; };
  chart.d2phi = [](const Vector&) {
    return std::vector<Matrix>(2, Matrix::Zero(3, 2));
  };
  // dual functionals: <zeta_i, phi(y)> = y_i
  const Matrix dual =
      frame * (frame.transpose() * frame).inverse();
  chart.zeta.push_back(TestFunctional::make(prob.sg, dual.col(0)));
  chart.zeta.push_back(TestFunctional::make(prob.sg, dual.col(1)));
  chart.patch_lo = Vector::Constant(2, -halfwidth);
  chart.patch_hi = Vector::Constant(2, halfwidth);
  return chart;
}

}  // namespace

Semigroup make_semigroup(const std::string& name, int dim) {
  if (dim < 1) {
    throw PreconditionError("semigroup dimension must be positive");
  }
  if (name == "heat_diagonal") {
    Vector mu(dim);
    for (int j = 0; j < dim; ++j) {
      mu[j] = static_cast<double>((j + 1)) * (j + 1);
    }
    return Semigroup::diagonal(mu);
  }
  if (name == "shift_grid") {
    return Semigroup::grid_shift(dim, 1.0);
  }
  if (name == "matrix_generic") {
    if (dim != 3) {
      throw PreconditionError("matrix_generic is fixed at dimension 3");
    }
    return Semigroup::matrix(generic_generator());
  }
  throw PreconditionError("unknown semigroup fixture: " + name);
}

QSpec make_spectrum(const std::string& kind, int modes) {
  if (kind == "geometric") {
    return QSpec::geometric(modes);
  }
  if (kind == "polynomial") {
    return QSpec::polynomial(modes);
  }
  throw PreconditionError("unknown spectrum kind: " + kind);
}

SPDEProblem make_problem(const std::string& name, const std::string& semigroup,
                         int dim, const QSpec& q) {
  validate(q);
  if (name == "zero") {
    return build_zero(semigroup, dim, q);
  }
  if (name == "ou_unit") {
    return build_ou_unit(semigroup, dim, q);
  }
  if (name == "constant_drift") {
    return build_constant_drift(semigroup, dim, q);
  }
  if (name == "linear_damping") {
    return build_linear_damping(semigroup, dim, q);
  }
  if (name == "sin_diffusion") {
    return build_sin_diffusion(semigroup, dim, q);
  }
  if (name == "matrix_affine") {
    return build_matrix_affine(semigroup, dim, q);
  }
  if (name == "manifold_affine") {
    return build_manifold_affine("manifold_affine", semigroup, dim, q, 0.0);
  }
  if (name == "manifold_affine_tilted") {
    return build_manifold_affine("manifold_affine_tilted", semigroup, dim, q,
                                 0.05);
  }
  if (name == "manifold_parabola") {
    return build_manifold_parabola(semigroup, dim, q);
  }
  throw PreconditionError("unknown coefficient fixture: " + name);
}

Chart make_chart(const std::string& name, const SPDEProblem& prob) {
  if (name == "affine_plane" || name == "affine_plane_rot") {
    if (prob.dim() != 3) {
      throw PreconditionError(name + " needs a 3-dimensional problem");
    }
    Matrix b(3, 2);
    b << 1.0, 0.0, 0.0, 1.0, 0.0, 0.0;
    if (name == "affine_plane") {
      return build_affine_plane(prob, b, 3.0);
    }
    Matrix r(2, 2);
    r << 2.0, 1.0, 0.0, 1.0;
    return build_affine_plane(prob, Matrix(b * r), 1.0);
  }
  if (name == "parabola") {
    if (prob.dim() != 2) {
      throw PreconditionError("parabola needs a 2-dimensional problem");
    }
    Chart chart;
    chart.m = 1;
    chart.phi = [](const Vector& y) {
      return Vector((Vector(2) << y[0], y[0] * y[0]).finished());
    };
    chart.dphi = [](const Vector& y) {
      return Matrix((Matrix(2, 1) << 1.0, 2.0 * y[0]).finished());
    };
    chart.d2phi = [](const Vector&) {
      return std::vector<Matrix>{(Matrix(2, 1) << 0.0, 2.0).finished()};
    };
    chart.zeta.push_back(TestFunctional::make(prob.sg, Vector::Unit(2, 0)));
    chart.patch_lo = Vector::Constant(1, -2.0);
    chart.patch_hi = Vector::Constant(1, 2.0);
    return chart;
  }
  throw PreconditionError("unknown chart fixture: " + name);
}

std::vector<std::string> semigroup_names() {
  return {"heat_diagonal", "shift_grid", "matrix_generic"};
}

std::vector<std::string> problem_names() {
  return {"zero",          "ou_unit",        "constant_drift",
          "linear_damping", "sin_diffusion",  "matrix_affine",
          "manifold_affine", "manifold_affine_tilted", "manifold_parabola"};
}

std::vector<std::string> chart_names() {
  return {"affine_plane", "affine_plane_rot", "parabola"};
}

ProblemDefaults problem_defaults(const std::string& name) {
  static const std::map<std::string, ProblemDefaults> table = {
      {"zero", {"heat_diagonal", 8, 4, false, 0, 0}},
      {"ou_unit", {"heat_diagonal", 8, 4, false, 0, 0}},
      {"constant_drift", {"heat_diagonal", 8, 4, false, 0, 0}},
      {"linear_damping", {"heat_diagonal", 8, 4, false, 0, 0}},
      {"sin_diffusion", {"heat_diagonal", 8, 4, false, 0, 0}},
      {"matrix_affine", {"matrix_generic", 3, 2, true, 3, 2}},
      {"manifold_affine", {"", 3, 2, true, 3, 2}},
      {"manifold_affine_tilted", {"", 3, 2, true, 3, 2}},
      {"manifold_parabola", {"", 2, 1, true, 2, 1}},
  };
  const auto it = table.find(name);
  if (it == table.end()) {
    throw PreconditionError("unknown coefficient fixture: " + name);
  }
  return it->second;
}

std::string chart_problem(const std::string& name) {
  if (name == "affine_plane" || name == "affine_plane_rot") {
    return "manifold_affine";
  }
  if (name == "parabola") {
    return "manifold_parabola";
  }
  throw PreconditionError("unknown chart fixture: " + name);
}

std::string describe_registry() {
  char buf[256];
  std::string out = "semigroups:\n";
  out += "  heat_diagonal    diagonal spectral rates mu_j = j^2\n";
  out += "  shift_grid       periodic transport, odd uniform grid, period 1\n";
  out += "  matrix_generic   dense nonnormal 3x3 generator\n";
  out += "coefficient sets (constants at defaults, geometric spectrum):\n";
  for (const auto& name : problem_names()) {
    const ProblemDefaults d = problem_defaults(name);
    const QSpec q = QSpec::geometric(d.noise_modes);
    const SPDEProblem prob = make_problem(name, "", 0, q);
    std::string kappas;
    for (int j = 0; j < prob.kappa.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%s%.4g", j ? "," : "", prob.kappa[j]);
      kappas += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "  %-22s generator=%-14s dim=%d modes=%d L=%.4g K=%.4g "
                  "kappa=[%s]\n",
                  name.c_str(),
                  d.semigroup.empty() ? "built-in" : d.semigroup.c_str(),
                  d.dim, d.noise_modes, prob.lipschitz_l, prob.growth_k,
                  kappas.c_str());
    out += buf;
  }
  out += "charts (paired coefficient fixture):\n";
  for (const auto& name : chart_names()) {
    std::snprintf(buf, sizeof(buf), "  %-22s problem=%s\n", name.c_str(),
                  chart_problem(name).c_str());
    out += buf;
  }
  return out;
}

}  // namespace spde::fixtures
