#include "spdelab/numerics.hpp"

#include <algorithm>

namespace spde {

double operator_2norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()[0];
}

double fit_convergence_order(const std::vector<double>& dt,
                             const std::vector<double>& err) {
  if (dt.size() != err.size()) {
    throw DimensionError("fit_convergence_order: dt and err sizes differ");
  }
  if (dt.size() < 2) {
    throw PreconditionError("fit_convergence_order: need at least 2 levels");
  }
  const std::size_t n = dt.size();
  std::vector<double> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(dt[i] > 0.0)) {
      throw PreconditionError("fit_convergence_order: dt must be positive");
    }
    x[i] = std::log(dt[i]);
    y[i] = std::log(std::max(err[i], 1e-300));
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

}  // namespace spde
