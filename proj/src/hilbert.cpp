#include "spdelab/hilbert.hpp"

#include <cmath>

namespace spde {

void validate(const HilbertSpec& spec) {
  if (spec.dim_state < 1) {
    throw DimensionError("HilbertSpec: dim_state must be >= 1");
  }
  if (spec.dim_noise < 1) {
    throw DimensionError("HilbertSpec: dim_noise must be >= 1");
  }
}

double inner_product(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) {
    throw DimensionError("inner_product: vectors have lengths " +
                         std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
  }
  return x.dot(y);
}

double norm(const Vector& x) { return std::sqrt(x.dot(x)); }

double hs_norm(const HSOperator& op, const Vector& lambda) {
  if (op.cols() != lambda.size()) {
    throw DimensionError("hs_norm: operator has " + std::to_string(op.cols()) +
                         " columns but spectrum has " +
                         std::to_string(lambda.size()) + " eigenvalues");
  }
  double sum = 0.0;
  for (Eigen::Index j = 0; j < op.cols(); ++j) {
    if (!(lambda[j] > 0.0)) {
      throw SpectrumError("hs_norm: eigenvalue " + std::to_string(j) +
                          " is not positive");
    }
    sum += lambda[j] * op.col(j).squaredNorm();
  }
  return std::sqrt(sum);
}

}  // namespace spde
