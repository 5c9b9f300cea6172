#pragma once

#include "spdelab/types.hpp"

#include <string>

namespace spde {

/// Finite spectral truncation of the state space H (dim_state retained modes)
/// and the noise space (dim_noise retained modes). Coordinates everywhere are
/// taken with respect to fixed orthonormal bases, so inner products are
/// Euclidean. Every vector and operator attached to a spec must match its
/// dimensions.
struct HilbertSpec {
  int dim_state = 1;
  int dim_noise = 1;
  std::string state_label = "H";
  std::string noise_label = "U";
};

/// Rejects non-positive dimensions.
void validate(const HilbertSpec& spec);

/// Euclidean inner product of two coefficient vectors; symmetric and bilinear.
/// Throws DimensionError on mismatched lengths.
double inner_product(const Vector& x, const Vector& y);

/// Norm induced by inner_product.
double norm(const Vector& x);

/// Hilbert-Schmidt norm of an operator against a covariance spectrum:
/// sqrt(sum_j lambda_j * ||col_j||^2). Zero only for the zero operator since
/// all lambda_j > 0. Throws DimensionError on shape mismatch and
/// SpectrumError on nonpositive eigenvalues.
double hs_norm(const HSOperator& op, const Vector& lambda);

}  // namespace spde
