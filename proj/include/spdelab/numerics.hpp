#pragma once

#include "spdelab/types.hpp"

#include <cmath>
#include <vector>

namespace spde {

/// Neumaier-compensated scalar accumulator. Summation order is fixed by the
/// caller, so results are bit-reproducible for a given sequence of add()s.
struct KahanScalar {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }

  double value() const { return sum + carry; }
};

/// Componentwise compensated accumulator for state vectors.
class KahanVector {
 public:
  explicit KahanVector(Eigen::Index n)
      : sum_(Vector::Zero(n)), carry_(Vector::Zero(n)) {}

  void add(const Vector& v) {
    for (Eigen::Index i = 0; i < sum_.size(); ++i) {
      const double s = sum_[i];
      const double x = v[i];
      const double t = s + x;
      if (std::abs(s) >= std::abs(x)) {
        carry_[i] += (s - t) + x;
      } else {
        carry_[i] += (x - t) + s;
      }
      sum_[i] = t;
    }
  }

  Vector value() const { return sum_ + carry_; }

 private:
  Vector sum_;
  Vector carry_;
};

/// Largest singular value (operator 2-norm).
double operator_2norm(const Matrix& a);

/// Least-squares slope of log(err) against log(dt): the empirical convergence
/// order of err ~ C * dt^p. Requires >= 2 levels with positive entries;
/// nonpositive errors are clamped at a tiny floor so fully-converged levels do
/// not poison the fit.
double fit_convergence_order(const std::vector<double>& dt,
                             const std::vector<double>& err);

}  // namespace spde
