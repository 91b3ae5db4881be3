#pragma once

#include <Eigen/Core>

namespace fmmlu {

struct GaussRule {
  Eigen::VectorXd x;     // nodes on [0, 1], increasing
  Eigen::VectorXd w;     // weights summing to 1
  Eigen::VectorXd bary;  // barycentric weights of the nodes

  int size() const { return static_cast<int>(x.size()); }
  /// Values of the n Lagrange polynomials through the nodes at t.
  void lagrange(double t, double* out) const;
};

/// n-point Gauss-Legendre rule on [0, 1]. Results are cached per n.
const GaussRule& gauss_legendre(int n);

}  // namespace fmmlu
