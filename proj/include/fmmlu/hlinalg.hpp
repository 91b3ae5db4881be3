#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fmmlu/types.hpp"

namespace fmmlu {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Column ID: M(:, R) ~= M(:, S) * T.
template <class Scalar>
struct InterpolativeDecomposition {
  std::vector<int> skeleton;   // S, in pivot order
  std::vector<int> redundant;  // R
  Mat<Scalar> T;               // |S| x |R|
  double residual_estimate = 0.0;  // largest remaining pivot column norm
  double first_pivot = 0.0;

  int rank() const { return static_cast<int>(skeleton.size()); }
};

/// Interpolative decomposition by greedy column-pivoted Householder QR.
///
/// Pivoting stops once the largest remaining column norm is at most
/// eps times the first pivot norm. Ties go to the lowest column index.
template <class Derived>
InterpolativeDecomposition<typename Derived::Scalar> id_fixed_tolerance(
    const Eigen::MatrixBase<Derived>& M, double eps) {
  using Scalar = typename Derived::Scalar;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  const Eigen::Index m = M.rows(), n = M.cols();
  InterpolativeDecomposition<Scalar> id;
  Mat<Scalar> A = M;
  std::vector<int> perm(n);
  for (Eigen::Index j = 0; j < n; ++j) perm[j] = static_cast<int>(j);
  Eigen::Matrix<Real, Eigen::Dynamic, 1> norms(n), ref(n);
  for (Eigen::Index j = 0; j < n; ++j) norms[j] = A.col(j).squaredNorm();
  ref = norms;

  const Eigen::Index kmax = std::min(m, n);
  Eigen::Index r = 0;
  Real first = 0;
  Vec<Scalar> work(n);
  for (Eigen::Index k = 0; k < kmax; ++k) {
    Eigen::Index best = k;
    for (Eigen::Index j = k + 1; j < n; ++j) {
      if (norms[j] > norms[best] || (norms[j] == norms[best] && perm[j] < perm[best])) best = j;
    }
    const Real pivot = std::sqrt(std::max(norms[best], Real(0)));
    if (k == 0) first = pivot;
    if (pivot == Real(0) || pivot <= Real(eps) * first) {
      id.residual_estimate = pivot;
      break;
    }
    if (best != k) {
      A.col(k).swap(A.col(best));
      std::swap(norms[k], norms[best]);
      std::swap(ref[k], ref[best]);
      std::swap(perm[k], perm[best]);
    }
    Scalar tau;
    Real beta;
    auto tail = A.col(k).tail(m - k);
    Vec<Scalar> essential(m - k - 1);
    tail.makeHouseholder(essential, tau, beta);
    A(k, k) = beta;
    A.col(k).tail(m - k - 1).setZero();
    if (k + 1 < n) {
      A.bottomRightCorner(m - k, n - k - 1)
          .applyHouseholderOnTheLeft(essential, tau, work.data());
    }
    for (Eigen::Index j = k + 1; j < n; ++j) {
      norms[j] -= std::norm(A(k, j));
      // Recompute when cancellation has eaten most of the reference norm.
      if (norms[j] < Real(1e-2) * ref[j]) {
        norms[j] = (k + 1 < m) ? A.col(j).tail(m - k - 1).squaredNorm() : Real(0);
        ref[j] = norms[j];
      }
    }
    r = k + 1;
    id.residual_estimate = 0;
  }
  id.first_pivot = first;
  id.skeleton.assign(perm.begin(), perm.begin() + r);
  id.redundant.assign(perm.begin() + r, perm.end());
  if (r > 0 && r < n) {
    id.T = A.topLeftCorner(r, r).template triangularView<Eigen::Upper>().solve(
        A.topRightCorner(r, n - r));
  } else {
    id.T.resize(r, n - r);
  }
  return id;
}

/// Partial-pivoted LU of a square block.
template <class Scalar>
struct PivotLU {
  Eigen::PartialPivLU<Mat<Scalar>> lu;
  double rcond = 1.0;
  bool ill_conditioned = false;

  Eigen::Index size() const { return lu.rows(); }

  template <class Rhs>
  Mat<Scalar> solve(const Eigen::MatrixBase<Rhs>& b) const {
    if (b.rows() != lu.rows()) throw DimensionMismatch("lu_solve: row count mismatch");
    return lu.solve(b);
  }

  /// Product with the factored matrix, P^T L U b.
  Mat<Scalar> multiply(const Mat<Scalar>& b) const {
    const auto& f = lu.matrixLU();
    Mat<Scalar> y = f.template triangularView<Eigen::Upper>() * b;
    y = f.template triangularView<Eigen::UnitLower>() * y;
    return lu.permutationP().transpose() * y;
  }

  /// Product with the adjoint of the factored matrix, U^H L^H P b.
  Mat<Scalar> multiply_adjoint(const Mat<Scalar>& b) const {
    const auto& f = lu.matrixLU();
    Mat<Scalar> y = lu.permutationP() * b;
    y = f.template triangularView<Eigen::UnitLower>().adjoint() * y;
    return f.template triangularView<Eigen::Upper>().adjoint() * y;
  }
};

template <class Derived>
PivotLU<typename Derived::Scalar> lu_factor(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  if (M.rows() != M.cols() || M.rows() == 0) throw DimensionMismatch("lu_factor: matrix not square");
  PivotLU<Scalar> f;
  f.lu.compute(M);
  const auto& U = f.lu.matrixLU();
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    if (U(i, i) == Scalar(0)) throw SingularPivot("lu_factor: zero pivot in column " + std::to_string(i));
  }
  f.rcond = f.lu.rcond();
  f.ill_conditioned = f.rcond < 1e3 * std::numeric_limits<double>::epsilon();
  return f;
}

template <class Scalar, class Rhs>
Mat<Scalar> lu_solve(const PivotLU<Scalar>& f, const Eigen::MatrixBase<Rhs>& b) {
  return f.solve(b);
}

/// Largest singular value estimate by power iteration on A^H A.
template <class Scalar>
double spectral_norm_estimate(const std::function<Vec<Scalar>(const Vec<Scalar>&)>& apply,
                              const std::function<Vec<Scalar>(const Vec<Scalar>&)>& apply_adjoint,
                              Eigen::Index cols, int iters = 20, unsigned seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Vec<Scalar> x(cols);
  for (Eigen::Index i = 0; i < cols; ++i) {
    if constexpr (Eigen::NumTraits<Scalar>::IsComplex)
      x[i] = Scalar(nd(rng), nd(rng));
    else
      x[i] = Scalar(nd(rng));
  }
  double est = 0.0;
  double nx = x.norm();
  if (nx == 0.0) return 0.0;
  x /= nx;
  for (int it = 0; it < iters; ++it) {
    Vec<Scalar> y = apply(x);
    est = std::max(est, y.norm());
    if (est == 0.0) return 0.0;
    x = apply_adjoint(y);
    nx = x.norm();
    if (nx == 0.0) return est;
    est = std::max(est, std::sqrt(nx));
    x /= nx;
  }
  return est;
}

/// Spectral norm estimate of an explicit matrix.
template <class Derived>
double spectral_norm_estimate(const Eigen::MatrixBase<Derived>& A, int iters = 20, unsigned seed = 1) {
  using Scalar = typename Derived::Scalar;
  const Mat<Scalar> M = A;
  return spectral_norm_estimate<Scalar>([&](const Vec<Scalar>& v) -> Vec<Scalar> { return M * v; },
                                        [&](const Vec<Scalar>& v) -> Vec<Scalar> { return M.adjoint() * v; },
                                        M.cols(), iters, seed);
}

}  // namespace fmmlu
