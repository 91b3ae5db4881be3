#include <doctest.h>

#include <random>

#include "fmmlu/hlinalg.hpp"
#include "fmmlu/kernels.hpp"

using namespace fmmlu;

namespace {

MatrixXc random_matrix(Eigen::Index m, Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  MatrixXc A(m, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) A(i, j) = cplx(nd(rng), nd(rng));
  return A;
}

template <class M>
double svd_norm(const M& A) {
  if (A.size() == 0) return 0.0;
  return Eigen::BDCSVD<Eigen::Matrix<typename M::Scalar, -1, -1>>(A).singularValues()[0];
}

template <class Scalar>
Mat<Scalar> id_residual(const Mat<Scalar>& A, const InterpolativeDecomposition<Scalar>& id) {
  Mat<Scalar> res = A(Eigen::all, id.redundant);
  if (id.rank() > 0) res -= A(Eigen::all, id.skeleton) * id.T;
  return res;
}

// Green's function block between two clouds separated by distance `sep`.
MatrixXc kernel_block(int m, int n, double sep, cplx k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<Vec3> x(m), y(n);
  for (auto& p : x) p = Vec3(u(rng), u(rng), u(rng));
  for (auto& p : y) p = Vec3(u(rng) + sep, u(rng), u(rng));
  MatrixXc A(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = green(k, x[i], y[j]);
  return A;
}

}  // namespace

TEST_CASE("id: rank one") {
  std::mt19937_64 rng(1);
  const MatrixXc u = random_matrix(30, 1, rng), v = random_matrix(1, 20, rng);
  const MatrixXc A = u * v;
  const auto id = id_fixed_tolerance(A, 1e-12);
  CHECK(id.rank() == 1);
  CHECK(id_residual(A, id).norm() <= 1e-14 * A.norm());
}

TEST_CASE("id: duplicated columns") {
  MatrixXc A(3, 2);
  A.col(0) << 1.0, cplx(2, 1), -3.0;
  A.col(1) = A.col(0);
  const auto id = id_fixed_tolerance(A, 1e-10);
  REQUIRE(id.rank() == 1);
  CHECK(id.skeleton[0] == 0);
  CHECK(id.redundant[0] == 1);
  CHECK(std::abs(id.T(0, 0) - 1.0) < 1e-15);
}

TEST_CASE("id: zero matrix has empty skeleton") {
  const MatrixXc A = MatrixXc::Zero(4, 5);
  const auto id = id_fixed_tolerance(A, 1e-6);
  CHECK(id.rank() == 0);
  CHECK(id.redundant.size() == 5);
}

TEST_CASE("id: Laplace kernel block against SVD oracle") {
  std::mt19937_64 rng(2);
  const MatrixXc A = kernel_block(200, 100, 2.0, 0.0, rng);
  const auto id = id_fixed_tolerance(A, 1e-6);
  CHECK(id.rank() <= 60);
  CHECK(svd_norm(id_residual(A, id)) <= 1e-6 * svd_norm(A));
  // S and R partition the columns
  std::vector<int> all = id.skeleton;
  all.insert(all.end(), id.redundant.begin(), id.redundant.end());
  std::sort(all.begin(), all.end());
  for (int j = 0; j < 100; ++j) CHECK(all[j] == j);
}

TEST_CASE("id: exact below the rank gap") {
  std::mt19937_64 rng(3);
  const MatrixXc A = random_matrix(80, 7, rng) * random_matrix(7, 60, rng);
  const auto id = id_fixed_tolerance(A, 1e-10);
  CHECK(id.rank() == 7);
  CHECK(svd_norm(id_residual(A, id)) <= 1e-13 * svd_norm(A));
}

TEST_CASE("id: real scalar instantiation") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd U(40, 3), V(3, 30);
  for (auto* M : {&U, &V})
    for (Eigen::Index i = 0; i < M->size(); ++i) M->data()[i] = nd(rng);
  const Eigen::MatrixXd A = U * V;
  const auto id = id_fixed_tolerance(A, 1e-12);
  CHECK(id.rank() == 3);
  CHECK(id_residual<double>(A, id).norm() <= 1e-13 * A.norm());
}

TEST_CASE("id: bound on structured random matrices") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> sz(5, 150);
  int failures = 0;
  for (int t = 0; t < 90; ++t) {
    const double eps = (t % 3 == 0) ? 1e-3 : (t % 3 == 1 ? 1e-6 : 1e-9);
    MatrixXc A;
    if (t % 2 == 0) {
      A = kernel_block(sz(rng), sz(rng), 1.5 + (t % 5), cplx(0.5 * (t % 7), 0.0), rng);
    } else {
      const int r = 1 + t % 10;
      const int m = sz(rng), n = sz(rng);
      A = random_matrix(m, r, rng) * random_matrix(r, n, rng);
      A += (0.1 * eps / std::sqrt(double(m * n))) * random_matrix(m, n, rng) * A.norm();
    }
    const auto id = id_fixed_tolerance(A, eps);
    if (svd_norm(id_residual(A, id)) > eps * svd_norm(A)) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("lu: identity, permutation, random") {
  const MatrixXc I = MatrixXc::Identity(5, 5);
  std::mt19937_64 rng(6);
  const MatrixXc b = random_matrix(5, 2, rng);
  CHECK((lu_solve(lu_factor(I), b) - b).norm() == 0.0);

  MatrixXc P(2, 2);
  P << 0.0, 1.0, 1.0, 0.0;
  const auto fp = lu_factor(P);
  CHECK((fp.solve(MatrixXc::Identity(2, 2)) - P).norm() < 1e-15);

  const MatrixXc M = random_matrix(500, 500, rng);
  const auto f = lu_factor(M);
  const MatrixXc X = f.solve(MatrixXc::Identity(500, 500));
  const double nm = svd_norm(M);
  CHECK((M * X - MatrixXc::Identity(500, 500)).norm() <= 1e-12 * nm);
  CHECK((X * M - MatrixXc::Identity(500, 500)).norm() <= 1e-12 * nm);
  CHECK(!f.ill_conditioned);
}

TEST_CASE("lu: singular and ill-conditioned input") {
  CHECK_THROWS_AS(lu_factor(MatrixXc::Zero(3, 3)), SingularPivot);
  MatrixXc A = MatrixXc::Identity(3, 3);
  A(2, 2) = 1e-15;
  CHECK(lu_factor(A).ill_conditioned);
  CHECK_THROWS_AS(lu_factor(MatrixXc::Zero(3, 2)), DimensionMismatch);
}

TEST_CASE("spectral norm estimate") {
  const MatrixXc I = MatrixXc::Identity(100, 100);
  CHECK(std::abs(spectral_norm_estimate(I) - 1.0) < 0.1);
  std::mt19937_64 rng(7);
  const MatrixXc u = random_matrix(50, 1, rng), v = random_matrix(1, 40, rng);
  CHECK(std::abs(spectral_norm_estimate(MatrixXc(u * v)) - u.norm() * v.norm()) < 0.1 * u.norm() * v.norm());
  const MatrixXc R = random_matrix(300, 300, rng);
  const double s = svd_norm(R);
  const double e = spectral_norm_estimate(R);
  CHECK(e <= s * (1 + 1e-12));
  CHECK(e >= 0.9 * s);
}
