#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fmmlu/driver.hpp"
#include "oracles.hpp"

using namespace fmmlu;

namespace {

constexpr double kPi = std::numbers::pi;

VectorXc random_vector(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  VectorXc x(n);
  for (auto& v : x) v = cplx(nd(rng), nd(rng));
  return x;
}

// Unscaled Nystrom matrix alpha I + K W with near entries replaced by the
// corrected weights, assembled without the entry oracle.
MatrixXc unscaled_matrix(const SurfaceDiscretization& d, const NearCorrectionTable& t, cplx k) {
  const int n = d.size();
  MatrixXc A(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      A(i, j) = i == j ? 0.0
                       : eval_kernel(KernelKind::CombinedField, k, d.nodes.col(i), Vec3::Zero(), d.nodes.col(j),
                                     d.normals.col(j)) *
                             d.weights[j];
    for (int pj : t.near_patches(i)) {
      const Patch& P = d.patches[pj];
      const cplx* c = t.find(i, pj);
      for (int l = 0; l < P.count; ++l) A(i, P.first + l) = c[l];
    }
    A(i, i) += 0.5;
  }
  return A;
}

}  // namespace

TEST_CASE("solver: zero data gives zero density") {
  const SurfaceDiscretization d = make_sphere(1.0, 1, 4);
  const DirichletSolver s(d, 1.0, SolverOptions{});
  CHECK(s.solve(VectorXc::Zero(d.size())).isZero(0.0));
  CHECK_THROWS_AS(s.solve(VectorXc::Zero(d.size() - 1)), DimensionMismatch);
}

TEST_CASE("solver: scaled round trip reproduces the unscaled Nystrom equations") {
  const SurfaceDiscretization d = make_wiggly_torus(6, 3, 4);
  REQUIRE(d.size() <= 500);
  SolverOptions o;
  o.eps = 1e-12;
  o.eps_q = 1e-9;
  const DirichletSolver s(d, 0.97, o);
  const VectorXc f = random_vector(d.size(), 2);
  const VectorXc sigma = s.solve(f).cwiseQuotient(d.weights.cwiseSqrt().cast<cplx>());
  const MatrixXc A = unscaled_matrix(d, s.table(), 0.97);
  CHECK((A * sigma - f).norm() <= 1e-12 * f.norm());
}

TEST_CASE("solver: matches a dense solve and is linear") {
  const SurfaceDiscretization d = make_wiggly_torus(16, 8, 4);
  SolverOptions o;
  o.eps = 1e-6;
  const DirichletSolver s(d, 0.97, o);
  CHECK(s.factorization().stats().n0 < d.size());
  const MatrixXc A = s.oracle().dense();
  const VectorXc sw = d.weights.cwiseSqrt().cast<cplx>();
  for (unsigned seed = 0; seed < 3; ++seed) {
    const VectorXc f = random_vector(d.size(), seed);
    const VectorXc rhs = f.cwiseProduct(sw);
    CHECK((A * s.solve(f) - rhs).norm() <= 50 * o.eps * rhs.norm());
  }
  const VectorXc f1 = random_vector(d.size(), 10), f2 = random_vector(d.size(), 11);
  const VectorXc lhs = s.solve(f1 + f2), rhs = s.solve(f1) + s.solve(f2);
  CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
}

TEST_CASE("eval_exterior: zero, linearity, errors and adaptive oracle") {
  const SurfaceDiscretization d = make_sphere(1.0, 4, 8);
  const cplx k = 1.3;
  Eigen::Matrix3Xd t(3, 3);
  t.col(0) = Vec3(0, 0, 3.0);
  t.col(1) = Vec3(2.5, -1.0, 0.4);
  t.col(2) = Vec3(-2.0, 2.0, 1.5);
  CHECK(eval_exterior(d, k, VectorXc::Zero(d.size()), t).isZero(0.0));

  const VectorXc s1 = random_vector(d.size(), 1), s2 = random_vector(d.size(), 2);
  const VectorXc u12 = eval_exterior(d, k, s1 + 2.0 * s2, t);
  const VectorXc u1 = eval_exterior(d, k, s1, t), u2 = eval_exterior(d, k, s2, t);
  CHECK((u12 - u1 - 2.0 * u2).norm() <= 1e-13 * u12.norm());

  Eigen::Matrix3Xd bad(3, 2);
  bad.col(0) = Vec3(0, 0, 5);
  bad.col(1) = Vec3(0, 0, 1.01);
  CHECK_THROWS_AS(eval_exterior(d, k, s1, bad), TargetTooClose);
  CHECK_THROWS_AS(eval_exterior(d, k, VectorXc::Zero(3), t), DimensionMismatch);

  // Smooth density: sigma(x) = x_1 + i x_3^2, integrated patch by patch.
  VectorXc sigma(d.size());
  for (int i = 0; i < d.size(); ++i) sigma[i] = cplx(d.nodes(0, i), d.nodes(2, i) * d.nodes(2, i));
  const VectorXc scaled = sigma.cwiseProduct(d.weights.cwiseSqrt().cast<cplx>());
  const VectorXc u = eval_exterior(d, k, scaled, t);
  const double eps_q = 1e-10;
  std::vector<cplx> c(d.order * d.order);
  for (int q = 0; q < t.cols(); ++q) {
    cplx ref = 0.0;
    for (const Patch& P : d.patches) {
      integrate_patch(P, d.order, KernelKind::CombinedField, k, t.col(q), Vec3::Zero(), nullptr, eps_q, 20, 0,
                      c.data());
      for (int l = 0; l < P.count; ++l) ref += c[l] * sigma[P.first + l];
    }
    CHECK(std::abs(u[q] - ref) <= 10 * eps_q * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("validate_point_sources: report consistency and accuracy") {
  const SurfaceDiscretization d = make_wiggly_torus(10, 5, 4);
  BvpProblem prob;
  prob.disc = &d;
  prob.k = 0.97;
  prob.sources = validation_sources(GeometryKind::Torus, d, 50, 1);
  prob.opts.eps = 1e-6;
  const ValidationReport r = validate_point_sources(prob, 50, 1);
  CHECK(r.targets.cols() == 50);
  for (int t = 0; t < 50; ++t)
    CHECK(std::abs(r.targets.col(t).norm() - 2.0 * d.circumscribed_radius()) < 1e-12);
  CHECK(std::abs(r.eps_a - r.target_errors.norm() / r.sigma_norm) <= 1e-15 * r.eps_a);
  CHECK(r.target_errors.maxCoeff() <= r.eps_a * r.sigma_norm);
  CHECK(r.eps_a < 1e-2);
  CHECK(r.row.n == d.size());
  CHECK(r.row.npatches == 50);
  CHECK(r.row.p == 4);

  BvpProblem pw = prob;
  pw.data = BoundaryData::PlaneWave;
  CHECK_THROWS_AS(validate_point_sources(pw, 5, 1), std::invalid_argument);
}

TEST_CASE("validate_point_sources: error decreases under refinement") {
  double last = 1.0;
  for (int m : {4, 5, 6}) {
    const SurfaceDiscretization d = make_sphere(1.0, m, 4);
    BvpProblem prob;
    prob.disc = &d;
    prob.geometry = GeometryKind::Sphere;
    prob.k = 1.0;
    prob.sources = validation_sources(GeometryKind::Sphere, d, 20, 3);
    prob.opts.eps = 1e-9;
    prob.opts.eps_q = 1e-9;
    const double e = validate_point_sources(prob, 30, 3).eps_a;
    INFO("m = " << m << " eps_a = " << e);
    CHECK(e < last);
    last = e;
  }
}

TEST_CASE("rcs: sphere backscatter is isotropic and matches the partial-wave series") {
  const SurfaceDiscretization d = make_sphere(1.0, 2, 6);
  SolverOptions o;
  o.eps = 1e-8;
  std::vector<double> angles;
  for (int a = 0; a < 8; ++a) angles.push_back(2 * kPi * a / 8);
  FactorStats st;
  const std::vector<RcsSample> r = monostatic_rcs(d, 2.0, angles, o, &st);
  REQUIRE(r.size() == 8);
  CHECK(st.n == d.size());
  const cplx mie = oracles::sound_soft_sphere_backscatter(2.0, 1.0);
  for (const RcsSample& s : r) {
    CHECK(std::abs(s.R - r[0].R) <= 1e-4 * std::abs(mie));
    CHECK(std::abs(s.R - mie) <= 1e-3 * std::abs(mie));
  }
  CHECK_THROWS_AS(monostatic_rcs(d, 2.0, {}, o), std::invalid_argument);
}

TEST_CASE("partial-wave series: small-sphere limit") {
  // F(pi) -> -a as ka -> 0
  const cplx f = oracles::sound_soft_sphere_backscatter(1e-4, 1.0);
  CHECK(std::abs(f + 1.0) < 1e-3);
  CHECK(std::abs(oracles::sound_soft_sphere_backscatter(2.0, 1.0)) > 0.5);
}

TEST_CASE("rcs: plate mirror symmetry") {
  const SurfaceDiscretization d = make_multiscale_plate(2, 4);
  SolverOptions o;
  o.eps = 1e-8;
  const std::vector<double> angles = {0.3, -0.3, 1.1, -1.1};
  const std::vector<RcsSample> r = monostatic_rcs(d, 2.0, angles, o);
  CHECK(std::abs(r[0].R - r[1].R) <= 1e-6 * std::abs(r[0].R));
  CHECK(std::abs(r[2].R - r[3].R) <= 1e-6 * std::abs(r[2].R));
}

TEST_CASE("loglog_slope and csv") {
  CHECK(std::abs(loglog_slope({1, 2, 4, 8}, {3, 6 * std::sqrt(2.0), 24, 48 * std::sqrt(2.0)}) - 1.5) < 1e-12);
  CHECK(loglog_slope({1}, {1}) == 0.0);
  std::ostringstream os;
  ConvergenceRow row;
  row.p = 4;
  row.n = 980;
  write_rows_csv({row}, os);
  CHECK(os.str().rfind("p,npatches,n,k,t_f,t_s,t_q,m_f_bytes,n_0,eps_a\n4,0,980,", 0) == 0);
}

TEST_CASE("benchmark_sweep: rows, exponents and recorded failures") {
  SweepConfig c;
  c.geometry = GeometryKind::Sphere;
  c.p = 3;
  c.patches = {{4, 4}, {8, 8}, {0, 0}};
  c.k = 1.0;
  c.n_sources = 10;
  c.n_targets = 10;
  const SweepResult r = benchmark_sweep(c);
  for (const std::string& f : r.failures) MESSAGE(f);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.failures.size() == 1);
  CHECK(r.rows[1].n == 4 * r.rows[0].n);
}
