#include "fmmlu/driver.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

namespace fmmlu {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

constexpr cplx kI(0.0, 1.0);

}  // namespace

FactorOptions SolverOptions::factor_options() const {
  FactorOptions f;
  f.eps = eps;
  f.proxy_rho = proxy_rho;
  f.proxy_p_min = proxy_p_min;
  f.compression = compression;
  f.separate_t = separate_t;
  f.audit_purity = audit_purity;
  return f;
}

NearRule SolverOptions::near_rule() const {
  NearRule r;
  r.eta = eta;
  r.eps_q = quad_tol();
  return r;
}

SurfaceDiscretization make_geometry(GeometryKind kind, int nu, int nv, int p) {
  switch (kind) {
    case GeometryKind::Torus:
      return make_wiggly_torus(nu, nv, p);
    case GeometryKind::Sphere:
      return make_sphere(1.0, nu, p);
    case GeometryKind::Plate:
      return make_multiscale_plate(nu, p);
  }
  throw std::invalid_argument("make_geometry: unknown geometry");
}

DirichletSolver::DirichletSolver(const SurfaceDiscretization& disc, cplx k, const SolverOptions& opts)
    : disc_(&disc), k_(k), opts_(opts) {
  auto t0 = std::chrono::steady_clock::now();
  table_ = build_near_table(disc, KernelKind::CombinedField, k, opts.near_rule());
  t_q_ = seconds_since(t0);
  oracle_ = std::make_unique<EntryOracle>(disc, KernelKind::CombinedField, k, cplx(0.5), &table_);
  t0 = std::chrono::steady_clock::now();
  tree_ = enforce_level_restriction(build_tree(disc.nodes, opts.occupancy, opts.max_depth));
  t_tree_ = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  fact_ = factorize(*oracle_, tree_, opts.factor_options());
  t_f_ = seconds_since(t0) + t_tree_;
}

VectorXc DirichletSolver::solve(const VectorXc& f) const {
  if (f.size() != disc_->size()) throw DimensionMismatch("boundary data length differs from n");
  const VectorXc rhs = f.cwiseProduct(oracle_->sqrt_weights().cast<cplx>());
  return fact_.solve(rhs);
}

VectorXc boundary_data(const BvpProblem& problem) {
  const SurfaceDiscretization& disc = *problem.disc;
  if (problem.data == BoundaryData::PointSources)
    return incident_point_sources(problem.k, problem.sources, disc.nodes);
  return -incident_plane_wave(problem.k, problem.direction, disc.nodes);
}

DirichletSolution solve_dirichlet(const BvpProblem& problem) {
  DirichletSolution sol;
  sol.solver = std::make_shared<DirichletSolver>(*problem.disc, problem.k, problem.opts);
  const VectorXc f = boundary_data(problem);
  const auto t0 = std::chrono::steady_clock::now();
  sol.sigma = sol.solver->solve(f);
  sol.t_solve = seconds_since(t0);
  return sol;
}

VectorXc eval_exterior(const SurfaceDiscretization& disc, cplx k, const VectorXc& sigma,
                       const Eigen::Matrix3Xd& targets, double eta) {
  if (sigma.size() != disc.size()) throw DimensionMismatch("density length differs from n");
  PatchLocator loc(disc, eta);
  for (Eigen::Index t = 0; t < targets.cols(); ++t) {
    const std::vector<int> near = loc.query(targets.col(t));
    if (!near.empty()) throw TargetTooClose(static_cast<int>(t), near.front());
  }
  const VectorXc q = sigma.cwiseProduct(disc.weights.cwiseSqrt().cast<cplx>());
  VectorXc u(targets.cols());
  for (Eigen::Index t = 0; t < targets.cols(); ++t) {
    const Vec3 x = targets.col(t);
    cplx acc = 0.0;
    for (int j = 0; j < disc.size(); ++j) {
      const Vec3 d = x - disc.nodes.col(j);
      acc += eval_kernel_d(KernelKind::CombinedField, k, d, d.norm(), Vec3::Zero(), disc.normals.col(j)) * q[j];
    }
    u[t] = acc;
  }
  return u;
}

std::vector<PointSource> validation_sources(GeometryKind geometry, const SurfaceDiscretization& disc,
                                           int count, unsigned seed) {
  const Eigen::Matrix3Xd pos = interior_points(geometry, disc, count, 0.5, seed);
  std::mt19937_64 rng(seed + 7919);
  std::normal_distribution<double> nd;
  std::vector<PointSource> src(count);
  for (int i = 0; i < count; ++i) src[i] = {pos.col(i), cplx(nd(rng), nd(rng))};
  return src;
}

Eigen::Matrix3Xd sphere_targets(int count, double radius, unsigned seed) {
  std::mt19937_64 rng(seed + 104729);
  std::normal_distribution<double> nd;
  Eigen::Matrix3Xd t(3, count);
  for (int i = 0; i < count; ++i) {
    Vec3 v(nd(rng), nd(rng), nd(rng));
    t.col(i) = radius * v.normalized();
  }
  return t;
}

ValidationReport validate_point_sources(const BvpProblem& problem, int n_targets, unsigned seed) {
  if (problem.data != BoundaryData::PointSources)
    throw std::invalid_argument("validate_point_sources: problem must use point-source data");
  const SurfaceDiscretization& disc = *problem.disc;
  DirichletSolution sol = solve_dirichlet(problem);
  ValidationReport rep;
  rep.targets = sphere_targets(n_targets, 2.0 * disc.circumscribed_radius(), seed);
  rep.u_computed = eval_exterior(disc, problem.k, sol.sigma, rep.targets, problem.opts.eta);
  rep.u_exact = incident_point_sources(problem.k, problem.sources, rep.targets);
  rep.target_errors = (rep.u_computed - rep.u_exact).cwiseAbs();
  rep.sigma_norm = sol.sigma.norm();
  rep.eps_a = rep.target_errors.norm() / rep.sigma_norm;
  const DirichletSolver& s = *sol.solver;
  rep.stats = s.factorization().stats();
  rep.row.p = disc.order;
  rep.row.npatches = disc.num_patches();
  rep.row.n = disc.size();
  rep.row.k = std::real(problem.k);
  rep.row.t_f = s.t_factor();
  rep.row.t_s = sol.t_solve;
  rep.row.t_q = s.t_quadrature();
  rep.row.m_f = s.factorization().bytes();
  rep.row.n0 = s.factorization().stats().n0;
  rep.row.eps_a = rep.eps_a;
  return rep;
}

cplx rcs_amplitude(const SurfaceDiscretization& disc, cplx k, const VectorXc& sigma, const Vec3& d) {
  cplx acc = 0.0;
  for (int i = 0; i < disc.size(); ++i) {
    const Vec3 x = disc.nodes.col(i);
    acc += std::exp(kI * k * x.dot(d)) * (1.0 - disc.normals.col(i).dot(d)) * sigma[i] *
           std::sqrt(disc.weights[i]);
  }
  return -kI * k / (4.0 * std::numbers::pi) * acc;
}

std::vector<RcsSample> monostatic_rcs(const SurfaceDiscretization& disc, cplx k,
                                      const std::vector<double>& angles, const SolverOptions& opts,
                                      FactorStats* stats) {
  if (angles.empty()) throw std::invalid_argument("monostatic_rcs: no angles");
  DirichletSolver solver(disc, k, opts);
  if (stats) *stats = solver.factorization().stats();
  std::vector<RcsSample> out;
  for (double phi : angles) {
    const Vec3 d(std::cos(phi), std::sin(phi), 0.0);
    const VectorXc f = -incident_plane_wave(k, d, disc.nodes);
    const VectorXc sigma = solver.solve(f);
    out.push_back({phi, rcs_amplitude(disc, k, sigma, d)});
  }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (size_t i = 0; i < x.size() && i < y.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  const size_t m = lx.size();
  if (m < 2) return 0.0;
  double mx = 0, my = 0;
  for (size_t i = 0; i < m; ++i) mx += lx[i], my += ly[i];
  mx /= m;
  my /= m;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < m; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

SweepResult benchmark_sweep(const SweepConfig& config) {
  SweepResult res;
  int np0 = 0;
  for (const auto& [nu, nv] : config.patches) {
    try {
      const SurfaceDiscretization disc = make_geometry(config.geometry, nu, nv, config.p);
      if (np0 == 0) np0 = disc.num_patches();
      double k = config.k;
      if (config.ppw_mode) k *= std::sqrt(double(disc.num_patches()) / double(np0));
      BvpProblem prob;
      prob.disc = &disc;
      prob.geometry = config.geometry;
      prob.k = k;
      prob.data = BoundaryData::PointSources;
      prob.sources = validation_sources(config.geometry, disc, config.n_sources, config.seed);
      prob.opts = config.opts;
      res.rows.push_back(validate_point_sources(prob, config.n_targets, config.seed).row);
    } catch (const std::exception& e) {
      res.failures.push_back(std::to_string(nu) + "x" + std::to_string(nv) + ": " + e.what());
    }
  }
  std::vector<double> n, tf, ts, tq, mf, n0;
  for (const ConvergenceRow& r : res.rows) {
    n.push_back(r.n);
    tf.push_back(r.t_f);
    ts.push_back(r.t_s);
    tq.push_back(r.t_q);
    mf.push_back(double(r.m_f));
    n0.push_back(r.n0);
  }
  res.exp_t_f = loglog_slope(n, tf);
  res.exp_t_s = loglog_slope(n, ts);
  res.exp_t_q = loglog_slope(n, tq);
  res.exp_m_f = loglog_slope(n, mf);
  res.exp_n0 = loglog_slope(n, n0);
  return res;
}

void write_rows_csv(const std::vector<ConvergenceRow>& rows, std::ostream& out) {
  out << "p,npatches,n,k,t_f,t_s,t_q,m_f_bytes,n_0,eps_a\n";
  for (const ConvergenceRow& r : rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.6g,%.3f,%.4f,%.3f,%zu,%d,%.3e\n", r.p, r.npatches, r.n, r.k,
                  r.t_f, r.t_s, r.t_q, r.m_f, r.n0, r.eps_a);
    out << buf;
  }
}

}  // namespace fmmlu
