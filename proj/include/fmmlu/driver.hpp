#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "fmmlu/factorization.hpp"
#include "fmmlu/geometry.hpp"
#include "fmmlu/kernels.hpp"
#include "fmmlu/octree.hpp"
#include "fmmlu/quadrature.hpp"

namespace fmmlu {

struct SolverOptions {
  double eps = 1e-6;
  double eps_q = 0.0;  // 0 selects eps / 10
  double eta = 1.25;
  int occupancy = 40;
  int max_depth = 18;
  double proxy_rho = 1.5;
  int proxy_p_min = 8;
  bool separate_t = false;
  Compression compression = Compression::Proxy;
  bool audit_purity = false;

  double quad_tol() const { return eps_q > 0.0 ? eps_q : 0.1 * eps; }
  FactorOptions factor_options() const;
  NearRule near_rule() const;
};

/// Combined-field system (alpha = 1/2) on a discretization together with its
/// factorization. The discretization must outlive the solver.
class DirichletSolver {
 public:
  DirichletSolver(const SurfaceDiscretization& disc, cplx k, const SolverOptions& opts);

  /// Density sigma~ for Dirichlet data f given at the nodes (unscaled).
  VectorXc solve(const VectorXc& f) const;

  const SurfaceDiscretization& disc() const { return *disc_; }
  cplx wavenumber() const { return k_; }
  const EntryOracle& oracle() const { return *oracle_; }
  const NearCorrectionTable& table() const { return table_; }
  const Octree& tree() const { return tree_; }
  const FmmLuFactorization& factorization() const { return fact_; }
  const SolverOptions& options() const { return opts_; }
  double t_quadrature() const { return t_q_; }
  double t_factor() const { return t_f_; }
  double t_tree() const { return t_tree_; }

 private:
  const SurfaceDiscretization* disc_;
  cplx k_;
  SolverOptions opts_;
  NearCorrectionTable table_;
  std::unique_ptr<EntryOracle> oracle_;
  Octree tree_;
  FmmLuFactorization fact_;
  double t_q_ = 0.0, t_f_ = 0.0, t_tree_ = 0.0;
};

/// Torus: nu x nv patches. Sphere: unit radius, nu x nu patches per face.
/// Plate: refine depth nu.
SurfaceDiscretization make_geometry(GeometryKind kind, int nu, int nv, int p);

enum class BoundaryData { PointSources, PlaneWave };

struct BvpProblem {
  const SurfaceDiscretization* disc = nullptr;
  GeometryKind geometry = GeometryKind::Torus;
  cplx k = 0.97;
  BoundaryData data = BoundaryData::PointSources;
  std::vector<PointSource> sources;  // for PointSources
  Vec3 direction = Vec3(1, 0, 0);    // for PlaneWave
  SolverOptions opts;
};

/// Dirichlet data at the nodes: the source field, or -e^{ik x.d}.
VectorXc boundary_data(const BvpProblem& problem);

struct DirichletSolution {
  VectorXc sigma;  // sqrt(w)-scaled density
  std::shared_ptr<DirichletSolver> solver;
  double t_solve = 0.0;
};

DirichletSolution solve_dirichlet(const BvpProblem& problem);

/// u(t) = sum_j K(t, x_j) sigma~_j sqrt(w_j) with the combined-field kernel.
/// Throws TargetTooClose for targets inside any patch's near region.
VectorXc eval_exterior(const SurfaceDiscretization& disc, cplx k, const VectorXc& sigma,
                       const Eigen::Matrix3Xd& targets, double eta = 1.25);

/// Interior sources for validation: `count` random points on the
/// half-scaled surface with complex Gaussian strengths.
std::vector<PointSource> validation_sources(GeometryKind geometry, const SurfaceDiscretization& disc,
                                           int count, unsigned seed);

/// Points uniformly distributed on a sphere of the given radius.
Eigen::Matrix3Xd sphere_targets(int count, double radius, unsigned seed);

struct ConvergenceRow {
  int p = 0;
  int npatches = 0;
  int n = 0;
  double k = 0.0;
  double t_f = 0.0, t_s = 0.0, t_q = 0.0;
  std::size_t m_f = 0;
  int n0 = 0;
  double eps_a = 0.0;
};

struct ValidationReport {
  double eps_a = 0.0;
  Eigen::Matrix3Xd targets;
  VectorXc u_computed;
  VectorXc u_exact;
  Eigen::VectorXd target_errors;
  double sigma_norm = 0.0;
  FactorStats stats;
  ConvergenceRow row;
};

/// Solves with point-source data and compares the exterior field at targets
/// on a sphere of twice the circumscribed radius.
ValidationReport validate_point_sources(const BvpProblem& problem, int n_targets, unsigned seed);

struct RcsSample {
  double phi = 0.0;
  cplx R = 0.0;
};

/// Monostatic cross section for d = (cos phi, sin phi, 0), one factorization.
std::vector<RcsSample> monostatic_rcs(const SurfaceDiscretization& disc, cplx k,
                                      const std::vector<double>& angles, const SolverOptions& opts,
                                      FactorStats* stats = nullptr);

/// Backscatter amplitude (-ik/4pi) sum_i e^{ik x_i.d} (1 - n_i.d) sigma~_i sqrt(w_i).
cplx rcs_amplitude(const SurfaceDiscretization& disc, cplx k, const VectorXc& sigma, const Vec3& d);

struct SweepConfig {
  GeometryKind geometry = GeometryKind::Torus;
  int p = 4;
  std::vector<std::pair<int, int>> patches;  // (nu, nv) per row
  double k = 0.97;
  bool ppw_mode = false;  // scale k with sqrt(npatches) relative to the first row
  SolverOptions opts;
  int n_sources = 50;
  int n_targets = 50;
  unsigned seed = 1;
};

struct SweepResult {
  std::vector<ConvergenceRow> rows;
  std::vector<std::string> failures;
  double exp_t_f = 0.0, exp_t_s = 0.0, exp_t_q = 0.0, exp_m_f = 0.0, exp_n0 = 0.0;
};

SweepResult benchmark_sweep(const SweepConfig& config);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

void write_rows_csv(const std::vector<ConvergenceRow>& rows, std::ostream& out);

}  // namespace fmmlu
