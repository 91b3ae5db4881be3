#pragma once

#include <string>
#include <vector>

#include "fmmlu/skeletonization.hpp"

namespace fmmlu {

struct LevelStats {
  int level = 0;
  int boxes = 0;               // boxes with a nonempty far field
  std::size_t active_in = 0;   // sum of |B| before compression
  std::size_t skeleton_out = 0;  // sum of |S|
  int max_rank = 0;
  int max_proxy_points = 0;
  int max_q = 0;
  std::size_t factor_bytes = 0;  // L, U, T and pivot blocks stored at this level
  std::size_t update_bytes = 0;  // update store after the level
  std::size_t max_near = 0;      // largest |N|
};

struct FactorStats {
  int n = 0;
  int n0 = 0;  // size of the root block
  int stop_level = 0;
  double eps = 0.0;
  double t_factor = 0.0;  // seconds
  std::size_t bytes = 0;
  std::size_t peak_update_bytes = 0;
  int ill_conditioned = 0;
  std::vector<LevelStats> levels;
  PurityAudit audit;

  std::string to_json() const;
};

/// A ~= (V_1 ... V_M) D (W_M ... W_1) with D block diagonal over the
/// eliminated sets R_i and the root set.
class FmmLuFactorization {
 public:
  int size() const { return n_; }
  VectorXc apply(const VectorXc& x) const;
  VectorXc apply_adjoint(const VectorXc& x) const;
  VectorXc solve(const VectorXc& b) const;
  std::size_t bytes() const;
  const FactorStats& stats() const { return stats_; }

  const std::vector<SkeletonFactor>& factors() const { return factors_; }
  const std::vector<int>& root() const { return root_; }

  friend FmmLuFactorization factorize(const EntryOracle&, const Octree&, const FactorOptions&);

 private:
  void check(const VectorXc& x) const;

  int n_ = 0;
  std::vector<SkeletonFactor> factors_;
  std::vector<int> root_;
  PivotLU<cplx> root_lu_;
  FactorStats stats_;
};

FmmLuFactorization factorize(const EntryOracle& oracle, const Octree& tree, const FactorOptions& opts);

}  // namespace fmmlu
