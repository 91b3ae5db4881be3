#pragma once

#include <cstddef>
#include <span>
#include <unordered_map>
#include <vector>

#include "fmmlu/geometry.hpp"
#include "fmmlu/kernels.hpp"
#include "fmmlu/types.hpp"

namespace fmmlu {

struct NearRule {
  double eta = 1.25;     // near radius as a multiple of the patch diameter
  double eps_q = 5e-8;   // adaptive integration tolerance
  int max_depth = 20;    // maximum dyadic subdivision depth
  int cell_order = 0;    // Gauss-Legendre points per cell direction; 0 means order + 4
};

/// Patches whose near region contains a point, found through a uniform grid.
class PatchLocator {
 public:
  PatchLocator(const SurfaceDiscretization& disc, double eta);
  /// Patches j with |x - center_j| <= eta * R_j, sorted.
  std::vector<int> query(const Vec3& x) const;

 private:
  const SurfaceDiscretization* disc_;
  double eta_;
  double cell_;
  std::unordered_map<long long, std::vector<int>> grid_;
  long long key(long long a, long long b, long long c) const;
};

/// near_region as a set of patch indices, by direct scan.
std::vector<int> near_region(const SurfaceDiscretization& disc, int i, double eta);

/// Integrals c_l = int_patch K(x, y) L_l(y) da(y) of the kernel against the
/// Lagrange basis of the patch nodes, by adaptive subdivision. When
/// `self_param` is given, x is the image of that parameter point and the
/// patch is split there and each part integrated in Duffy coordinates.
/// Writes order^2 values to `out` and returns the largest unresolved
/// difference between levels (0 when converged).
double integrate_patch(const Patch& patch, int order, KernelKind kind, cplx k, const Vec3& x,
                       const Vec3& nx, const Eigen::Vector2d* self_param, double tol,
                       int max_depth, int cell_order, cplx* out);

/// Corrected weight rows for all (target, near patch) pairs.
///
/// Rows are stored per target in compressed form: the near patches of
/// target i are patch_[row_[i] .. row_[i+1]) and the values of entry e start
/// at offset_[e]. Values already include the kernel, so a corrected matrix
/// entry is c / w_j in unscaled form.
class NearCorrectionTable {
 public:
  NearCorrectionTable() = default;

  int size() const { return static_cast<int>(row_.empty() ? 0 : row_.size() - 1); }
  std::span<const int> near_patches(int i) const {
    return {patch_.data() + row_[i], static_cast<size_t>(row_[i + 1] - row_[i])};
  }
  /// Targets that list patch j as near.
  std::span<const int> targets_of_patch(int j) const {
    return {rev_targets_.data() + rev_row_[j], static_cast<size_t>(rev_row_[j + 1] - rev_row_[j])};
  }
  /// Corrected values of patch j for target i, or nullptr when j is not near i.
  const cplx* find(int i, int j) const {
    for (int e = row_[i]; e < row_[i + 1]; ++e)
      if (patch_[e] == j) return values_.data() + offset_[e];
    return nullptr;
  }
  std::size_t num_pairs() const { return patch_.size(); }
  std::size_t bytes() const;

  NearRule rule;
  KernelKind kind = KernelKind::CombinedField;
  cplx k = 0.0;

  friend NearCorrectionTable build_near_table(const SurfaceDiscretization&, KernelKind, cplx,
                                              const NearRule&);

 private:
  std::vector<int> row_;
  std::vector<int> patch_;
  std::vector<std::size_t> offset_;
  std::vector<cplx> values_;
  std::vector<int> rev_row_;
  std::vector<int> rev_targets_;
};

NearCorrectionTable build_near_table(const SurfaceDiscretization& disc, KernelKind kind, cplx k,
                                     const NearRule& rule);

/// Entries of the sqrt(w)-scaled Nystrom matrix alpha I + W^{1/2} K W^{1/2}.
///
/// Holds references to the discretization and table, which must outlive it.
class EntryOracle {
 public:
  EntryOracle(const SurfaceDiscretization& disc, KernelKind kind, cplx k, cplx alpha,
              const NearCorrectionTable* table);

  int size() const { return disc_->size(); }
  cplx entry(int i, int j) const;
  /// sqrt(w_i) K(x_i, x_j) sqrt(w_j) without corrections; i != j.
  cplx pure(int i, int j) const;
  bool corrected(int i, int j) const;
  MatrixXc block(std::span<const int> rows, std::span<const int> cols) const;
  MatrixXc dense() const;

  const SurfaceDiscretization& disc() const { return *disc_; }
  const NearCorrectionTable* table() const { return table_; }
  KernelKind kind() const { return kind_; }
  cplx wavenumber() const { return k_; }
  cplx alpha() const { return alpha_; }
  const Eigen::VectorXd& sqrt_weights() const { return sqrtw_; }

 private:
  const SurfaceDiscretization* disc_;
  KernelKind kind_;
  cplx k_;
  cplx alpha_;
  const NearCorrectionTable* table_;
  Eigen::VectorXd sqrtw_;
};

}  // namespace fmmlu
