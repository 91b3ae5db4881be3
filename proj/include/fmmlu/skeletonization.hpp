#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "fmmlu/hlinalg.hpp"
#include "fmmlu/octree.hpp"
#include "fmmlu/proxy.hpp"
#include "fmmlu/quadrature.hpp"
#include "fmmlu/types.hpp"

namespace fmmlu {

enum class Compression { Proxy, DenseFar };

struct FactorOptions {
  double eps = 1e-6;
  double proxy_rho = 1.5;
  int proxy_p_min = 8;
  Compression compression = Compression::Proxy;
  bool separate_t = false;    // independent incoming and outgoing interpolation matrices
  bool audit_purity = false;  // exhaustive O(n^2) check of every far partition
  int min_level = 2;          // coarsest level that is skeletonized
};

/// Dense Schur-complement updates keyed by pairs of frontier boxes. Block
/// (a, b) has one row per active index of a and one column per active index
/// of b, in active-list order.
class BlockUpdateStore {
 public:
  explicit BlockUpdateStore(int num_boxes = 0) : partners_(num_boxes) {}

  MatrixXc* find(int a, int b);
  const MatrixXc* find(int a, int b) const;
  /// Existing block, or a new zero block of the given shape.
  MatrixXc& get(int a, int b, Eigen::Index rows, Eigen::Index cols);
  /// Boxes c with a block (a, c) or (c, a), excluding a itself.
  const std::vector<int>& partners(int a) const { return partners_[a]; }
  std::size_t num_blocks() const { return blocks_.size(); }
  std::size_t bytes() const { return bytes_; }

  /// Keeps rows/columns `keep` of every block touching box a.
  void restrict_box(int a, const std::vector<int>& keep);
  /// Re-keys every block through `parent` (a box maps to itself when
  /// parent[a] < 0), placing box a's rows at offset[a] within the new key.
  void remap(const std::vector<int>& parent, const std::vector<int>& offset,
             const std::vector<int>& new_size);

  template <class F>
  void for_each(F&& f) const {
    for (const auto& [key, m] : blocks_) f(static_cast<int>(key >> 32), static_cast<int>(key & 0xffffffffu), m);
  }

 private:
  static std::uint64_t key(int a, int b) {
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  }
  void link(int a, int b);
  std::unordered_map<std::uint64_t, MatrixXc> blocks_;
  std::vector<std::vector<int>> partners_;
  std::size_t bytes_ = 0;
};

/// Active indices around a box split into near field N and the non-pure
/// part Q of the far field; the pure remainder P is only counted.
struct FarPartition {
  int box = -1;
  std::vector<int> near_boxes;
  std::vector<int> q_boxes;
  std::vector<int> B, N, Q;
  std::size_t p_count = 0;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;  // separation sphere radius 5R/2
};

/// Record of one box elimination. J denotes S followed by N.
struct SkeletonFactor {
  int box = -1;
  int level = 0;
  std::vector<int> S, R, N;
  MatrixXc T;     // |S| x |R|; used for both sides unless T_in is set
  MatrixXc T_in;  // |S| x |R|, separate incoming interpolation (optional)
  MatrixXc L;     // X_JR X_RR^{-1}
  MatrixXc U;     // X_RR^{-1} X_RJ
  PivotLU<cplx> lu;  // factors of X_RR

  const MatrixXc& t_in() const { return T_in.size() ? T_in : T; }
  const MatrixXc& t_out() const { return T; }
  std::size_t bytes() const;
};

struct PurityAudit {
  std::size_t boxes_checked = 0;
  std::size_t entries_checked = 0;
  std::size_t violations = 0;         // A_PB or A_BP entry differs from the pure kernel value
  std::size_t geometry_violations = 0;  // P index in a box not fully outside the sphere
  std::size_t cover_violations = 0;     // B, N, Q, P not a disjoint cover of the actives
};

/// Mutable state of the fine-to-coarse sweep: active indices per frontier
/// box plus the update store. Current entries are oracle values plus
/// stored updates.
class SkeletonizationState {
 public:
  SkeletonizationState(const EntryOracle& oracle, const Octree& tree);

  /// Moves the frontier up to `level`; children actives merge into parents.
  void set_level(int level);
  int level() const { return level_; }
  const std::vector<int>& active(int box) const { return active_[box]; }
  int owner(int i) const { return owner_[i]; }
  std::size_t total_active() const { return total_active_; }
  std::vector<int> active_indices() const;

  cplx entry(int i, int j) const;
  MatrixXc block(std::span<const int> rows, std::span<const int> cols) const;

  FarPartition partition_far_field(int box) const;
  /// All active indices outside B and N.
  std::vector<int> far_indices(const FarPartition& part) const;
  /// Checks P-purity, geometry and cover of a partition exhaustively.
  void audit(const FarPartition& part, PurityAudit& report) const;

  /// Compresses and eliminates the redundant indices of a box. `proxy` may
  /// be null when the partition has no P indices or dense-far compression
  /// is used.
  SkeletonFactor skeletonize_box(int box, const FarPartition& part, const ProxySurface* proxy,
                                 const FactorOptions& opts);

  const BlockUpdateStore& updates() const { return store_; }
  const EntryOracle& oracle() const { return *oracle_; }
  const Octree& tree() const { return *tree_; }

 private:
  MatrixXc compression_matrix(const FarPartition& part, const ProxySurface* proxy,
                              const FactorOptions& opts, MatrixXc* incoming, MatrixXc* outgoing) const;
  void add_updates(const MatrixXc& Xjr, const MatrixXc& U, const std::vector<int>& boxes,
                   const std::vector<int>& sizes);

  const EntryOracle* oracle_;
  const Octree* tree_;
  int level_;
  std::vector<std::vector<int>> active_;
  std::vector<int> owner_;
  std::vector<int> loc_;
  std::size_t total_active_;
  BlockUpdateStore store_;
};

}  // namespace fmmlu
