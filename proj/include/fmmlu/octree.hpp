#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fmmlu/types.hpp"

namespace fmmlu {

struct Box {
  int level = 0;
  std::array<int, 3> coord{0, 0, 0};  // integer position among the 2^level cells per axis
  Vec3 center = Vec3::Zero();
  double side = 0.0;
  int parent = -1;
  std::array<int, 8> children{-1, -1, -1, -1, -1, -1, -1, -1};
  int begin = 0;  // range into Octree::perm
  int end = 0;
  bool leaf = true;

  int count() const { return end - begin; }
};

/// Adaptive octree over a point set with empty children pruned.
class Octree {
 public:
  std::vector<Box> boxes;
  std::vector<int> perm;                // point indices grouped by box
  std::vector<std::vector<int>> levels;  // box ids per level, Morton order
  std::vector<int> leaf_of_point;
  int occupancy = 40;
  int max_depth = 18;

  int depth() const { return static_cast<int>(levels.size()) - 1; }
  std::span<const int> points(int b) const {
    return {perm.data() + boxes[b].begin, static_cast<size_t>(boxes[b].count())};
  }
  /// Box with exactly this level and coordinate, or -1.
  int find(int level, const std::array<int, 3>& c) const;
  /// Box of the level-`level` frontier covering the cell: the level-`level`
  /// box itself, or a coarser leaf containing the cell; -1 when empty.
  int frontier_box(int level, const std::array<int, 3>& c) const;
  /// Frontier boxes touching box b when the frontier is at b's level.
  std::vector<int> frontier_neighbors(int b) const;
  /// Same-level boxes touching b.
  std::vector<int> colleagues(int b) const;
  /// True when the closed boxes share a boundary point but no interior.
  bool touching(int a, int b) const;
  std::vector<int> leaves() const;
  /// Recomputes levels, Morton order and leaf_of_point after edits.
  void finalize();
  /// Boxes and leaves per level plus a leaf occupancy histogram, as JSON.
  std::string stats_json() const;

  void split_leaf(int b);
  void rebuild_index();

 private:
  std::unordered_map<std::uint64_t, int> index_;
  Vec3 origin_ = Vec3::Zero();  // lower corner of the root
  double root_side_ = 1.0;
  Eigen::Matrix3Xd coords_;

  friend Octree build_tree(const Eigen::Matrix3Xd&, int, int);
};

std::uint64_t morton_code(const std::array<int, 3>& c);

/// Splits boxes until every leaf has at most s points or sits at max_depth.
Octree build_tree(const Eigen::Matrix3Xd& points, int s, int max_depth = 18);

/// Subdivides leaves until touching leaves differ by at most one level.
Octree enforce_level_restriction(Octree tree);

/// Same-level box pairs (i, j), i swept before j, where the near field of
/// box i (including i) meets box j, its near field, or the boxes it sees
/// inside its 5R/2 separation sphere.
struct SchurPairList {
  std::vector<std::pair<int, int>> pairs;
  std::size_t size() const { return pairs.size(); }
};

SchurPairList build_schur_pair_list(const Octree& tree);

/// Frontier boxes at level(b) intersecting the open ball of radius
/// `radius_factor * side(b)` around b's center, excluding b.
std::vector<int> frontier_boxes_in_sphere(const Octree& tree, int b, double radius_factor);

}  // namespace fmmlu
