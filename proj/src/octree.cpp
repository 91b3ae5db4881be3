#include "fmmlu/octree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

namespace fmmlu {

namespace {

std::uint64_t box_key(int level, const std::array<int, 3>& c) {
  return (static_cast<std::uint64_t>(level) << 57) | (static_cast<std::uint64_t>(c[0]) << 38) |
         (static_cast<std::uint64_t>(c[1]) << 19) | static_cast<std::uint64_t>(c[2]);
}

bool in_range(int level, const std::array<int, 3>& c) {
  const int n = 1 << level;
  return c[0] >= 0 && c[1] >= 0 && c[2] >= 0 && c[0] < n && c[1] < n && c[2] < n;
}

}  // namespace

std::uint64_t morton_code(const std::array<int, 3>& c) {
  std::uint64_t code = 0;
  for (int bit = 0; bit < 21; ++bit)
    for (int d = 0; d < 3; ++d)
      code |= static_cast<std::uint64_t>((c[d] >> bit) & 1) << (3 * bit + (2 - d));
  return code;
}

int Octree::find(int level, const std::array<int, 3>& c) const {
  if (!in_range(level, c)) return -1;
  auto it = index_.find(box_key(level, c));
  return it == index_.end() ? -1 : it->second;
}

int Octree::frontier_box(int level, const std::array<int, 3>& c) const {
  if (!in_range(level, c)) return -1;
  for (int lev = level; lev >= 0; --lev) {
    const int sh = level - lev;
    const int id = find(lev, {c[0] >> sh, c[1] >> sh, c[2] >> sh});
    if (id < 0) continue;
    if (lev == level) return id;
    return boxes[id].leaf ? id : -1;
  }
  return -1;
}

std::vector<int> Octree::frontier_neighbors(int b) const {
  const Box& B = boxes[b];
  std::vector<int> out;
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dz = -1; dz <= 1; ++dz) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        const int id = frontier_box(B.level, {B.coord[0] + dx, B.coord[1] + dy, B.coord[2] + dz});
        if (id >= 0 && id != b) out.push_back(id);
      }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> Octree::colleagues(int b) const {
  const Box& B = boxes[b];
  std::vector<int> out;
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dz = -1; dz <= 1; ++dz) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        const int id = find(B.level, {B.coord[0] + dx, B.coord[1] + dy, B.coord[2] + dz});
        if (id >= 0) out.push_back(id);
      }
  std::sort(out.begin(), out.end());
  return out;
}

bool Octree::touching(int a, int b) const {
  const Box& A = boxes[a];
  const Box& B = boxes[b];
  const int L = std::max(A.level, B.level);
  bool overlap_all = true;
  for (int d = 0; d < 3; ++d) {
    const long long a0 = static_cast<long long>(A.coord[d]) << (L - A.level);
    const long long a1 = static_cast<long long>(A.coord[d] + 1) << (L - A.level);
    const long long b0 = static_cast<long long>(B.coord[d]) << (L - B.level);
    const long long b1 = static_cast<long long>(B.coord[d] + 1) << (L - B.level);
    if (a1 < b0 || b1 < a0) return false;
    if (!(a0 < b1 && b0 < a1)) overlap_all = false;
  }
  return !overlap_all;
}

std::vector<int> Octree::leaves() const {
  std::vector<int> out;
  for (size_t b = 0; b < boxes.size(); ++b)
    if (boxes[b].leaf) out.push_back(static_cast<int>(b));
  return out;
}

void Octree::rebuild_index() {
  index_.clear();
  index_.reserve(boxes.size() * 2);
  for (size_t b = 0; b < boxes.size(); ++b) index_[box_key(boxes[b].level, boxes[b].coord)] = static_cast<int>(b);
}

void Octree::split_leaf(int b) {
  const Box B = boxes[b];
  std::array<std::vector<int>, 8> groups;
  for (int e = B.begin; e < B.end; ++e) {
    const int i = perm[e];
    const int oct = (coords_(0, i) >= B.center[0] ? 1 : 0) | (coords_(1, i) >= B.center[1] ? 2 : 0) |
                    (coords_(2, i) >= B.center[2] ? 4 : 0);
    groups[oct].push_back(i);
  }
  int pos = B.begin;
  for (int oct = 0; oct < 8; ++oct) {
    if (groups[oct].empty()) continue;
    Box c;
    c.level = B.level + 1;
    c.coord = {2 * B.coord[0] + (oct & 1), 2 * B.coord[1] + ((oct >> 1) & 1),
               2 * B.coord[2] + ((oct >> 2) & 1)};
    c.side = 0.5 * B.side;
    for (int d = 0; d < 3; ++d) c.center[d] = origin_[d] + (c.coord[d] + 0.5) * c.side;
    c.parent = b;
    c.begin = pos;
    for (int i : groups[oct]) perm[pos++] = i;
    c.end = pos;
    const int id = static_cast<int>(boxes.size());
    boxes[b].children[oct] = id;
    index_[box_key(c.level, c.coord)] = id;
    boxes.push_back(c);
  }
  boxes[b].leaf = false;
}

void Octree::finalize() {
  int maxl = 0;
  for (const Box& B : boxes) maxl = std::max(maxl, B.level);
  levels.assign(maxl + 1, {});
  for (size_t b = 0; b < boxes.size(); ++b) levels[boxes[b].level].push_back(static_cast<int>(b));
  for (auto& lv : levels)
    std::sort(lv.begin(), lv.end(), [&](int a, int b) {
      return morton_code(boxes[a].coord) < morton_code(boxes[b].coord);
    });
  leaf_of_point.assign(perm.size(), -1);
  for (size_t b = 0; b < boxes.size(); ++b)
    if (boxes[b].leaf)
      for (int e = boxes[b].begin; e < boxes[b].end; ++e) leaf_of_point[perm[e]] = static_cast<int>(b);
}

std::string Octree::stats_json() const {
  nlohmann::json j;
  j["num_points"] = perm.size();
  j["num_boxes"] = boxes.size();
  j["occupancy"] = occupancy;
  j["depth"] = depth();
  std::vector<int> per_level(levels.size(), 0), leaves_per_level(levels.size(), 0);
  std::map<int, int> hist;
  for (const Box& B : boxes) {
    ++per_level[B.level];
    if (B.leaf) {
      ++leaves_per_level[B.level];
      ++hist[B.count()];
    }
  }
  j["boxes_per_level"] = per_level;
  j["leaves_per_level"] = leaves_per_level;
  nlohmann::json h = nlohmann::json::object();
  for (auto [c, m] : hist) h[std::to_string(c)] = m;
  j["leaf_occupancy_histogram"] = h;
  return j.dump(2);
}

Octree build_tree(const Eigen::Matrix3Xd& points, int s, int max_depth) {
  if (points.cols() == 0) throw std::invalid_argument("build_tree: no points");
  if (s < 1) throw std::invalid_argument("build_tree: occupancy must be positive");
  if (max_depth > 19) throw std::invalid_argument("build_tree: max_depth above 19");
  Octree t;
  t.occupancy = s;
  t.max_depth = max_depth;
  t.coords_ = points;
  const Vec3 lo = points.rowwise().minCoeff();
  const Vec3 hi = points.rowwise().maxCoeff();
  double side = (hi - lo).maxCoeff();
  if (!(side > 0.0)) side = 1.0;
  side *= 1.0 + 1e-9;
  t.root_side_ = side;
  t.origin_ = 0.5 * (lo + hi) - Vec3::Constant(0.5 * side);
  const int n = static_cast<int>(points.cols());
  t.perm.resize(n);
  for (int i = 0; i < n; ++i) t.perm[i] = i;
  Box root;
  root.side = side;
  root.center = 0.5 * (lo + hi);
  root.begin = 0;
  root.end = n;
  t.boxes.push_back(root);
  t.rebuild_index();
  for (size_t b = 0; b < t.boxes.size(); ++b) {
    const Box& B = t.boxes[b];
    if (B.count() <= s) continue;
    if (B.level >= max_depth) {
      // Refinement can only stall here if more than s points coincide.
      std::vector<std::array<double, 3>> pts;
      for (int e = B.begin; e < B.end; ++e) {
        const int i = t.perm[e];
        pts.push_back({points(0, i), points(1, i), points(2, i)});
      }
      std::sort(pts.begin(), pts.end());
      int run = 1;
      for (size_t a = 1; a < pts.size(); ++a) {
        run = (pts[a] == pts[a - 1]) ? run + 1 : 1;
        if (run > s) throw DepthExceeded("build_tree: more than s coincident points");
      }
      continue;
    }
    t.split_leaf(static_cast<int>(b));
  }
  t.finalize();
  return t;
}

Octree enforce_level_restriction(Octree t) {
  for (;;) {
    std::set<int> to_split;
    for (size_t b = 0; b < t.boxes.size(); ++b) {
      const Box& L = t.boxes[b];
      if (!L.leaf || L.level < 2) continue;
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            if (dx == 0 && dy == 0 && dz == 0) continue;
            const std::array<int, 3> c = {L.coord[0] + dx, L.coord[1] + dy, L.coord[2] + dz};
            const int id = t.frontier_box(L.level, c);
            if (id >= 0 && t.boxes[id].level < L.level - 1) to_split.insert(id);
          }
    }
    if (to_split.empty()) break;
    for (int b : to_split) t.split_leaf(b);
  }
  t.finalize();
  return t;
}

std::vector<int> frontier_boxes_in_sphere(const Octree& tree, int b, double radius_factor) {
  const Box& B = tree.boxes[b];
  const double rad = radius_factor * B.side;
  const int reach = static_cast<int>(std::ceil(radius_factor + 0.5));
  std::vector<int> out;
  for (int dx = -reach; dx <= reach; ++dx)
    for (int dy = -reach; dy <= reach; ++dy)
      for (int dz = -reach; dz <= reach; ++dz) {
        const int id = tree.frontier_box(B.level, {B.coord[0] + dx, B.coord[1] + dy, B.coord[2] + dz});
        if (id < 0 || id == b) continue;
        const Box& C = tree.boxes[id];
        // distance from B's center to the closed box C
        double d2 = 0.0;
        for (int d = 0; d < 3; ++d) {
          const double lo = C.center[d] - 0.5 * C.side, hi = C.center[d] + 0.5 * C.side;
          const double x = B.center[d];
          const double e = x < lo ? lo - x : (x > hi ? x - hi : 0.0);
          d2 += e * e;
        }
        if (std::sqrt(d2) < rad * (1.0 - 1e-12)) out.push_back(id);
      }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SchurPairList build_schur_pair_list(const Octree& tree) {
  SchurPairList list;
  for (int l = tree.depth(); l >= 1; --l) {
    const auto& lv = tree.levels[l];
    std::unordered_map<int, int> order;
    for (size_t a = 0; a < lv.size(); ++a) order[lv[a]] = static_cast<int>(a);
    for (int j : lv) {
      // Everything box j reads: j, its near field and its sphere boxes.
      std::vector<int> reads = tree.frontier_neighbors(j);
      const std::vector<int> sph = frontier_boxes_in_sphere(tree, j, 2.5);
      reads.insert(reads.end(), sph.begin(), sph.end());
      reads.push_back(j);
      std::set<int> cands;
      for (int r : reads) {
        // Boxes i with r in {i} U N(i); for same-level r those are r and its
        // colleagues, for a coarse leaf r the level-l boxes touching it.
        if (tree.boxes[r].level == l) {
          cands.insert(r);
          for (int c : tree.colleagues(r)) cands.insert(c);
        } else {
          const Box& R = tree.boxes[r];
          const int sh = l - R.level;
          std::array<int, 3> lo, hi;
          for (int d = 0; d < 3; ++d) {
            lo[d] = (R.coord[d] << sh) - 1;
            hi[d] = ((R.coord[d] + 1) << sh);
          }
          for (int x = lo[0]; x <= hi[0]; ++x)
            for (int y = lo[1]; y <= hi[1]; ++y)
              for (int z = lo[2]; z <= hi[2]; ++z) {
                const bool inner = x > lo[0] && x < hi[0] && y > lo[1] && y < hi[1] && z > lo[2] && z < hi[2];
                if (inner) continue;
                const int c = tree.find(l, {x, y, z});
                if (c >= 0) cands.insert(c);
              }
        }
      }
      for (int i : cands) {
        auto it = order.find(i);
        if (it != order.end() && it->second < order[j]) list.pairs.emplace_back(i, j);
      }
    }
  }
  return list;
}

}  // namespace fmmlu
