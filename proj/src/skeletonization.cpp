#include "fmmlu/skeletonization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fmmlu {

// ---------------------------------------------------------------------------
// BlockUpdateStore

MatrixXc* BlockUpdateStore::find(int a, int b) {
  auto it = blocks_.find(key(a, b));
  return it == blocks_.end() ? nullptr : &it->second;
}

const MatrixXc* BlockUpdateStore::find(int a, int b) const {
  auto it = blocks_.find(key(a, b));
  return it == blocks_.end() ? nullptr : &it->second;
}

void BlockUpdateStore::link(int a, int b) {
  if (a == b) return;
  auto add = [this](int x, int y) {
    auto& v = partners_[x];
    if (std::find(v.begin(), v.end(), y) == v.end()) v.push_back(y);
  };
  add(a, b);
  add(b, a);
}

MatrixXc& BlockUpdateStore::get(int a, int b, Eigen::Index rows, Eigen::Index cols) {
  auto [it, inserted] = blocks_.try_emplace(key(a, b));
  if (inserted) {
    it->second = MatrixXc::Zero(rows, cols);
    bytes_ += static_cast<std::size_t>(rows * cols) * sizeof(cplx);
    link(a, b);
  }
  return it->second;
}

void BlockUpdateStore::restrict_box(int a, const std::vector<int>& keep) {
  auto replace = [this](MatrixXc& m, MatrixXc next) {
    bytes_ -= static_cast<std::size_t>(m.size()) * sizeof(cplx);
    m = std::move(next);
    bytes_ += static_cast<std::size_t>(m.size()) * sizeof(cplx);
  };
  if (MatrixXc* m = find(a, a)) replace(*m, (*m)(keep, keep));
  for (int c : partners_[a]) {
    if (MatrixXc* m = find(a, c)) replace(*m, (*m)(keep, Eigen::all));
    if (MatrixXc* m = find(c, a)) replace(*m, (*m)(Eigen::all, keep));
  }
}

void BlockUpdateStore::remap(const std::vector<int>& parent, const std::vector<int>& offset,
                             const std::vector<int>& new_size) {
  std::unordered_map<std::uint64_t, MatrixXc> old;
  old.swap(blocks_);
  for (auto& v : partners_) v.clear();
  bytes_ = 0;
  for (auto it = old.begin(); it != old.end(); it = old.erase(it)) {
    const int a = static_cast<int>(it->first >> 32);
    const int b = static_cast<int>(it->first & 0xffffffffu);
    const int A = parent[a] >= 0 ? parent[a] : a;
    const int B = parent[b] >= 0 ? parent[b] : b;
    const int oa = parent[a] >= 0 ? offset[a] : 0;
    const int ob = parent[b] >= 0 ? offset[b] : 0;
    const MatrixXc& m = it->second;
    if (m.size() == 0) continue;
    if (A == a && B == b) {
      bytes_ += static_cast<std::size_t>(m.size()) * sizeof(cplx);
      blocks_.emplace(it->first, std::move(it->second));
      link(a, b);
      continue;
    }
    MatrixXc& dst = get(A, B, new_size[A], new_size[B]);
    dst.block(oa, ob, m.rows(), m.cols()) += m;
  }
}

// ---------------------------------------------------------------------------
// SkeletonFactor

std::size_t SkeletonFactor::bytes() const {
  const std::size_t entries = static_cast<std::size_t>(T.size() + T_in.size() + L.size() + U.size() +
                                                       lu.lu.matrixLU().size());
  return entries * sizeof(cplx) + (S.size() + R.size() + N.size()) * sizeof(int);
}

// ---------------------------------------------------------------------------
// SkeletonizationState

SkeletonizationState::SkeletonizationState(const EntryOracle& oracle, const Octree& tree)
    : oracle_(&oracle), tree_(&tree), level_(tree.depth()), store_(static_cast<int>(tree.boxes.size())) {
  const int n = oracle.size();
  if (static_cast<int>(tree.perm.size()) != n) throw DimensionMismatch("tree and oracle sizes differ");
  active_.assign(tree.boxes.size(), {});
  owner_.assign(n, -1);
  loc_.assign(n, -1);
  for (size_t b = 0; b < tree.boxes.size(); ++b) {
    if (!tree.boxes[b].leaf) continue;
    auto pts = tree.points(static_cast<int>(b));
    active_[b].assign(pts.begin(), pts.end());
    for (size_t e = 0; e < pts.size(); ++e) {
      owner_[pts[e]] = static_cast<int>(b);
      loc_[pts[e]] = static_cast<int>(e);
    }
  }
  total_active_ = static_cast<std::size_t>(n);
}

void SkeletonizationState::set_level(int level) {
  while (level_ > level) {
    const int l = level_ - 1;
    const int nb = static_cast<int>(tree_->boxes.size());
    std::vector<int> parent(nb, -1), offset(nb, 0), new_size(nb, 0);
    for (int p : tree_->levels[l]) {
      const Box& P = tree_->boxes[p];
      if (P.leaf) continue;
      for (int c : P.children) {
        if (c < 0) continue;
        parent[c] = p;
        offset[c] = static_cast<int>(active_[p].size());
        for (int i : active_[c]) {
          owner_[i] = p;
          loc_[i] = static_cast<int>(active_[p].size());
          active_[p].push_back(i);
        }
      }
    }
    for (int b = 0; b < nb; ++b) new_size[b] = static_cast<int>(active_[b].size());
    store_.remap(parent, offset, new_size);
    for (int b = 0; b < nb; ++b)
      if (parent[b] >= 0) {
        active_[b].clear();
        active_[b].shrink_to_fit();
      }
    level_ = l;
  }
}

std::vector<int> SkeletonizationState::active_indices() const {
  std::vector<int> out;
  out.reserve(total_active_);
  for (const auto& a : active_) out.insert(out.end(), a.begin(), a.end());
  return out;
}

cplx SkeletonizationState::entry(int i, int j) const {
  cplx v = oracle_->entry(i, j);
  if (owner_[i] >= 0 && owner_[j] >= 0)
    if (const MatrixXc* m = store_.find(owner_[i], owner_[j])) v += (*m)(loc_[i], loc_[j]);
  return v;
}

namespace {

// Maximal runs of consecutive positions that share an owner box and have
// consecutive local indices.
struct Run {
  int owner, loc, pos, len;
};

std::vector<Run> runs_of(std::span<const int> idx, const std::vector<int>& owner, const std::vector<int>& loc) {
  std::vector<Run> runs;
  for (int p = 0; p < static_cast<int>(idx.size()); ++p) {
    const int i = idx[p];
    const int o = owner[i];
    if (o < 0) continue;
    if (!runs.empty()) {
      Run& r = runs.back();
      if (r.owner == o && r.pos + r.len == p && r.loc + r.len == loc[i]) {
        ++r.len;
        continue;
      }
    }
    runs.push_back({o, loc[i], p, 1});
  }
  return runs;
}

}  // namespace

MatrixXc SkeletonizationState::block(std::span<const int> rows, std::span<const int> cols) const {
  MatrixXc M = oracle_->block(rows, cols);
  if (store_.num_blocks() == 0 || rows.empty() || cols.empty()) return M;
  const std::vector<Run> rr = runs_of(rows, owner_, loc_);
  const std::vector<Run> cr = runs_of(cols, owner_, loc_);
  for (const Run& a : rr)
    for (const Run& b : cr)
      if (const MatrixXc* m = store_.find(a.owner, b.owner))
        M.block(a.pos, b.pos, a.len, b.len) += m->block(a.loc, b.loc, a.len, b.len);
  return M;
}

FarPartition SkeletonizationState::partition_far_field(int box) const {
  const Octree& t = *tree_;
  FarPartition part;
  part.box = box;
  part.center = t.boxes[box].center;
  part.radius = 2.5 * t.boxes[box].side;
  part.B = active_[box];

  std::vector<char> mark(t.boxes.size(), 0);  // 1 = box itself or near, 2 = Q
  mark[box] = 1;
  for (int c : t.frontier_neighbors(box)) {
    if (active_[c].empty()) continue;
    part.near_boxes.push_back(c);
    mark[c] = 1;
  }
  auto add_q = [&](int c) {
    if (c < 0 || mark[c] || active_[c].empty()) return;
    mark[c] = 2;
    part.q_boxes.push_back(c);
  };
  // (a) boxes not fully outside the separation sphere
  for (int c : frontier_boxes_in_sphere(t, box, 2.5)) add_q(c);
  // (b) quadrature spill in either direction
  if (const NearCorrectionTable* table = oracle_->table()) {
    const SurfaceDiscretization& disc = oracle_->disc();
    std::vector<int> own, seen;
    for (int j : part.B) own.push_back(disc.patch_of_node[j]);
    for (int i : part.B)
      for (int pj : table->near_patches(i)) seen.push_back(pj);
    for (auto* v : {&own, &seen}) {
      std::sort(v->begin(), v->end());
      v->erase(std::unique(v->begin(), v->end()), v->end());
    }
    // columns of B corrected for targets elsewhere
    for (int pj : own)
      for (int i : table->targets_of_patch(pj))
        if (owner_[i] >= 0) add_q(owner_[i]);
    // rows of B corrected on patches owned elsewhere
    for (int pj : seen) {
      const Patch& P = disc.patches[pj];
      for (int j = P.first; j < P.first + P.count; ++j)
        if (owner_[j] >= 0) add_q(owner_[j]);
    }
  }
  // (c) boxes sharing a stored Schur update with this box
  for (int c : store_.partners(box)) add_q(c);

  std::sort(part.q_boxes.begin(), part.q_boxes.end());
  for (int c : part.near_boxes) part.N.insert(part.N.end(), active_[c].begin(), active_[c].end());
  for (int c : part.q_boxes) part.Q.insert(part.Q.end(), active_[c].begin(), active_[c].end());
  part.p_count = total_active_ - part.B.size() - part.N.size() - part.Q.size();
  return part;
}

std::vector<int> SkeletonizationState::far_indices(const FarPartition& part) const {
  std::vector<char> skip(tree_->boxes.size(), 0);
  skip[part.box] = 1;
  for (int c : part.near_boxes) skip[c] = 1;
  std::vector<int> out;
  for (size_t b = 0; b < active_.size(); ++b)
    if (!skip[b]) out.insert(out.end(), active_[b].begin(), active_[b].end());
  return out;
}

void SkeletonizationState::audit(const FarPartition& part, PurityAudit& report) const {
  ++report.boxes_checked;
  const int n = oracle_->size();
  std::vector<char> cls(n, 0);  // 0 inactive, 1 B, 2 N, 3 Q, 4 P
  auto tag = [&](const std::vector<int>& v, char c) {
    for (int i : v) {
      if (cls[i] != 0 || owner_[i] < 0) ++report.cover_violations;
      cls[i] = c;
    }
  };
  tag(part.B, 1);
  tag(part.N, 2);
  tag(part.Q, 3);
  std::size_t pcount = 0;
  for (int i = 0; i < n; ++i)
    if (owner_[i] >= 0 && cls[i] == 0) {
      cls[i] = 4;
      ++pcount;
    }
  if (pcount != part.p_count) ++report.cover_violations;
  for (int i = 0; i < n; ++i) {
    if (cls[i] != 4) continue;
    const Box& C = tree_->boxes[owner_[i]];
    double d2 = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double lo = C.center[d] - 0.5 * C.side, hi = C.center[d] + 0.5 * C.side;
      const double x = part.center[d];
      const double e = x < lo ? lo - x : (x > hi ? x - hi : 0.0);
      d2 += e * e;
    }
    if (std::sqrt(d2) < part.radius * (1.0 - 1e-12)) ++report.geometry_violations;
    for (int j : part.B) {
      report.entries_checked += 2;
      if (entry(i, j) != oracle_->pure(i, j)) ++report.violations;
      if (entry(j, i) != oracle_->pure(j, i)) ++report.violations;
    }
  }
}

MatrixXc SkeletonizationState::compression_matrix(const FarPartition& part, const ProxySurface* proxy,
                                                  const FactorOptions& opts, MatrixXc* incoming,
                                                  MatrixXc* outgoing) const {
  const Eigen::Index nb = static_cast<Eigen::Index>(part.B.size());
  MatrixXc out, in;
  if (opts.compression == Compression::DenseFar) {
    const std::vector<int> F = far_indices(part);
    out = block(F, part.B);
    in = block(part.B, F).transpose();
  } else {
    const bool use_proxy = part.p_count > 0 && proxy != nullptr;
    const Eigen::Index nq = static_cast<Eigen::Index>(part.Q.size());
    const Eigen::Index ng = use_proxy ? proxy->size() : 0;
    out.resize(nq + ng, nb);
    in.resize(nq + ng, nb);
    if (nq > 0) {
      out.topRows(nq) = block(part.Q, part.B);
      in.topRows(nq) = block(part.B, part.Q).transpose();
    }
    if (use_proxy) {
      const SurfaceDiscretization& disc = oracle_->disc();
      const Eigen::VectorXd& sw = oracle_->sqrt_weights();
      const cplx k = oracle_->wavenumber();
      const KernelKind kind = oracle_->kind();
      for (Eigen::Index c = 0; c < nb; ++c) {
        const int j = part.B[c];
        const Vec3 xj = disc.nodes.col(j), nj = disc.normals.col(j);
        for (int l = 0; l < ng; ++l) {
          const double s = std::sqrt(proxy->weights[l]) * sw[j];
          const Vec3 y = proxy->points.col(l);
          const Vec3 d = y - xj;
          const double r = d.norm();
          out(nq + l, c) = s * eval_kernel_d(kind, k, d, r, proxy->normals.col(l), nj);
          in(nq + l, c) = s * eval_kernel_d(KernelKind::SingleLayer, k, d, r, nj, nj);
        }
      }
    }
  }
  MatrixXc M(out.rows() + in.rows(), nb);
  M << out, in;
  if (incoming) *incoming = std::move(in);
  if (outgoing) *outgoing = std::move(out);
  return M;
}

void SkeletonizationState::add_updates(const MatrixXc& Xjr, const MatrixXc& U, const std::vector<int>& boxes,
                                       const std::vector<int>& sizes) {
  std::vector<int> off(boxes.size() + 1, 0);
  for (size_t a = 0; a < boxes.size(); ++a) off[a + 1] = off[a] + sizes[a];
  for (size_t a = 0; a < boxes.size(); ++a) {
    if (sizes[a] == 0) continue;
    for (size_t b = 0; b < boxes.size(); ++b) {
      if (sizes[b] == 0) continue;
      store_.get(boxes[a], boxes[b], sizes[a], sizes[b]).noalias() -=
          Xjr.middleRows(off[a], sizes[a]) * U.middleCols(off[b], sizes[b]);
    }
  }
}

SkeletonFactor SkeletonizationState::skeletonize_box(int box, const FarPartition& part,
                                                     const ProxySurface* proxy, const FactorOptions& opts) {
  SkeletonFactor f;
  f.box = box;
  f.level = tree_->boxes[box].level;
  const std::vector<int>& B = part.B;
  const int nb = static_cast<int>(B.size());
  const bool far_empty = part.Q.empty() && part.p_count == 0;
  if (nb == 0 || far_empty) {
    f.S = B;
    return f;
  }

  MatrixXc Min, Mout;
  const MatrixXc M = compression_matrix(part, proxy, opts, &Min, &Mout);
  std::vector<int> sl, rl;  // local positions in B
  if (!opts.separate_t) {
    auto id = id_fixed_tolerance(M, opts.eps);
    sl = id.skeleton;
    rl = id.redundant;
    f.T = std::move(id.T);
  } else {
    std::vector<char> keep(nb, 0);
    for (const MatrixXc* part_m : {&Mout, &Min})
      if (part_m->rows() > 0)
        for (int c : id_fixed_tolerance(*part_m, opts.eps).skeleton) keep[c] = 1;
    for (int c = 0; c < nb; ++c) (keep[c] ? sl : rl).push_back(c);
    if (!rl.empty()) {
      auto lsq = [&](const MatrixXc& A) -> MatrixXc {
        if (sl.empty() || A.rows() == 0) return MatrixXc::Zero(sl.size(), rl.size());
        return A(Eigen::all, sl).completeOrthogonalDecomposition().solve(MatrixXc(A(Eigen::all, rl)));
      };
      f.T = lsq(Mout);
      f.T_in = lsq(Min);
    }
  }
  if (rl.empty()) {
    f.S = B;
    f.T.resize(0, 0);
    f.T_in.resize(0, 0);
    return f;
  }
  for (int c : sl) f.S.push_back(B[c]);
  for (int c : rl) f.R.push_back(B[c]);
  f.N = part.N;

  const MatrixXc Abb = block(B, B);
  const MatrixXc Abn = block(B, part.N);
  const MatrixXc Anb = block(part.N, B);
  const MatrixXc Arr = Abb(rl, rl), Ars = Abb(rl, sl), Asr = Abb(sl, rl), Ass = Abb(sl, sl);
  const MatrixXc Arn = Abn(rl, Eigen::all), Asn = Abn(sl, Eigen::all);
  const MatrixXc Anr = Anb(Eigen::all, rl), Ans = Anb(Eigen::all, sl);
  const MatrixXc& To = f.t_out();
  const MatrixXc Ti = f.t_in().transpose();

  const Eigen::Index r = static_cast<Eigen::Index>(rl.size());
  const Eigen::Index s = static_cast<Eigen::Index>(sl.size());
  const Eigen::Index nn = static_cast<Eigen::Index>(part.N.size());
  MatrixXc Xsr = Asr;
  MatrixXc Xrs = Ars;
  if (s > 0) {
    Xsr.noalias() -= Ass * To;
    Xrs.noalias() -= Ti * Ass;
  }
  MatrixXc Xrr = Arr;
  if (s > 0) {
    Xrr.noalias() -= Ti * Asr;
    Xrr.noalias() -= Ars * To;
    Xrr.noalias() += Ti * (Ass * To);
  }
  MatrixXc Xrn = Arn, Xnr = Anr;
  if (s > 0 && nn > 0) {
    Xrn.noalias() -= Ti * Asn;
    Xnr.noalias() -= Ans * To;
  }
  f.lu = lu_factor(Xrr);
  MatrixXc Xrj(r, s + nn), Xjr(s + nn, r);
  Xrj << Xrs, Xrn;
  Xjr << Xsr, Xnr;
  f.U = f.lu.solve(Xrj);
  {
    const MatrixXc XjrT = Xjr.transpose();
    const MatrixXc Lt = f.lu.lu.transpose().solve(XjrT);
    f.L = Lt.transpose();
  }

  // Shrink the box to its skeleton before scattering the new update.
  store_.restrict_box(box, sl);
  active_[box] = f.S;
  for (int e = 0; e < s; ++e) loc_[f.S[e]] = e;
  for (int i : f.R) {
    owner_[i] = -1;
    loc_[i] = -1;
  }
  total_active_ -= f.R.size();

  if (s + nn > 0) {
    std::vector<int> boxes = {box};
    std::vector<int> sizes = {static_cast<int>(s)};
    for (int c : part.near_boxes) {
      boxes.push_back(c);
      sizes.push_back(static_cast<int>(active_[c].size()));
    }
    add_updates(Xjr, f.U, boxes, sizes);
  }
  return f;
}

}  // namespace fmmlu
