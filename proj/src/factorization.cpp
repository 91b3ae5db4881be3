#include "fmmlu/factorization.hpp"

#include <chrono>

#include <json.hpp>

namespace fmmlu {

namespace {

VectorXc gather_j(const VectorXc& y, const SkeletonFactor& f) {
  VectorXc v(f.S.size() + f.N.size());
  v << y(f.S), y(f.N);
  return v;
}

void scatter_add_j(VectorXc& y, const SkeletonFactor& f, const VectorXc& v) {
  const Eigen::Index s = static_cast<Eigen::Index>(f.S.size());
  y(f.S) += v.head(s);
  y(f.N) += v.tail(static_cast<Eigen::Index>(f.N.size()));
}

}  // namespace

void FmmLuFactorization::check(const VectorXc& x) const {
  if (x.size() != n_) throw DimensionMismatch("vector length does not match the factorization");
}

VectorXc FmmLuFactorization::apply(const VectorXc& x) const {
  check(x);
  VectorXc y = x;
  for (const SkeletonFactor& f : factors_) {
    if (f.S.size()) y(f.S) += f.t_out() * y(f.R);
    y(f.R) += f.U * gather_j(y, f);
  }
  for (const SkeletonFactor& f : factors_) y(f.R) = f.lu.multiply(MatrixXc(y(f.R)));
  if (!root_.empty()) y(root_) = root_lu_.multiply(MatrixXc(y(root_)));
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) {
    const SkeletonFactor& f = *it;
    scatter_add_j(y, f, f.L * y(f.R));
    if (f.S.size()) y(f.R) += f.t_in().transpose() * y(f.S);
  }
  return y;
}

VectorXc FmmLuFactorization::apply_adjoint(const VectorXc& x) const {
  check(x);
  VectorXc y = x;
  for (const SkeletonFactor& f : factors_) {
    if (f.S.size()) y(f.S) += f.t_in().conjugate() * y(f.R);
    y(f.R) += f.L.adjoint() * gather_j(y, f);
  }
  for (const SkeletonFactor& f : factors_) y(f.R) = f.lu.multiply_adjoint(MatrixXc(y(f.R)));
  if (!root_.empty()) y(root_) = root_lu_.multiply_adjoint(MatrixXc(y(root_)));
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) {
    const SkeletonFactor& f = *it;
    scatter_add_j(y, f, f.U.adjoint() * y(f.R));
    if (f.S.size()) y(f.R) += f.t_out().adjoint() * y(f.S);
  }
  return y;
}

VectorXc FmmLuFactorization::solve(const VectorXc& b) const {
  check(b);
  VectorXc y = b;
  for (const SkeletonFactor& f : factors_) {
    if (f.S.size()) y(f.R) -= f.t_in().transpose() * y(f.S);
    scatter_add_j(y, f, -(f.L * y(f.R)));
  }
  for (const SkeletonFactor& f : factors_) y(f.R) = f.lu.solve(VectorXc(y(f.R)));
  if (!root_.empty()) y(root_) = root_lu_.solve(VectorXc(y(root_)));
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) {
    const SkeletonFactor& f = *it;
    y(f.R) -= f.U * gather_j(y, f);
    if (f.S.size()) y(f.S) -= f.t_out() * y(f.R);
  }
  return y;
}

std::size_t FmmLuFactorization::bytes() const {
  std::size_t s = 0;
  for (const SkeletonFactor& f : factors_) s += f.bytes();
  if (!root_.empty()) s += static_cast<std::size_t>(root_lu_.lu.matrixLU().size()) * sizeof(cplx);
  s += root_.size() * sizeof(int);
  return s;
}

std::string FactorStats::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["n0"] = n0;
  j["stop_level"] = stop_level;
  j["eps"] = eps;
  j["t_factor"] = t_factor;
  j["m_f_bytes"] = bytes;
  j["peak_update_bytes"] = peak_update_bytes;
  j["ill_conditioned_pivot_blocks"] = ill_conditioned;
  nlohmann::json lv = nlohmann::json::array();
  for (const LevelStats& s : levels) {
    lv.push_back({{"level", s.level},
                  {"boxes", s.boxes},
                  {"active_in", s.active_in},
                  {"skeleton_out", s.skeleton_out},
                  {"skeleton_ratio", s.active_in ? double(s.skeleton_out) / double(s.active_in) : 1.0},
                  {"max_rank", s.max_rank},
                  {"max_proxy_points", s.max_proxy_points},
                  {"max_q", s.max_q},
                  {"max_near", s.max_near},
                  {"factor_bytes", s.factor_bytes},
                  {"update_bytes", s.update_bytes}});
  }
  j["levels"] = lv;
  if (audit.boxes_checked) {
    j["purity_audit"] = {{"boxes_checked", audit.boxes_checked},
                         {"entries_checked", audit.entries_checked},
                         {"violations", audit.violations},
                         {"geometry_violations", audit.geometry_violations},
                         {"cover_violations", audit.cover_violations}};
  }
  return j.dump(2);
}

FmmLuFactorization factorize(const EntryOracle& oracle, const Octree& tree, const FactorOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  FmmLuFactorization F;
  F.n_ = oracle.size();
  F.stats_.n = F.n_;
  F.stats_.eps = opts.eps;
  SkeletonizationState st(oracle, tree);
  int stop = std::max(opts.min_level, 0);
  for (int l = tree.depth(); l >= opts.min_level; --l) {
    st.set_level(l);
    bool any_p = false;
    for (int b : tree.levels[l]) {
      if (st.active(b).empty()) continue;
      if (st.partition_far_field(b).p_count > 0) {
        any_p = true;
        break;
      }
    }
    if (!any_p) {
      stop = l;
      break;
    }
    stop = l;
    LevelStats ls;
    ls.level = l;
    for (int b : tree.levels[l]) {
      if (st.active(b).empty()) continue;
      const FarPartition part = st.partition_far_field(b);
      if (opts.audit_purity) st.audit(part, F.stats_.audit);
      ProxySurface proxy;
      const ProxySurface* pp = nullptr;
      if (opts.compression == Compression::Proxy && part.p_count > 0) {
        proxy = make_proxy(tree.boxes[b], opts.proxy_rho, oracle.wavenumber(), opts.eps, opts.proxy_p_min);
        pp = &proxy;
      }
      SkeletonFactor f = st.skeletonize_box(b, part, pp, opts);
      if (!part.Q.empty() || part.p_count > 0) {
        ++ls.boxes;
        ls.active_in += part.B.size();
        ls.skeleton_out += f.S.size();
        ls.max_rank = std::max(ls.max_rank, static_cast<int>(f.S.size()));
        ls.max_q = std::max(ls.max_q, static_cast<int>(part.Q.size()));
        ls.max_near = std::max(ls.max_near, part.N.size());
        if (pp) ls.max_proxy_points = std::max(ls.max_proxy_points, pp->size());
      }
      if (!f.R.empty()) {
        if (f.lu.ill_conditioned) ++F.stats_.ill_conditioned;
        ls.factor_bytes += f.bytes();
        F.factors_.push_back(std::move(f));
      }
      F.stats_.peak_update_bytes = std::max(F.stats_.peak_update_bytes, st.updates().bytes());
    }
    ls.update_bytes = st.updates().bytes();
    F.stats_.levels.push_back(ls);
  }
  F.stats_.stop_level = stop;
  F.root_ = st.active_indices();
  F.stats_.n0 = static_cast<int>(F.root_.size());
  if (!F.root_.empty()) {
    F.root_lu_ = lu_factor(st.block(F.root_, F.root_));
    if (F.root_lu_.ill_conditioned) ++F.stats_.ill_conditioned;
  }
  F.stats_.bytes = F.bytes();
  F.stats_.t_factor = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return F;
}

}  // namespace fmmlu
