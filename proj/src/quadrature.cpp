#include "fmmlu/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "fmmlu/gauss_legendre.hpp"

namespace fmmlu {

namespace {

// Maps the integration square (u, v) to patch parameters; either the
// identity or a Duffy map collapsing the edge u = 0 onto the corner c0 of
// the triangle (c0, c1, c2).
struct DomainMap {
  bool duffy = false;
  Eigen::Vector2d c0, e1, e2;  // e1 = c1 - c0, e2 = c2 - c1
  double det = 1.0;

  void operator()(double u, double v, double& s, double& t, double& jac) const {
    if (!duffy) {
      s = u;
      t = v;
      jac = 1.0;
      return;
    }
    s = c0[0] + u * e1[0] + u * v * e2[0];
    t = c0[1] + u * e1[1] + u * v * e2[1];
    jac = u * det;
  }
};

struct Cell {
  double u0, u1, v0, v1;
};

class PatchIntegrator {
 public:
  PatchIntegrator(const Patch& patch, int order, KernelKind kind, cplx k, const Vec3& x,
                  const Vec3& nx, double tol, int max_depth, int cell_order)
      : patch_(patch), basis_(gauss_legendre(order)), rule_(gauss_legendre(cell_order)),
        p_(order), kind_(kind), k_(k), x_(x), nx_(nx), tol_(tol), max_depth_(max_depth),
        ls_(order), lt_(order) {}

  // Adds the integral over the whole integration square under `map` to out.
  void run(const DomainMap& map, cplx* out) {
    map_ = &map;
    const int m = p_ * p_;
    std::vector<cplx> root(m, 0.0);
    const double noise = estimate({0, 1, 0, 1}, root.data());
    adapt({0, 1, 0, 1}, root, noise, 0, out);
  }

  double unresolved() const { return unresolved_; }

 private:
  // Accumulates the cell integral into acc and returns a bound on its
  // rounding error. Kernels with a normal factor n.(x - y) lose about
  // eps |x| absolutely in that product, which dominates near the target.
  double estimate(const Cell& c, cplx* acc) {
    const int q = rule_.size();
    const bool normal_factor = kind_ != KernelKind::SingleLayer && kind_ != KernelKind::IncomingProxy;
    double noise = 0.0;
    const double du = c.u1 - c.u0, dv = c.v1 - c.v0;
    for (int a = 0; a < q; ++a) {
      const double u = c.u0 + du * rule_.x[a];
      for (int b = 0; b < q; ++b) {
        const double v = c.v0 + dv * rule_.x[b];
        double s, t, jd;
        (*map_)(u, v, s, t, jd);
        if (jd == 0.0) continue;
        const ChartPoint cp = patch_.chart(s, t);
        const Vec3 cr = cp.xu.cross(cp.xv);
        const double area = cr.norm();
        const Vec3 d = x_ - cp.x;
        const double r = d.norm();
        const cplx kv = eval_kernel_d(kind_, k_, d, r, nx_, cr / area);
        const double wq = area * jd * du * dv * rule_.w[a] * rule_.w[b];
        const cplx f = kv * wq;
        basis_.lagrange(s, ls_.data());
        basis_.lagrange(t, lt_.data());
        if (normal_factor) {
          double lmax = 0.0;
          for (int i = 0; i < p_; ++i) lmax = std::max(lmax, std::abs(ls_[i]));
          double tmax = 0.0;
          for (int j = 0; j < p_; ++j) tmax = std::max(tmax, std::abs(lt_[j]));
          const double rel = 16.0 * std::numeric_limits<double>::epsilon() * (x_.norm() + cp.x.norm());
          noise += rel * (1.0 + std::abs(k_) * r) / (4.0 * std::numbers::pi * r * r * r) * wq * lmax * tmax;
        }
        for (int i = 0; i < p_; ++i) {
          const cplx fi = f * ls_[i];
          cplx* row = acc + i * p_;
          for (int j = 0; j < p_; ++j) row[j] += fi * lt_[j];
        }
      }
    }
    return noise;
  }

  void adapt(const Cell& c, const std::vector<cplx>& est, double noise, int depth, cplx* out) {
    const int m = p_ * p_;
    const double um = 0.5 * (c.u0 + c.u1), vm = 0.5 * (c.v0 + c.v1);
    const std::array<Cell, 4> kids = {Cell{c.u0, um, c.v0, vm}, Cell{um, c.u1, c.v0, vm},
                                      Cell{c.u0, um, vm, c.v1}, Cell{um, c.u1, vm, c.v1}};
    std::array<std::vector<cplx>, 4> ke;
    std::array<double, 4> kn;
    double diff = 0.0, floor = noise;
    std::vector<cplx> sum(m, 0.0);
    for (int q = 0; q < 4; ++q) {
      ke[q].assign(m, 0.0);
      kn[q] = estimate(kids[q], ke[q].data());
      floor += kn[q];
      for (int l = 0; l < m; ++l) sum[l] += ke[q][l];
    }
    for (int l = 0; l < m; ++l) diff = std::max(diff, std::abs(sum[l] - est[l]));
    // Below the rounding floor further splitting only adds noise.
    const double accept = std::max(tol_, 4.0 * floor);
    if (diff <= accept || depth >= max_depth_) {
      if (diff > accept) unresolved_ = std::max(unresolved_, diff);
      for (int l = 0; l < m; ++l) out[l] += sum[l];
      return;
    }
    for (int q = 0; q < 4; ++q) adapt(kids[q], ke[q], kn[q], depth + 1, out);
  }

  const Patch& patch_;
  const GaussRule& basis_;
  const GaussRule& rule_;
  int p_;
  KernelKind kind_;
  cplx k_;
  Vec3 x_, nx_;
  double tol_;
  int max_depth_;
  const DomainMap* map_ = nullptr;
  std::vector<double> ls_, lt_;
  double unresolved_ = 0.0;
};

}  // namespace

double integrate_patch(const Patch& patch, int order, KernelKind kind, cplx k, const Vec3& x,
                       const Vec3& nx, const Eigen::Vector2d* self_param, double tol,
                       int max_depth, int cell_order, cplx* out) {
  const int m = order * order;
  std::fill(out, out + m, cplx(0.0));
  if (cell_order <= 0) cell_order = order + 4;
  PatchIntegrator integ(patch, order, kind, k, x, nx, tol, max_depth, cell_order);
  if (!self_param) {
    integ.run(DomainMap{}, out);
    return integ.unresolved();
  }
  const Eigen::Vector2d c0 = *self_param;
  const double xs[3] = {0.0, c0[0], 1.0};
  const double ys[3] = {0.0, c0[1], 1.0};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      // Rectangle corners: c0 is the singular one, c3 the opposite one.
      const Eigen::Vector2d c3(xs[2 * a], ys[2 * b]);
      const Eigen::Vector2d c1(c3[0], c0[1]);
      const Eigen::Vector2d c2(c0[0], c3[1]);
      for (const Eigen::Vector2d& mid : {c1, c2}) {
        DomainMap dm;
        dm.duffy = true;
        dm.c0 = c0;
        dm.e1 = mid - c0;
        dm.e2 = c3 - mid;
        dm.det = std::abs(dm.e1[0] * dm.e2[1] - dm.e1[1] * dm.e2[0]);
        if (dm.det == 0.0) continue;
        integ.run(dm, out);
      }
    }
  }
  return integ.unresolved();
}

PatchLocator::PatchLocator(const SurfaceDiscretization& disc, double eta) : disc_(&disc), eta_(eta) {
  double rmax = 0.0;
  for (const Patch& p : disc.patches) rmax = std::max(rmax, eta * p.diameter);
  cell_ = std::max(rmax, 1e-300);
  for (int j = 0; j < disc.num_patches(); ++j) {
    const Vec3& c = disc.patches[j].center;
    grid_[key(std::llround(std::floor(c[0] / cell_)), std::llround(std::floor(c[1] / cell_)),
              std::llround(std::floor(c[2] / cell_)))]
        .push_back(j);
  }
}

long long PatchLocator::key(long long a, long long b, long long c) const {
  return ((a + (1LL << 20)) << 42) | ((b + (1LL << 20)) << 21) | (c + (1LL << 20));
}

std::vector<int> PatchLocator::query(const Vec3& x) const {
  std::vector<int> out;
  const long long a = std::llround(std::floor(x[0] / cell_));
  const long long b = std::llround(std::floor(x[1] / cell_));
  const long long c = std::llround(std::floor(x[2] / cell_));
  for (long long da = -1; da <= 1; ++da)
    for (long long db = -1; db <= 1; ++db)
      for (long long dc = -1; dc <= 1; ++dc) {
        auto it = grid_.find(key(a + da, b + db, c + dc));
        if (it == grid_.end()) continue;
        for (int j : it->second) {
          const Patch& p = disc_->patches[j];
          if ((x - p.center).norm() <= eta_ * p.diameter) out.push_back(j);
        }
      }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> near_region(const SurfaceDiscretization& disc, int i, double eta) {
  std::vector<int> out;
  const Vec3 x = disc.nodes.col(i);
  const int own = disc.patch_of_node[i];
  for (int j = 0; j < disc.num_patches(); ++j) {
    const Patch& p = disc.patches[j];
    if (j == own || (x - p.center).norm() <= eta * p.diameter) out.push_back(j);
  }
  return out;
}

std::size_t NearCorrectionTable::bytes() const {
  return values_.size() * sizeof(cplx) + patch_.size() * (sizeof(int) + sizeof(std::size_t)) +
         row_.size() * sizeof(int) + rev_targets_.size() * sizeof(int) + rev_row_.size() * sizeof(int);
}

NearCorrectionTable build_near_table(const SurfaceDiscretization& disc, KernelKind kind, cplx k,
                                     const NearRule& rule) {
  NearCorrectionTable t;
  t.rule = rule;
  t.kind = kind;
  t.k = k;
  const int n = disc.size();
  const int np = disc.num_patches();
  const int p = disc.order;
  const int m = p * p;
  PatchLocator loc(disc, rule.eta);
  t.row_.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    std::vector<int> near = loc.query(disc.nodes.col(i));
    const int own = disc.patch_of_node[i];
    if (!std::binary_search(near.begin(), near.end(), own)) {
      near.insert(std::upper_bound(near.begin(), near.end(), own), own);
    }
    for (int j : near) {
      const Patch& patch = disc.patches[j];
      // Tolerance relative to the size of a single-layer patch integral.
      const double area_est = 0.5 * patch.diameter * patch.diameter;
      const double scale = area_est / (4.0 * std::numbers::pi * patch.diameter) *
                           std::max(1.0, std::abs(k) * patch.diameter);
      const size_t off = t.values_.size();
      t.values_.resize(off + m);
      const Eigen::Vector2d sp = disc.params.col(i);
      const double err = integrate_patch(patch, p, kind, k, disc.nodes.col(i), disc.normals.col(i),
                                         j == own ? &sp : nullptr, rule.eps_q * scale,
                                         rule.max_depth, rule.cell_order, t.values_.data() + off);
      if (err > 0.0) throw NonConvergent(i, j, err / scale);
      t.patch_.push_back(j);
      t.offset_.push_back(off);
    }
    t.row_[i + 1] = static_cast<int>(t.patch_.size());
  }
  t.rev_row_.assign(np + 1, 0);
  for (int j : t.patch_) ++t.rev_row_[j + 1];
  for (int j = 0; j < np; ++j) t.rev_row_[j + 1] += t.rev_row_[j];
  t.rev_targets_.resize(t.patch_.size());
  std::vector<int> fill(t.rev_row_.begin(), t.rev_row_.end() - 1);
  for (int i = 0; i < n; ++i)
    for (int e = t.row_[i]; e < t.row_[i + 1]; ++e) t.rev_targets_[fill[t.patch_[e]]++] = i;
  return t;
}

EntryOracle::EntryOracle(const SurfaceDiscretization& disc, KernelKind kind, cplx k, cplx alpha,
                         const NearCorrectionTable* table)
    : disc_(&disc), kind_(kind), k_(k), alpha_(alpha), table_(table) {
  // std::sqrt per entry: Eigen's packet sqrt is not always correctly rounded.
  sqrtw_ = disc.weights.unaryExpr([](double w) { return std::sqrt(w); });
}

cplx EntryOracle::pure(int i, int j) const {
  const Vec3 d = disc_->nodes.col(i) - disc_->nodes.col(j);
  return sqrtw_[i] *
         eval_kernel_d(kind_, k_, d, d.norm(), disc_->normals.col(i), disc_->normals.col(j)) *
         sqrtw_[j];
}

bool EntryOracle::corrected(int i, int j) const {
  return table_ && table_->find(i, disc_->patch_of_node[j]) != nullptr;
}

cplx EntryOracle::entry(int i, int j) const {
  cplx v = 0.0;
  const cplx* c = table_ ? table_->find(i, disc_->patch_of_node[j]) : nullptr;
  if (c) {
    const int l = j - disc_->patches[disc_->patch_of_node[j]].first;
    v = sqrtw_[i] * c[l] / sqrtw_[j];
  } else if (i != j) {
    v = pure(i, j);
  }
  if (i == j) v += alpha_;
  return v;
}

MatrixXc EntryOracle::block(std::span<const int> rows, std::span<const int> cols) const {
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index nc = static_cast<Eigen::Index>(cols.size());
  MatrixXc out(nr, nc);
  const auto& X = disc_->nodes;
  const auto& N = disc_->normals;
  for (Eigen::Index b = 0; b < nc; ++b) {
    const int j = cols[b];
    const Vec3 xj = X.col(j), nj = N.col(j);
    const int pj = disc_->patch_of_node[j];
    const int lj = j - disc_->patches[pj].first;
    const double swj = sqrtw_[j];
    for (Eigen::Index a = 0; a < nr; ++a) {
      const int i = rows[a];
      const cplx* c = table_ ? table_->find(i, pj) : nullptr;
      cplx v;
      if (c) {
        v = sqrtw_[i] * c[lj] / swj;
      } else if (i != j) {
        const Vec3 d = X.col(i) - xj;
        v = sqrtw_[i] * eval_kernel_d(kind_, k_, d, d.norm(), N.col(i), nj) * swj;
      } else {
        v = 0.0;
      }
      if (i == j) v += alpha_;
      out(a, b) = v;
    }
  }
  return out;
}

MatrixXc EntryOracle::dense() const {
  std::vector<int> all(size());
  for (int i = 0; i < size(); ++i) all[i] = i;
  return block(all, all);
}

}  // namespace fmmlu
