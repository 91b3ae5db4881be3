#include "fmmlu/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

#include "fmmlu/gauss_legendre.hpp"

namespace fmmlu {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double patch_diameter(const Chart& chart) {
  const std::array<Vec3, 5> pts = {chart(0, 0).x, chart(1, 0).x, chart(0, 1).x, chart(1, 1).x,
                                   chart(0.5, 0.5).x};
  double d = 0.0;
  for (size_t a = 0; a < pts.size(); ++a)
    for (size_t b = a + 1; b < pts.size(); ++b) d = std::max(d, (pts[a] - pts[b]).norm());
  return d;
}

struct CubeFace {
  Vec3 n, e1, e2;
};

// Right-handed frames: e1 x e2 = n, so chart tangents give outward normals.
const std::array<CubeFace, 6>& cube_faces() {
  static const std::array<CubeFace, 6> faces = {{
      {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)},
      {Vec3(-1, 0, 0), Vec3(0, 0, 1), Vec3(0, 1, 0)},
      {Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(1, 0, 0)},
      {Vec3(0, -1, 0), Vec3(1, 0, 0), Vec3(0, 0, 1)},
      {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 1, 0)},
      {Vec3(0, 0, -1), Vec3(0, 1, 0), Vec3(1, 0, 0)},
  }};
  return faces;
}

struct Rect {
  double x0, x1, y0, y1;
};

// Chart of the rectangle r on a cube face, projected radially onto the
// ellipsoid with semi-axes `axes`.
Chart projected_face_chart(const CubeFace& f, Rect r, Vec3 axes) {
  return Chart{[f, r, axes](double s, double t) {
    const double xi = r.x0 + s * (r.x1 - r.x0);
    const double eta = r.y0 + t * (r.y1 - r.y0);
    const Vec3 c = f.n + xi * f.e1 + eta * f.e2;
    const double len = c.norm();
    const Vec3 chat = c / len;
    const Vec3 dxi = (f.e1 - chat * chat.dot(f.e1)) / len;
    const Vec3 deta = (f.e2 - chat * chat.dot(f.e2)) / len;
    ChartPoint p;
    p.x = axes.cwiseProduct(chat);
    p.xu = axes.cwiseProduct(dxi) * (r.x1 - r.x0);
    p.xv = axes.cwiseProduct(deta) * (r.y1 - r.y0);
    return p;
  }};
}

}  // namespace

double SurfaceDiscretization::circumscribed_radius() const {
  return nodes.size() == 0 ? 0.0 : nodes.colwise().norm().maxCoeff();
}

SurfaceDiscretization discretize(std::vector<Chart> charts, int p) {
  if (p < 1) throw std::invalid_argument("discretize: order must be positive");
  const GaussRule& g = gauss_legendre(p);
  const int np = static_cast<int>(charts.size());
  const int n = np * p * p;
  SurfaceDiscretization d;
  d.order = p;
  d.nodes.resize(3, n);
  d.normals.resize(3, n);
  d.weights.resize(n);
  d.params.resize(2, n);
  d.patch_of_node.resize(n);
  d.patches.reserve(np);
  for (int j = 0; j < np; ++j) {
    Patch patch;
    patch.chart = std::move(charts[j]);
    patch.center = patch.chart(0.5, 0.5).x;
    patch.diameter = patch_diameter(patch.chart);
    patch.first = j * p * p;
    patch.count = p * p;
    for (int a = 0; a < p; ++a) {
      for (int b = 0; b < p; ++b) {
        const int i = patch.first + a * p + b;
        const ChartPoint cp = patch.chart(g.x[a], g.x[b]);
        const Vec3 cr = cp.xu.cross(cp.xv);
        const double jac = cr.norm();
        if (!(jac > 0.0)) throw std::invalid_argument("discretize: degenerate chart");
        d.nodes.col(i) = cp.x;
        d.normals.col(i) = cr / jac;
        d.weights[i] = g.w[a] * g.w[b] * jac;
        d.params.col(i) = Eigen::Vector2d(g.x[a], g.x[b]);
        d.patch_of_node[i] = j;
      }
    }
    d.patches.push_back(std::move(patch));
  }
  return d;
}

ChartPoint wiggly_torus_point(double u, double v) {
  const double rho = 2.0 + std::cos(v) + 0.25 * std::cos(5.0 * u);
  const double rho_u = -1.25 * std::sin(5.0 * u);
  const double rho_v = -std::sin(v);
  const double cu = std::cos(u), su = std::sin(u);
  ChartPoint p;
  p.x = Vec3(1.2 * rho * cu, rho * su, 1.7 * std::sin(v));
  p.xu = Vec3(1.2 * (rho_u * cu - rho * su), rho_u * su + rho * cu, 0.0);
  p.xv = Vec3(1.2 * rho_v * cu, rho_v * su, 1.7 * std::cos(v));
  return p;
}

SurfaceDiscretization make_wiggly_torus(int nu, int nv, int p) {
  if (nu < 1 || nv < 1 || p < 2) throw std::invalid_argument("make_wiggly_torus: bad arguments");
  std::vector<Chart> charts;
  charts.reserve(static_cast<size_t>(nu) * nv);
  const double du = kTwoPi / nu, dv = kTwoPi / nv;
  for (int iu = 0; iu < nu; ++iu) {
    for (int iv = 0; iv < nv; ++iv) {
      const double u0 = iu * du, v0 = iv * dv;
      charts.push_back(Chart{[u0, v0, du, dv](double s, double t) {
        ChartPoint c = wiggly_torus_point(u0 + s * du, v0 + t * dv);
        c.xu *= du;
        c.xv *= dv;
        return c;
      }});
    }
  }
  return discretize(std::move(charts), p);
}

SurfaceDiscretization make_sphere(double radius, int m, int p) {
  if (!(radius > 0.0) || m < 1) throw std::invalid_argument("make_sphere: bad arguments");
  std::vector<Chart> charts;
  const Vec3 axes(radius, radius, radius);
  const double h = 2.0 / m;
  for (const CubeFace& f : cube_faces())
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        charts.push_back(projected_face_chart(
            f, Rect{-1.0 + a * h, -1.0 + (a + 1) * h, -1.0 + b * h, -1.0 + (b + 1) * h}, axes));
  SurfaceDiscretization d = discretize(std::move(charts), p);
  // Snap to the exact sphere so that |x| = radius and n = x/radius hold to rounding.
  for (int i = 0; i < d.size(); ++i) {
    const Vec3 u = d.nodes.col(i).normalized();
    d.nodes.col(i) = radius * u;
    d.normals.col(i) = u;
  }
  return d;
}

SurfaceDiscretization make_multiscale_plate(int refine_depth, int p) {
  if (refine_depth < 0) throw std::invalid_argument("make_multiscale_plate: negative depth");
  const Vec3 axes(kPlateAxes[0], kPlateAxes[1], kPlateAxes[2]);
  const auto& faces = cube_faces();
  const std::vector<Rect> base = {{-1, 0, -1, 0}, {0, 1, -1, 0}, {-1, 0, 0, 1}, {0, 1, 0, 1}};

  std::vector<Rect> top = base;  // face +z, graded toward its center
  auto diam_ratio = [&]() {
    double lo = 1e300, hi = 0.0;
    for (int f = 0; f < 6; ++f) {
      const std::vector<Rect>& rects = (f == 4) ? top : base;
      for (const Rect& r : rects) {
        const double d = patch_diameter(projected_face_chart(faces[f], r, axes));
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
    }
    return hi / lo;
  };
  const double target = std::ldexp(1.0, refine_depth);
  for (int level = 0; level < refine_depth || (refine_depth > 0 && diam_ratio() < target);
       ++level) {
    std::vector<Rect> next;
    for (const Rect& r : top) {
      if (r.x0 <= 0.0 && 0.0 <= r.x1 && r.y0 <= 0.0 && 0.0 <= r.y1) {
        const double xm = 0.5 * (r.x0 + r.x1), ym = 0.5 * (r.y0 + r.y1);
        next.push_back({r.x0, xm, r.y0, ym});
        next.push_back({xm, r.x1, r.y0, ym});
        next.push_back({r.x0, xm, ym, r.y1});
        next.push_back({xm, r.x1, ym, r.y1});
      } else {
        next.push_back(r);
      }
    }
    top = std::move(next);
  }

  std::vector<Chart> charts;
  for (int f = 0; f < 6; ++f)
    for (const Rect& r : (f == 4) ? top : base) charts.push_back(projected_face_chart(faces[f], r, axes));
  return discretize(std::move(charts), p);
}

Eigen::Matrix3Xd interior_points(GeometryKind kind, const SurfaceDiscretization& disc, int count,
                                 double scale, unsigned seed) {
  std::mt19937_64 rng(seed);
  Eigen::Matrix3Xd pts(3, count);
  if (kind == GeometryKind::Torus) {
    std::uniform_real_distribution<double> ang(0.0, kTwoPi);
    for (int i = 0; i < count; ++i) {
      const double u = ang(rng), v = ang(rng);
      const double rho = 2.0 + 0.25 * std::cos(5.0 * u) + scale * std::cos(v);
      pts.col(i) = Vec3(1.2 * rho * std::cos(u), rho * std::sin(u), 1.7 * scale * std::sin(v));
    }
  } else {
    std::uniform_int_distribution<int> pick(0, disc.size() - 1);
    for (int i = 0; i < count; ++i) pts.col(i) = scale * disc.nodes.col(pick(rng));
  }
  return pts;
}

void write_csv(const SurfaceDiscretization& disc, std::ostream& out) {
  out << "x,y,z,nx,ny,nz,w,patch\n";
  out.precision(17);
  for (int i = 0; i < disc.size(); ++i) {
    out << disc.nodes(0, i) << ',' << disc.nodes(1, i) << ',' << disc.nodes(2, i) << ','
        << disc.normals(0, i) << ',' << disc.normals(1, i) << ',' << disc.normals(2, i) << ','
        << disc.weights[i] << ',' << disc.patch_of_node[i] << '\n';
  }
}

}  // namespace fmmlu
