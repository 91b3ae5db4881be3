#include "fmmlu/kernels.hpp"

#include <cmath>
#include <numbers>

namespace fmmlu {

namespace {

constexpr double kInv4Pi = 0.25 / std::numbers::pi;
constexpr cplx kI(0.0, 1.0);

void check_distance(double r) {
  if (!(r >= 1e-300)) throw SingularEvaluation("kernel evaluated at coincident points");
}

}  // namespace

cplx green(cplx k, const Vec3& x, const Vec3& y) {
  const double r = (x - y).norm();
  check_distance(r);
  return std::exp(kI * k * r) * (kInv4Pi / r);
}

Eigen::Vector3cd green_grad_y(cplx k, const Vec3& x, const Vec3& y) {
  const Vec3 d = x - y;
  const double r = d.norm();
  check_distance(r);
  const cplx g = std::exp(kI * k * r) * (kInv4Pi / r);
  const cplx f = g * (1.0 / r - kI * k) / r;
  return d.cast<cplx>() * f;
}

cplx eval_kernel_d(KernelKind kind, cplx k, const Vec3& d, double r, const Vec3& nx,
                   const Vec3& ny) {
  check_distance(r);
  const double rinv = 1.0 / r;
  const cplx ik = kI * k;
  const cplx g = std::exp(ik * r) * (kInv4Pi * rinv);
  // grad_y G = d * h, grad_x G = -d * h
  const cplx h = g * (rinv - ik) * rinv;
  switch (kind) {
    case KernelKind::SingleLayer:
      return g;
    case KernelKind::DoubleLayer:
      return ny.dot(d) * h;
    case KernelKind::CombinedField:
      return ny.dot(d) * h - ik * g;
    case KernelKind::SingleLayerNormalDeriv:
      return -nx.dot(d) * h;
    case KernelKind::IncomingProxy: {
      // With G' = dG/dr and F = G'/r = -h:  ny.grad_y G = -F (ny.d), and
      // nx.grad_x (ny.grad_y G) = -F'(r) (nx.d)(ny.d)/r - F (nx.ny).
      const cplx a = ik - rinv;
      const cplx F = -h;
      const cplx Fp = g * (a * a * rinv + rinv * rinv * rinv - a * rinv * rinv);
      const double nxd = nx.dot(d), nyd = ny.dot(d);
      const cplx c = nyd * h - ik * g;
      const cplx dxc = -Fp * nxd * nyd * rinv - F * nx.dot(ny) + ik * h * nxd;
      return -ik * c + dxc;
    }
  }
  return 0.0;
}

cplx eval_kernel(KernelKind kind, cplx k, const Vec3& x, const Vec3& nx, const Vec3& y,
                 const Vec3& ny) {
  const Vec3 d = x - y;
  return eval_kernel_d(kind, k, d, d.norm(), nx, ny);
}

VectorXc incident_point_sources(cplx k, const std::vector<PointSource>& sources,
                                const Eigen::Matrix3Xd& targets) {
  VectorXc f = VectorXc::Zero(targets.cols());
  for (Eigen::Index t = 0; t < targets.cols(); ++t) {
    cplx acc = 0.0;
    for (const PointSource& s : sources) {
      const double r = (targets.col(t) - s.position).norm();
      check_distance(r);
      acc += s.strength * std::exp(kI * k * r) / r;
    }
    f[t] = acc;
  }
  return f;
}

VectorXc incident_plane_wave(cplx k, const Vec3& direction, const Eigen::Matrix3Xd& targets) {
  VectorXc f(targets.cols());
  for (Eigen::Index t = 0; t < targets.cols(); ++t)
    f[t] = std::exp(kI * k * targets.col(t).dot(direction));
  return f;
}

}  // namespace fmmlu
