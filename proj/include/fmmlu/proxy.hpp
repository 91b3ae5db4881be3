#pragma once

#include "fmmlu/octree.hpp"
#include "fmmlu/types.hpp"

namespace fmmlu {

/// Sphere of sample points around a box: Gauss-Legendre in cos(theta)
/// times equispaced azimuth, with smooth area weights.
struct ProxySurface {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  int order = 0;  // p: p + 1 polar by 2p azimuthal points
  Eigen::Matrix3Xd points;
  Eigen::Matrix3Xd normals;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(weights.size()); }
};

/// max(p_min, ceil(kappa + 1.8 (log10(1/eps))^{2/3} kappa^{1/3})), kappa = |k| rho side.
int proxy_order(cplx k, double rho, double side, double eps, int p_min = 8);

ProxySurface make_proxy_sphere(const Vec3& center, double radius, int order);

ProxySurface make_proxy(const Box& box, double rho, cplx k, double eps, int p_min = 8);

}  // namespace fmmlu
