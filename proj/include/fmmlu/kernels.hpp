#pragma once

#include <utility>
#include <vector>

#include "fmmlu/types.hpp"

namespace fmmlu {

enum class KernelKind { SingleLayer, DoubleLayer, CombinedField, SingleLayerNormalDeriv, IncomingProxy };

/// e^{ik|x-y|} / (4 pi |x-y|).
cplx green(cplx k, const Vec3& x, const Vec3& y);

/// Gradient of green with respect to y.
Eigen::Vector3cd green_grad_y(cplx k, const Vec3& x, const Vec3& y);

/// Kernel value for target x (normal nx) and source y (normal ny).
///
/// DoubleLayer = ny . grad_y G, SingleLayerNormalDeriv = nx . grad_x G,
/// CombinedField = DoubleLayer - ik SingleLayer, and IncomingProxy =
/// -ik C + nx . grad_x C with C the combined-field kernel. Normals that a
/// kind does not use are ignored.
cplx eval_kernel(KernelKind kind, cplx k, const Vec3& x, const Vec3& nx, const Vec3& y,
                 const Vec3& ny);

/// Same as eval_kernel with the geometry given as raw distance data.
/// d = x - y, r = |d|.
cplx eval_kernel_d(KernelKind kind, cplx k, const Vec3& d, double r, const Vec3& nx,
                   const Vec3& ny);

struct PointSource {
  Vec3 position;
  cplx strength;
};

/// sum_j q_j e^{ik|x - x_j|} / |x - x_j| (no 1/(4 pi) factor).
VectorXc incident_point_sources(cplx k, const std::vector<PointSource>& sources,
                                const Eigen::Matrix3Xd& targets);

/// e^{ik x.d} per target.
VectorXc incident_plane_wave(cplx k, const Vec3& direction, const Eigen::Matrix3Xd& targets);

}  // namespace fmmlu
