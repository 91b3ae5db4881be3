#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "fmmlu/types.hpp"

namespace fmmlu {

/// Point and tangents of a chart at one parameter value.
struct ChartPoint {
  Vec3 x;
  Vec3 xu;
  Vec3 xv;
};

/// Smooth map from the unit square [0,1]^2 to a surface patch.
struct Chart {
  std::function<ChartPoint(double, double)> map;

  ChartPoint operator()(double u, double v) const { return map(u, v); }
};

struct Patch {
  Chart chart;
  Vec3 center;      // image of (1/2, 1/2)
  double diameter;  // max pairwise distance of corners and center image
  int first;        // first node index
  int count;        // number of nodes (order^2)
};

/// Nodes, normals and smooth weights of a patch-based surface discretization.
///
/// Nodes of patch j occupy [first, first + order^2), ordered with the
/// u-index major: node (a, b) sits at offset a * order + b.
struct SurfaceDiscretization {
  int order = 0;
  Eigen::Matrix3Xd nodes;
  Eigen::Matrix3Xd normals;
  Eigen::VectorXd weights;
  Eigen::Matrix2Xd params;  // (u, v) preimage of each node in its patch
  std::vector<int> patch_of_node;
  std::vector<Patch> patches;

  int size() const { return static_cast<int>(weights.size()); }
  int num_patches() const { return static_cast<int>(patches.size()); }
  double area() const { return weights.sum(); }
  /// Radius of the smallest origin-centered ball containing all nodes.
  double circumscribed_radius() const;
};

/// Builds a discretization from charts; every patch gets a p x p Gauss-Legendre grid.
SurfaceDiscretization discretize(std::vector<Chart> charts, int p);

/// The wiggly torus X(u,v) on [0,2pi]^2 split into nu x nv patches.
SurfaceDiscretization make_wiggly_torus(int nu, int nv, int p);
ChartPoint wiggly_torus_point(double u, double v);

/// Cube-to-sphere projection, m x m patches per cube face.
SurfaceDiscretization make_sphere(double radius, int m, int p);

/// Flattened ellipsoid with patches graded toward the +z pole.
SurfaceDiscretization make_multiscale_plate(int refine_depth, int p);

/// Semi-axes of the multiscale plate ellipsoid.
inline constexpr double kPlateAxes[3] = {1.0, 0.8, 0.4};

enum class GeometryKind { Torus, Sphere, Plate };

/// `count` points strictly inside the surface. For the torus the tube is
/// shrunk by `scale` around its core curve at random (u, v); for the sphere
/// and plate, randomly chosen nodes of `disc` are scaled about the origin.
Eigen::Matrix3Xd interior_points(GeometryKind kind, const SurfaceDiscretization& disc, int count,
                                 double scale, unsigned seed);

/// Writes x,y,z,nx,ny,nz,w,patch rows.
void write_csv(const SurfaceDiscretization& disc, std::ostream& out);

}  // namespace fmmlu
