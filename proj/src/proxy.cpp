#include "fmmlu/proxy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fmmlu/gauss_legendre.hpp"

namespace fmmlu {

int proxy_order(cplx k, double rho, double side, double eps, int p_min) {
  const double kappa = std::abs(k) * rho * side;
  const double digits = std::log10(1.0 / eps);
  const double est = kappa + 1.8 * std::pow(digits, 2.0 / 3.0) * std::cbrt(kappa);
  return std::max(p_min, static_cast<int>(std::ceil(est - 1e-12)));
}

ProxySurface make_proxy_sphere(const Vec3& center, double radius, int order) {
  ProxySurface g;
  g.center = center;
  g.radius = radius;
  g.order = order;
  const GaussRule& gl = gauss_legendre(order + 1);
  const int na = 2 * order;
  const int n = (order + 1) * na;
  g.points.resize(3, n);
  g.normals.resize(3, n);
  g.weights.resize(n);
  const double dphi = 2.0 * std::numbers::pi / na;
  int idx = 0;
  for (int a = 0; a <= order; ++a) {
    const double ct = 2.0 * gl.x[a] - 1.0;
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int b = 0; b < na; ++b) {
      const double phi = b * dphi;
      const Vec3 u(st * std::cos(phi), st * std::sin(phi), ct);
      g.normals.col(idx) = u;
      g.points.col(idx) = center + radius * u;
      g.weights[idx] = radius * radius * 2.0 * gl.w[a] * dphi;
      ++idx;
    }
  }
  return g;
}

ProxySurface make_proxy(const Box& box, double rho, cplx k, double eps, int p_min) {
  if (!(rho > std::sqrt(3.0) / 2.0 && rho < 2.5))
    throw std::invalid_argument("make_proxy: rho must lie in (sqrt(3)/2, 5/2)");
  return make_proxy_sphere(box.center, rho * box.side, proxy_order(k, rho, box.side, eps, p_min));
}

}  // namespace fmmlu
