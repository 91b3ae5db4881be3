#pragma once

#include <cmath>
#include <complex>
#include <numbers>

// Reference values computed independently of the solver.

namespace oracles {

/// Backscattered far-field amplitude of a sound-soft sphere of radius a for
/// the incident wave e^{ik x.d}, with u ~ e^{ikr}/r F. Partial-wave series
/// F(pi) = (i/k) sum_l (2l+1) (-1)^l j_l(ka) / h_l(ka).
inline std::complex<double> sound_soft_sphere_backscatter(double k, double a) {
  const double ka = k * a;
  const int lmax = static_cast<int>(ka + 12.0 * std::cbrt(ka) + 20.0);
  std::complex<double> s = 0.0;
  for (int l = 0; l <= lmax; ++l) {
    const double j = std::sph_bessel(l, ka);
    const std::complex<double> h(j, std::sph_neumann(l, ka));
    s += double(2 * l + 1) * (l % 2 ? -1.0 : 1.0) * j / h;
  }
  return std::complex<double>(0.0, 1.0) / k * s;
}

}  // namespace oracles
