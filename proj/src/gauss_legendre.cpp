#include "fmmlu/gauss_legendre.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace fmmlu {

namespace {

GaussRule compute_rule(int n) {
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
    }
    // Node i counted from the right end; store increasing on [0, 1].
    const int j = n - 1 - i;
    r.x[j] = 0.5 * (1.0 + z);
    r.w[j] = 1.0 / ((1.0 - z * z) * dp * dp);  // 2/(...) halved for [0,1]
  }
  r.bary.resize(n);
  for (int i = 0; i < n; ++i) {
    double prod = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != i) prod *= (r.x[i] - r.x[j]);
    r.bary[i] = 1.0 / prod;
  }
  return r;
}

}  // namespace

void GaussRule::lagrange(double t, double* out) const {
  const int n = size();
  double denom = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = t - x[i];
    if (d == 0.0) {
      for (int j = 0; j < n; ++j) out[j] = (j == i) ? 1.0 : 0.0;
      return;
    }
    out[i] = bary[i] / d;
    denom += out[i];
  }
  for (int i = 0; i < n; ++i) out[i] /= denom;
}

const GaussRule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussRule>(compute_rule(n));
  return *slot;
}

}  // namespace fmmlu
