#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fmmlu/kernels.hpp"

using namespace fmmlu;

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return Vec3(u(rng), u(rng), u(rng));
}

Vec3 random_unit(std::mt19937_64& rng) { return random_point(rng).normalized(); }

// Central difference of green along direction e at the source point y.
cplx fd_dy(cplx k, const Vec3& x, const Vec3& y, const Vec3& e, double h) {
  return (green(k, x, y + h * e) - green(k, x, y - h * e)) / (2.0 * h);
}

cplx fd_dx(cplx k, const Vec3& x, const Vec3& y, const Vec3& e, double h) {
  return (green(k, x + h * e, y) - green(k, x - h * e, y)) / (2.0 * h);
}

}  // namespace

TEST_CASE("green: Laplace limit and phase identity") {
  CHECK(std::abs(green(0.0, Vec3(2, 0, 0), Vec3(0, 0, 0)) - 1.0 / (8.0 * kPi)) < 1e-17);
  CHECK(std::abs(green(kPi, Vec3(1, 0, 0), Vec3(0, 0, 0)) - (-1.0 / (4.0 * kPi))) < 1e-16);
}

TEST_CASE("green: k = 0.97 against long double evaluation") {
  const long double k = 0.97L;
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double re = std::cos(k) / (4.0L * pi);
  const long double im = std::sin(k) / (4.0L * pi);
  const cplx g = green(0.97, Vec3(1, 0, 0), Vec3(0, 0, 0));
  CHECK(std::abs(g.real() - static_cast<double>(re)) < 1e-16);
  CHECK(std::abs(g.imag() - static_cast<double>(im)) < 1e-16);
}

TEST_CASE("green: coincident points are rejected") {
  CHECK_THROWS_AS(green(1.0, Vec3(1, 2, 3), Vec3(1, 2, 3)), SingularEvaluation);
  CHECK_THROWS_AS(eval_kernel(KernelKind::CombinedField, 1.0, Vec3(0, 0, 0), Vec3(0, 0, 1),
                              Vec3(0, 0, 0), Vec3(0, 0, 1)),
                  SingularEvaluation);
}

TEST_CASE("green: reciprocity is exact") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const Vec3 x = random_point(rng), y = random_point(rng);
    const cplx k(0.5 + t * 0.05, 0.01 * (t % 3));
    CHECK(green(k, x, y) == green(k, y, x));
  }
}

TEST_CASE("green: Helmholtz equation by finite differences") {
  std::mt19937_64 rng(5);
  const double h = 1e-4;
  for (int t = 0; t < 20; ++t) {
    const Vec3 x = random_point(rng);
    const Vec3 y = x + 0.5 * random_unit(rng) + 0.3 * random_point(rng);
    const cplx k(0.97 + 0.2 * t, 0.0);
    cplx lap = -6.0 * green(k, x, y);
    for (int d = 0; d < 3; ++d) {
      const Vec3 e = Vec3::Unit(d);
      lap += green(k, x + h * e, y) + green(k, x - h * e, y);
    }
    lap /= h * h;
    const cplx g = green(k, x, y);
    // truncation error ~ h^2 |k|^4 |g|, roundoff ~ eps/h^2
    CHECK(std::abs(lap + k * k * g) <= 1e-5 * (1.0 + std::norm(k) * std::norm(k)) * std::abs(g));
  }
}

TEST_CASE("eval_kernel: double layer axial example") {
  const cplx v = eval_kernel(KernelKind::DoubleLayer, 0.0, Vec3(0, 0, 2), Vec3::Zero(), Vec3(0, 0, 1),
                             Vec3(0, 0, 1));
  CHECK(std::abs(v - 1.0 / (4.0 * kPi)) < 1e-16);
}

TEST_CASE("eval_kernel: combined field reduces to double layer at k = 0") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const Vec3 x = random_point(rng), y = random_point(rng), ny = random_unit(rng);
    CHECK(eval_kernel(KernelKind::CombinedField, 0.0, x, Vec3::Zero(), y, ny) ==
          eval_kernel(KernelKind::DoubleLayer, 0.0, x, Vec3::Zero(), y, ny));
  }
}

TEST_CASE("eval_kernel: combined field = double layer - ik single layer") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 100; ++t) {
    const Vec3 x = random_point(rng), y = random_point(rng), ny = random_unit(rng);
    const cplx k(0.1 + 0.3 * t, 0.05);
    const cplx c = eval_kernel(KernelKind::CombinedField, k, x, Vec3::Zero(), y, ny);
    const cplx d = eval_kernel(KernelKind::DoubleLayer, k, x, Vec3::Zero(), y, ny);
    const cplx s = eval_kernel(KernelKind::SingleLayer, k, x, Vec3::Zero(), y, ny);
    CHECK(std::abs(c - (d - cplx(0, 1) * k * s)) <= 1e-14 * std::abs(c));
  }
}

TEST_CASE("eval_kernel: gradients against finite differences") {
  std::mt19937_64 rng(13);
  const cplx k = 0.97;
  const double h = 1e-5;
  for (int t = 0; t < 30; ++t) {
    const Vec3 x = random_point(rng);
    const Vec3 y = x + (0.5 + t * 0.05) * random_unit(rng);
    const Vec3 nx = random_unit(rng), ny = random_unit(rng);
    const cplx ik = cplx(0, 1) * k;

    const cplx cf = eval_kernel(KernelKind::CombinedField, k, x, nx, y, ny);
    const cplx cf_fd = fd_dy(k, x, y, ny, h) - ik * green(k, x, y);
    CHECK(std::abs(cf - cf_fd) <= 1e-7 * std::abs(cf));

    const cplx sd = eval_kernel(KernelKind::SingleLayerNormalDeriv, k, x, nx, y, ny);
    CHECK(std::abs(sd - fd_dx(k, x, y, nx, h)) <= 1e-7 * std::abs(sd) + 1e-12);

    // IncomingProxy: -ik C + nx . grad_x C with C differenced in x.
    auto C = [&](const Vec3& xx) { return eval_kernel(KernelKind::CombinedField, k, xx, nx, y, ny); };
    const cplx dxc = (C(x + h * nx) - C(x - h * nx)) / (2.0 * h);
    const cplx ip = eval_kernel(KernelKind::IncomingProxy, k, x, nx, y, ny);
    CHECK(std::abs(ip - (-ik * cf + dxc)) <= 1e-6 * std::abs(ip) + 1e-12);
  }
}

TEST_CASE("eval_kernel: analytic gradient matches green_grad_y") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const Vec3 x = random_point(rng), y = random_point(rng), ny = random_unit(rng);
    const cplx k(1.3, 0.2);
    const cplx a = ny.cast<cplx>().dot(green_grad_y(k, x, y));
    const cplx b = eval_kernel(KernelKind::DoubleLayer, k, x, Vec3::Zero(), y, ny);
    CHECK(std::abs(a - b) <= 1e-14 * std::abs(b));
  }
}

TEST_CASE("incident_point_sources: unit source, linearity and direct summation") {
  Eigen::Matrix3Xd tgt(3, 1);
  tgt.col(0) = Vec3(1, 0, 0);
  CHECK(std::abs(incident_point_sources(0.0, {{Vec3::Zero(), 1.0}}, tgt)[0] - 1.0) < 1e-15);

  std::mt19937_64 rng(19);
  std::normal_distribution<double> nd;
  std::vector<PointSource> src, src2;
  for (int j = 0; j < 50; ++j) {
    const PointSource s{0.5 * random_point(rng), cplx(nd(rng), nd(rng))};
    src.push_back(s);
    src2.push_back({s.position, 2.0 * s.strength});
  }
  Eigen::Matrix3Xd targets(3, 20);
  for (int t = 0; t < 20; ++t) targets.col(t) = 3.0 * random_unit(rng);
  const cplx k = 0.97;
  const VectorXc f = incident_point_sources(k, src, targets);
  const VectorXc f2 = incident_point_sources(k, src2, targets);
  CHECK((f2 - 2.0 * f).norm() <= 1e-14 * f.norm());
  for (int t = 0; t < 20; ++t) {
    cplx acc = 0.0;
    for (const PointSource& s : src) {
      const double r = (targets.col(t) - s.position).norm();
      acc += s.strength * std::exp(cplx(0, 1) * k * r) / r;
    }
    CHECK(f[t] == acc);
  }
}

TEST_CASE("incident_plane_wave: normalization") {
  Eigen::Matrix3Xd t(3, 3);
  t.col(0) = Vec3(0, 1, 0);
  t.col(1) = Vec3(1, 0, 0);
  t.col(2) = Vec3(0.3, -2, 5);
  const VectorXc a = incident_plane_wave(2.0 * kPi, Vec3(1, 0, 0), t);
  CHECK(std::abs(a[0] - 1.0) < 1e-15);
  CHECK(std::abs(a[1] - 1.0) < 1e-14);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(std::abs(a[i]) - 1.0) < 1e-15);
}
