#pragma once

#include <cstdio>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fmmlu {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;

/// Base class of all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularEvaluation : public Error {
 public:
  using Error::Error;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

class NonConvergent : public Error {
 public:
  NonConvergent(int target, int patch, double achieved)
      : Error("near quadrature did not converge for target " + std::to_string(target) +
              ", patch " + std::to_string(patch) +
              " (achieved " + format_double(achieved) + ")"),
        target(target), patch(patch), achieved(achieved) {}
  int target;
  int patch;
  double achieved;
};

class DepthExceeded : public Error {
 public:
  using Error::Error;
};

class SingularPivot : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class TargetTooClose : public Error {
 public:
  TargetTooClose(int target, int patch)
      : Error("target " + std::to_string(target) + " lies in the near region of patch " +
              std::to_string(patch)),
        target(target), patch(patch) {}
  int target;
  int patch;
};

}  // namespace fmmlu
