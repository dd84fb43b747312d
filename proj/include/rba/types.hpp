#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace rba {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// A 3x3 special orthogonal matrix. Validity is checked by helpers, not by
/// the type system; long integrations repair drift via renormalize().
using Rotation = Mat3;

/// Thrown when an argument leaves the numerical validity envelope of an
/// operation (quadrature range, branch domain, ...).
class envelope_error : public std::domain_error {
 public:
  explicit envelope_error(const std::string& what) : std::domain_error(what) {}
};

/// Thrown when an iterative procedure fails to reach its target tolerance.
class convergence_error : public std::runtime_error {
 public:
  explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rba
