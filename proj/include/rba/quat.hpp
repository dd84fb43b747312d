#pragma once

#include <cmath>

#include "rba/so3.hpp"
#include "rba/types.hpp"

namespace rba {

/// Unit quaternion w + x i + y j + z k.
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quat normalized() const {
    const double n = norm();
    return {w / n, x / n, y / n, z / n};
  }

  Quat conj() const { return {w, -x, -y, -z}; }

  Vec4 coeffs() const { return Vec4(w, x, y, z); }

  friend Quat operator*(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
  }

  friend Quat operator-(const Quat& a) { return {-a.w, -a.x, -a.y, -a.z}; }
};

/// The double cover Phi: the rotation u -> q u q*. Phi(-q) = Phi(q) and
/// Phi(q1 q2) = Phi(q1) Phi(q2). The axis-angle rotation R(theta, n)
/// corresponds to q = cos(theta/2) + sin(theta/2) n.
inline Rotation phi_map(const Quat& q) {
  if (std::abs(q.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("phi_map: quaternion norm deviates from 1 by more than 1e-9");
  }
  return detail::quat_to_matrix(q.w, q.x, q.y, q.z);
}

/// Inverse of phi_map up to sign; the representative with its first nonzero
/// component positive is returned. Uses the four-branch max-pivot extraction
/// to avoid cancellation near trace -1.
inline Quat quaternion_of(const Rotation& a) {
  const double t = a.trace();
  Quat q;
  if (t > a(0, 0) && t > a(1, 1) && t > a(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + t);
    q = {0.25 * s, (a(2, 1) - a(1, 2)) / s, (a(0, 2) - a(2, 0)) / s, (a(1, 0) - a(0, 1)) / s};
  } else if (a(0, 0) > a(1, 1) && a(0, 0) > a(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + a(0, 0) - a(1, 1) - a(2, 2));
    q = {(a(2, 1) - a(1, 2)) / s, 0.25 * s, (a(0, 1) + a(1, 0)) / s, (a(0, 2) + a(2, 0)) / s};
  } else if (a(1, 1) > a(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + a(1, 1) - a(0, 0) - a(2, 2));
    q = {(a(0, 2) - a(2, 0)) / s, (a(0, 1) + a(1, 0)) / s, 0.25 * s, (a(1, 2) + a(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + a(2, 2) - a(0, 0) - a(1, 1));
    q = {(a(1, 0) - a(0, 1)) / s, (a(0, 2) + a(2, 0)) / s, (a(1, 2) + a(2, 1)) / s, 0.25 * s};
  }
  q = q.normalized();
  const double comps[4] = {q.w, q.x, q.y, q.z};
  for (double c : comps) {
    if (std::abs(c) > 1e-12) return c > 0.0 ? q : -q;
  }
  return q;
}

}  // namespace rba
