#pragma once

#include <cmath>

#include "rba/rng.hpp"
#include "rba/types.hpp"

namespace rba {

inline constexpr double kRotationTol = 1e-9;

/// Inner product A.B = Tr(A B^T)/2 on 3x3 matrices. Under this metric
/// ||R||^2 = 3/2 for every rotation and hat() is an isometry.
inline double half_trace_inner(const Mat3& a, const Mat3& b) {
  return 0.5 * (a.array() * b.array()).sum();
}

inline double ht_norm(const Mat3& a) { return std::sqrt(half_trace_inner(a, a)); }

/// Antisymmetric matrix of u: hat(u) v = u x v.
inline Mat3 hat(const Vec3& u) {
  Mat3 m;
  m << 0.0, -u.z(), u.y(),
       u.z(), 0.0, -u.x(),
      -u.y(), u.x(), 0.0;
  return m;
}

/// Inverse of hat() on antisymmetric matrices (takes the antisymmetric part
/// first, so it is usable on nearly antisymmetric input).
inline Vec3 unhat(const Mat3& m) {
  return Vec3(0.5 * (m(2, 1) - m(1, 2)),
              0.5 * (m(0, 2) - m(2, 0)),
              0.5 * (m(1, 0) - m(0, 1)));
}

/// Orthogonal projection of h onto the tangent space of SO(3) at a:
/// P_a(h) = (h - a h^T a)/2.
inline Mat3 tangent_project(const Rotation& a, const Mat3& h) {
  return 0.5 * (h - a * h.transpose() * a);
}

struct AxisAngle {
  double theta = 0.0;  // in [0, pi]
  Vec3 axis = Vec3::UnitX();
};

/// Rotation of angle theta about unit axis n:
/// R = cos(theta) I + sin(theta) hat(n) + (1-cos(theta)) n n^T.
inline Rotation rodrigues(double theta, const Vec3& axis) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return c * Mat3::Identity() + s * hat(axis) + (1.0 - c) * (axis * axis.transpose());
}

inline Rotation rodrigues(const AxisAngle& aa) { return rodrigues(aa.theta, aa.axis); }

/// exp(hat(w)) evaluated through the axis-angle form; exact on the group.
inline Rotation exp_hat(const Vec3& w) {
  const double theta = w.norm();
  if (theta < 1e-14) {
    // second-order series keeps the result orthogonal to rounding
    return Mat3::Identity() + hat(w) + 0.5 * hat(w) * hat(w);
  }
  return rodrigues(theta, w / theta);
}

inline bool is_rotation(const Mat3& r, double tol = kRotationTol) {
  const Mat3 e = r * r.transpose() - Mat3::Identity();
  return ht_norm(e) < tol && std::abs(r.determinant() - 1.0) < tol;
}

namespace detail {

// Deterministic sign fix: first component larger than `tol` in absolute
// value is made positive.
inline Vec3 lex_sign(const Vec3& v, double tol = 1e-12) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v[i]) > tol) return v[i] > 0.0 ? v : Vec3(-v);
  }
  return v;
}

}  // namespace detail

/// Axis-angle extraction with robust branches at theta ~ 0 and theta ~ pi.
/// At theta = pi the axis sign is not determined by the rotation; ties are
/// broken by making the first nonzero component positive.
inline AxisAngle axis_angle_of(const Rotation& r) {
  const Vec3 w = unhat(r);  // = sin(theta) * axis
  // atan2 keeps full precision at both ends, where acos of the trace loses
  // half the digits
  const double theta = std::atan2(w.norm(), 0.5 * (r.trace() - 1.0));
  AxisAngle aa;
  aa.theta = theta;

  if (theta < 1e-7) {
    const double wn = w.norm();
    aa.axis = wn > 1e-14 ? Vec3(w / wn) : Vec3::UnitX();
    return aa;
  }
  if (theta < M_PI - 1e-4) {
    aa.axis = w.normalized();
    return aa;
  }
  // near pi: sin(theta) cancels, recover the axis from R + I = 2 n n^T + O(pi-theta)
  const Mat3 k = 0.5 * (r + Mat3::Identity());
  int p = 0;
  k.diagonal().maxCoeff(&p);
  Vec3 n;
  n[p] = std::sqrt(std::max(k(p, p), 0.0));
  for (int i = 0; i < 3; ++i) {
    if (i != p) n[i] = 0.5 * (k(p, i) + k(i, p)) / n[p];
  }
  n.normalize();
  if (w.norm() > 1e-9) {
    if (n.dot(w) < 0.0) n = -n;  // sign still determined away from pi
  } else {
    n = detail::lex_sign(n);
  }
  aa.axis = n;
  return aa;
}

namespace detail {

/// Rotation matrix of the unit quaternion (w,x,y,z) acting by conjugation.
inline Rotation quat_to_matrix(double w, double x, double y, double z) {
  Mat3 r;
  r << w * w + x * x - y * y - z * z, 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
      2.0 * (x * y + w * z), w * w - x * x + y * y - z * z, 2.0 * (y * z - w * x),
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), w * w - x * x - y * y + z * z;
  return r;
}

}  // namespace detail

/// Haar-uniform rotation: a 4d standard Gaussian normalized to a unit
/// quaternion, pushed through the double cover. Exactly uniform, no trig
/// marginals involved.
inline Rotation haar_sample(Rng& rng) {
  Vec4 q = rng.gauss4();
  q.normalize();
  return detail::quat_to_matrix(q[0], q[1], q[2], q[3]);
}

/// Special singular value decomposition j = p * diag(d) * q with
/// p, q in SO(3) and d1 >= d2 >= |d3|. d is unique; p, q need not be.
struct Ssvd {
  Rotation p;
  Vec3 d;
  Rotation q;

  Mat3 reconstruct() const { return p * d.asDiagonal() * q; }
};

/// Ordinary SVD with the signs of det(U) and det(V) transferred onto the
/// smallest singular value so that both factors become special orthogonal.
inline Ssvd ssvd(const Mat3& j) {
  Eigen::JacobiSVD<Mat3> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  Vec3 d = svd.singularValues();  // sorted descending, nonnegative
  if (u.determinant() < 0.0) {
    u.col(2) *= -1.0;
    d[2] = -d[2];
  }
  if (v.determinant() < 0.0) {
    v.col(2) *= -1.0;
    d[2] = -d[2];
  }
  return Ssvd{u, d, v.transpose()};
}

/// Minimizer of ||j - A|| over SO(3): the product P Q of the SSVD factors.
/// Not unique when d2 = -d3; any minimizer is returned.
inline Rotation nearest_rotation(const Mat3& j) {
  const Ssvd s = ssvd(j);
  return s.p * s.q;
}

/// Repairs orthogonality drift accumulated by long integrations.
inline Rotation renormalize(const Mat3& r) { return nearest_rotation(r); }

}  // namespace rba
