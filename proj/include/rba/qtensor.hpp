#pragma once

#include <Eigen/LU>
#include <array>

#include "rba/quat.hpp"
#include "rba/types.hpp"

namespace rba {

/// Q-tensors: symmetric trace-free 4x4 matrices. Stored as plain Mat4;
/// symmetry and zero trace are produced by construction.
using QTensor = Mat4;

namespace detail {

// quat_to_matrix is a homogeneous quadratic in (w,x,y,z), so it evaluates the
// defining quadratic form on all of R^4, not only on unit quaternions.
inline double phi_form(const Mat3& j, const Vec4& v) {
  const Mat3 m = quat_to_matrix(v[0], v[1], v[2], v[3]);
  return 0.25 * (j.array() * m.array()).sum();  // = (1/2) j . Phi(v)
}

// Polarization of v -> phi_form(j, v) into a symmetric bilinear form.
inline Mat4 polarize_phi(const Mat3& j) {
  Mat4 t;
  std::array<double, 4> diag{};
  for (int k = 0; k < 4; ++k) {
    diag[k] = phi_form(j, Vec4::Unit(k));
    t(k, k) = diag[k];
  }
  for (int k = 0; k < 4; ++k) {
    for (int l = k + 1; l < 4; ++l) {
      const double f = phi_form(j, Vec4::Unit(k) + Vec4::Unit(l));
      t(k, l) = t(l, k) = 0.5 * (f - diag[k] - diag[l]);
    }
  }
  return t;
}

// 9 coordinates of a symmetric trace-free 4x4 matrix.
inline Eigen::Matrix<double, 9, 1> qtensor_coords(const Mat4& t) {
  Eigen::Matrix<double, 9, 1> c;
  c << t(0, 0), t(1, 1), t(2, 2), t(0, 1), t(0, 2), t(0, 3), t(1, 2), t(1, 3), t(2, 3);
  return c;
}

struct PhiTables {
  std::array<Mat4, 9> basis;                   // phi(E_ab), row-major ab
  Eigen::FullPivLU<Eigen::Matrix<double, 9, 9>> lu;  // coords(phi(J)) = M vec(J)

  PhiTables() {
    Eigen::Matrix<double, 9, 9> m;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        Mat3 e = Mat3::Zero();
        e(a, b) = 1.0;
        const int k = 3 * a + b;
        basis[k] = polarize_phi(e);
        m.col(k) = qtensor_coords(basis[k]);
      }
    }
    lu.compute(m);
  }
};

inline const PhiTables& phi_tables() {
  static const PhiTables tables;
  return tables;
}

}  // namespace detail

/// The linear isomorphism M3(R) -> S4^0(R) defined by
/// (1/2) J . Phi(q) = q^T phi(J) q for all unit quaternions q.
/// It satisfies phi(Phi(q)) = q (x) q - I/4 and maps diagonal to diagonal.
inline QTensor iso_phi(const Mat3& j) {
  const auto& tb = detail::phi_tables();
  Mat4 t = Mat4::Zero();
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      t += j(a, b) * tb.basis[3 * a + b];
    }
  }
  return t;
}

inline Mat3 iso_phi_inv(const QTensor& t) {
  const auto& tb = detail::phi_tables();
  const Eigen::Matrix<double, 9, 1> v = tb.lu.solve(detail::qtensor_coords(t));
  Mat3 j;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) j(a, b) = v[3 * a + b];
  }
  return j;
}

/// Diagonal of 2 phi(diag(d)): the exponent of the von Mises density in the
/// quaternion picture, J . Phi(q) = sum_i t_i q_i^2.
inline Vec4 quaternion_exponent_diag(const Vec3& d) {
  return 0.5 * Vec4(d[0] + d[1] + d[2], d[0] - d[1] - d[2], -d[0] + d[1] - d[2],
                    -d[0] - d[1] + d[2]);
}

}  // namespace rba
