#pragma once

#include <functional>
#include <vector>

#include "rba/quadrature.hpp"
#include "rba/rng.hpp"
#include "rba/so3.hpp"
#include "rba/types.hpp"

namespace rba {

struct MomentReport {
  Mat3 flux;
  std::function<double(const Mat3&)> second_moment_form;  // H -> E[(A.H)^2]
};

/// The generalized von Mises distribution M_J on SO(3), density
/// exp(J.A)/Z(J) against the Haar measure. Everything is computed on the
/// SSVD diagonal of J and rotated back, so Z depends on J only through d.
/// Instances are immutable after construction and safe to share.
class VonMises {
 public:
  explicit VonMises(const Mat3& j)
      : j_(j), svd_(ssvd(j)), mom_(diag_moments(svd_.d, MomentLevel::Full)) {
    exponent_ = 2.0 * iso_phi(j);
    max_exponent_ = 0.5 * svd_.d.sum();  // max of J.A over SO(3), reached at PQ
  }

  const Mat3& parameter() const { return j_; }
  const Ssvd& decomposition() const { return svd_; }

  /// ln Z(J).
  double log_partition() const { return mom_.log_z; }

  /// The flux (first moment) of M_J. Diagonal parameters give diagonal flux;
  /// in general the diagonal result is rotated back through the SSVD frame.
  Mat3 mean_flux() const {
    const Vec3 f = flux_diag_from_moments(mom_.m);
    return svd_.p * f.asDiagonal() * svd_.q;
  }

  /// E[(A.H)^2] under M_J. In the quaternion picture A.H is the quadratic
  /// form 2 q^T phi(H') q with H' the SSVD-frame pullback of H, so the value
  /// assembles from fourth moments of q.
  double second_moment(const Mat3& h) const {
    const Mat4 s = iso_phi(svd_.p.transpose() * h * svd_.q.transpose());
    double diag_part = 0.0;
    double off_part = 0.0;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) diag_part += s(a, a) * s(b, b) * mom_.m2(a, b);
    }
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) off_part += s(a, b) * s(a, b) * mom_.m2(a, b);
    }
    return 4.0 * (diag_part + 4.0 * off_part);
  }

  MomentReport moment_report() const {
    return MomentReport{mean_flux(), [self = *this](const Mat3& h) { return self.second_moment(h); }};
  }

  /// Expected acceptance rate of the rejection sampler, Z(J) / exp(max J.A).
  double acceptance_rate() const { return std::exp(mom_.log_z - max_exponent_); }

  /// Exact sampling by rejection against the Haar proposal: accept a Haar
  /// quaternion q with probability exp(J.Phi(q) - max J.A).
  Rotation sample(Rng& rng) const {
    if (acceptance_rate() < 1e-6) {
      throw envelope_error("VonMises::sample: acceptance rate below 1e-6; parameter too concentrated");
    }
    for (;;) {
      Vec4 q = rng.gauss4();
      q.normalize();
      const double s = q.dot(exponent_ * q);
      if (rng.uniform() <= std::exp(s - max_exponent_)) {
        return detail::quat_to_matrix(q[0], q[1], q[2], q[3]);
      }
    }
  }

 private:
  Mat3 j_;
  Ssvd svd_;
  DiagMoments mom_;
  Mat4 exponent_;        // 2 phi(J): J.Phi(q) = q^T (2 phi(J)) q
  double max_exponent_;  // (d1+d2+d3)/2
};

inline double log_partition(const Mat3& j) { return VonMises(j).log_partition(); }

inline Mat3 mean_flux(const Mat3& j) { return VonMises(j).mean_flux(); }

inline double second_moment(const Mat3& j, const Mat3& h) { return VonMises(j).second_moment(h); }

/// (1/N) sum of the ensemble rotations. Callers scale by rho when they need
/// the flux J of the interacting system.
inline Mat3 empirical_flux(const std::vector<Rotation>& ensemble) {
  if (ensemble.empty()) throw std::invalid_argument("empirical_flux: empty ensemble");
  Mat3 sum = Mat3::Zero();
  for (const auto& a : ensemble) sum += a;
  return sum / static_cast<double>(ensemble.size());
}

/// Relative entropy H(rho M_J1 | rho M_J2) in closed form on the family:
/// rho [ flux(J1).(J1-J2) + ln Z(J2) - ln Z(J1) ]. Nonnegative, zero iff the
/// two distributions coincide.
inline double kl_von_mises(double rho, const Mat3& j1, const Mat3& j2) {
  if (rho <= 0.0) throw std::invalid_argument("kl_von_mises: rho must be positive");
  const VonMises m1(j1);
  const VonMises m2(j2);
  return rho * (half_trace_inner(m1.mean_flux(), j1 - j2) + m2.log_partition() -
                m1.log_partition());
}

}  // namespace rba
