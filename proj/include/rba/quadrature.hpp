#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "rba/qtensor.hpp"
#include "rba/types.hpp"

namespace rba {

namespace detail {

struct GaussRule {
  std::vector<double> x;  // nodes on (-1, 1)
  std::vector<double> w;
};

// Gauss-Legendre nodes by Newton iteration on P_n (Golub-Welsch is overkill
// for a handful of cached sizes).
inline GaussRule compute_gauss_legendre(int n) {
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
  return r;
}

// Nodes mapped to [a, b] with interval weights folded in; cached per (n,a,b)
// bucket since only a few sizes ever occur.
inline const GaussRule& gauss_on(int n, double a, double b) {
  static std::map<std::tuple<int, double, double>, GaussRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(n, a, b);
  auto it = cache.find(key);
  if (it == cache.end()) {
    const GaussRule g = compute_gauss_legendre(n);
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
      r.x[i] = mid + half * g.x[i];
      r.w[i] = half * g.w[i];
    }
    it = cache.emplace(key, std::move(r)).first;
  }
  return it->second;
}

}  // namespace detail

/// Moments of the von Mises density with diagonal parameter, computed in the
/// quaternion picture where the exponent is sum_i t_i q_i^2:
///   log_z = ln integral of exp over the Haar measure,
///   m[i]  = E[q_i^2],  m2(i,j) = E[q_i^2 q_j^2].
struct DiagMoments {
  double log_z = 0.0;
  Vec4 m = Vec4::Constant(0.25);
  Mat4 m2 = Mat4::Zero();
  bool has_m2 = false;
};

enum class MomentLevel { Flux, Full };

namespace detail {

// The exact moments are invariant under permutations of coordinates with
// equal exponents (t_i = t_j). Averaging the computed moments over those
// permutation orbits removes the ~1e-12 rule asymmetry that would otherwise
// seed the unstable transverse modes of invariant rays (e.g. d = (x, 0, 0)).
inline void symmetrize_moments(const Vec4& t, DiagMoments& mom) {
  int group[4];
  for (int i = 0; i < 4; ++i) {
    group[i] = i;
    for (int j = 0; j < i; ++j) {
      if (t[j] == t[i]) {
        group[i] = group[j];
        break;
      }
    }
  }
  bool any_tie = false;
  for (int i = 0; i < 4; ++i) any_tie |= group[i] != i;
  if (!any_tie) return;

  Vec4 sum = Vec4::Zero(), cnt = Vec4::Zero();
  for (int i = 0; i < 4; ++i) {
    sum[group[i]] += mom.m[i];
    cnt[group[i]] += 1.0;
  }
  for (int i = 0; i < 4; ++i) mom.m[i] = sum[group[i]] / cnt[group[i]];

  if (mom.has_m2) {
    // orbit of (a, b): all (a', b') with matching groups and matching
    // equality pattern (diagonal entries only average with diagonal ones)
    Mat4 avg;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        double s = 0.0;
        int n = 0;
        for (int x = 0; x < 4; ++x) {
          if (group[x] != group[a]) continue;
          for (int y = 0; y < 4; ++y) {
            if (group[y] != group[b]) continue;
            if ((x == y) != (a == b)) continue;
            s += mom.m2(x, y);
            ++n;
          }
        }
        avg(a, b) = s / n;
      }
    }
    mom.m2 = avg;
  }
}

// Product Gauss-Legendre rule on S^3 in hyperspherical coordinates
// q = (cos psi, sin psi cos th, sin psi sin th cos ph, sin psi sin th sin ph),
// normalized measure sin^2(psi) sin(th) / (2 pi^2).
// Every integrand here is even in each q_i, so the rule is folded onto the
// sixteenth psi, th, ph in [0, pi/2] (x16); n is the full-sphere-equivalent
// psi count, i.e. n = 64 matches a 64 x 32 x 32 rule on the whole sphere.
// The largest exponent t0 is factored out so the integrand stays in [0, 1].
inline DiagMoments s3_moments_rule(const Vec4& t, int n, MomentLevel level) {
  const double t0 = t.maxCoeff();
  const auto& psi = gauss_on(n / 2, 0.0, 0.5 * M_PI);
  const auto& th = gauss_on(std::max(n / 4, 4), 0.0, 0.5 * M_PI);
  const auto& ph = gauss_on(std::max(n / 8, 4), 0.0, 0.5 * M_PI);
  const size_t n_th = th.x.size(), n_ph = ph.x.size();

  // per-node cos^2 tables for the two inner coordinates
  thread_local std::vector<double> c2th, c2ph;
  c2th.resize(n_th);
  c2ph.resize(n_ph);
  for (size_t j = 0; j < n_th; ++j) {
    const double c = std::cos(th.x[j]);
    c2th[j] = c * c;
  }
  for (size_t k = 0; k < n_ph; ++k) {
    const double c = std::cos(ph.x[k]);
    c2ph[k] = c * c;
  }

  double zw = 0.0;
  Vec4 m = Vec4::Zero();
  Mat4 m2 = Mat4::Zero();
  Vec4 q2;
  for (int i = 0; i < n / 2; ++i) {
    const double cp = std::cos(psi.x[i]);
    const double sp = std::sin(psi.x[i]);
    const double w_i = 16.0 * psi.w[i] * sp * sp / (2.0 * M_PI * M_PI);
    q2[0] = cp * cp;
    const double s2 = sp * sp;
    for (size_t j = 0; j < n_th; ++j) {
      const double w_ij = w_i * th.w[j] * std::sin(th.x[j]);
      q2[1] = s2 * c2th[j];
      const double s2t2 = s2 - q2[1];
      const double base = (t[0] - t0) * q2[0] + (t[1] - t0) * q2[1] + (t[3] - t0) * s2t2;
      const double slope = (t[2] - t[3]) * s2t2;
      for (size_t k = 0; k < n_ph; ++k) {
        q2[2] = s2t2 * c2ph[k];
        q2[3] = s2t2 - q2[2];
        const double e = w_ij * ph.w[k] * std::exp(base + slope * c2ph[k]);
        zw += e;
        m += e * q2;
        if (level == MomentLevel::Full) m2 += (e * q2) * q2.transpose();
      }
    }
  }
  DiagMoments out;
  out.log_z = t0 + std::log(zw);
  out.m = m / zw;
  if (level == MomentLevel::Full) {
    out.m2 = m2 / zw;
    out.has_m2 = true;
  }
  symmetrize_moments(t, out);
  return out;
}

inline double moments_change(const DiagMoments& a, const DiagMoments& b) {
  double c = std::abs(a.log_z - b.log_z) / std::max(1.0, std::abs(b.log_z));
  c = std::max(c, (a.m - b.m).cwiseAbs().maxCoeff());
  if (a.has_m2 && b.has_m2) c = std::max(c, (a.m2 - b.m2).cwiseAbs().maxCoeff());
  return c;
}

}  // namespace detail

inline constexpr double kEnvelopeNorm = 50.0;  // max half-trace norm of J
inline constexpr int kQuadBase = 64;
inline constexpr int kQuadMax = 1024;
inline constexpr double kQuadRelTol = 1e-10;

/// Moments for diagonal parameter d: the base 64-equivalent rule is doubled
/// until the relative change drops below 1e-10, and the finer result is
/// returned.
inline DiagMoments diag_moments(const Vec3& d, MomentLevel level = MomentLevel::Full) {
  if (!d.allFinite() || std::sqrt(0.5 * d.squaredNorm()) > kEnvelopeNorm) {
    throw envelope_error("diag_moments: parameter outside quadrature envelope (|J| <= 50)");
  }
  const Vec4 t = quaternion_exponent_diag(d);
  DiagMoments prev = detail::s3_moments_rule(t, kQuadBase, level);
  for (int n = 2 * kQuadBase; n <= kQuadMax; n *= 2) {
    DiagMoments next = detail::s3_moments_rule(t, n, level);
    if (detail::moments_change(prev, next) < kQuadRelTol) return next;
    prev = next;
  }
  throw convergence_error("diag_moments: quadrature did not converge within rule cap");
}

/// Reusable quadrature for flows: the rule size is validated by doubling on
/// the first call and re-validated only when the exponent spread grows beyond
/// the envelope it was checked at. When the coarse rule already agrees with
/// its doubling to 1e-12 the coarse size is kept for subsequent calls.
class MomentEvaluator {
 public:
  explicit MomentEvaluator(MomentLevel level = MomentLevel::Flux) : level_(level) {}

  DiagMoments operator()(const Vec3& d) {
    if (!d.allFinite() || std::sqrt(0.5 * d.squaredNorm()) > kEnvelopeNorm) {
      throw envelope_error("MomentEvaluator: parameter outside quadrature envelope");
    }
    const Vec4 t = quaternion_exponent_diag(d);
    const double spread = t.maxCoeff() - t.minCoeff();
    if (n_ == 0 || spread > validated_spread_) {
      DiagMoments prev = detail::s3_moments_rule(t, kQuadBase, level_);
      for (int n = 2 * kQuadBase; n <= kQuadMax; n *= 2) {
        DiagMoments next = detail::s3_moments_rule(t, n, level_);
        const double change = detail::moments_change(prev, next);
        if (change < kQuadRelTol) {
          n_ = change < 1e-12 ? n / 2 : n;
          validated_spread_ = 1.25 * spread + 1.0;
          return next;
        }
        prev = next;
      }
      throw convergence_error("MomentEvaluator: quadrature did not converge");
    }
    return detail::s3_moments_rule(t, n_, level_);
  }

 private:
  MomentLevel level_;
  int n_ = 0;
  double validated_spread_ = 0.0;
};

/// Diagonal of the flux of M_diag(d): E[diag(Phi(q))] from the q^2 moments.
inline Vec3 flux_diag_from_moments(const Vec4& m) {
  return Vec3(m[0] + m[1] - m[2] - m[3], m[0] - m[1] + m[2] - m[3],
              m[0] - m[1] - m[2] + m[3]);
}

}  // namespace rba
