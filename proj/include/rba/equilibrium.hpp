#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rba/von_mises.hpp"

namespace rba {

inline constexpr double kRhoC = 6.0;       // upper threshold, exact
inline constexpr double kAlphaMax = 50.0;  // search bracket cap for all roots

namespace detail {

template <typename F>
double integrate_1d(F&& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      std::forward<F>(f), a, b, 15, 1e-12);
}

template <typename F>
double brent_root(F&& f, double a, double b, double tol = 1e-12, int max_iter = 200) {
  double fa = f(a), fb = f(b);
  if (fa * fb > 0.0) throw convergence_error("brent_root: endpoints do not bracket a root");
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol1 = 2.0 * 1e-16 * std::abs(b) + 0.5 * tol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
  }
  throw convergence_error("brent_root: iteration cap reached");
}

template <typename F>
double golden_min(F&& f, double a, double b, double tol = 1e-10) {
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1; f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2; f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

inline void check_alpha_envelope(double alpha) {
  if (!(std::abs(alpha) <= kAlphaMax)) {
    throw envelope_error("alpha outside the |alpha| <= 50 envelope");
  }
}

}  // namespace detail

/// Order parameter of the axial steady-state branch: the ratio of the two
/// angle-marginal integrals with weights (1/3)(2cos t + 1) sin^2(t/2) e^{a cos t}
/// and sin^2(t/2) e^{a cos t}. Strictly increasing, c1(0) = 0, slope 1/6 at 0.
/// Small arguments go through a series to avoid numerator cancellation.
inline double c1(double alpha) {
  detail::check_alpha_envelope(alpha);
  if (std::abs(alpha) < 1e-4) {
    const double num = alpha / 12.0 - alpha * alpha / 48.0 + alpha * alpha * alpha / 96.0;
    const double den = 0.5 - alpha / 4.0 + alpha * alpha / 8.0 - alpha * alpha * alpha / 32.0;
    return num / den;
  }
  // the numerator weight integrates to zero, so expm1 keeps the ratio fully
  // accurate down to the series crossover
  const double num = detail::integrate_1d(
      [alpha](double t) {
        const double s = std::sin(0.5 * t);
        return (2.0 * std::cos(t) + 1.0) / 3.0 * s * s * std::expm1(alpha * std::cos(t));
      },
      0.0, M_PI);
  const double den = detail::integrate_1d(
      [alpha](double t) {
        const double s = std::sin(0.5 * t);
        return s * s * std::exp(alpha * std::cos(t));
      },
      0.0, M_PI);
  return num / den;
}

/// Order parameter of the rank-one branch: (1/sqrt(3)) times the ratio of the
/// tilted-angle integrals. Odd, increasing, closed form (1/sqrt 3) L(sqrt(3) a / 2)
/// with the Langevin function L (kept as a test oracle, not used here).
inline double c2(double alpha) {
  detail::check_alpha_envelope(alpha);
  if (std::abs(alpha) < 1e-4) {
    return alpha / 6.0 - alpha * alpha * alpha / 120.0;
  }
  const double k = 0.5 * std::sqrt(3.0) * alpha;
  const double num = detail::integrate_1d(
      [k](double p) { return std::cos(p) * std::sin(p) * std::expm1(k * std::cos(p)); }, 0.0,
      M_PI);
  const double den = detail::integrate_1d(
      [k](double p) { return std::sin(p) * std::exp(k * std::cos(p)); }, 0.0, M_PI);
  return num / (std::sqrt(3.0) * den);
}

/// alpha / c1(alpha), extended by continuity to 6 at alpha = 0.
inline double rho1(double alpha) {
  if (std::abs(alpha) < 1e-4) {
    const double num = 0.5 - alpha / 4.0 + alpha * alpha / 8.0 - alpha * alpha * alpha / 32.0;
    const double den = 1.0 / 12.0 - alpha / 48.0 + alpha * alpha / 96.0;
    return num / den;
  }
  return alpha / c1(alpha);
}

/// alpha / c2(alpha), even, extended by continuity to 6 at alpha = 0.
inline double rho2(double alpha) {
  if (std::abs(alpha) < 1e-4) return 6.0 / (1.0 - alpha * alpha / 20.0);
  return alpha / c2(alpha);
}

enum class Branch { AxialUp, AxialDown, Rank1 };

/// Phase-transition data: rho_c = 6 analytically, (alpha*, rho*, c*) from the
/// interior minimum of rho1.
struct BranchTables {
  double alpha_star = 0.0;
  double rho_star = 0.0;
  double c_star = 0.0;
  double rho_c = kRhoC;

  double alpha1_up(double rho) const;
  double alpha1_down(double rho) const;
  double alpha2(double rho) const;
  double c1_up(double rho) const { return c1(alpha1_up(rho)); }
  double c1_down(double rho) const { return c1(alpha1_down(rho)); }
  double c2_tilde(double rho) const { return c2(alpha2(rho)); }
};

/// Locates alpha* = argmin rho1 by golden section on (0, 50] to 1e-10 and
/// fills the threshold values. rho_c is set to 6 (exact).
inline BranchTables find_thresholds() {
  BranchTables t;
  t.alpha_star = detail::golden_min([](double a) { return rho1(a); }, 1e-3, 20.0, 1e-10);
  t.rho_star = rho1(t.alpha_star);
  t.c_star = c1(t.alpha_star);
  t.rho_c = kRhoC;
  return t;
}

/// Shared immutable threshold table (computed once).
inline const BranchTables& branch_tables() {
  static const BranchTables t = find_thresholds();
  return t;
}

/// Root of the scalar compatibility equation on the requested branch:
/// rho1(alpha) = rho on [alpha*, inf) for AxialUp and on (-inf, alpha*] for
/// AxialDown (signed: positive below rho_c, zero there, negative beyond),
/// rho2(alpha) = rho on [0, inf) for Rank1.
inline double solve_branch(Branch branch, double rho) {
  const BranchTables& t = branch_tables();
  constexpr double kTol = 1e-12;
  switch (branch) {
    case Branch::AxialUp: {
      if (rho < t.rho_star - 1e-9) throw std::domain_error("AxialUp branch needs rho >= rho*");
      if (rho <= t.rho_star) return t.alpha_star;
      if (rho1(kAlphaMax) < rho) throw envelope_error("AxialUp: rho beyond the alpha <= 50 bracket");
      return detail::brent_root([rho](double a) { return rho1(a) - rho; }, t.alpha_star,
                                kAlphaMax, kTol);
    }
    case Branch::AxialDown: {
      if (rho < t.rho_star - 1e-9) throw std::domain_error("AxialDown branch needs rho >= rho*");
      if (rho <= t.rho_star) return t.alpha_star;
      if (std::abs(rho - kRhoC) < 1e-14) return 0.0;
      if (rho < kRhoC) {
        return detail::brent_root([rho](double a) { return rho1(a) - rho; }, 1e-9,
                                  t.alpha_star, kTol);
      }
      if (rho1(-kAlphaMax) < rho) {
        throw envelope_error("AxialDown: rho beyond the alpha >= -50 bracket");
      }
      return detail::brent_root([rho](double a) { return rho1(a) - rho; }, -kAlphaMax, -1e-9,
                                kTol);
    }
    case Branch::Rank1: {
      if (rho < kRhoC - 1e-14) throw std::domain_error("Rank1 branch needs rho >= rho_c");
      if (rho <= kRhoC) return 0.0;
      if (rho2(kAlphaMax) < rho) throw envelope_error("Rank1: rho beyond the alpha <= 50 bracket");
      return detail::brent_root([rho](double a) { return rho2(a) - rho; }, 1e-9, kAlphaMax,
                                kTol);
    }
  }
  throw std::logic_error("solve_branch: unreachable");
}

inline double BranchTables::alpha1_up(double rho) const { return solve_branch(Branch::AxialUp, rho); }
inline double BranchTables::alpha1_down(double rho) const { return solve_branch(Branch::AxialDown, rho); }
inline double BranchTables::alpha2(double rho) const { return solve_branch(Branch::Rank1, rho); }

/// V(J) = |J|^2/2 - rho ln Z(J); the BGK flux ODE is its gradient flow.
inline double potential_v(double rho, const Mat3& j) {
  return 0.5 * half_trace_inner(j, j) - rho * log_partition(j);
}

/// grad V(J) = J - rho flux(M_J); vanishes exactly on compatibility solutions.
inline Mat3 gradient_v(double rho, const Mat3& j) { return j - rho * mean_flux(j); }

/// Hessian of V restricted to diagonal matrices at diag(d), expressed in the
/// orthonormalized diagonal basis {sqrt(2) E_ii} of the half-trace metric:
///   M_ij = delta_ij - (rho/2) ( E[Phi_ii Phi_jj] - f_i f_j ).
/// At d = 0 this is (1 - rho/6) I; every eigenvalue is < 1 at any point.
inline Mat3 hessian_vbar(double rho, const Vec3& d) {
  static const double kEps[3][4] = {{1, 1, -1, -1}, {1, -1, 1, -1}, {1, -1, -1, 1}};
  const DiagMoments mom = diag_moments(d, MomentLevel::Full);
  const Vec3 f = flux_diag_from_moments(mom.m);
  Mat3 h;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      double phi2 = 0.0;
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) phi2 += kEps[i][a] * kEps[j][b] * mom.m2(a, b);
      }
      const double v = (i == j ? 1.0 : 0.0) - 0.5 * rho * (phi2 - f[i] * f[j]);
      h(i, j) = h(j, i) = v;
    }
  }
  return h;
}

enum class EqTag { Uniform, AxialUp, AxialDown, Rank1 };

inline const char* to_string(EqTag tag) {
  switch (tag) {
    case EqTag::Uniform: return "uniform";
    case EqTag::AxialUp: return "axial_up";
    case EqTag::AxialDown: return "axial_down";
    case EqTag::Rank1: return "rank1";
  }
  return "?";
}

/// A steady-state family member: J = alpha A0 for the axial classes,
/// J = alpha sqrt(3) a0 b0^T for the rank-one class, J = 0 for uniform.
struct EquilibriumClass {
  EqTag tag = EqTag::Uniform;
  double alpha = 0.0;
  Rotation frame = Mat3::Identity();  // A0 (axial classes)
  Vec3 a0 = Vec3::UnitX();            // rank-one frame
  Vec3 b0 = Vec3::UnitX();

  Mat3 reconstruct_j() const {
    switch (tag) {
      case EqTag::Uniform: return Mat3::Zero();
      case EqTag::AxialUp:
      case EqTag::AxialDown: return alpha * frame;
      case EqTag::Rank1: return alpha * std::sqrt(3.0) * (a0 * b0.transpose());
    }
    return Mat3::Zero();
  }

  /// SSVD-ordered diagonal representative of the class.
  Vec3 canonical_diagonal() const {
    switch (tag) {
      case EqTag::Uniform: return Vec3::Zero();
      case EqTag::AxialUp: return Vec3::Constant(alpha);
      case EqTag::AxialDown:
        return alpha >= 0.0 ? Vec3::Constant(alpha) : Vec3(-alpha, -alpha, alpha);
      case EqTag::Rank1: return Vec3(std::sqrt(3.0) * alpha, 0.0, 0.0);
    }
    return Vec3::Zero();
  }

  /// Unit direction of the branch ray through the canonical diagonal.
  Vec3 branch_direction() const {
    switch (tag) {
      case EqTag::Uniform:
      case EqTag::AxialUp: return Vec3::Constant(1.0 / std::sqrt(3.0));
      case EqTag::AxialDown:
        return alpha >= 0.0 ? Vec3(Vec3::Constant(1.0 / std::sqrt(3.0)))
                            : Vec3(Vec3(1.0, 1.0, -1.0) / std::sqrt(3.0));
      case EqTag::Rank1: return Vec3::UnitX();
    }
    return Vec3::UnitX();
  }
};

inline EquilibriumClass make_uniform() { return EquilibriumClass{}; }

inline EquilibriumClass make_axial(EqTag tag, double alpha, const Rotation& a0 = Mat3::Identity()) {
  EquilibriumClass eq;
  eq.tag = tag;
  eq.alpha = alpha;
  eq.frame = a0;
  return eq;
}

inline EquilibriumClass make_rank1(double alpha, const Vec3& a0 = Vec3::UnitX(),
                                   const Vec3& b0 = Vec3::UnitX()) {
  EquilibriumClass eq;
  eq.tag = EqTag::Rank1;
  eq.alpha = alpha;
  eq.a0 = a0;
  eq.b0 = b0;
  return eq;
}

/// Signature of Hess Vbar at a critical point. The first reported eigenvalue
/// belongs to the eigenvector closest to the branch direction; the remaining
/// two are in descending order (matching the usual presentation of the
/// signature tuples).
struct SignatureReport {
  Mat3 point = Mat3::Zero();
  Vec3 eigenvalues = Vec3::Zero();
  std::string signature;
  bool is_local_min = false;
};

inline SignatureReport signature_report(double rho, const EquilibriumClass& eq) {
  const BranchTables& t = branch_tables();
  if ((eq.tag == EqTag::AxialUp || eq.tag == EqTag::AxialDown) && rho < t.rho_star - 1e-9) {
    throw std::domain_error("signature_report: axial classes need rho >= rho*");
  }
  if (eq.tag == EqTag::Rank1 && rho < kRhoC - 1e-12) {
    throw std::domain_error("signature_report: rank-one class needs rho >= rho_c");
  }
  const Vec3 d = eq.canonical_diagonal();
  const Mat3 h = hessian_vbar(rho, d);
  Eigen::SelfAdjointEigenSolver<Mat3> es(h);
  const Vec3 ev = es.eigenvalues();
  const Mat3 vec = es.eigenvectors();

  const Vec3 u = eq.branch_direction();
  int radial = 0;
  double best = -1.0;
  for (int i = 0; i < 3; ++i) {
    const double a = std::abs(vec.col(i).dot(u));
    if (a > best) {
      best = a;
      radial = i;
    }
  }
  SignatureReport rep;
  rep.point = d.asDiagonal();
  std::vector<double> rest;
  for (int i = 0; i < 3; ++i) {
    if (i != radial) rest.push_back(ev[i]);
  }
  std::sort(rest.begin(), rest.end(), std::greater<>());
  rep.eigenvalues = Vec3(ev[radial], rest[0], rest[1]);

  constexpr double kZeroTol = 1e-9;
  rep.signature = "(";
  for (int i = 0; i < 3; ++i) {
    const double v = rep.eigenvalues[i];
    rep.signature += v > kZeroTol ? '+' : (v < -kZeroTol ? '-' : '0');
  }
  rep.signature += ")";
  rep.is_local_min = rep.eigenvalues.minCoeff() > kZeroTol;
  return rep;
}

/// W(J) = F[rho M_J], evaluated through the identity
/// W = V - |grad V|^2 / 2 + rho ln rho. Shares critical points with V and the
/// signature of its Hessian there.
inline double free_energy_w(double rho, const Mat3& j) {
  if (rho <= 0.0) throw std::invalid_argument("free_energy_w: rho must be positive");
  const Mat3 g = gradient_v(rho, j);
  return potential_v(rho, j) - 0.5 * half_trace_inner(g, g) + rho * std::log(rho);
}

struct ClassifiedEquilibrium {
  EquilibriumClass eq;
  SignatureReport report;
  double order_parameter = 0.0;  // |alpha| / rho
  bool stable = false;
  bool critical = false;  // rho sits on rho* or rho_c for this family
  std::string label;
};

/// All steady-state families present at the given rho, with canonical
/// representatives and stability labels: the uniform state is stable below
/// rho_c, the upper axial branch above rho*, everything else (including the
/// critical cases) is unstable.
inline std::vector<ClassifiedEquilibrium> classify_all(double rho) {
  if (rho <= 0.0) throw std::invalid_argument("classify_all: rho must be positive");
  const BranchTables& t = branch_tables();
  constexpr double kCritTol = 1e-9;
  std::vector<ClassifiedEquilibrium> out;

  auto push = [&](const EquilibriumClass& eq, bool stable, bool critical) {
    ClassifiedEquilibrium c;
    c.eq = eq;
    c.report = signature_report(rho, eq);
    c.order_parameter = std::abs(eq.alpha) / rho;
    c.stable = stable;
    c.critical = critical;
    c.label = stable ? "stable" : "unstable";
    out.push_back(std::move(c));
  };

  const bool uniform_critical = std::abs(rho - t.rho_c) < kCritTol;
  push(make_uniform(), rho < t.rho_c - kCritTol, uniform_critical);

  if (rho >= t.rho_star - kCritTol) {
    const bool axial_critical = std::abs(rho - t.rho_star) < kCritTol;
    const double a_up = solve_branch(Branch::AxialUp, rho);
    push(make_axial(EqTag::AxialUp, a_up), rho > t.rho_star + kCritTol, axial_critical);
    const double a_down = solve_branch(Branch::AxialDown, rho);
    const Rotation frame =
        a_down >= 0.0 ? Rotation(Mat3::Identity()) : Rotation(Vec3(-1.0, -1.0, 1.0).asDiagonal());
    push(make_axial(EqTag::AxialDown, a_down, frame), false, axial_critical);
  }
  if (rho >= t.rho_c - kCritTol) {
    const double a2 = solve_branch(Branch::Rank1, std::max(rho, t.rho_c));
    push(make_rank1(a2), false, std::abs(rho - t.rho_c) < kCritTol);
  }
  return out;
}

}  // namespace rba
