#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rba/equilibrium.hpp"
#include "rba/quadrature.hpp"
#include "rba/so3.hpp"

namespace rba {

/// Diagonal trajectory of the flux ODE dJ/dt = rho flux(M_J) - J, together
/// with the potential V along the path (non-increasing: the ODE is the
/// gradient flow of V).
struct BgkTrajectory {
  std::vector<double> times;
  std::vector<Vec3> d_values;
  std::vector<double> v_values;
  bool converged = false;

  const Vec3& limit() const { return d_values.back(); }
};

/// Right-hand side of the flux ODE restricted to diagonals:
/// rhs(d) = rho flux_diag(d) - d. Treating rhs as the diagonal of a matrix,
/// rhs = -diag(grad V), i.e. rhs_i = -2 dV/dd_i in raw coordinates (the
/// factor 2 is the half-trace metric on the diagonal basis).
inline Vec3 bgk_rhs(double rho, const Vec3& d) {
  const DiagMoments mom = diag_moments(d, MomentLevel::Flux);
  return rho * flux_diag_from_moments(mom.m) - d;
}

inline constexpr double kBgkDt = 0.01;
inline constexpr double kBgkStopTol = 1e-10;  // on the half-trace norm of rhs

/// Classical RK4 with fixed step 0.01, stopping early once |rhs| < 1e-10.
/// The SSVD ordering d1 >= d2 >= |d3| is preserved by the flow; it is
/// asserted on stored points, not enforced.
inline BgkTrajectory integrate(double rho, const Vec3& d0, double t_max) {
  MomentEvaluator moments(MomentLevel::Flux);
  auto rhs = [&](const Vec3& x) -> Vec3 {
    return rho * flux_diag_from_moments(moments(x).m) - x;
  };

  BgkTrajectory traj;
  Vec3 d = d0;
  double t = 0.0;
  const long n_steps = std::lround(t_max / kBgkDt);
  traj.times.reserve(n_steps + 1);
  traj.d_values.reserve(n_steps + 1);
  traj.v_values.reserve(n_steps + 1);

  for (long i = 0; i <= n_steps; ++i) {
    const DiagMoments mom = moments(d);
    const Vec3 k1 = rho * flux_diag_from_moments(mom.m) - d;
    traj.times.push_back(t);
    traj.d_values.push_back(d);
    traj.v_values.push_back(0.25 * d.squaredNorm() - rho * mom.log_z);
    if (std::sqrt(0.5 * k1.squaredNorm()) < kBgkStopTol) {
      traj.converged = true;
      break;
    }
    if (i == n_steps) break;
    const Vec3 k2 = rhs(d + 0.5 * kBgkDt * k1);
    const Vec3 k3 = rhs(d + 0.5 * kBgkDt * k2);
    const Vec3 k4 = rhs(d + kBgkDt * k3);
    d += kBgkDt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += kBgkDt;
  }
  return traj;
}

struct BgkClassification {
  EquilibriumClass eq;
  Mat3 j_inf = Mat3::Zero();
  Vec3 raw_limit = Vec3::Zero();
  BgkTrajectory trajectory;
  std::string status;  // "ok", "unclassified" or "non_converged"
  bool critical = false;  // rho sits on rho* or rho_c
};

inline constexpr double kBgkMatchTol = 1e-5;

/// Integrates the diagonal flow from the SSVD of j0 and matches the limit
/// against the steady-state table; the class frame is reconstructed from the
/// SSVD factors (A0 = P0 Q0, or a0 = P0 e1, b0 = Q0^T e1).
inline BgkClassification classify_limit(double rho, const Mat3& j0, double t_max = 200.0) {
  const BranchTables& tb = branch_tables();
  const Ssvd s = ssvd(j0);
  BgkClassification out;
  out.trajectory = integrate(rho, s.d, t_max);
  out.raw_limit = out.trajectory.limit();
  out.critical = std::abs(rho - tb.rho_star) < 1e-9 || std::abs(rho - tb.rho_c) < 1e-9;
  if (!out.trajectory.converged) {
    out.status = "non_converged";
    return out;
  }

  std::vector<EquilibriumClass> candidates;
  candidates.push_back(make_uniform());
  if (rho >= tb.rho_star - 1e-9) {
    candidates.push_back(make_axial(EqTag::AxialUp, solve_branch(Branch::AxialUp, rho)));
    const double a_down = solve_branch(Branch::AxialDown, rho);
    candidates.push_back(make_axial(
        EqTag::AxialDown, a_down,
        a_down >= 0.0 ? Rotation(Mat3::Identity()) : Rotation(Vec3(-1, -1, 1).asDiagonal())));
  }
  if (rho >= tb.rho_c - 1e-12) {
    candidates.push_back(make_rank1(solve_branch(Branch::Rank1, rho)));
  }

  for (const auto& cand : candidates) {
    if ((out.raw_limit - cand.canonical_diagonal()).cwiseAbs().maxCoeff() < kBgkMatchTol) {
      out.eq = cand;
      switch (cand.tag) {
        case EqTag::Uniform:
          break;
        case EqTag::AxialUp:
          out.eq.frame = s.p * s.q;
          break;
        case EqTag::AxialDown:
          out.eq.frame = cand.alpha >= 0.0
                             ? Rotation(s.p * s.q)
                             : Rotation(s.p * Vec3(-1, -1, 1).asDiagonal() * s.q);
          break;
        case EqTag::Rank1:
          out.eq.a0 = s.p.col(0);
          out.eq.b0 = s.q.row(0).transpose();
          break;
      }
      out.j_inf = s.p * cand.canonical_diagonal().asDiagonal() * s.q;
      out.status = "ok";
      return out;
    }
  }
  out.status = "unclassified";
  return out;
}

/// Exponential decay rate of V - V_inf along a converged trajectory: the
/// least-squares slope of ln(V - V_inf) over the sampled stretch just above
/// the numerical floor. Positive for trajectories into a strict local
/// minimum, where it approaches twice the smallest Hessian eigenvalue.
inline double decay_rate_fit(const BgkTrajectory& traj) {
  if (!traj.converged || traj.v_values.size() < 8) {
    throw convergence_error("decay_rate_fit: trajectory did not converge");
  }
  const double v_inf = traj.v_values.back();
  constexpr double kLow = 1e-11;   // keeps clear of the double-precision floor
  constexpr double kHigh = 1e-8;
  std::vector<double> ts, ls;
  for (size_t i = 0; i + 1 < traj.v_values.size(); ++i) {
    const double r = traj.v_values[i] - v_inf;
    if (r > kLow && r < kHigh) {
      if (!ls.empty() && std::log(r) > ls.back() + 0.05) {
        throw convergence_error("decay_rate_fit: non-monotone tail");
      }
      ts.push_back(traj.times[i]);
      ls.push_back(std::log(r));
    }
  }
  if (ts.size() < 4) throw convergence_error("decay_rate_fit: too few points in the fit window");
  const size_t n = ts.size();
  double mt = 0.0, ml = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mt += ts[i];
    ml += ls[i];
  }
  mt /= n;
  ml /= n;
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < n; ++i) {
    num += (ts[i] - mt) * (ls[i] - ml);
    den += (ts[i] - mt) * (ts[i] - mt);
  }
  const double rate = -num / den;
  if (!(rate > 0.0)) throw convergence_error("decay_rate_fit: non-positive fitted rate");
  return rate;
}

}  // namespace rba
