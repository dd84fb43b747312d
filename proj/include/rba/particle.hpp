#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rba/equilibrium.hpp"
#include "rba/rng.hpp"
#include "rba/so3.hpp"
#include "rba/von_mises.hpp"

namespace rba {

enum class InitMode { Aligned, Uniform, VonMisesTargetC };
enum class Scheme { Lie, NaiveProjected };

struct SimConfig {
  int n_particles = 500;
  double rho = 1.0;
  double dt = 0.04;
  int n_steps = 100;
  std::uint64_t seed = 0;
  InitMode init = InitMode::Uniform;
  Rotation aligned_frame = Mat3::Identity();
  double c_target = 0.5;  // only for VonMisesTargetC
  int renorm_every = 100;

  void validate() const {
    if (n_particles <= 0) throw std::invalid_argument("n_particles must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (n_steps < 0) throw std::invalid_argument("n_steps must be nonnegative");
    if (!(rho >= 0.0)) throw std::invalid_argument("rho must be nonnegative");
    if (dt * rho > 0.5 + 1e-12) {
      throw std::invalid_argument("stability guard violated: dt * rho must be <= 0.5");
    }
    if (renorm_every <= 0) throw std::invalid_argument("renorm_every must be positive");
    if (init == InitMode::VonMisesTargetC &&
        !(c_target > -1.0 / 3.0 && c_target < 1.0)) {
      throw std::domain_error("c_target must lie in (-1/3, 1)");
    }
  }
};

struct Ensemble {
  std::vector<Rotation> rotations;
  double time = 0.0;
  std::uint64_t seed = 0;
  long step_index = 0;
};

struct TimeSeries {
  std::vector<double> times;
  std::vector<double> c_values;
  std::vector<double> flux_norms;
};

/// Per-(step, particle) Gaussian streams, derived by counter so that particle
/// updates are order-independent and replayable.
inline Rng step_stream(std::uint64_t seed, long step_index, int particle) {
  return Rng::stream(seed, static_cast<std::uint64_t>(step_index),
                     static_cast<std::uint64_t>(particle) + 1);
}

inline Rng init_stream(std::uint64_t seed, int particle) {
  return Rng::stream(seed, 0x8000000000000000ULL, static_cast<std::uint64_t>(particle));
}

/// Order parameter of a mean rotation: c = sqrt(2/3) |mean| (equals
/// sqrt(2) |J| / (sqrt(3) rho) for the flux J = rho mean).
inline double order_parameter(const Mat3& mean) {
  return std::sqrt(2.0 / 3.0) * ht_norm(mean);
}

/// Solves c1(alpha) = c for the concentration of the isotropic-frame von
/// Mises initial condition.
inline double concentration_for_target_c(double c) {
  if (!(c > -1.0 / 3.0 && c < 1.0)) throw std::domain_error("target c must lie in (-1/3, 1)");
  if (c < c1(-kAlphaMax) || c > c1(kAlphaMax)) {
    throw envelope_error("target c requires concentration outside |alpha| <= 50");
  }
  if (std::abs(c) < 1e-15) return 0.0;
  return detail::brent_root([c](double a) { return c1(a) - c; }, -kAlphaMax, kAlphaMax, 1e-12);
}

inline Ensemble init_ensemble(const SimConfig& cfg) {
  cfg.validate();
  Ensemble ens;
  ens.seed = cfg.seed;
  ens.rotations.resize(cfg.n_particles);
  switch (cfg.init) {
    case InitMode::Aligned:
      for (auto& a : ens.rotations) a = cfg.aligned_frame;
      break;
    case InitMode::Uniform:
      for (int k = 0; k < cfg.n_particles; ++k) {
        Rng rng = init_stream(cfg.seed, k);
        ens.rotations[k] = haar_sample(rng);
      }
      break;
    case InitMode::VonMisesTargetC: {
      const double alpha = concentration_for_target_c(cfg.c_target);
      const VonMises vm(alpha * Mat3::Identity());
      for (int k = 0; k < cfg.n_particles; ++k) {
        Rng rng = init_stream(cfg.seed, k);
        ens.rotations[k] = vm.sample(rng);
      }
      break;
    }
  }
  return ens;
}

/// One Lie-scheme update of a single rotation:
/// A <- exp( dt/2 (J A^T - A J^T) + sqrt(2 dt) hat(eta) ) A.
inline Rotation lie_update(const Rotation& a, const Mat3& j, double dt, const Vec3& eta) {
  const Mat3 g = 0.5 * dt * (j * a.transpose() - a * j.transpose()) +
                 std::sqrt(2.0 * dt) * hat(eta);
  return exp_hat(unhat(g)) * a;
}

/// One projected Euler-Maruyama update (reference scheme): move in the
/// tangent direction, add projected matrix noise, project back on the group.
inline Rotation naive_update(const Rotation& a, const Mat3& j, double dt, const Mat3& noise9) {
  const Mat3 b = a + dt * tangent_project(a, j) + 2.0 * std::sqrt(dt) * tangent_project(a, noise9);
  return nearest_rotation(b);
}

namespace detail {

template <typename Update>
void step_impl(Ensemble& ens, const SimConfig& cfg, Update&& update) {
  // synchronous: the flux is frozen at the pre-step state
  const Mat3 j = cfg.rho * empirical_flux(ens.rotations);
  for (int k = 0; k < cfg.n_particles; ++k) {
    Rng rng = step_stream(ens.seed, ens.step_index, k);
    ens.rotations[k] = update(ens.rotations[k], j, rng);
  }
  ens.time += cfg.dt;
  ens.step_index += 1;
  if (ens.step_index % cfg.renorm_every == 0) {
    for (auto& a : ens.rotations) a = renormalize(a);
  }
}

}  // namespace detail

inline void step(Ensemble& ens, const SimConfig& cfg) {
  detail::step_impl(ens, cfg, [&](const Rotation& a, const Mat3& j, Rng& rng) {
    return lie_update(a, j, cfg.dt, rng.gauss3());
  });
}

inline void naive_step(Ensemble& ens, const SimConfig& cfg) {
  detail::step_impl(ens, cfg, [&](const Rotation& a, const Mat3& j, Rng& rng) {
    Mat3 noise;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) noise(r, c) = rng.gauss();
    }
    return naive_update(a, j, cfg.dt, noise);
  });
}

/// Full simulation: iterates the scheme and records the order parameter
/// c(t) = sqrt(2) |J(t)| / (sqrt(3) rho) and |J(t)|. Deterministic given the
/// configuration seed.
inline TimeSeries run(const SimConfig& cfg, Scheme scheme = Scheme::Lie) {
  Ensemble ens = init_ensemble(cfg);
  TimeSeries ts;
  ts.times.reserve(cfg.n_steps + 1);
  ts.c_values.reserve(cfg.n_steps + 1);
  ts.flux_norms.reserve(cfg.n_steps + 1);
  auto record = [&]() {
    const Mat3 mean = empirical_flux(ens.rotations);
    ts.times.push_back(ens.time);
    ts.c_values.push_back(order_parameter(mean));
    ts.flux_norms.push_back(cfg.rho * ht_norm(mean));
  };
  record();
  for (int i = 0; i < cfg.n_steps; ++i) {
    scheme == Scheme::Lie ? step(ens, cfg) : naive_step(ens, cfg);
    record();
  }
  return ts;
}

}  // namespace rba
