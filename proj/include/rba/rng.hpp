#pragma once

#include <cmath>
#include <cstdint>

#include "rba/types.hpp"

namespace rba {

namespace detail {

// splitmix64 finalizer (Steele/Lea/Flood). Used both as generator step and
// as the mixing function that derives independent per-particle streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
  return splitmix64(s);
}

}  // namespace detail

/// Small counter-derivable RNG. Streams are cheap value types: a stream for
/// (seed, particle, step) is derived by hashing, so particle updates are
/// order-independent and sweeps parallelize without shared state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // decorrelate trivially related seeds (0, 1, 2, ...)
    detail::splitmix64(state_);
  }

  static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return Rng(detail::mix(detail::mix(seed, a), b));
  }

  std::uint64_t next_u64() { return detail::splitmix64(state_); }

  /// Uniform on (0,1]; never returns 0 so it is safe under log().
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard Gaussian via Box-Muller (pairs cached).
  double gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vec3 gauss3() {
    Vec3 v;
    v << gauss(), gauss(), gauss();
    return v;
  }

  Vec4 gauss4() {
    Vec4 v;
    v << gauss(), gauss(), gauss(), gauss();
    return v;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace rba
