#pragma once

// Shared test oracles. Everything here is independent of the library code
// paths it is used to check.

#include <algorithm>
#include <cmath>
#include <vector>

#include "rba/rng.hpp"
#include "rba/types.hpp"

namespace test_support {

using rba::Mat3;
using rba::Vec3;

/// Matrix exponential by scaling-and-squaring on a plain Taylor series.
/// Accurate to ~1e-16 for the small antisymmetric arguments used in tests.
inline Mat3 expm(const Mat3& m) {
  int squarings = 0;
  double scale = m.cwiseAbs().maxCoeff();
  while (scale > 0.25) {
    scale *= 0.5;
    ++squarings;
  }
  const Mat3 a = m / std::pow(2.0, squarings);
  Mat3 term = Mat3::Identity();
  Mat3 sum = Mat3::Identity();
  for (int k = 1; k <= 24; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

/// Asymptotic Kolmogorov-Smirnov tail probability Q(lambda).
inline double ks_q(double lambda) {
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-12 * std::max(sum, 1e-300)) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample KS test p-value against a continuous CDF.
template <typename Cdf>
double ks_one_sample_p(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
  }
  const double sn = std::sqrt(n);
  return ks_q((sn + 0.12 + 0.11 / sn) * d);
}

/// Two-sample KS test p-value.
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return ks_q((ne + 0.12 + 0.11 / ne) * d);
}

/// CDF of the Haar rotation-angle marginal with density (2/pi) sin^2(t/2).
inline double haar_angle_cdf(double theta) { return (theta - std::sin(theta)) / M_PI; }

inline Mat3 random_matrix(rba::Rng& rng, double scale = 1.0) {
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = scale * rng.gauss();
  }
  return m;
}

struct MeanVar {
  double mean = 0.0;
  double sigma_of_mean = 0.0;  // sample std / sqrt(n)
};

inline MeanVar mean_var(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double m = 0.0;
  for (double x : xs) m += x;
  m /= n;
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= (n - 1.0);
  return {m, std::sqrt(v / n)};
}

}  // namespace test_support
