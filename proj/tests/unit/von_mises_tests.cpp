#include <catch2/catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rba/equilibrium.hpp"
#include "rba/von_mises.hpp"
#include "support/test_support.hpp"

using namespace rba;

namespace {

// 1-D oracle on the rotation-angle marginal: for J = alpha A0,
// ln Z = alpha/2 + ln integral (2/pi) sin^2(t/2) e^{alpha cos t} dt.
double axial_log_partition_oracle(double alpha) {
  const double i = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      [alpha](double t) {
        const double s = std::sin(0.5 * t);
        return (2.0 / M_PI) * s * s * std::exp(alpha * std::cos(t));
      },
      0.0, M_PI, 15, 1e-13);
  return 0.5 * alpha + std::log(i);
}

}  // namespace

TEST_CASE("log partition function") {
  Rng rng(301);

  CHECK(std::abs(log_partition(Mat3::Zero())) < 1e-12);

  SECTION("axial parameters against the 1-D angle-marginal oracle") {
    for (double alpha : {0.5, 2.0, 5.0, -3.0}) {
      const Rotation a0 = haar_sample(rng);
      CHECK(log_partition(alpha * a0) ==
            Catch::Approx(axial_log_partition_oracle(alpha)).margin(1e-10));
    }
  }

  SECTION("Monte Carlo estimate of Z at diag(2, 1, 0.5)") {
    const Mat3 j = Vec3(2.0, 1.0, 0.5).asDiagonal();
    const int n = 1000000;
    std::vector<double> vals;
    vals.reserve(n);
    for (int i = 0; i < n; ++i) {
      vals.push_back(std::exp(half_trace_inner(j, haar_sample(rng))));
    }
    const auto mv = test_support::mean_var(vals);
    CHECK(std::abs(mv.mean - std::exp(log_partition(j))) < 4.0 * mv.sigma_of_mean);
  }

  SECTION("transpose and two-sided rotation invariance") {
    for (int i = 0; i < 20; ++i) {
      const Mat3 j = test_support::random_matrix(rng, 1.5);
      CHECK(log_partition(j) == Catch::Approx(log_partition(j.transpose())).margin(1e-11));
      const Rotation p = haar_sample(rng);
      const Rotation q = haar_sample(rng);
      CHECK(log_partition(p * j * q) == Catch::Approx(log_partition(j)).margin(1e-10));
    }
  }

  SECTION("envelope") {
    CHECK_THROWS_AS(log_partition(60.0 * Mat3::Identity()), envelope_error);
  }
}

TEST_CASE("mean flux of the von Mises family") {
  Rng rng(302);

  CHECK(mean_flux(Mat3::Zero()).cwiseAbs().maxCoeff() < 1e-14);

  SECTION("axial: flux(alpha A0) = c1(alpha) A0") {
    for (double alpha : {0.7, 2.0, -1.5}) {
      const Rotation a0 = haar_sample(rng);
      CHECK((mean_flux(alpha * a0) - c1(alpha) * a0).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  SECTION("rank one: flux(alpha sqrt3 a b^T) = c2(alpha) sqrt3 a b^T") {
    for (double alpha : {1.0, 2.0}) {
      const Vec3 a = rng.gauss3().normalized();
      const Vec3 b = rng.gauss3().normalized();
      const Mat3 j = alpha * std::sqrt(3.0) * a * b.transpose();
      CHECK((mean_flux(j) - c2(alpha) * std::sqrt(3.0) * a * b.transpose()).cwiseAbs().maxCoeff() <
            1e-9);
    }
  }

  SECTION("equivariance under two-sided rotation") {
    for (int i = 0; i < 20; ++i) {
      const Mat3 j = test_support::random_matrix(rng, 1.5);
      const Rotation p = haar_sample(rng);
      const Rotation q = haar_sample(rng);
      CHECK((mean_flux(p * j * q) - p * mean_flux(j) * q).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  SECTION("norm bound |flux| <= sqrt(3/2)") {
    for (int i = 0; i < 20; ++i) {
      const Mat3 j = test_support::random_matrix(rng, 4.0);
      CHECK(ht_norm(mean_flux(j)) <= std::sqrt(1.5) + 1e-12);
    }
  }
}

TEST_CASE("second moments") {
  Rng rng(303);

  SECTION("uniform state: E[(A.H)^2] = |H|^2 / 6") {
    CHECK(second_moment(Mat3::Zero(), Mat3::Identity()) == Catch::Approx(0.25).margin(1e-10));
    for (int i = 0; i < 50; ++i) {
      const Mat3 h = test_support::random_matrix(rng);
      CHECK(second_moment(Mat3::Zero(), h) ==
            Catch::Approx(half_trace_inner(h, h) / 6.0).margin(1e-9));
    }
  }

  SECTION("moment lemma by polarization: integral (J.A) A dA = J/6 to 1e-8") {
    const VonMises uniform(Mat3::Zero());
    for (int trial = 0; trial < 5; ++trial) {
      const Mat3 j = test_support::random_matrix(rng);
      Mat3 t;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          Mat3 e = Mat3::Zero();
          e(a, b) = 1.0;
          t(a, b) = 0.5 * (uniform.second_moment(j + e) - uniform.second_moment(j - e));
        }
      }
      CHECK((t - j / 6.0).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  SECTION("Monte Carlo agreement at j = I (4 sigma)") {
    const Mat3 j = Mat3::Identity();
    const VonMises vm(j);
    const Mat3 h = test_support::random_matrix(rng);
    Rng sampler(304);
    const int n = 400000;
    std::vector<double> vals;
    vals.reserve(n);
    for (int i = 0; i < n; ++i) {
      const double x = half_trace_inner(vm.sample(sampler), h);
      vals.push_back(x * x);
    }
    const auto mv = test_support::mean_var(vals);
    CHECK(std::abs(mv.mean - vm.second_moment(h)) < 4.0 * mv.sigma_of_mean);
  }
}

TEST_CASE("quadrature vs Monte Carlo on a fixed matrix panel") {
  Rng rng(305);
  std::vector<Mat3> panel;
  panel.push_back(Vec3(2, 1, 0.5).asDiagonal());
  panel.push_back(Vec3(3, 3, 3).asDiagonal());
  panel.push_back(Vec3(1, 1, -1).asDiagonal());
  panel.push_back(Mat3::Zero());
  panel.push_back(2.0 * haar_sample(rng));
  panel.push_back(std::sqrt(3.0) * rng.gauss3().normalized() * rng.gauss3().normalized().transpose());
  for (int i = 0; i < 4; ++i) panel.push_back(test_support::random_matrix(rng, 1.2));

  const int n = 150000;
  for (const Mat3& j : panel) {
    const VonMises vm(j);
    const Mat3 h = test_support::random_matrix(rng);
    std::vector<double> zs, fs, ss;
    zs.reserve(n);
    fs.reserve(n);
    ss.reserve(n);
    for (int i = 0; i < n; ++i) {
      const Rotation a = haar_sample(rng);
      const double w = std::exp(half_trace_inner(j, a));
      zs.push_back(w);
      fs.push_back(w * half_trace_inner(a, h));  // importance-weighted flux component
      const double x = half_trace_inner(a, h);
      ss.push_back(w * x * x);
    }
    const auto z = test_support::mean_var(zs);
    const auto f = test_support::mean_var(fs);
    const auto s = test_support::mean_var(ss);
    // the epsilon floor covers the j = 0 panel case, where every weight is 1
    CHECK(std::abs(z.mean - std::exp(vm.log_partition())) < 4.0 * z.sigma_of_mean + 1e-12);
    // E_M[A.H] Z = E_Haar[e^{J.A} A.H]
    const double flux_h = half_trace_inner(vm.mean_flux(), h);
    CHECK(std::abs(f.mean - flux_h * std::exp(vm.log_partition())) <
          4.0 * f.sigma_of_mean + 1e-12);
    CHECK(std::abs(s.mean - vm.second_moment(h) * std::exp(vm.log_partition())) <
          4.0 * s.sigma_of_mean + 1e-12);
  }
}

TEST_CASE("rejection sampler") {
  SECTION("j = 0 reproduces Haar (angle-marginal KS)") {
    const VonMises vm(Mat3::Zero());
    Rng rng(306);
    std::vector<double> angles;
    angles.reserve(50000);
    for (int i = 0; i < 50000; ++i) angles.push_back(axis_angle_of(vm.sample(rng)).theta);
    CHECK(test_support::ks_one_sample_p(angles, test_support::haar_angle_cdf) > 0.001);
  }

  SECTION("empirical flux matches quadrature at j = 2I (4 sigma)") {
    const Mat3 j = 2.0 * Mat3::Identity();
    const VonMises vm(j);
    Rng rng(307);
    const int n = 200000;
    Mat3 sum = Mat3::Zero(), sum_sq = Mat3::Zero();
    for (int i = 0; i < n; ++i) {
      const Rotation a = vm.sample(rng);
      sum += a;
      sum_sq += a.cwiseProduct(a);
    }
    const Mat3 mean = sum / n;
    const Mat3 flux = vm.mean_flux();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        const double var = sum_sq(r, c) / n - mean(r, c) * mean(r, c);
        CHECK(std::abs(mean(r, c) - flux(r, c)) < 4.0 * std::sqrt(var / n));
      }
    }
  }

  SECTION("acceptance-rate identity: rate = Z(J) exp(-max J.A)") {
    Rng rng(308);
    const double alpha = 1.5;
    const Rotation a0 = haar_sample(rng);
    const VonMises vm(alpha * a0);
    const Mat4 exponent = 2.0 * iso_phi(alpha * a0);
    const double max_exp = 0.5 * ssvd(alpha * a0).d.sum();
    const int n = 200000;
    int accepted = 0;
    for (int i = 0; i < n; ++i) {
      Vec4 q = rng.gauss4();
      q.normalize();
      if (rng.uniform() <= std::exp(q.dot(exponent * q) - max_exp)) ++accepted;
    }
    const double p_hat = static_cast<double>(accepted) / n;
    const double p = vm.acceptance_rate();
    CHECK(std::abs(p_hat - p) < 4.0 * std::sqrt(p * (1.0 - p) / n));
  }
}

TEST_CASE("moment report bundles flux and the second-moment form") {
  Rng rng(311);
  const Mat3 j = test_support::random_matrix(rng);
  const VonMises vm(j);
  const MomentReport rep = vm.moment_report();
  CHECK((rep.flux - vm.mean_flux()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ht_norm(rep.flux) <= std::sqrt(1.5) + 1e-12);
  const Mat3 h = test_support::random_matrix(rng);
  CHECK(rep.second_moment_form(h) == vm.second_moment(h));
  const MomentReport uniform = VonMises(Mat3::Zero()).moment_report();
  CHECK(uniform.flux.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("empirical flux of ensembles") {
  Rng rng(309);

  SECTION("constant ensemble") {
    const Rotation a0 = haar_sample(rng);
    const std::vector<Rotation> ens(17, a0);
    CHECK((empirical_flux(ens) - a0).cwiseAbs().maxCoeff() < 1e-15);
  }

  SECTION("two elements give the arithmetic mean") {
    const Rotation a = haar_sample(rng);
    const Rotation b = haar_sample(rng);
    CHECK((empirical_flux({a, b}) - 0.5 * (a + b)).cwiseAbs().maxCoeff() < 1e-15);
  }

  SECTION("Haar ensemble satisfies the CLT bound") {
    std::vector<Rotation> ens;
    const int n = 1000000;
    ens.reserve(n);
    for (int i = 0; i < n; ++i) ens.push_back(haar_sample(rng));
    CHECK(ht_norm(empirical_flux(ens)) < 4.0 * std::sqrt(1.5 / n));
  }

  SECTION("empty ensemble") {
    CHECK_THROWS_AS(empirical_flux({}), std::invalid_argument);
  }
}

TEST_CASE("closed-form relative entropy on the family") {
  Rng rng(310);

  SECTION("zero iff the laws coincide") {
    const Mat3 j = test_support::random_matrix(rng);
    CHECK(std::abs(kl_von_mises(2.5, j, j)) < 1e-12);
  }

  SECTION("against the uniform state: H(M_0 | M_J) = ln Z(J)") {
    for (int i = 0; i < 10; ++i) {
      const Mat3 j = test_support::random_matrix(rng, 1.5);
      CHECK(kl_von_mises(1.0, Mat3::Zero(), j) == Catch::Approx(log_partition(j)).margin(1e-10));
      CHECK(kl_von_mises(1.0, Mat3::Zero(), j) >= 0.0);
    }
  }

  SECTION("nonnegativity on random pairs") {
    for (int i = 0; i < 1000; ++i) {
      const Mat3 j1 = test_support::random_matrix(rng, 1.2);
      const Mat3 j2 = test_support::random_matrix(rng, 1.2);
      CHECK(kl_von_mises(3.0, j1, j2) > -1e-10);
    }
  }

  SECTION("compatibility residual at an axial branch point") {
    const double rho = 8.0;
    const double alpha = solve_branch(Branch::AxialUp, rho);
    const Mat3 j = alpha * Mat3::Identity();
    CHECK(ht_norm(j - rho * mean_flux(j)) < 1e-6);
  }
}
