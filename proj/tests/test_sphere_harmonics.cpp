#include <gtest/gtest.h>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/spherical_harmonic.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "qfbm/sphere_harmonics.hpp"

namespace {

using qfbm::Direction;
constexpr double kPi = std::numbers::pi;

Direction random_direction(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), v(0.0, 2 * kPi);
  return {std::acos(u(rng)), v(rng)};
}

TEST(Direction, UnitVectorHasUnitNorm) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_NEAR(random_direction(rng).unit_vector().norm(), 1.0, 1e-14);
}

TEST(GeodesicDistance, Examples) {
  const Direction north{0.0, 0.0}, south{kPi, 0.0};
  EXPECT_EQ(qfbm::geodesic_distance(north, north), 0.0);
  EXPECT_NEAR(qfbm::geodesic_distance(north, south), kPi, 1e-15);
  EXPECT_NEAR(qfbm::geodesic_distance({kPi / 2, 0.0}, {kPi / 2, kPi / 2}), kPi / 2, 1e-15);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto x = random_direction(rng), y = random_direction(rng);
    EXPECT_EQ(qfbm::geodesic_distance(x, y), qfbm::geodesic_distance(y, x));
    EXPECT_EQ(qfbm::geodesic_distance(x, x), 0.0);
  }
}

TEST(LegendreP, Examples) {
  for (int l = 0; l < 30; ++l) EXPECT_NEAR(qfbm::legendre_p(l, 1.0), 1.0, 1e-13);
  EXPECT_EQ(qfbm::legendre_p(1, 0.37), 0.37);
  EXPECT_THROW(qfbm::legendre_p(2, 1.5), std::domain_error);
  EXPECT_THROW(qfbm::legendre_p(-1, 0.5), std::domain_error);
}

TEST(LegendreP, DegreeTenAgainstExplicitSum) {
  // P_n(x) = 2^{-n} sum_k (-1)^k binom(n, k) binom(2n - 2k, n) x^{n - 2k}, in 50 digits.
  using Big = boost::multiprecision::cpp_bin_float_50;
  const int n = 10;
  const Big x("0.3");
  Big sum = 0;
  for (int k = 0; k <= n / 2; ++k) {
    const Big term = boost::math::binomial_coefficient<double>(n, k) *
                     boost::math::binomial_coefficient<double>(2 * n - 2 * k, n) * pow(x, n - 2 * k);
    sum += (k % 2 ? -term : term);
  }
  sum /= Big(1 << n);
  EXPECT_NEAR(qfbm::legendre_p(10, 0.3), sum.convert_to<double>(), 1e-15);
}

TEST(RealSphHarm, Examples) {
  EXPECT_NEAR(qfbm::real_sph_harm(0, 0, {1.0, 2.0}), 1.0 / std::sqrt(4 * kPi), 1e-16);
  EXPECT_NEAR(qfbm::real_sph_harm(0, 0, {1.0, 2.0}), 0.28209479177387814, 1e-16);
  EXPECT_NEAR(qfbm::real_sph_harm(1, 0, {0.0, 0.0}), std::sqrt(3 / (4 * kPi)), 1e-15);
  EXPECT_THROW(qfbm::real_sph_harm(2, 3, {0.0, 0.0}), std::domain_error);
  EXPECT_THROW(qfbm::real_sph_harm(2, -3, {0.0, 0.0}), std::domain_error);
}

TEST(RealSphHarm, DegreeVectorMatchesSingleEvaluation) {
  std::mt19937_64 rng(3);
  for (int l : {0, 1, 5, 17}) {
    const auto d = random_direction(rng);
    const Eigen::VectorXd all = qfbm::real_sph_harm_degree(l, d);
    for (int m = -l; m <= l; ++m) EXPECT_NEAR(all[l + m], qfbm::real_sph_harm(l, m, d), 1e-15);
  }
}

// Boost's complex harmonics carry the Condon-Shortley phase, ours do not.
TEST(NormalizedLegendre, MatchesBoostHarmonics) {
  const int L = 60;
  qfbm::NormalizedLegendre<double> table(L);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const double theta = random_direction(rng).theta;
    table.evaluate(theta);
    for (int l = 0; l <= L; ++l) {
      for (int m = 0; m <= l; ++m) {
        const double sign = m % 2 ? -1.0 : 1.0;
        const double want = sign * boost::math::spherical_harmonic_r(l, m, theta, 0.0);
        EXPECT_NEAR(table(l, m), want, 1e-12 * std::sqrt((2 * l + 1) / (4 * kPi))) << l << ' ' << m;
      }
    }
  }
}

TEST(NormalizedLegendre, NoOverflowUpToDegree2000) {
  const int L = 2000;
  qfbm::NormalizedLegendre<double> table(L);
  for (const double theta : {1e-8, 0.001, 0.5, kPi / 2, 2.9, kPi - 1e-6}) {
    table.evaluate(theta);
    for (int l = 0; l <= L; l += 7) {
      const double bound = std::sqrt((2 * l + 1) / (4 * kPi)) * (1 + 1e-9);
      for (int m = 0; m <= l; ++m) {
        ASSERT_TRUE(std::isfinite(table(l, m)));
        ASSERT_LE(std::abs(table(l, m)), bound) << l << ' ' << m << ' ' << theta;
      }
    }
  }
}

TEST(AdditionTheorem, DegreeZeroIsExact) {
  std::mt19937_64 rng(5);
  EXPECT_EQ(qfbm::addition_theorem_residual(0, random_direction(rng), random_direction(rng)), 0.0);
}

TEST(AdditionTheorem, SumOfSquaresIsConstant) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_direction(rng);
    for (const int l : {1, 2, 10, 50, 123, 200}) {
      const double s = qfbm::real_sph_harm_degree(l, x).squaredNorm();
      EXPECT_NEAR(s, (2 * l + 1) / (4 * kPi), 1e-11) << l;
    }
  }
}

TEST(AdditionTheorem, RandomPairs) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_direction(rng), y = random_direction(rng);
    for (const int l : {1, 3, 50, 199, 200}) EXPECT_LE(qfbm::addition_theorem_residual(l, x, y), 1e-11) << l;
  }
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  for (const int n : {1, 2, 5, 16, 33, 64}) {
    const auto rule = qfbm::gauss_legendre(n);
    ASSERT_EQ(rule.nodes.size(), n);
    EXPECT_NEAR(rule.weights.sum(), 2.0, 1e-14);
    for (int i = 1; i < n; ++i) EXPECT_LT(rule.nodes[i - 1], rule.nodes[i]);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double q = 0;
      for (int i = 0; i < n; ++i) q += rule.weights[i] * std::pow(rule.nodes[i], k);
      const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
      EXPECT_NEAR(q, exact, 1e-13) << n << ' ' << k;
    }
  }
  EXPECT_THROW(qfbm::gauss_legendre(0), std::domain_error);
}

TEST(SphereGrid, EquiangularNodes) {
  const auto g = qfbm::SphereGrid::equiangular(8, 16);
  EXPECT_EQ(g.n_theta(), 8);
  EXPECT_EQ(g.n_phi(), 16);
  EXPECT_NEAR(g.theta(0), kPi * 0.5 / 8, 1e-15);
  EXPECT_NEAR(g.theta(7), kPi * 7.5 / 8, 1e-15);
  EXPECT_NEAR(g.phi(4), kPi / 2, 1e-15);
  double area = 0;
  for (int i = 0; i < g.n_theta(); ++i) area += g.weight(i) * g.n_phi();
  // Midpoint rule for the integral of sin over [0, pi] sums to (pi/n) / sin(pi/(2n)).
  EXPECT_NEAR(area, 2 * kPi * (kPi / 8) / std::sin(kPi / 16), 1e-13);
  EXPECT_TRUE(g.resolves(7));
  EXPECT_FALSE(g.resolves(8));
}

TEST(SphereGrid, GaussLegendreAreaIsExact) {
  const auto g = qfbm::SphereGrid::gauss_legendre(10, 21);
  double area = 0;
  for (int i = 0; i < g.n_theta(); ++i) area += g.weight(i) * g.n_phi();
  EXPECT_NEAR(area, 4 * kPi, 1e-13);
}

TEST(SphereGrid, QuadratureOrthonormality) {
  const int L = 32;
  const auto g = qfbm::SphereGrid::gauss_legendre(L + 1, 2 * L + 1);
  const int modes = (L + 1) * (L + 1);
  const int points = g.n_theta() * g.n_phi();
  Eigen::MatrixXd y(points, modes);
  Eigen::VectorXd w(points);
  for (int i = 0; i < g.n_theta(); ++i) {
    for (int j = 0; j < g.n_phi(); ++j) {
      const int r = i * g.n_phi() + j;
      w[r] = g.weight(i);
      for (int l = 0; l <= L; ++l) y.row(r).segment(l * l, 2 * l + 1) = qfbm::real_sph_harm_degree(l, g.node(i, j));
    }
  }
  const Eigen::MatrixXd gram = y.transpose() * w.asDiagonal() * y;
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(modes, modes)).cwiseAbs().maxCoeff(), 1e-10);
}

}  // namespace
