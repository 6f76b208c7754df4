#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <random>

#include "qfbm/fbm_kernel.hpp"

namespace {

using qfbm::HurstParameter;
using Big = boost::multiprecision::cpp_bin_float_50;

Big big_pow(const Big& x, double a) { return x == 0 ? Big(0) : boost::multiprecision::pow(x, Big(a)); }

// Direct evaluation in 50 digits; cancellation is harmless at this precision.
double oracle_increment_cov(std::int64_t k, double h, double H) {
  const double a = 2 * H;
  const Big kk(k);
  const Big v = (big_pow(abs(kk + 1), a) + big_pow(abs(kk - 1), a) - 2 * big_pow(kk, a)) / 2 * big_pow(Big(h), a);
  return v.convert_to<double>();
}

double oracle_interval_cov(double a, double b, double c, double d, double H) {
  const double e = 2 * H;
  const Big A(a), B(b), C(c), D(d);
  const Big v = (big_pow(abs(D - A), e) + big_pow(abs(C - B), e) - big_pow(abs(C - A), e) - big_pow(abs(D - B), e)) / 2;
  return v.convert_to<double>();
}

TEST(HurstParameter, AcceptsOpenUnitInterval) {
  EXPECT_DOUBLE_EQ(HurstParameter(0.5).value(), 0.5);
  EXPECT_DOUBLE_EQ(HurstParameter(0.3).exponent(), 0.6);
  EXPECT_NO_THROW(HurstParameter(1e-6));
  EXPECT_NO_THROW(HurstParameter(1 - 1e-9));
}

TEST(HurstParameter, RejectsBoundaryAndOutside) {
  for (const double h : {0.0, 1.0, -0.1, 1.2, std::numeric_limits<double>::quiet_NaN(),
                         std::numeric_limits<double>::infinity()}) {
    EXPECT_THROW(HurstParameter{h}, std::domain_error) << h;
  }
}

TEST(TimeGrid, LastPointIsExactlyTheHorizon) {
  for (const double T : {1.0, 3.0, 0.1, 7.3}) {
    for (const std::int64_t n : {1, 3, 7, 512, 1000}) {
      const qfbm::TimeGrid g(T, n);
      EXPECT_EQ(g.time(n), T);
      EXPECT_EQ(g.time(0), 0.0);
      EXPECT_DOUBLE_EQ(g.time(1), T / static_cast<double>(n));
    }
  }
}

TEST(TimeGrid, IndexOfFindsGridTimes) {
  const qfbm::TimeGrid g(4.0, 64);
  EXPECT_EQ(g.index_of(1.0), 16);
  EXPECT_EQ(g.index_of(3.0), 48);
  EXPECT_EQ(g.index_of(4.0), 64);
  EXPECT_EQ(g.index_of(1.01), -1);
  EXPECT_EQ(g.index_of(5.0), -1);
  EXPECT_THROW(qfbm::TimeGrid(0.0, 4), std::domain_error);
  EXPECT_THROW(qfbm::TimeGrid(1.0, 0), std::domain_error);
}

TEST(FbmCov, DiagonalIsTimePower) {
  const HurstParameter h(0.7);
  EXPECT_NEAR(qfbm::fbm_cov(2.0, 2.0, h), std::pow(2.0, 1.4), 1e-14);
  EXPECT_EQ(qfbm::fbm_cov(0.0, 1.5, h), 0.0);
}

TEST(FbmCov, BrownianCaseIsMinimum) {
  const HurstParameter h(0.5);
  EXPECT_NEAR(qfbm::fbm_cov(0.3, 0.8, h), 0.3, 1e-15);
  EXPECT_NEAR(qfbm::fbm_cov(2.5, 1.25, h), 1.25, 1e-15);
}

TEST(FbmCov, MatchesExtendedPrecision) {
  for (const double H : {0.05, 0.2, 0.5, 0.8, 0.95}) {
    for (const auto& [s, t] : {std::pair{0.1, 0.9}, {1.0, 3.0}, {0.25, 0.25}, {2.0, 0.7}}) {
      const double e = 2 * H;
      const Big S(s), T(t);
      const double want = ((big_pow(T, e) + big_pow(S, e) - big_pow(abs(T - S), e)) / 2).convert_to<double>();
      EXPECT_NEAR(qfbm::fbm_cov(s, t, HurstParameter(H)), want, 1e-14 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST(FbmCov, RejectsNegativeTimes) {
  EXPECT_THROW(qfbm::fbm_cov(-0.1, 1.0, HurstParameter(0.5)), std::domain_error);
}

TEST(IncrementCov, VarianceIsStepPower) {
  EXPECT_NEAR(qfbm::increment_cov(0, 1.0 / 64, HurstParameter(0.8)), std::pow(1.0 / 64, 1.6), 1e-16);
}

TEST(IncrementCov, BrownianIncrementsAreUncorrelated) {
  const HurstParameter h(0.5);
  for (std::int64_t k = 1; k < 50; ++k) EXPECT_EQ(qfbm::increment_cov(k, 0.01, h), 0.0) << k;
}

TEST(IncrementCov, SignFollowsHurst) {
  for (std::int64_t k = 1; k < 20; ++k) {
    EXPECT_GT(qfbm::increment_cov(k, 1.0, HurstParameter(0.8)), 0.0);
    EXPECT_LT(qfbm::increment_cov(k, 1.0, HurstParameter(0.2)), 0.0);
  }
}

TEST(IncrementCov, KnownValue) {
  // H = 0.8, h = 1, k = 1: (2^1.6 - 2) / 2.
  EXPECT_NEAR(qfbm::increment_cov(1, 1.0, HurstParameter(0.8)), (std::pow(2.0, 1.6) - 2.0) / 2.0, 1e-15);
}

TEST(IncrementCov, RelativeAccuracyForLongLags) {
  for (const double H : {0.01, 0.2, 0.49, 0.51, 0.8, 0.99}) {
    for (const std::int64_t k : {1, 2, 3, 4, 5, 17, 100, 1000, 65536, 1000000, 100000000}) {
      const double got = qfbm::increment_cov(k, 1.0, HurstParameter(H));
      const double want = oracle_increment_cov(k, 1.0, H);
      EXPECT_NEAR(got, want, 1e-12 * std::abs(want)) << "H=" << H << " k=" << k;
    }
  }
}

TEST(IncrementCov, AsymptoticDecay) {
  // gamma(k) ~ H (2H - 1) k^{2H-2}.
  const double H = 0.7;
  const std::int64_t k = 1000000;
  const double got = qfbm::increment_cov(k, 1.0, HurstParameter(H));
  EXPECT_NEAR(got / (H * (2 * H - 1) * std::pow(double(k), 2 * H - 2)), 1.0, 1e-6);
}

TEST(IncrementCov, WorksForLongDouble) {
  const long double got = qfbm::increment_cov<long double>(10000, 1.0L, HurstParameter(0.3));
  EXPECT_NEAR(static_cast<double>(got), oracle_increment_cov(10000, 1.0, 0.3), 1e-12 * std::abs(static_cast<double>(got)));
}

TEST(IncrementCov, RejectsBadArguments) {
  EXPECT_THROW(qfbm::increment_cov(-1, 1.0, HurstParameter(0.5)), std::domain_error);
  EXPECT_THROW(qfbm::increment_cov(1, 0.0, HurstParameter(0.5)), std::domain_error);
}

TEST(IntervalIncrementCov, MatchesExtendedPrecision) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_real_distribution<double> hu(0.02, 0.98);
  for (int trial = 0; trial < 500; ++trial) {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    if (a > b) std::swap(a, b);
    if (c > d) std::swap(c, d);
    const double H = hu(rng);
    const double want = oracle_interval_cov(a, b, c, d, H);
    const double got = qfbm::interval_increment_cov(a, b, c, d, HurstParameter(H));
    EXPECT_NEAR(got, want, 1e-12 * std::max(1.0, std::abs(want))) << a << ' ' << b << ' ' << c << ' ' << d;
  }
}

TEST(IntervalIncrementCov, FarApartIntervalsKeepRelativeAccuracy) {
  for (const double H : {0.1, 0.3, 0.7, 0.9}) {
    for (const double gap : {10.0, 1e3, 1e6}) {
      const double want = oracle_interval_cov(0.0, 0.5, gap, gap + 1.0, H);
      const double got = qfbm::interval_increment_cov(0.0, 0.5, gap, gap + 1.0, HurstParameter(H));
      EXPECT_NEAR(got, want, 1e-11 * std::abs(want)) << H << ' ' << gap;
    }
  }
}

TEST(IntervalIncrementCov, ReducesToIncrementCov) {
  const HurstParameter h(0.35);
  const double step = 0.125;
  for (std::int64_t k = 0; k < 40; ++k) {
    const double got = qfbm::interval_increment_cov(0.0, step, k * step, (k + 1) * step, h);
    EXPECT_NEAR(got, qfbm::increment_cov(k, step, h), 1e-14);
  }
}

TEST(IntervalIncrementCov, RejectsReversedOrNegative) {
  const HurstParameter h(0.5);
  EXPECT_THROW(qfbm::interval_increment_cov(1.0, 0.5, 0.0, 1.0, h), std::domain_error);
  EXPECT_THROW(qfbm::interval_increment_cov(-1.0, 0.5, 0.0, 1.0, h), std::domain_error);
}

// Property: any set of increments has a positive definite covariance matrix.
TEST(IncrementCov, GramMatricesArePositiveDefinite) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> hu(0.02, 0.98);
  std::uniform_int_distribution<int> nu(2, 60);
  for (int trial = 0; trial < 100; ++trial) {
    const HurstParameter h(hu(rng));
    const int n = nu(rng);
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) g(i, j) = qfbm::increment_cov(std::abs(i - j), 1.0 / n, h);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    EXPECT_EQ(llt.info(), Eigen::Success) << "H=" << h.value() << " n=" << n;
  }
}

// Property: summing increment covariances reproduces the path covariance.
TEST(IncrementCov, SumsToPathCovariance) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> hu(0.05, 0.95);
  for (int trial = 0; trial < 50; ++trial) {
    const HurstParameter h(hu(rng));
    const int n = 16;
    const double step = 1.0 / n;
    const int s = static_cast<int>(rng() % n) + 1, t = static_cast<int>(rng() % n) + 1;
    double sum = 0;
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < t; ++j) sum += qfbm::increment_cov(std::abs(i - j), step, h);
    }
    EXPECT_NEAR(sum, qfbm::fbm_cov(s * step, t * step, h), 1e-12);
  }
}

}  // namespace
