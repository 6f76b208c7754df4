#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "qfbm/random.hpp"

namespace {

using qfbm::Philox4x32;

// Known-answer vectors of the reference Philox4x32-10 implementation.
TEST(Philox, KnownAnswers) {
  struct Kat {
    Philox4x32::Counter ctr;
    Philox4x32::Key key;
    Philox4x32::Counter out;
  };
  const Kat kats[] = {
      {{0, 0, 0, 0}, {0, 0}, {0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}},
      {{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
       {0xffffffff, 0xffffffff},
       {0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}},
      {{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
       {0xa4093822, 0x299f31d0},
       {0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}},
  };
  for (const auto& k : kats) EXPECT_EQ(Philox4x32::encrypt(k.ctr, k.key), k.out);
}

TEST(StreamId, DistinctForDistinctInputs) {
  std::set<std::uint64_t> ids;
  for (std::uint64_t a = 0; a < 50; ++a) {
    for (std::uint64_t b = 0; b < 50; ++b) ids.insert(qfbm::stream_id(qfbm::StreamPurpose::kFieldMode, {a, b}));
  }
  EXPECT_EQ(ids.size(), 2500u);
  EXPECT_NE(qfbm::stream_id(qfbm::StreamPurpose::kPath, {1}), qfbm::stream_id(qfbm::StreamPurpose::kCrmdError, {1}));
  EXPECT_NE(qfbm::stream_id(qfbm::StreamPurpose::kPath, {1, 2}), qfbm::stream_id(qfbm::StreamPurpose::kPath, {2, 1}));
  EXPECT_EQ(qfbm::stream_id(qfbm::StreamPurpose::kPath, {3, 4}), qfbm::stream_id(qfbm::StreamPurpose::kPath, {3, 4}));
}

TEST(GaussianStream, Deterministic) {
  qfbm::GaussianStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
  EXPECT_EQ(a.drawn(), 1000u);
}

TEST(GaussianStream, SeedsAndStreamsDiffer) {
  qfbm::GaussianStream a(1, 0), b(2, 0), c(1, 1);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 100; ++i) {
    const double x = a(), y = b(), z = c();
    same_ab += x == y;
    same_ac += x == z;
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
}

TEST(GaussianStream, MomentsMatchStandardNormal) {
  qfbm::GaussianStream g(2024, qfbm::stream_id(qfbm::StreamPurpose::kTest, {1}));
  const int n = 400000;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = g();
    s1 += x;
    s2 += x * x;
    s3 += x * x * x;
    s4 += x * x * x * x;
  }
  const double m1 = s1 / n, m2 = s2 / n, m3 = s3 / n, m4 = s4 / n;
  // Standard errors: sqrt(Var(X^k) / n) with Var(X)=1, Var(X^2)=2, Var(X^3)=15, Var(X^4)=96.
  EXPECT_NEAR(m1, 0.0, 4 * std::sqrt(1.0 / n));
  EXPECT_NEAR(m2, 1.0, 4 * std::sqrt(2.0 / n));
  EXPECT_NEAR(m3, 0.0, 4 * std::sqrt(15.0 / n));
  EXPECT_NEAR(m4, 3.0, 4 * std::sqrt(96.0 / n));
}

TEST(GaussianStream, KolmogorovSmirnov) {
  qfbm::GaussianStream g(99, qfbm::stream_id(qfbm::StreamPurpose::kTest, {2}));
  std::vector<double> x(20000);
  for (auto& v : x) v = g();
  std::sort(x.begin(), x.end());
  const boost::math::normal_distribution<double> nd;
  double d = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = boost::math::cdf(nd, x[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  // 0.1% critical value of the KS statistic is about 1.95 / sqrt(n).
  EXPECT_LT(d, 1.95 / std::sqrt(n));
}

TEST(GaussianStream, NeighbouringStreamsAreUncorrelated) {
  const int n = 100000;
  double sxy = 0;
  qfbm::GaussianStream a(5, qfbm::stream_id(qfbm::StreamPurpose::kFieldMode, {0, 0}));
  qfbm::GaussianStream b(5, qfbm::stream_id(qfbm::StreamPurpose::kFieldMode, {0, 1}));
  for (int i = 0; i < n; ++i) sxy += a() * b();
  EXPECT_NEAR(sxy / n, 0.0, 4 / std::sqrt(double(n)));
}

TEST(ReplaySource, ReplaysThenThrows) {
  const std::vector<double> v{1.5, -2.0};
  qfbm::ReplaySource r(v);
  EXPECT_EQ(r(), 1.5);
  EXPECT_EQ(r(), -2.0);
  EXPECT_EQ(r.consumed(), 2u);
  EXPECT_THROW(r(), std::out_of_range);
}

TEST(CountingSource, CountsDraws) {
  qfbm::GaussianStream g(1, 1);
  qfbm::CountingSource counter(g);
  const auto v = qfbm::draw_normals(counter, 17);
  EXPECT_EQ(v.size(), 17u);
  EXPECT_EQ(counter.count(), 17u);
  EXPECT_EQ(g.drawn(), 17u);
}

}  // namespace
