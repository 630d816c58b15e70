#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <limits>

#include "changescout/common.hpp"
#include "changescout/mcd.hpp"

namespace cs {
namespace {

// Minimum determinant of the MLE covariance over every h-subset, via Eigen.
double exhaustive_oracle(const std::vector<Point2>& pts, std::size_t h) {
  double best = std::numeric_limits<double>::infinity();
  const auto n = pts.size();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != h) continue;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(h), 2);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) m.row(r++) << pts[i].x, pts[i].y;
    }
    const Eigen::MatrixXd c = m.rowwise() - m.colwise().mean();
    best = std::min(best, ((c.transpose() * c) / static_cast<double>(h)).determinant());
  }
  return best;
}

std::vector<Point2> random_points(Rng& rng, std::size_t n) {
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.normal(), b = rng.normal();
    pts.push_back({2 * a + 5, 0.5 * a + b});
  }
  return pts;
}

TEST(Mcd, DefaultH) {
  EXPECT_EQ(default_mcd_h(12), 7u);
  EXPECT_EQ(default_mcd_h(42), 22u);
  EXPECT_EQ(default_mcd_h(3), 3u);
}

TEST(Mcd, ExhaustivePathMatchesOracle) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = random_points(rng, 6 + rng.index(7));
    McdOptions o;
    o.method = McdMethod::kExhaustive;
    const auto m = fit_mcd(pts, o);
    const double ref = exhaustive_oracle(pts, m.h);
    EXPECT_NEAR(m.mcd_determinant, ref, 1e-9 * ref);
    EXPECT_EQ(m.support.size(), m.h);
    EXPECT_TRUE(std::is_sorted(m.support.begin(), m.support.end()));
  }
}

TEST(Mcd, FastPathFindsExhaustiveMinimumOnSmallInputs) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = random_points(rng, 12);
    McdOptions fast;
    fast.method = McdMethod::kFast;
    fast.seed = static_cast<std::uint64_t>(trial);
    const double ref = exhaustive_oracle(pts, default_mcd_h(12));
    EXPECT_NEAR(fit_mcd(pts, fast).mcd_determinant, ref, 1e-9 * ref);
  }
}

TEST(Mcd, FastPathIsSeedDeterministic) {
  Rng rng(4);
  const auto pts = random_points(rng, 60);
  McdOptions o;
  o.seed = 99;
  const auto a = fit_mcd(pts, o), b = fit_mcd(pts, o);
  EXPECT_EQ(a.support, b.support);
  EXPECT_EQ(a.mcd_determinant, b.mcd_determinant);
}

TEST(Mcd, NearIdenticalPointsStayUsable) {
  std::vector<Point2> pts;
  for (int i = 0; i < 12; ++i) pts.push_back({3 + (i % 2 ? 1e-12 : -1e-12), 4 + (i % 3 ? 1e-12 : -1e-12)});
  const auto m = fit_mcd(pts, {});
  EXPECT_NEAR(m.location.x, 3, 1e-9);
  EXPECT_NEAR(m.location.y, 4, 1e-9);
  EXPECT_GT(m.covariance.det(), 0);
  EXPECT_TRUE(std::isfinite(squared_mahalanobis({3, 4}, m.location, m.covariance)));
}

TEST(Mcd, CollinearClusterIsRegularized) {
  std::vector<Point2> pts;
  for (int i = 0; i < 12; ++i) pts.push_back({3 + (i % 2 ? 1e-12 : -1e-12), 4});
  const auto m = fit_mcd(pts, {});
  EXPECT_NEAR(m.location.x, 3, 1e-9);
  EXPECT_EQ(m.location.y, 4);
  EXPECT_TRUE(m.regularized);
  EXPECT_GT(m.covariance.det(), 0);
  EXPECT_TRUE(std::isfinite(squared_mahalanobis({3, 5}, m.location, m.covariance)));
}

TEST(Mcd, AllIdenticalPointsGetPositiveFloor) {
  const std::vector<Point2> pts(10, Point2{1, 1});
  const auto m = fit_mcd(pts, {});
  EXPECT_TRUE(m.regularized);
  EXPECT_GT(m.covariance.det(), 0);
  EXPECT_EQ(squared_mahalanobis({1, 1}, m.location, m.covariance), 0);
}

TEST(Mcd, DistantPointsStayOutOfBestSubset) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point2> pts;
    for (int i = 0; i < 40; ++i) pts.push_back({10 + 0.5 * rng.normal(), 10 + 0.5 * rng.normal()});
    pts.push_back({60, 55});
    pts.push_back({10, 80});
    McdOptions o;
    o.h = 21;
    o.seed = static_cast<std::uint64_t>(trial);
    const auto m = fit_mcd(pts, o);
    for (auto i : m.support) EXPECT_LT(i, 40u);
  }
}

TEST(Mcd, InvalidSubsetSize) {
  const std::vector<Point2> pts{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  McdOptions o;
  o.h = 5;
  EXPECT_THROW(fit_mcd(pts, o), UsageError);
  o.h = 2;
  EXPECT_THROW(fit_mcd(pts, o), UsageError);
  EXPECT_THROW(fit_mcd(std::vector<Point2>{{0, 0}, {1, 1}}, {}), UsageError);
}

TEST(Mcd, ConsistencyFactor) {
  // alpha / P(chi2_4 <= chi2_2^{-1}(alpha)) evaluated by hand for alpha = 1/2.
  const double q = 2 * std::log(2.0);
  const double expected = 0.5 / (1 - 0.5 * (1 + q / 2));
  EXPECT_NEAR(mcd_consistency_factor(50, 100), expected, 1e-12);
  EXPECT_EQ(mcd_consistency_factor(10, 10), 1.0);
  EXPECT_NEAR(chi2_2dof_quantile(0.975), -2 * std::log(0.025), 1e-12);
}

TEST(Mcd, ReweightingKeepsRawDeterminantAndCountsKeptPoints) {
  Rng rng(8);
  auto pts = random_points(rng, 30);
  pts.push_back({100, 100});
  McdOptions raw, rw;
  rw.reweight = true;
  const auto a = fit_mcd(pts, raw), b = fit_mcd(pts, rw);
  EXPECT_EQ(a.mcd_determinant, b.mcd_determinant);
  EXPECT_EQ(a.reweighted_points, 0u);
  EXPECT_GT(b.reweighted_points, a.h);
  EXPECT_LT(b.reweighted_points, pts.size());
}

TEST(Sym2, InverseAndDeterminant) {
  const Sym2 s{4, 1, 3};
  EXPECT_DOUBLE_EQ(s.det(), 11);
  const Sym2 inv = s.inverse();
  EXPECT_NEAR(s.xx * inv.xx + s.xy * inv.xy, 1, 1e-15);
  EXPECT_NEAR(s.xx * inv.xy + s.xy * inv.yy, 0, 1e-15);
}

}  // namespace
}  // namespace cs
