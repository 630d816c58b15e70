#pragma once

// Minimum covariance determinant estimation for two-dimensional point clouds.
//
// For n <= 15 the optimal h-subset is found by enumerating every subset. Larger
// inputs use FAST-MCD: random (p+1)-point starts refined by concentration steps
// (C-steps), each of which can only lower the determinant. Optionally the raw
// estimate is reweighted once, keeping points within the 0.975 chi-square cutoff.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cs {

struct Point2 {
  double x = 0;
  double y = 0;
};

/// Symmetric 2x2 matrix.
struct Sym2 {
  double xx = 0;
  double xy = 0;
  double yy = 0;

  double det() const { return xx * yy - xy * xy; }
  double trace() const { return xx + yy; }
  Sym2 inverse() const;
  Sym2 scaled(double s) const { return {xx * s, xy * s, yy * s}; }
};

struct RobustModel {
  Point2 location;
  Sym2 covariance;              // consistency-corrected scatter
  double mcd_determinant = 0;   // determinant of the raw best-subset covariance
  std::size_t h = 0;
  std::vector<std::size_t> support;  // indices of the best h-subset, ascending
  std::size_t reweighted_points = 0;  // points kept by reweighting; 0 if not reweighted
  bool regularized = false;
};

enum class McdMethod { kAuto, kExhaustive, kFast };

struct McdOptions {
  std::optional<std::size_t> h;  // default floor((n + p + 1) / 2)
  std::uint64_t seed = 0;
  McdMethod method = McdMethod::kAuto;
  std::size_t starts = 500;
  std::size_t finalists = 10;
  // One-step reweighting: refit on points within the 0.975 chi-square cutoff
  // of the raw estimate. Off by default: the raw best-subset estimate is used.
  bool reweight = false;
};

inline constexpr std::size_t kExhaustiveMcdLimit = 15;

/// Default subset size floor((n + 3) / 2) for p = 2.
std::size_t default_mcd_h(std::size_t n);

/// Fits the MCD estimator. Throws UsageError if n < 3 or h is outside [3, n].
RobustModel fit_mcd(std::span<const Point2> points, const McdOptions& options);

/// Classical (maximum likelihood) mean and covariance, regularized if singular.
RobustModel fit_classical(std::span<const Point2> points);

/// Maximum likelihood mean/covariance of a subset.
struct SubsetMoments {
  Point2 mean;
  Sym2 cov;
};
SubsetMoments subset_moments(std::span<const Point2> points, std::span<const std::size_t> subset);

/// Adds 1e-9 * trace / 2 to the diagonal when the matrix is singular.
/// Returns true if the matrix was changed.
bool regularize(Sym2& cov);

/// Consistency factor making the h/n raw MCD scatter unbiased at the bivariate
/// normal: alpha / P(chi2_4 <= chi2_2^{-1}(alpha)), alpha = h/n.
double mcd_consistency_factor(std::size_t h, std::size_t n);

/// Same factor for a normal sample truncated at the alpha chi-square quantile.
double chi2_truncation_factor(double alpha);

/// Quantile of the chi-square distribution with two degrees of freedom.
double chi2_2dof_quantile(double p);

double squared_mahalanobis(const Point2& x, const Point2& location, const Sym2& covariance);

}  // namespace cs
