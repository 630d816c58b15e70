#include "changescout/mcd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "changescout/common.hpp"

namespace cs {

namespace {

// Relative threshold below which a covariance is treated as singular.
constexpr double kSingularRatio = 1e-12;
// Absolute diagonal floor for an all-zero scatter (every point identical).
constexpr double kZeroScatterFloor = 1e-12;

bool is_singular(const Sym2& c) {
  const double half_trace = c.trace() / 2.0;
  return !(c.det() > kSingularRatio * half_trace * half_trace) || !(half_trace > 0);
}

struct Scored {
  double d2;
  std::size_t index;
};

// One concentration step: the h points closest to the current fit.
std::vector<std::size_t> concentrate(std::span<const Point2> points, const SubsetMoments& m,
                                     std::size_t h) {
  Sym2 cov = m.cov;
  regularize(cov);
  std::vector<Scored> scored(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    scored[i] = {squared_mahalanobis(points[i], m.mean, cov), i};
  }
  std::nth_element(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(h - 1), scored.end(),
                   [](const Scored& a, const Scored& b) {
                     return a.d2 < b.d2 || (a.d2 == b.d2 && a.index < b.index);
                   });
  std::vector<std::size_t> out(h);
  for (std::size_t i = 0; i < h; ++i) out[i] = scored[i].index;
  std::sort(out.begin(), out.end());
  return out;
}

struct Candidate {
  std::vector<std::size_t> subset;
  double det;
};

Candidate exhaustive_search(std::span<const Point2> points, std::size_t h) {
  const std::size_t n = points.size();
  // Shift to the centroid so the running moment sums do not cancel badly.
  Point2 c{};
  for (const auto& p : points) {
    c.x += p.x;
    c.y += p.y;
  }
  c.x /= static_cast<double>(n);
  c.y /= static_cast<double>(n);
  std::vector<Point2> shifted(points.begin(), points.end());
  for (auto& p : shifted) {
    p.x -= c.x;
    p.y -= c.y;
  }

  Candidate best{{}, std::numeric_limits<double>::infinity()};
  std::vector<std::size_t> idx(h);
  std::iota(idx.begin(), idx.end(), 0);
  const double hd = static_cast<double>(h);
  while (true) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (auto i : idx) {
      const auto& p = shifted[i];
      sx += p.x;
      sy += p.y;
      sxx += p.x * p.x;
      syy += p.y * p.y;
      sxy += p.x * p.y;
    }
    const double mx = sx / hd, my = sy / hd;
    const Sym2 cov{sxx / hd - mx * mx, sxy / hd - mx * my, syy / hd - my * my};
    const double det = cov.det();
    if (det < best.det) best = {idx, det};

    // Next combination in lexicographic order.
    std::size_t k = h;
    while (k > 0 && idx[k - 1] == n - h + k - 1) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t j = k; j < h; ++j) idx[j] = idx[j - 1] + 1;
  }
  best.det = subset_moments(points, best.subset).cov.det();
  return best;
}

Candidate fast_search(std::span<const Point2> points, std::size_t h, const McdOptions& opt) {
  const std::size_t n = points.size();
  Rng rng(opt.seed);
  const auto det_of = [&](const std::vector<std::size_t>& s) {
    return subset_moments(points, s).cov.det();
  };

  std::vector<Candidate> pool;
  pool.reserve(opt.starts);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t s = 0; s < opt.starts; ++s) {
    // Partial Fisher-Yates: a random (p+1)-subset, grown while singular.
    std::vector<std::size_t> perm = all;
    std::size_t size = 3;
    for (std::size_t i = 0; i < size; ++i) std::swap(perm[i], perm[i + rng.index(n - i)]);
    std::vector<std::size_t> start(perm.begin(), perm.begin() + 3);
    while (is_singular(subset_moments(points, start).cov) && size < n) {
      std::swap(perm[size], perm[size + rng.index(n - size)]);
      start.push_back(perm[size]);
      ++size;
    }
    auto subset = concentrate(points, subset_moments(points, start), h);
    for (int step = 0; step < 2; ++step) subset = concentrate(points, subset_moments(points, subset), h);
    pool.push_back({std::move(subset), 0.0});
    pool.back().det = det_of(pool.back().subset);
  }

  std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
    return a.det < b.det || (a.det == b.det && a.subset < b.subset);
  });
  pool.erase(std::unique(pool.begin(), pool.end(),
                         [](const Candidate& a, const Candidate& b) { return a.subset == b.subset; }),
             pool.end());
  if (pool.size() > opt.finalists) pool.resize(opt.finalists);

  Candidate best{{}, std::numeric_limits<double>::infinity()};
  for (auto& cand : pool) {
    for (std::size_t iter = 0; iter < 1000 && cand.det > 0; ++iter) {
      auto next = concentrate(points, subset_moments(points, cand.subset), h);
      if (next == cand.subset) break;
      const double d = det_of(next);
      if (!(d < cand.det)) break;
      cand = {std::move(next), d};
    }
    if (cand.det < best.det || (cand.det == best.det && cand.subset < best.subset)) best = cand;
  }
  return best;
}

}  // namespace

Sym2 Sym2::inverse() const {
  const double d = det();
  return {yy / d, -xy / d, xx / d};
}

std::size_t default_mcd_h(std::size_t n) { return (n + 3) / 2; }

SubsetMoments subset_moments(std::span<const Point2> points, std::span<const std::size_t> subset) {
  SubsetMoments m;
  const double k = static_cast<double>(subset.size());
  for (auto i : subset) {
    m.mean.x += points[i].x;
    m.mean.y += points[i].y;
  }
  m.mean.x /= k;
  m.mean.y /= k;
  for (auto i : subset) {
    const double dx = points[i].x - m.mean.x;
    const double dy = points[i].y - m.mean.y;
    m.cov.xx += dx * dx;
    m.cov.xy += dx * dy;
    m.cov.yy += dy * dy;
  }
  m.cov = m.cov.scaled(1.0 / k);
  return m;
}

bool regularize(Sym2& cov) {
  if (!is_singular(cov)) return false;
  const double half_trace = cov.trace() / 2.0;
  const double add = half_trace > 0 ? 1e-9 * half_trace : kZeroScatterFloor;
  cov.xx += add;
  cov.yy += add;
  if (is_singular(cov)) {
    // Underflow of the relative ridge.
    cov.xx += kZeroScatterFloor;
    cov.yy += kZeroScatterFloor;
  }
  return true;
}

double mcd_consistency_factor(std::size_t h, std::size_t n) {
  if (h >= n) return 1.0;
  return chi2_truncation_factor(static_cast<double>(h) / static_cast<double>(n));
}

double chi2_truncation_factor(double alpha) {
  if (alpha >= 1.0) return 1.0;
  const double q = chi2_2dof_quantile(alpha);
  // chi2 CDF with 4 degrees of freedom: 1 - exp(-x/2) (1 + x/2).
  const double f4 = 1.0 - (1.0 - alpha) * (1.0 + q / 2.0);
  return alpha / f4;
}

double chi2_2dof_quantile(double p) { return -2.0 * std::log1p(-p); }

double squared_mahalanobis(const Point2& x, const Point2& location, const Sym2& covariance) {
  const Sym2 inv = covariance.inverse();
  const double dx = x.x - location.x;
  const double dy = x.y - location.y;
  return dx * dx * inv.xx + 2.0 * dx * dy * inv.xy + dy * dy * inv.yy;
}

RobustModel fit_mcd(std::span<const Point2> points, const McdOptions& options) {
  const std::size_t n = points.size();
  if (n < 3) throw UsageError("fit_mcd: need at least 3 points");
  const std::size_t h = options.h.value_or(default_mcd_h(n));
  if (h < 3 || h > n) {
    throw UsageError("fit_mcd: subset size h=" + std::to_string(h) + " outside [3, " +
                     std::to_string(n) + "]");
  }
  bool exhaustive = options.method == McdMethod::kExhaustive ||
                    (options.method == McdMethod::kAuto && n <= kExhaustiveMcdLimit);
  Candidate best = exhaustive ? exhaustive_search(points, h) : fast_search(points, h, options);

  RobustModel model;
  model.h = h;
  model.support = best.subset;
  const auto m = subset_moments(points, best.subset);
  Sym2 raw = m.cov;
  model.regularized = regularize(raw);
  model.location = m.mean;
  model.mcd_determinant = raw.det();
  model.covariance = raw.scaled(mcd_consistency_factor(h, n));
  if (!options.reweight) return model;

  constexpr double kReweightQuantile = 0.975;
  const double cutoff = chi2_2dof_quantile(kReweightQuantile);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (squared_mahalanobis(points[i], model.location, model.covariance) <= cutoff) kept.push_back(i);
  }
  // The raw subset always survives a consistent cutoff in practice; guard anyway.
  if (kept.size() < 3) return model;
  const auto w = subset_moments(points, kept);
  Sym2 cov = w.cov;
  model.regularized = regularize(cov) || model.regularized;
  model.location = w.mean;
  model.covariance = kept.size() == n ? cov : cov.scaled(chi2_truncation_factor(kReweightQuantile));
  model.reweighted_points = kept.size();
  return model;
}

RobustModel fit_classical(std::span<const Point2> points) {
  const std::size_t n = points.size();
  if (n < 3) throw UsageError("fit_classical: need at least 3 points");
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const auto m = subset_moments(points, all);
  RobustModel model;
  model.h = n;
  model.support = all;
  model.location = m.mean;
  model.covariance = m.cov;
  model.regularized = regularize(model.covariance);
  model.mcd_determinant = model.covariance.det();
  return model;
}

}  // namespace cs
