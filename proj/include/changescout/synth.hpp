#pragma once

// Seeded generators for test corpora with known answers.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "changescout/detect.hpp"
#include "changescout/learn.hpp"

namespace cs {

struct FixtureOptions {
  std::uint64_t seed = 7;
  std::string project_key = "PROJ";
  std::size_t labeled_negatives = 40;
};

/// A project history in which every detector fires on exactly the planted
/// commits. Regular activity is strictly periodic, so robust scatter is
/// degenerate and only the planted timing anomalies have positive distance.
///
///   - 300 daily commits by five authors in rotation, ten file groups touched
///     every tenth day;
///   - build.gradle edited daily in the first and last 20 days and once at
///     day 150 (file-scope isolation);
///   - a rare author committing daily in two bursts plus once at day 100.5
///     (author-scope isolation);
///   - one issue with ten times the median comment count, linked twice;
///   - a hex-prefix chain 70 -> 60 -> 50 and an SVN chain 240 -> 230 -> 220.
struct PlantedFixture {
  std::vector<CommitRecord> commits;  // chronological
  std::vector<IssueRecord> issues;
  std::string project_key;
  std::map<std::string, std::set<Reason>> planted;
  std::map<std::string, Label> labels;
  /// Comment percentile under which exactly the hot issue qualifies.
  double comment_percentile = 98.0;
};

PlantedFixture make_planted_fixture(const FixtureOptions& options = {});

/// "hash,label" CSV for the fixture labels.
std::string labels_csv(const std::map<std::string, Label>& labels);
/// JSON lines for issues in the archive format read by parse_issue_archive.
std::string issues_jsonl(const std::vector<IssueRecord>& issues);

struct GaussianOptions {
  std::size_t rows = 500;
  double minority_fraction = 0.1;
  std::size_t dims = 5;
  /// Distance between class means along every axis, in standard deviations.
  double separation = 4.0;
  std::uint64_t seed = 1;
};

/// Two isotropic unit Gaussians; minority rows are influential. Row order is
/// shuffled.
Dataset make_gaussian_dataset(const GaussianOptions& options);

}  // namespace cs
