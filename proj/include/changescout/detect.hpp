#pragma once

// Post-mortem detectors that flag candidate influential changes:
//   - commits linked to issues with an unusually long discussion,
//   - commits isolated in a file's or an author's edit rhythm,
//   - commits referenced from other commit messages.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "changescout/ingest.hpp"
#include "changescout/mcd.hpp"

namespace cs {

struct DetectorParams {
  double comment_percentile = 99.0;  // (0, 100]
  double contamination = 0.01;       // (0, 0.5)
  std::optional<std::size_t> mcd_h;
  bool mcd_reweight = false;
  double chi2_quantile = 0.975;
  std::size_t min_points = 10;
  std::uint64_t seed = 0;
  bool log_gaps = false;  // use log1p(days) instead of raw days

  /// Throws UsageError when a field is out of range.
  void validate() const;
};

enum class Reason { kControversialIssue, kIsolatedFile, kIsolatedAuthor, kReferenced };

std::string_view to_string(Reason r);

enum class Scope { kFile, kAuthor };

struct IssueEvidence {
  std::string issue_key;
  std::uint64_t comment_count = 0;
};

struct IsolationEvidence {
  Scope scope = Scope::kFile;
  std::string entity;
  double gap_prev = 0;  // days
  double gap_next = 0;
  double distance2 = 0;  // squared robust Mahalanobis distance
};

struct ReferenceEvidence {
  std::string referring_hash;
  std::string token;  // text that matched, e.g. "93089b26" or "r1234"
};

using Evidence = std::variant<IssueEvidence, IsolationEvidence, ReferenceEvidence>;

struct EvidenceItem {
  Reason reason;
  Evidence payload;
};

struct CandidateChange {
  std::string commit_hash;
  std::set<Reason> reasons;
  std::vector<EvidenceItem> evidence;
};

// --- controversial issues ----------------------------------------------------

/// Nearest-rank percentile of comment counts: the value at 1-based position
/// ceil(q/100 * n) of the ascending counts. Throws DataError on empty input.
std::uint64_t comment_threshold(const std::vector<IssueRecord>& issues, double q);

/// Issues whose comment count is strictly greater than the threshold.
std::vector<const IssueRecord*> qualifying_issues(const std::vector<IssueRecord>& issues, double q);

std::vector<CandidateChange> detect_controversial(const Corpus& corpus, const DetectorParams& params);

// --- isolated commits --------------------------------------------------------

struct GapPoint {
  std::string commit_hash;
  std::string entity;
  double gap_prev = 0;  // days
  double gap_next = 0;
};

/// Author identity used for author-scope timelines.
std::string normalize_author(std::string_view email);

/// Per-entity (file path or normalized author email) gap points. The first and
/// last commit of each timeline have no point.
std::map<std::string, std::vector<GapPoint>> edit_gap_points(const Corpus& corpus, Scope scope,
                                                             bool log_gaps = false);

/// Fits the robust model for one entity. Returns nullopt (and warns) when the
/// entity has fewer than params.min_points points.
std::optional<RobustModel> fit_entity_model(const std::vector<GapPoint>& points,
                                            const DetectorParams& params, std::string_view entity,
                                            Diagnostics* diag = nullptr);

/// Flags points with squared distance above the chi-square quantile, keeping at
/// most ceil(contamination * n) of them (largest distances, ties by hash).
std::vector<bool> flag_outliers(const std::vector<GapPoint>& points, const RobustModel& model,
                                const DetectorParams& params);

std::vector<CandidateChange> detect_isolated(const Corpus& corpus, Scope scope,
                                             const DetectorParams& params,
                                             Diagnostics* diag = nullptr);

// --- referenced commits ------------------------------------------------------

struct ReferenceScanStats {
  std::size_t ambiguous_prefixes = 0;
};

/// Commits cited by another commit through a unique hex prefix (>= 7 chars)
/// or an SVN revision ("r1234", "revision 1234").
std::vector<CandidateChange> detect_referenced(const Corpus& corpus,
                                               ReferenceScanStats* stats = nullptr);

// --- merge -------------------------------------------------------------------

/// One candidate per hash with united reasons, ordered by corpus position.
std::vector<CandidateChange> merge_candidates(const Corpus& corpus,
                                              const std::vector<std::vector<CandidateChange>>& lists);

struct DetectionReport {
  std::vector<CandidateChange> candidates;
  std::map<Reason, std::size_t> flagged_per_reason;  // before merging
  std::size_t ambiguous_prefixes = 0;
  std::vector<std::string> warnings;
};

enum class ScopeSelection { kFile, kAuthor, kBoth };

DetectionReport run_detectors(const Corpus& corpus, const DetectorParams& params,
                              ScopeSelection scopes = ScopeSelection::kBoth);

}  // namespace cs
