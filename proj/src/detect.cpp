#include "changescout/detect.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cs {

namespace {

constexpr double kSecondsPerDay = 86400.0;

bool is_hex(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

bool is_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::size_t cap_for(double contamination, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(contamination * static_cast<double>(n) - 1e-12));
}

// Groups per-commit evidence into candidates ordered by corpus position.
class CandidateBuilder {
 public:
  explicit CandidateBuilder(const Corpus& corpus) : corpus_(corpus) {}

  void add(const std::string& hash, Reason reason, Evidence payload) {
    auto& cand = by_hash_[hash];
    cand.commit_hash = hash;
    cand.reasons.insert(reason);
    cand.evidence.push_back({reason, std::move(payload)});
  }

  std::vector<CandidateChange> take() {
    std::vector<CandidateChange> out;
    out.reserve(by_hash_.size());
    for (auto& [hash, cand] : by_hash_) out.push_back(std::move(cand));
    const auto pos = [&](const CandidateChange& c) {
      return corpus_.find_commit(c.commit_hash).value_or(corpus_.commits.size());
    };
    std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
      const auto pa = pos(a), pb = pos(b);
      return pa != pb ? pa < pb : a.commit_hash < b.commit_hash;
    });
    by_hash_.clear();
    return out;
  }

 private:
  const Corpus& corpus_;
  std::map<std::string, CandidateChange> by_hash_;
};

}  // namespace

void DetectorParams::validate() const {
  if (!(comment_percentile > 0 && comment_percentile <= 100)) {
    throw UsageError("percentile must be in (0, 100]");
  }
  if (!(contamination > 0 && contamination < 0.5)) {
    throw UsageError("contamination must be in (0, 0.5)");
  }
  if (!(chi2_quantile > 0 && chi2_quantile < 1)) {
    throw UsageError("chi2 quantile must be in (0, 1)");
  }
  if (min_points < 3) throw UsageError("min_points must be at least 3");
  if (mcd_h && *mcd_h < 3) throw UsageError("mcd_h must be at least 3");
}

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::kControversialIssue: return "controversial-issue";
    case Reason::kIsolatedFile: return "isolated-file";
    case Reason::kIsolatedAuthor: return "isolated-author";
    case Reason::kReferenced: return "referenced";
  }
  return "unknown";
}

std::uint64_t comment_threshold(const std::vector<IssueRecord>& issues, double q) {
  if (issues.empty()) throw DataError("comment_threshold: no issues");
  if (!(q > 0 && q <= 100)) throw UsageError("percentile must be in (0, 100]");
  std::vector<std::uint64_t> counts;
  counts.reserve(issues.size());
  for (const auto& is : issues) counts.push_back(is.comment_count);
  std::sort(counts.begin(), counts.end());
  const double n = static_cast<double>(counts.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n / 100.0 - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, counts.size());
  return counts[rank - 1];
}

std::vector<const IssueRecord*> qualifying_issues(const std::vector<IssueRecord>& issues, double q) {
  const auto threshold = comment_threshold(issues, q);
  std::vector<const IssueRecord*> out;
  for (const auto& is : issues) {
    if (is.comment_count > threshold) out.push_back(&is);
  }
  return out;
}

std::vector<CandidateChange> detect_controversial(const Corpus& corpus, const DetectorParams& params) {
  params.validate();
  if (corpus.issues.empty()) return {};
  std::map<std::string, std::uint64_t, std::less<>> hot;
  for (const auto* is : qualifying_issues(corpus.issues, params.comment_percentile)) {
    hot.emplace(is->key, is->comment_count);
  }
  CandidateBuilder builder(corpus);
  for (const auto& link : corpus.links) {
    const auto it = hot.find(link.issue_key);
    if (it == hot.end() || !corpus.find_commit(link.commit_hash)) continue;
    builder.add(link.commit_hash, Reason::kControversialIssue, IssueEvidence{it->first, it->second});
  }
  return builder.take();
}

std::string normalize_author(std::string_view email) { return to_lower(trim(email)); }

std::map<std::string, std::vector<GapPoint>> edit_gap_points(const Corpus& corpus, Scope scope,
                                                             bool log_gaps) {
  std::map<std::string, std::vector<std::size_t>> timelines;
  for (std::size_t i = 0; i < corpus.commits.size(); ++i) {
    const auto& c = corpus.commits[i];
    if (scope == Scope::kAuthor) {
      timelines[normalize_author(c.author_email)].push_back(i);
      continue;
    }
    std::set<std::string_view> seen;
    for (const auto& f : c.files) {
      if (seen.insert(f.path).second) timelines[f.path].push_back(i);
    }
  }
  const auto gap = [&](std::size_t a, std::size_t b) {
    const double days =
        static_cast<double>(corpus.commits[b].timestamp - corpus.commits[a].timestamp) / kSecondsPerDay;
    return log_gaps ? std::log1p(days) : days;
  };
  std::map<std::string, std::vector<GapPoint>> out;
  for (const auto& [entity, tl] : timelines) {
    auto& pts = out[entity];
    for (std::size_t k = 1; k + 1 < tl.size(); ++k) {
      pts.push_back({corpus.commits[tl[k]].hash, entity, gap(tl[k - 1], tl[k]), gap(tl[k], tl[k + 1])});
    }
  }
  return out;
}

std::optional<RobustModel> fit_entity_model(const std::vector<GapPoint>& points,
                                            const DetectorParams& params, std::string_view entity,
                                            Diagnostics* diag) {
  const std::size_t n = points.size();
  if (n < params.min_points || n < 3) {
    if (n > 0) {
      warn(diag, "skipped " + std::string(entity) + ": " + std::to_string(n) + " points < min_points " +
                     std::to_string(params.min_points));
    }
    return std::nullopt;
  }
  if (params.mcd_h && *params.mcd_h > n) {
    warn(diag, "skipped " + std::string(entity) + ": mcd_h " + std::to_string(*params.mcd_h) +
                   " exceeds " + std::to_string(n) + " points");
    return std::nullopt;
  }
  std::vector<Point2> xy;
  xy.reserve(n);
  for (const auto& p : points) xy.push_back({p.gap_prev, p.gap_next});
  McdOptions opt;
  opt.h = params.mcd_h;
  opt.reweight = params.mcd_reweight;
  opt.seed = derive_seed(params.seed, "mcd:" + std::string(entity));
  auto model = fit_mcd(xy, opt);
  if (model.regularized) {
    warn(diag, std::string(entity) + ": singular MCD scatter regularized");
  }
  return model;
}

std::vector<bool> flag_outliers(const std::vector<GapPoint>& points, const RobustModel& model,
                                const DetectorParams& params) {
  const double threshold = chi2_2dof_quantile(params.chi2_quantile);
  struct Hit {
    double d2;
    std::size_t index;
  };
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 =
        squared_mahalanobis({points[i].gap_prev, points[i].gap_next}, model.location, model.covariance);
    if (d2 > threshold) hits.push_back({d2, i});
  }
  std::sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
    if (a.d2 != b.d2) return a.d2 > b.d2;
    return points[a.index].commit_hash < points[b.index].commit_hash;
  });
  const auto cap = cap_for(params.contamination, points.size());
  if (hits.size() > cap) hits.resize(cap);
  std::vector<bool> flags(points.size(), false);
  for (const auto& h : hits) flags[h.index] = true;
  return flags;
}

std::vector<CandidateChange> detect_isolated(const Corpus& corpus, Scope scope,
                                             const DetectorParams& params, Diagnostics* diag) {
  params.validate();
  const Reason reason = scope == Scope::kFile ? Reason::kIsolatedFile : Reason::kIsolatedAuthor;
  CandidateBuilder builder(corpus);
  for (const auto& [entity, points] : edit_gap_points(corpus, scope, params.log_gaps)) {
    const auto model = fit_entity_model(points, params, entity, diag);
    if (!model) continue;
    const auto flags = flag_outliers(points, *model, params);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!flags[i]) continue;
      const auto& p = points[i];
      const double d2 = squared_mahalanobis({p.gap_prev, p.gap_next}, model->location, model->covariance);
      builder.add(p.commit_hash, reason, IsolationEvidence{scope, entity, p.gap_prev, p.gap_next, d2});
    }
  }
  return builder.take();
}

std::vector<CandidateChange> detect_referenced(const Corpus& corpus, ReferenceScanStats* stats) {
  std::vector<std::string_view> hashes;
  hashes.reserve(corpus.commits.size());
  for (const auto& c : corpus.commits) hashes.push_back(c.hash);
  std::sort(hashes.begin(), hashes.end());

  // Resolves a lowercase hex prefix; empty if unknown, "?" if ambiguous.
  const auto resolve_prefix = [&](const std::string& prefix) -> std::string_view {
    auto it = std::lower_bound(hashes.begin(), hashes.end(), prefix);
    if (it == hashes.end() || !it->starts_with(prefix)) return {};
    if (std::next(it) != hashes.end() && std::next(it)->starts_with(prefix)) return "?";
    return *it;
  };

  CandidateBuilder builder(corpus);
  std::set<std::pair<std::string, std::string>> seen;  // (referred, referring)
  const auto cite = [&](const CommitRecord& from, std::string_view target, std::string token) {
    if (target.empty() || target == from.hash || !corpus.find_commit(target)) return;
    if (!seen.emplace(std::string(target), from.hash).second) return;
    builder.add(std::string(target), Reason::kReferenced, ReferenceEvidence{from.hash, std::move(token)});
  };
  const auto revision_target = [&](std::string_view digits) -> std::string_view {
    std::uint64_t rev = 0;
    for (char c : digits) {
      if (rev > (UINT64_MAX - 9) / 10) return {};
      rev = rev * 10 + static_cast<std::uint64_t>(c - '0');
    }
    const auto it = corpus.revision_map.find(rev);
    return it == corpus.revision_map.end() ? std::string_view{} : std::string_view(it->second);
  };

  for (const auto& c : corpus.commits) {
    std::string_view msg = c.message;
    std::size_t line_start = 0;
    while (line_start <= msg.size()) {
      auto line_end = msg.find('\n', line_start);
      if (line_end == std::string_view::npos) line_end = msg.size();
      const auto line = msg.substr(line_start, line_end - line_start);
      line_start = line_end + 1;
      if (line.find("git-svn-id:") != std::string_view::npos) continue;

      // Alphanumeric tokens with their positions.
      std::vector<std::pair<std::size_t, std::string_view>> tokens;
      for (std::size_t i = 0; i < line.size();) {
        if (!is_alnum(line[i])) {
          ++i;
          continue;
        }
        std::size_t j = i;
        while (j < line.size() && is_alnum(line[j])) ++j;
        tokens.emplace_back(i, line.substr(i, j - i));
        i = j;
      }
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        const auto tok = tokens[t].second;
        if (tok.size() >= 7 && tok.size() <= 40 && std::all_of(tok.begin(), tok.end(), is_hex)) {
          const auto target = resolve_prefix(to_lower(tok));
          if (target == "?") {
            if (stats != nullptr) ++stats->ambiguous_prefixes;
          } else {
            cite(c, target, std::string(tok));
          }
        }
        if (tok.size() >= 2 && (tok[0] == 'r' || tok[0] == 'R') && all_digits(tok.substr(1))) {
          cite(c, revision_target(tok.substr(1)), std::string(tok));
        }
        if (to_lower(tok) == "revision" && t + 1 < tokens.size() && all_digits(tokens[t + 1].second)) {
          const auto between = line.substr(tokens[t].first + tok.size(),
                                           tokens[t + 1].first - tokens[t].first - tok.size());
          if (std::all_of(between.begin(), between.end(), [](char ch) { return ch == ' ' || ch == '\t'; })) {
            cite(c, revision_target(tokens[t + 1].second),
                 std::string(tok) + " " + std::string(tokens[t + 1].second));
          }
        }
      }
    }
  }
  return builder.take();
}

std::vector<CandidateChange> merge_candidates(const Corpus& corpus,
                                              const std::vector<std::vector<CandidateChange>>& lists) {
  CandidateBuilder builder(corpus);
  for (const auto& list : lists) {
    for (const auto& cand : list) {
      for (const auto& ev : cand.evidence) builder.add(cand.commit_hash, ev.reason, ev.payload);
    }
  }
  return builder.take();
}

DetectionReport run_detectors(const Corpus& corpus, const DetectorParams& params, ScopeSelection scopes) {
  params.validate();
  DetectionReport report;
  Diagnostics diag;
  std::vector<std::vector<CandidateChange>> lists;
  lists.push_back(detect_controversial(corpus, params));
  report.flagged_per_reason[Reason::kControversialIssue] = lists.back().size();
  report.flagged_per_reason[Reason::kIsolatedFile] = 0;
  report.flagged_per_reason[Reason::kIsolatedAuthor] = 0;
  if (scopes != ScopeSelection::kAuthor) {
    lists.push_back(detect_isolated(corpus, Scope::kFile, params, &diag));
    report.flagged_per_reason[Reason::kIsolatedFile] = lists.back().size();
  }
  if (scopes != ScopeSelection::kFile) {
    lists.push_back(detect_isolated(corpus, Scope::kAuthor, params, &diag));
    report.flagged_per_reason[Reason::kIsolatedAuthor] = lists.back().size();
  }
  ReferenceScanStats stats;
  lists.push_back(detect_referenced(corpus, &stats));
  report.flagged_per_reason[Reason::kReferenced] = lists.back().size();
  report.ambiguous_prefixes = stats.ambiguous_prefixes;
  report.candidates = merge_candidates(corpus, lists);
  report.warnings = diag.warnings();
  return report;
}

}  // namespace cs
