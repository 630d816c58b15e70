#pragma once

// Per-commit feature extraction. Three groups:
//   SI  structural: files changed, lines added, lines removed
//   NL  bag-of-words term counts plus message polarity and subjectivity
//   CC  co-change deltas: min/max PageRank, summed betweenness and closeness

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "changescout/cochange.hpp"
#include "changescout/ingest.hpp"

namespace cs {

namespace resources {
std::string_view stopwords_text();
std::string_view lexicon_text();
}  // namespace resources

// --- groups ----------------------------------------------------------------

enum class FeatureGroup { kCC, kNL, kSI };

struct FeatureGroups {
  bool cc = false;
  bool nl = false;
  bool si = false;

  bool empty() const { return !cc && !nl && !si; }
  bool contains(FeatureGroup g) const;
  /// "CC", "NL SI", ..., "ALL" for all three.
  std::string label() const;
  /// Parses "CC", "NL+SI", "CC NL", "ALL" (case-insensitive).
  static FeatureGroups parse(std::string_view text);
  static FeatureGroups all() { return {true, true, true}; }

  friend bool operator==(const FeatureGroups&, const FeatureGroups&) = default;
};

/// The seven non-empty combinations: CC, NL, SI, CC NL, CC SI, NL SI, ALL.
std::vector<FeatureGroups> all_group_combinations();

// --- text --------------------------------------------------------------------

const std::set<std::string, std::less<>>& bundled_stopwords();

/// Lowercases, splits on non-alphanumeric characters and drops tokens shorter
/// than two characters. Stopwords are removed when `drop_stopwords` is set.
std::vector<std::string> tokenize(std::string_view message, bool drop_stopwords = true);

struct Vocabulary {
  std::vector<std::string> terms;  // sorted, unique
  std::map<std::string, std::size_t> document_frequency;
  std::size_t built_from = 0;

  std::optional<std::size_t> index_of(std::string_view term) const;
};

/// Keeps terms with document frequency >= min_df; above max_terms, the
/// highest-df terms win (ties lexicographic).
Vocabulary build_vocabulary(std::span<const std::string> messages, std::size_t min_df = 2,
                            std::size_t max_terms = 500);

/// Raw counts of vocabulary terms, in vocabulary order.
std::vector<double> bow_features(std::string_view message, const Vocabulary& vocabulary);

struct LexiconEntry {
  double polarity = 0;      // [-1, 1]
  double subjectivity = 0;  // [0, 1]
};

class Lexicon {
 public:
  /// Parses "word<TAB>polarity<TAB>subjectivity" lines; '#' starts a comment.
  static Lexicon parse(std::string_view text);
  static const Lexicon& bundled();

  void add(std::string word, LexiconEntry entry);
  const LexiconEntry* find(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, LexiconEntry, std::less<>> entries_;
};

/// Mean polarity and subjectivity over message tokens found in the lexicon.
LexiconEntry sentiment_features(std::string_view message, const Lexicon& lexicon);

// --- structural --------------------------------------------------------------

struct StructuralFeatures {
  double n_files = 0;
  double lines_added = 0;
  double lines_removed = 0;
};

StructuralFeatures structural_features(const CommitRecord& commit);

// --- schema and vectors ------------------------------------------------------

struct FeatureSchema {
  std::vector<std::string> names;
  std::vector<FeatureGroup> groups;  // parallel to names

  std::size_t size() const { return names.size(); }
  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

inline constexpr std::array<std::string_view, 3> kStructuralNames = {"n_files", "lines_added",
                                                                    "lines_removed"};
inline constexpr std::array<std::string_view, 4> kCoChangeNames = {
    "d_min_pr", "d_max_pr", "d_sum_betweenness", "d_sum_closeness"};
inline constexpr std::string_view kTermPrefix = "w:";

/// Schema for the enabled groups, ordered CC, NL, SI.
FeatureSchema make_schema(const Vocabulary& vocabulary, FeatureGroups groups);

struct FeatureVector {
  std::string commit_hash;
  std::vector<double> values;
  std::optional<Label> label;
};

struct NaturalLanguageFeatures {
  std::vector<double> term_counts;
  LexiconEntry sentiment;
};

/// Concatenates the enabled groups. Throws UsageError if the result does not
/// match the schema length or no group is enabled.
FeatureVector assemble(std::string_view commit_hash, const StructuralFeatures& si,
                       const NaturalLanguageFeatures& nl, const CoChangeFeatures& cc,
                       const FeatureSchema& schema, FeatureGroups groups,
                       std::optional<Label> label = std::nullopt);

/// Raw, vocabulary-independent parts of every commit's features.
struct CommitFeatureRow {
  std::string hash;
  std::optional<Label> label;
  std::string message;
  StructuralFeatures si;
  CoChangeFeatures cc;
};

/// Computes SI and CC parts for all commits of the corpus (CC needs the whole
/// history up to each commit).
std::vector<CommitFeatureRow> build_commit_rows(const Corpus& corpus, const CentralityParams& params);

struct FeatureOptions {
  std::size_t min_df = 2;
  std::size_t max_terms = 500;
};

/// Builds the vocabulary from `vocab_rows` and feature vectors for `rows`.
struct FeatureMatrix {
  FeatureSchema schema;
  Vocabulary vocabulary;
  std::vector<FeatureVector> rows;
};
FeatureMatrix featurize_rows(std::span<const CommitFeatureRow> rows,
                             std::span<const CommitFeatureRow> vocab_rows, FeatureGroups groups,
                             const FeatureOptions& options, const Lexicon& lexicon = Lexicon::bundled());

/// Header "hash,label,<names...>", then one row per vector; unlabeled rows
/// leave the label empty.
std::string features_csv(const FeatureSchema& schema, std::span<const FeatureVector> rows);

}  // namespace cs
