#pragma once

// Balancing, classifiers and evaluation for influential-change prediction.
// Influential is the positive label everywhere; ties predict non-influential.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "changescout/common.hpp"
#include "changescout/featurize.hpp"

namespace cs {

enum class Provenance { kReal, kSynthetic };

/// Parent and neighbor of a synthetic row, as row indices of the input.
struct SmoteOrigin {
  std::size_t parent = 0;
  std::size_t neighbor = 0;
  double u = 0;
};

struct Dataset {
  FeatureSchema schema;
  std::vector<FeatureVector> rows;  // every row labeled
  std::vector<Provenance> provenance;
  std::vector<std::optional<SmoteOrigin>> origin;

  std::size_t size() const { return rows.size(); }
  std::size_t count(Label label) const;
  void add(FeatureVector row, Provenance p = Provenance::kReal,
           std::optional<SmoteOrigin> from = std::nullopt);
  /// Throws DataError on ragged rows or missing labels.
  void validate() const;
  /// Subset of rows in the given order.
  Dataset select(const std::vector<std::size_t>& indices) const;

  /// Labeled rows of a feature matrix; unlabeled rows are dropped.
  static Dataset from_matrix(const FeatureMatrix& matrix);
};

/// Zero mean, unit variance per feature. Constant features keep scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  /// Statistics over the real rows of `data`.
  static Standardizer fit(const Dataset& data);
  std::vector<double> transform(const std::vector<double>& x) const;
  Dataset transform(const Dataset& data) const;
  bool empty() const { return mean.empty(); }
};

struct SmoteParams {
  std::size_t k_neighbors = 5;
  double target_ratio = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Returns the input plus synthetic minority rows until minority/majority
/// reaches target_ratio. Neighbors are found on standardized copies.
/// Throws DataError("insufficient minority samples") below two minority rows.
Dataset smote(const Dataset& data, const SmoteParams& params);

/// Number of synthetic rows smote() will add.
std::size_t smote_synthetic_count(std::size_t minority, std::size_t majority, double target_ratio);

struct GaussianNBModel {
  struct ClassStats {
    double prior = 0;
    std::vector<double> mean;
    std::vector<double> variance;  // smoothed
  };
  FeatureSchema schema;
  std::array<ClassStats, 2> classes;  // indexed by to_int(Label)
  double epsilon = 0;

  /// Posterior probabilities, indexed by to_int(Label).
  std::array<double, 2> posteriors(const std::vector<double>& x) const;
};

GaussianNBModel train_nb(const Dataset& data);

struct RandomForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;  // 0: unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t features_per_split = 0;  // 0: ceil(sqrt(p))
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0;
  std::uint32_t left = 0;  // x[feature] <= threshold
  std::uint32_t right = 0;
  std::array<std::uint32_t, 2> counts{};  // training labels reaching the node

  bool is_leaf() const { return feature < 0; }
  Label majority() const;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  Label predict(const std::vector<double>& x) const;
  std::size_t depth() const;
};

struct RandomForestModel {
  FeatureSchema schema;
  RandomForestParams params;
  std::vector<DecisionTree> trees;
};

RandomForestModel train_rf(const Dataset& data, const RandomForestParams& params);

/// Grows a single CART tree on the given (possibly repeated) row indices.
DecisionTree grow_tree(const Dataset& data, const std::vector<std::size_t>& rows,
                       const RandomForestParams& params, Rng& rng);

enum class Algorithm { kNaiveBayes, kRandomForest };
std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view s);

struct Prediction {
  Label label = Label::kNonInfluential;
  double score = 0;  // positive posterior or positive vote fraction
};

Prediction predict(const GaussianNBModel& model, const std::vector<double>& x);
Prediction predict(const RandomForestModel& model, const std::vector<double>& x);

/// A trained model with its input transform. The standardizer is applied
/// before the classifier; the vocabulary rebuilds NL features at predict time.
struct TrainedModel {
  Algorithm algorithm = Algorithm::kRandomForest;
  FeatureGroups groups = FeatureGroups::all();
  Vocabulary vocabulary;
  Standardizer standardizer;
  std::optional<GaussianNBModel> nb;
  std::optional<RandomForestModel> rf;
  SmoteParams smote;
  std::uint64_t seed = 0;

  const FeatureSchema& schema() const;
  /// Throws UsageError if x does not match the schema length.
  Prediction predict(const std::vector<double>& raw_x) const;
};

struct TrainOptions {
  Algorithm algorithm = Algorithm::kRandomForest;
  RandomForestParams rf;
  SmoteParams smote;
  bool use_smote = true;
};

/// Standardize, SMOTE (skipped with a warning when the minority is too small),
/// then fit. Seeds for SMOTE and the forest are derived from `seed`.
TrainedModel train_model(const Dataset& raw, const TrainOptions& options, std::uint64_t seed,
                         Diagnostics* diag = nullptr, std::size_t* synthetic_rows = nullptr);

// --- evaluation --------------------------------------------------------------

struct ConfusionMatrix {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  void add(Label truth, Label predicted);
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct Prf {
  double precision = 0;
  double recall = 0;
  double f_measure = 0;
};

/// Influential-class metrics; 0/0 counts as 0.
Prf prf_metrics(const ConfusionMatrix& c);
/// Non-influential-class metrics from the same matrix.
Prf prf_metrics_negative(const ConfusionMatrix& c);
/// Harmonic mean; 0 when both are 0.
double f_measure(double precision, double recall);

/// Fold index per row. Effective k is min(k, rarer-label count), with a warning
/// when reduced. Throws DataError if a label has fewer than two rows.
std::vector<std::size_t> stratified_folds(const std::vector<Label>& labels, std::size_t k,
                                          std::uint64_t seed, Diagnostics* diag = nullptr,
                                          std::size_t* effective_k = nullptr);

struct FoldResult {
  ConfusionMatrix confusion;
  std::size_t train_rows = 0;
  std::size_t synthetic_rows = 0;
  std::size_t test_rows = 0;
};

struct EvalReport {
  Algorithm algorithm = Algorithm::kRandomForest;
  std::uint64_t seed = 0;
  FeatureGroups groups = FeatureGroups::all();
  std::size_t k = 10;
  std::vector<FoldResult> folds;
  ConfusionMatrix aggregate;
  Prf influential;
  Prf non_influential;
  /// Influential F averaged over folds.
  double mean_fold_f = 0;
  std::vector<std::string> warnings;

  void finalize();
};

/// Builds raw (unstandardized) train and test datasets for a fold from row
/// indices into the caller's table. Test rows must be real.
using FoldTransform =
    std::function<std::pair<Dataset, Dataset>(const std::vector<std::size_t>& train,
                                              const std::vector<std::size_t>& test)>;

struct CrossValOptions {
  std::size_t k = 10;
  TrainOptions train;
};

/// Generic driver: folds from `labels`, then per fold transform, standardize,
/// SMOTE, train and evaluate with statistics from training rows only.
EvalReport cross_validate(const std::vector<Label>& labels, const FoldTransform& transform,
                          const CrossValOptions& options, std::uint64_t seed,
                          FeatureGroups groups = FeatureGroups::all());

/// Cross-validation of a fixed numeric dataset.
EvalReport cross_validate(const Dataset& data, const CrossValOptions& options, std::uint64_t seed);

/// Cross-validation over commit rows; the vocabulary is rebuilt per fold from
/// training messages.
EvalReport cross_validate(const std::vector<CommitFeatureRow>& rows, FeatureGroups groups,
                          const FeatureOptions& features, const CrossValOptions& options,
                          std::uint64_t seed, const Lexicon& lexicon = Lexicon::bundled());

/// One report per feature-group combination, in all_group_combinations() order.
std::vector<EvalReport> cross_validate_groups(const std::vector<CommitFeatureRow>& rows,
                                              const FeatureOptions& features,
                                              const CrossValOptions& options, std::uint64_t seed,
                                              const Lexicon& lexicon = Lexicon::bundled());

struct ProjectResult {
  std::string project;
  std::vector<EvalReport> reports;  // one per feature-group combination
};

/// Averages across projects of a chosen report (by group label).
struct ProjectAverages {
  std::size_t projects = 0;
  Prf mean;                // component-wise means of P, R and F
  double f_of_means = 0;   // harmonic mean of mean P and mean R
  Prf pooled;              // from the summed confusion matrices
};

ProjectAverages average_projects(const std::vector<ProjectResult>& projects,
                                 const std::string& group_label);

/// Text table with rows per feature-group combination and Precision, Recall,
/// F-Measure columns for the Influential and Non-Influential classes.
std::string render_report(const std::vector<ProjectResult>& projects);

}  // namespace cs
