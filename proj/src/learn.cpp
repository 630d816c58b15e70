#include "changescout/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cs {

std::size_t Dataset::count(Label label) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [&](const FeatureVector& r) { return r.label == label; }));
}

void Dataset::add(FeatureVector row, Provenance p, std::optional<SmoteOrigin> from) {
  rows.push_back(std::move(row));
  provenance.push_back(p);
  origin.push_back(from);
}

void Dataset::validate() const {
  if (provenance.size() != rows.size() || origin.size() != rows.size()) {
    throw DataError("dataset provenance does not cover every row");
  }
  for (const auto& r : rows) {
    if (r.values.size() != schema.size()) {
      throw DataError("row " + r.commit_hash + " has " + std::to_string(r.values.size()) +
                      " values, schema has " + std::to_string(schema.size()));
    }
    if (!r.label) throw DataError("row " + r.commit_hash + " is unlabeled");
  }
}

Dataset Dataset::select(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.schema = schema;
  for (auto i : indices) out.add(rows.at(i), provenance[i], origin[i]);
  return out;
}

Dataset Dataset::from_matrix(const FeatureMatrix& matrix) {
  Dataset out;
  out.schema = matrix.schema;
  for (const auto& r : matrix.rows) {
    if (r.label) out.add(r);
  }
  return out;
}

// --- standardizer -------------------------------------------------------------

Standardizer Standardizer::fit(const Dataset& data) {
  const std::size_t p = data.schema.size();
  Standardizer s;
  s.mean.assign(p, 0.0);
  s.scale.assign(p, 1.0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.provenance[i] != Provenance::kReal) continue;
    ++n;
    for (std::size_t j = 0; j < p; ++j) s.mean[j] += data.rows[i].values[j];
  }
  if (n == 0) throw DataError("cannot standardize: no real rows");
  for (auto& m : s.mean) m /= static_cast<double>(n);
  std::vector<double> ss(p, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.provenance[i] != Provenance::kReal) continue;
    for (std::size_t j = 0; j < p; ++j) {
      const double d = data.rows[i].values[j] - s.mean[j];
      ss[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < p; ++j) {
    const double sd = std::sqrt(ss[j] / static_cast<double>(n));
    if (sd > 0 && std::isfinite(sd)) s.scale[j] = sd;
  }
  return s;
}

std::vector<double> Standardizer::transform(const std::vector<double>& x) const {
  if (x.size() != mean.size()) {
    throw UsageError("standardizer expects " + std::to_string(mean.size()) + " values, got " +
                     std::to_string(x.size()));
  }
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
  return out;
}

Dataset Standardizer::transform(const Dataset& data) const {
  Dataset out = data;
  for (auto& r : out.rows) r.values = transform(r.values);
  return out;
}

// --- SMOTE -------------------------------------------------------------------

void SmoteParams::validate() const {
  if (k_neighbors < 1) throw UsageError("k_neighbors must be >= 1");
  if (!(target_ratio > 0 && target_ratio <= 1)) throw UsageError("target_ratio must be in (0, 1]");
}

std::size_t smote_synthetic_count(std::size_t minority, std::size_t majority, double target_ratio) {
  // The epsilon absorbs products like 0.1 * 90 landing just above an integer.
  const double goal = std::ceil(target_ratio * static_cast<double>(majority) - 1e-9);
  const auto want = static_cast<std::size_t>(std::max(goal, 0.0));
  return want > minority ? want - minority : 0;
}

Dataset smote(const Dataset& data, const SmoteParams& params) {
  params.validate();
  data.validate();
  const std::size_t n1 = data.count(Label::kInfluential);
  const std::size_t n0 = data.count(Label::kNonInfluential);
  const Label minority = n1 <= n0 ? Label::kInfluential : Label::kNonInfluential;
  const std::size_t m = std::min(n0, n1);
  const std::size_t needed = smote_synthetic_count(m, std::max(n0, n1), params.target_ratio);

  Dataset out = data;
  if (needed == 0) return out;
  if (m < 2) throw DataError("insufficient minority samples");

  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.rows[i].label == minority) idx.push_back(i);
  }
  const auto scaler = Standardizer::fit(data);
  std::vector<std::vector<double>> z;
  z.reserve(m);
  for (auto i : idx) z.push_back(scaler.transform(data.rows[i].values));

  const std::size_t k = std::min(params.k_neighbors, m - 1);
  std::vector<std::vector<std::size_t>> knn(m);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t a = 0; a < m; ++a) {
    dist.clear();
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      double d = 0;
      for (std::size_t j = 0; j < z[a].size(); ++j) d += (z[a][j] - z[b][j]) * (z[a][j] - z[b][j]);
      dist.emplace_back(d, b);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t t = 0; t < k; ++t) knn[a].push_back(dist[t].second);
  }

  Rng rng(params.seed);
  for (std::size_t s = 0; s < needed; ++s) {
    const std::size_t a = rng.index(m);
    const std::size_t b = knn[a][rng.index(k)];
    const double u = rng.unit();
    const auto& x = data.rows[idx[a]].values;
    const auto& nb = data.rows[idx[b]].values;
    FeatureVector row;
    row.commit_hash = "synthetic-" + std::to_string(s);
    row.label = minority;
    row.values.resize(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) row.values[j] = x[j] + u * (nb[j] - x[j]);
    out.add(std::move(row), Provenance::kSynthetic, SmoteOrigin{idx[a], idx[b], u});
  }
  return out;
}

// --- Gaussian naive Bayes ----------------------------------------------------

GaussianNBModel train_nb(const Dataset& data) {
  data.validate();
  const std::size_t p = data.schema.size();
  const std::size_t n = data.size();
  GaussianNBModel model;
  model.schema = data.schema;

  std::array<std::size_t, 2> counts{};
  for (auto& c : model.classes) {
    c.mean.assign(p, 0.0);
    c.variance.assign(p, 0.0);
  }
  for (const auto& r : data.rows) {
    auto& c = model.classes[to_int(*r.label)];
    ++counts[to_int(*r.label)];
    for (std::size_t j = 0; j < p; ++j) c.mean[j] += r.values[j];
  }
  if (counts[0] == 0 || counts[1] == 0) throw DataError("naive Bayes needs at least one row per label");
  for (int l = 0; l < 2; ++l) {
    for (auto& m : model.classes[l].mean) m /= static_cast<double>(counts[l]);
  }
  for (const auto& r : data.rows) {
    auto& c = model.classes[to_int(*r.label)];
    for (std::size_t j = 0; j < p; ++j) {
      const double d = r.values[j] - c.mean[j];
      c.variance[j] += d * d;
    }
  }
  for (int l = 0; l < 2; ++l) {
    for (auto& v : model.classes[l].variance) v /= static_cast<double>(counts[l]);
    model.classes[l].prior = static_cast<double>(counts[l]) / static_cast<double>(n);
  }

  // Smoothing scales with the largest whole-data feature variance.
  double max_var = 0;
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0, ss = 0;
    for (const auto& r : data.rows) mean += r.values[j];
    mean /= static_cast<double>(n);
    for (const auto& r : data.rows) ss += (r.values[j] - mean) * (r.values[j] - mean);
    max_var = std::max(max_var, ss / static_cast<double>(n));
  }
  model.epsilon = max_var > 0 ? 1e-9 * max_var : 1e-9;
  for (auto& c : model.classes) {
    for (auto& v : c.variance) v += model.epsilon;
  }
  return model;
}

std::array<double, 2> GaussianNBModel::posteriors(const std::vector<double>& x) const {
  if (x.size() != schema.size()) {
    throw UsageError("naive Bayes expects " + std::to_string(schema.size()) + " values, got " +
                     std::to_string(x.size()));
  }
  std::array<double, 2> lj{};
  for (int l = 0; l < 2; ++l) {
    const auto& c = classes[l];
    double s = std::log(c.prior);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - c.mean[j];
      s -= 0.5 * std::log(2 * std::numbers::pi * c.variance[j]) + d * d / (2 * c.variance[j]);
    }
    lj[l] = s;
  }
  const double top = std::max(lj[0], lj[1]);
  const double norm = top + std::log(std::exp(lj[0] - top) + std::exp(lj[1] - top));
  return {std::exp(lj[0] - norm), std::exp(lj[1] - norm)};
}

Prediction predict(const GaussianNBModel& model, const std::vector<double>& x) {
  const auto post = model.posteriors(x);
  return {post[1] > post[0] ? Label::kInfluential : Label::kNonInfluential, post[1]};
}

// --- random forest -----------------------------------------------------------

void RandomForestParams::validate() const {
  if (n_trees < 1) throw UsageError("n_trees must be >= 1");
  if (min_samples_leaf < 1) throw UsageError("min_samples_leaf must be >= 1");
}

Label TreeNode::majority() const {
  return counts[1] > counts[0] ? Label::kInfluential : Label::kNonInfluential;
}

Label DecisionTree::predict(const std::vector<double>& x) const {
  std::uint32_t v = 0;
  while (!nodes[v].is_leaf()) {
    const auto& n = nodes[v];
    v = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[v].majority();
}

std::size_t DecisionTree::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [v, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes[v].is_leaf()) {
      stack.emplace_back(nodes[v].left, d + 1);
      stack.emplace_back(nodes[v].right, d + 1);
    }
  }
  return best;
}

namespace {

struct TreeBuilder {
  const Dataset& data;
  const RandomForestParams& params;
  Rng& rng;
  std::size_t mtry;
  DecisionTree tree;
  std::vector<std::size_t> features;
  std::vector<std::pair<double, int>> column;

  std::uint32_t build(std::vector<std::size_t>& samples, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    std::array<std::uint32_t, 2> counts{};
    for (auto s : samples) ++counts[to_int(*data.rows[s].label)];
    tree.nodes[id].counts = counts;

    const std::size_t n = samples.size();
    const bool pure = counts[0] == 0 || counts[1] == 0;
    const bool depth_cap = params.max_depth != 0 && depth >= params.max_depth;
    if (pure || depth_cap || n < 2 * params.min_samples_leaf) return id;

    rng.shuffle(features);
    int best_feature = -1;
    double best_threshold = 0;
    double best_score = std::numeric_limits<double>::infinity();
    std::size_t visited = 0;
    for (auto f : features) {
      if (visited >= mtry && best_feature >= 0) break;
      column.clear();
      for (auto s : samples) column.emplace_back(data.rows[s].values[f], to_int(*data.rows[s].label));
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      ++visited;
      std::array<double, 2> left{};
      const std::array<double, 2> total{static_cast<double>(counts[0]), static_cast<double>(counts[1])};
      for (std::size_t i = 1; i < n; ++i) {
        left[column[i - 1].second] += 1;
        if (column[i - 1].first == column[i].first) continue;
        if (i < params.min_samples_leaf || n - i < params.min_samples_leaf) continue;
        const double nl = static_cast<double>(i), nr = static_cast<double>(n - i);
        const double r0 = total[0] - left[0], r1 = total[1] - left[1];
        // n times the weighted Gini impurity of the two children.
        const double score =
            (nl - (left[0] * left[0] + left[1] * left[1]) / nl) + (nr - (r0 * r0 + r1 * r1) / nr);
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          double mid = column[i - 1].first + (column[i].first - column[i - 1].first) / 2;
          if (mid >= column[i].first) mid = column[i - 1].first;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> lo, hi;
    for (auto s : samples) {
      (data.rows[s].values[static_cast<std::size_t>(best_feature)] <= best_threshold ? lo : hi).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    tree.nodes[id].feature = best_feature;
    tree.nodes[id].threshold = best_threshold;
    const auto l = build(lo, depth + 1);
    tree.nodes[id].left = l;
    const auto r = build(hi, depth + 1);
    tree.nodes[id].right = r;
    return id;
  }
};

}  // namespace

DecisionTree grow_tree(const Dataset& data, const std::vector<std::size_t>& rows,
                       const RandomForestParams& params, Rng& rng) {
  const std::size_t p = data.schema.size();
  if (p == 0) throw UsageError("cannot grow a tree without features");
  if (rows.empty()) throw DataError("cannot grow a tree on zero rows");
  std::size_t mtry = params.features_per_split != 0
                         ? params.features_per_split
                         : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
  mtry = std::clamp<std::size_t>(mtry, 1, p);
  TreeBuilder b{data, params, rng, mtry, {}, {}, {}};
  b.features.resize(p);
  for (std::size_t j = 0; j < p; ++j) b.features[j] = j;
  std::vector<std::size_t> samples = rows;
  b.build(samples, 0);
  return std::move(b.tree);
}

RandomForestModel train_rf(const Dataset& data, const RandomForestParams& params) {
  params.validate();
  data.validate();
  if (data.size() == 0) throw DataError("random forest needs at least one row");
  RandomForestModel model;
  model.schema = data.schema;
  model.params = params;
  const std::size_t n = data.size();
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(params.seed, "tree", t));
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = params.bootstrap ? rng.index(n) : i;
    model.trees.push_back(grow_tree(data, rows, params, rng));
  }
  return model;
}

Prediction predict(const RandomForestModel& model, const std::vector<double>& x) {
  if (x.size() != model.schema.size()) {
    throw UsageError("random forest expects " + std::to_string(model.schema.size()) +
                     " values, got " + std::to_string(x.size()));
  }
  std::size_t votes = 0;
  for (const auto& t : model.trees) votes += t.predict(x) == Label::kInfluential;
  const double score = static_cast<double>(votes) / static_cast<double>(model.trees.size());
  return {2 * votes > model.trees.size() ? Label::kInfluential : Label::kNonInfluential, score};
}

// --- trained model -----------------------------------------------------------

std::string_view to_string(Algorithm a) {
  return a == Algorithm::kNaiveBayes ? "nb" : "rf";
}

Algorithm algorithm_from_string(std::string_view s) {
  const auto l = to_lower(s);
  if (l == "nb" || l == "naive-bayes") return Algorithm::kNaiveBayes;
  if (l == "rf" || l == "random-forest") return Algorithm::kRandomForest;
  throw UsageError("unknown algorithm '" + std::string(s) + "' (expected nb or rf)");
}

const FeatureSchema& TrainedModel::schema() const {
  if (nb) return nb->schema;
  if (rf) return rf->schema;
  throw UsageError("model has no trained classifier");
}

Prediction TrainedModel::predict(const std::vector<double>& raw_x) const {
  if (raw_x.size() != schema().size()) {
    throw UsageError("feature vector has " + std::to_string(raw_x.size()) +
                     " values, model schema has " + std::to_string(schema().size()));
  }
  const auto x = standardizer.transform(raw_x);
  return nb ? cs::predict(*nb, x) : cs::predict(*rf, x);
}

TrainedModel train_model(const Dataset& raw, const TrainOptions& options, std::uint64_t seed,
                         Diagnostics* diag, std::size_t* synthetic_rows) {
  raw.validate();
  TrainedModel model;
  model.algorithm = options.algorithm;
  model.seed = seed;
  model.smote = options.smote;
  model.smote.seed = derive_seed(seed, "smote");
  model.standardizer = Standardizer::fit(raw);
  Dataset train = model.standardizer.transform(raw);

  std::size_t added = 0;
  if (options.use_smote) {
    const auto n1 = train.count(Label::kInfluential), n0 = train.count(Label::kNonInfluential);
    const auto needed = smote_synthetic_count(std::min(n0, n1), std::max(n0, n1), model.smote.target_ratio);
    if (needed > 0 && std::min(n0, n1) < 2) {
      warn(diag, "SMOTE skipped: insufficient minority samples (" + std::to_string(std::min(n0, n1)) + ")");
    } else {
      const auto before = train.size();
      train = smote(train, model.smote);
      added = train.size() - before;
    }
  }
  if (synthetic_rows != nullptr) *synthetic_rows = added;

  if (options.algorithm == Algorithm::kNaiveBayes) {
    model.nb = train_nb(train);
  } else {
    auto params = options.rf;
    params.seed = derive_seed(seed, "forest");
    model.rf = train_rf(train, params);
  }
  return model;
}

}  // namespace cs
