#include <gtest/gtest.h>

#include "json.hpp"

#include "changescout/featurize.hpp"
#include "changescout/serialize.hpp"
#include "changescout/synth.hpp"

namespace cs {
namespace {

using nlohmann::json;

struct Trained {
  FeatureMatrix matrix;
  TrainedModel model;
};

Trained train_on_fixture(Algorithm algo, FeatureGroups groups) {
  const auto fx = make_planted_fixture({});
  auto corpus = build_corpus(fx.commits, fx.issues, fx.project_key);
  load_labels(labels_csv(fx.labels), corpus);
  const auto rows = build_commit_rows(corpus, {});
  std::vector<CommitFeatureRow> labeled;
  for (const auto& r : rows) {
    if (r.label) labeled.push_back(r);
  }
  Trained t;
  t.matrix = featurize_rows(labeled, labeled, groups, {});
  TrainOptions o;
  o.algorithm = algo;
  o.rf.n_trees = 20;
  t.model = train_model(Dataset::from_matrix(t.matrix), o, 3);
  t.model.vocabulary = t.matrix.vocabulary;
  t.model.groups = groups;
  return t;
}

TEST(ModelJson, RoundTripPreservesPredictions) {
  for (auto algo : {Algorithm::kNaiveBayes, Algorithm::kRandomForest}) {
    const auto t = train_on_fixture(algo, FeatureGroups::all());
    const auto text = model_to_json(t.model);
    const auto back = model_from_json(text);
    EXPECT_EQ(model_to_json(back), text);
    EXPECT_EQ(back.algorithm, algo);
    EXPECT_EQ(back.vocabulary.terms, t.model.vocabulary.terms);
    for (const auto& r : t.matrix.rows) {
      const auto a = t.model.predict(r.values), b = back.predict(r.values);
      EXPECT_EQ(a.label, b.label);
      EXPECT_EQ(a.score, b.score);
    }
  }
}

TEST(ModelJson, RejectsUnknownVersionAndMismatchedSchema) {
  const auto t = train_on_fixture(Algorithm::kNaiveBayes, FeatureGroups::parse("SI"));
  auto doc = json::parse(model_to_json(t.model));
  auto bad = doc;
  bad["format_version"] = 99;
  EXPECT_THROW(model_from_json(bad.dump()), DataError);
  bad = doc;
  bad["groups"] = "CC SI";
  EXPECT_THROW(model_from_json(bad.dump()), DataError);
  bad = doc;
  bad["standardizer"]["mean"].push_back(0.0);
  EXPECT_THROW(model_from_json(bad.dump()), DataError);
  bad = doc;
  bad.erase("params");
  EXPECT_THROW(model_from_json(bad.dump()), DataError);
  EXPECT_THROW(model_from_json("{not json"), DataError);
}

TEST(ModelJson, RejectsDanglingTreeNodes) {
  const auto t = train_on_fixture(Algorithm::kRandomForest, FeatureGroups::parse("SI"));
  auto doc = json::parse(model_to_json(t.model));
  ASSERT_TRUE(doc.contains("trees"));
  // Nodes are [feature, threshold, left, right, count0, count1].
  bool patched = false;
  for (auto& tree : doc["trees"]) {
    for (auto& node : tree) {
      if (node.at(0).get<int>() >= 0) {
        node[2] = 100000;
        patched = true;
        break;
      }
    }
    if (patched) break;
  }
  ASSERT_TRUE(patched);
  EXPECT_THROW(model_from_json(doc.dump()), DataError);
}

TEST(ModelJson, KeysAreSorted) {
  const auto t = train_on_fixture(Algorithm::kNaiveBayes, FeatureGroups::parse("SI"));
  const auto doc = json::parse(model_to_json(t.model));
  std::vector<std::string> keys;
  for (const auto& [k, v] : doc.items()) keys.push_back(k);
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  EXPECT_EQ(doc.at("format_version"), kModelFormatVersion);
}

TEST(EvalJson, RoundTrip) {
  ProjectResult p;
  p.project = "Commons Math";
  for (const auto& g : all_group_combinations()) {
    EvalReport r;
    r.groups = g;
    r.seed = 7;
    r.k = 2;
    FoldResult f;
    f.confusion.tp = 3;
    f.confusion.fp = 1;
    f.confusion.tn = 9;
    f.confusion.fn = 2;
    f.test_rows = 15;
    f.train_rows = 15;
    r.folds = {f, f};
    r.warnings = {"fold 1: note"};
    r.finalize();
    p.reports.push_back(r);
  }
  const auto text = eval_to_json({p});
  const auto back = eval_from_json(text);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].project, "Commons Math");
  ASSERT_EQ(back[0].reports.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(back[0].reports[i].groups, p.reports[i].groups);
    EXPECT_EQ(back[0].reports[i].aggregate, p.reports[i].aggregate);
    EXPECT_DOUBLE_EQ(back[0].reports[i].influential.f_measure, p.reports[i].influential.f_measure);
  }
  EXPECT_EQ(eval_to_json(back), text);

  auto doc = json::parse(text);
  doc["format_version"] = 2;
  EXPECT_THROW(eval_from_json(doc.dump()), DataError);
  EXPECT_THROW(eval_from_json("[]"), DataError);
}

TEST(CandidatesJson, Structure) {
  const auto fx = make_planted_fixture({});
  const auto corpus = build_corpus(fx.commits, fx.issues, fx.project_key);
  DetectorParams params;
  params.comment_percentile = fx.comment_percentile;
  params.seed = 7;
  const auto report = run_detectors(corpus, params);
  const auto doc = json::parse(candidates_to_json(report, corpus));
  ASSERT_EQ(doc.at("candidates").size(), report.candidates.size());
  EXPECT_EQ(doc.at("summary").at("commits"), corpus.commits.size());
  EXPECT_EQ(doc.at("summary").at("unique_candidates"), report.candidates.size());
  for (const auto& c : doc.at("candidates")) {
    EXPECT_EQ(c.at("commit_hash").get<std::string>().size(), 40u);
    EXPECT_FALSE(c.at("reasons").empty());
    EXPECT_EQ(c.at("evidence").size(), c.at("reasons").size());
    for (const auto& e : c.at("evidence")) EXPECT_TRUE(e.contains("reason"));
  }
  EXPECT_EQ(candidates_to_json(report, corpus), candidates_to_json(report, corpus));
}

}  // namespace
}  // namespace cs
