#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "changescout/featurize.hpp"
#include "changescout/synth.hpp"

namespace cs {
namespace {

TEST(FeatureGroups, LabelsAndParsing) {
  EXPECT_EQ(FeatureGroups::all().label(), "ALL");
  EXPECT_EQ((FeatureGroups{false, true, true}).label(), "NL SI");
  EXPECT_EQ(FeatureGroups::parse("nl+si"), (FeatureGroups{false, true, true}));
  EXPECT_EQ(FeatureGroups::parse("CC NL"), (FeatureGroups{true, true, false}));
  EXPECT_EQ(FeatureGroups::parse("all"), FeatureGroups::all());
  EXPECT_THROW(FeatureGroups::parse("XX"), UsageError);
  EXPECT_THROW(FeatureGroups::parse(""), UsageError);
}

TEST(FeatureGroups, SevenCombinationsInTableOrder) {
  std::vector<std::string> labels;
  for (const auto& g : all_group_combinations()) labels.push_back(g.label());
  EXPECT_EQ(labels, (std::vector<std::string>{"CC", "NL", "SI", "CC NL", "CC SI", "NL SI", "ALL"}));
}

TEST(Tokenize, LowercasesSplitsAndDropsStopwords) {
  EXPECT_EQ(tokenize("Fix NPE in the Parser_v2!"), (std::vector<std::string>{"fix", "npe", "parser", "v2"}));
  EXPECT_EQ(tokenize("the a of", false), (std::vector<std::string>{"the", "of"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_GT(bundled_stopwords().size(), 100u);
}

TEST(BuildVocabulary, DocumentFrequencyRule) {
  const std::vector<std::string> msgs{"Fix NPE", "fix npe again"};
  const auto v = build_vocabulary(msgs, 2);
  EXPECT_EQ(v.terms, (std::vector<std::string>{"fix", "npe"}));
  EXPECT_EQ(v.document_frequency.at("fix"), 2u);
  EXPECT_EQ(v.built_from, 2u);
}

TEST(BuildVocabulary, AllStopwordsGiveEmptyVocabulary) {
  const std::vector<std::string> msgs{"the and of", "and the", "of the"};
  EXPECT_TRUE(build_vocabulary(msgs, 1).terms.empty());
}

TEST(BuildVocabulary, TopTermsMatchCountingOracle) {
  Rng rng(8);
  std::vector<std::string> words;
  for (int i = 0; i < 900; ++i) words.push_back("term" + std::to_string(i));
  std::vector<std::string> msgs;
  for (int m = 0; m < 1000; ++m) {
    std::string msg;
    const auto n = 3 + rng.index(10);
    for (std::size_t k = 0; k < n; ++k) {
      // Skewed choice so frequencies spread out.
      const auto w = static_cast<std::size_t>(900 * rng.unit() * rng.unit());
      msg += words[w] + " ";
    }
    msgs.push_back(msg);
  }
  const auto v = build_vocabulary(msgs, 2, 500);

  std::map<std::string, std::size_t> df;
  for (const auto& m : msgs) {
    std::set<std::string> seen;
    std::string cur;
    for (char c : m + " ") {
      if (c == ' ') {
        if (!cur.empty()) seen.insert(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    for (const auto& w : seen) ++df[w];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& [w, n] : df) {
    if (n >= 2) ranked.emplace_back(w, n);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  ranked.resize(std::min<std::size_t>(500, ranked.size()));
  std::vector<std::string> expected;
  for (const auto& [w, n] : ranked) expected.push_back(w);
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(v.terms, expected);
}

TEST(BowFeatures, Counts) {
  const std::vector<std::string> msgs{"fix npe", "fix npe"};
  const auto v = build_vocabulary(msgs, 2);
  EXPECT_EQ(bow_features("fix fix npe", v), (std::vector<double>{2, 1}));
  EXPECT_EQ(bow_features("", v), (std::vector<double>{0, 0}));
  ASSERT_TRUE(v.index_of("npe").has_value());
  EXPECT_EQ(*v.index_of("npe"), 1u);
  EXPECT_FALSE(v.index_of("zzz").has_value());
}

TEST(BowFeatures, SumEqualsInVocabularyTokenCount) {
  const auto fx = make_planted_fixture({});
  std::vector<std::string> msgs;
  for (const auto& c : fx.commits) msgs.push_back(c.message);
  const auto v = build_vocabulary(msgs, 2, 40);
  for (const auto& m : msgs) {
    const auto f = bow_features(m, v);
    std::size_t in_vocab = 0;
    for (const auto& t : tokenize(m)) in_vocab += v.index_of(t).has_value();
    EXPECT_EQ(std::accumulate(f.begin(), f.end(), 0.0), static_cast<double>(in_vocab));
  }
}

TEST(Lexicon, ParseAndValidate) {
  const auto lex = Lexicon::parse("# comment\ngood\t0.7\t0.6\nbad\t-0.7\t0.67\n");
  EXPECT_EQ(lex.size(), 2u);
  ASSERT_NE(lex.find("bad"), nullptr);
  EXPECT_DOUBLE_EQ(lex.find("bad")->polarity, -0.7);
  EXPECT_EQ(lex.find("meh"), nullptr);
  EXPECT_THROW(Lexicon::parse("x\t2\t0.5\n"), DataError);
  EXPECT_THROW(Lexicon::parse("x\t0.5\n"), DataError);
  EXPECT_GT(Lexicon::bundled().size(), 1000u);
}

TEST(Sentiment, MeanOfHits) {
  Lexicon lex;
  lex.add("awful", {-0.8, 0.9});
  lex.add("fine", {0.4, 0.1});
  EXPECT_EQ(sentiment_features("nothing here", lex).polarity, 0.0);
  EXPECT_EQ(sentiment_features("nothing here", lex).subjectivity, 0.0);
  const auto one = sentiment_features("an awful hack", lex);
  EXPECT_DOUBLE_EQ(one.polarity, -0.8);
  EXPECT_DOUBLE_EQ(one.subjectivity, 0.9);
  const auto two = sentiment_features("awful but fine", lex);
  EXPECT_NEAR(two.polarity, -0.2, 1e-12);
  EXPECT_NEAR(two.subjectivity, 0.5, 1e-12);
}

TEST(Sentiment, BundledOutputsStayInRange) {
  const auto fx = make_planted_fixture({});
  for (const auto& c : fx.commits) {
    const auto s = sentiment_features(c.message, Lexicon::bundled());
    EXPECT_GE(s.polarity, -1);
    EXPECT_LE(s.polarity, 1);
    EXPECT_GE(s.subjectivity, 0);
    EXPECT_LE(s.subjectivity, 1);
  }
}

TEST(StructuralFeatures, Sums) {
  CommitRecord empty;
  const auto z = structural_features(empty);
  EXPECT_EQ(z.n_files + z.lines_added + z.lines_removed, 0.0);
  CommitRecord c;
  c.files = {{"a", 10, 3, FileStatus::kModified}, {"b", 0, 0, FileStatus::kBinary}};
  const auto s = structural_features(c);
  EXPECT_EQ(s.n_files, 2);
  EXPECT_EQ(s.lines_added, 10);
  EXPECT_EQ(s.lines_removed, 3);
}

TEST(StructuralFeatures, FixtureMatchesHandSums) {
  const auto fx = make_planted_fixture({});
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& c = fx.commits[i];
    double added = 0, removed = 0;
    for (const auto& f : c.files) {
      added += static_cast<double>(f.lines_added);
      removed += static_cast<double>(f.lines_removed);
    }
    const auto s = structural_features(c);
    EXPECT_EQ(s.n_files, static_cast<double>(c.files.size()));
    EXPECT_EQ(s.lines_added, added);
    EXPECT_EQ(s.lines_removed, removed);
  }
}

TEST(Schema, OrderAndSizes) {
  Vocabulary v;
  v.terms = {"fix", "npe"};
  const auto all = make_schema(v, FeatureGroups::all());
  EXPECT_EQ(all.names, (std::vector<std::string>{"d_min_pr", "d_max_pr", "d_sum_betweenness", "d_sum_closeness",
                                                 "w:fix", "w:npe", "polarity", "subjectivity", "n_files",
                                                 "lines_added", "lines_removed"}));
  EXPECT_EQ(make_schema(v, FeatureGroups::parse("SI")).size(), 3u);
  EXPECT_EQ(make_schema(v, FeatureGroups::parse("CC")).size(), 4u);
  EXPECT_EQ(make_schema(v, FeatureGroups::parse("NL")).size(), 4u);
}

TEST(Assemble, SelectsEnabledGroups) {
  Vocabulary v;
  v.terms = {"fix"};
  const StructuralFeatures si{2, 10, 3};
  const NaturalLanguageFeatures nl{{4}, {0.5, 0.25}};
  const CoChangeFeatures cc{0.1, 0.2, 0.3, 0.4};
  const auto only_si = assemble("h", si, nl, cc, make_schema(v, FeatureGroups::parse("SI")), FeatureGroups::parse("SI"));
  EXPECT_EQ(only_si.values, (std::vector<double>{2, 10, 3}));
  const auto all = assemble("h", si, nl, cc, make_schema(v, FeatureGroups::all()), FeatureGroups::all(), Label::kInfluential);
  EXPECT_EQ(all.values, (std::vector<double>{0.1, 0.2, 0.3, 0.4, 4, 0.5, 0.25, 2, 10, 3}));
  EXPECT_EQ(all.label, Label::kInfluential);
  EXPECT_THROW(assemble("h", si, nl, cc, make_schema(v, FeatureGroups::all()), FeatureGroups::parse("SI")), UsageError);
}

TEST(Featurize, VocabularyComesOnlyFromVocabularyRows) {
  const auto fx = make_planted_fixture({});
  auto corpus = build_corpus(fx.commits, fx.issues, fx.project_key);
  load_labels(labels_csv(fx.labels), corpus);
  const auto rows = build_commit_rows(corpus, {});
  ASSERT_EQ(rows.size(), corpus.commits.size());
  std::vector<CommitFeatureRow> train(rows.begin(), rows.begin() + 100);
  const auto m = featurize_rows(rows, train, FeatureGroups::all(), {});
  std::set<std::string> train_tokens;
  for (const auto& r : train) {
    for (const auto& t : tokenize(r.message)) train_tokens.insert(t);
  }
  for (const auto& t : m.vocabulary.terms) EXPECT_TRUE(train_tokens.contains(t)) << t;
  EXPECT_EQ(m.rows.size(), rows.size());
  for (const auto& r : m.rows) EXPECT_EQ(r.values.size(), m.schema.size());
}

TEST(Featurize, RowsCarryLabelsAndCsvHasHeader) {
  const auto fx = make_planted_fixture({});
  auto corpus = build_corpus(fx.commits, fx.issues, fx.project_key);
  load_labels(labels_csv(fx.labels), corpus);
  const auto rows = build_commit_rows(corpus, {});
  std::size_t labeled = 0;
  for (const auto& r : rows) labeled += r.label.has_value();
  EXPECT_EQ(labeled, fx.labels.size());
  const auto m = featurize_rows(rows, rows, FeatureGroups::parse("SI"), {});
  const auto csv = features_csv(m.schema, m.rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "hash,label,n_files,lines_added,lines_removed");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), rows.size() + 1);
}

TEST(Featurize, AssembleIsInjectiveOnHashAndGroups) {
  const auto fx = make_planted_fixture({});
  const auto corpus = build_corpus(fx.commits, fx.issues, fx.project_key);
  const auto rows = build_commit_rows(corpus, {});
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& g : all_group_combinations()) {
    for (const auto& r : featurize_rows(rows, rows, g, {}).rows) {
      EXPECT_TRUE(keys.emplace(r.commit_hash, g.label()).second);
    }
  }
}

}  // namespace
}  // namespace cs
