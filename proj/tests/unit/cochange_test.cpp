#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>

#include "changescout/cochange.hpp"

namespace cs {
namespace {

CommitRecord commit(std::vector<std::string> files, std::vector<std::string> binary = {}) {
  CommitRecord c;
  c.hash = std::string(40, 'a');
  c.author_email = "a@b";
  c.timestamp = 1;
  for (auto& f : files) c.files.push_back({std::move(f), 1, 1, FileStatus::kModified});
  for (auto& f : binary) c.files.push_back({std::move(f), 0, 0, FileStatus::kBinary});
  return c;
}

CoChangeGraph graph_of(const std::vector<std::vector<std::string>>& commits, CentralityParams params = {}) {
  CoChangeGraph g;
  for (std::size_t i = 0; i < commits.size(); ++i) g.apply_commit(commit(commits[i]), i, params);
  return g;
}

double score(const CoChangeGraph& g, const std::vector<double>& v, std::string_view name) { return v[*g.find(name)]; }

TEST(ApplyCommit, SingleFileAddsNodeOnly) {
  const auto g = graph_of({{"a"}});
  EXPECT_EQ(g.node_count(), 1u);
  EXPECT_EQ(g.edge_count(), 0u);
}

TEST(ApplyCommit, CliqueOfThree) {
  const auto g = graph_of({{"a", "b", "c"}});
  EXPECT_EQ(g.edge_count(), 3u);
  EXPECT_EQ(g.weight("a", "b"), 1.0);
  EXPECT_EQ(g.weight("a", "c"), 1.0);
  EXPECT_EQ(g.weight("c", "b"), 1.0);
  EXPECT_EQ(g.weight("a", "a"), 0.0);
}

TEST(ApplyCommit, BinaryFilesAndDuplicatesIgnored) {
  CoChangeGraph g;
  g.apply_commit(commit({"a", "b", "a"}, {"logo.png"}), 0, {});
  EXPECT_EQ(g.node_count(), 2u);
  EXPECT_EQ(g.weight("a", "b"), 1.0);
  EXPECT_FALSE(g.find("logo.png").has_value());
}

TEST(ApplyCommit, GiantCommitAddsNodesButNoEdges) {
  CentralityParams p;
  p.max_files_per_commit = 3;
  const auto g = graph_of({{"a", "b", "c", "d"}, {"a", "b"}}, p);
  EXPECT_EQ(g.node_count(), 4u);
  EXPECT_EQ(g.edge_count(), 1u);
}

TEST(ApplyCommit, OutOfOrderIsRejected) {
  CoChangeGraph g;
  g.apply_commit(commit({"a"}), 0, {});
  EXPECT_THROW(g.apply_commit(commit({"b"}), 2, {}), UsageError);
  EXPECT_THROW(g.apply_commit(commit({"b"}), 0, {}), UsageError);
}

TEST(ApplyCommit, WeightsMatchPairCountOracleAndNeverDecrease) {
  Rng rng(5);
  const std::vector<std::string> files{"a", "b", "c", "d", "e", "f"};
  std::map<std::pair<std::string, std::string>, double> oracle;
  CoChangeGraph g;
  for (std::size_t i = 0; i < 40; ++i) {
    std::set<std::string> touched;
    for (std::size_t k = 0, m = 1 + rng.index(4); k < m; ++k) touched.insert(files[rng.index(files.size())]);
    const auto before = oracle;
    g.apply_commit(commit({touched.begin(), touched.end()}), i, {});
    for (auto x = touched.begin(); x != touched.end(); ++x) {
      for (auto y = std::next(x); y != touched.end(); ++y) oracle[{*x, *y}] += 1;
    }
    for (const auto& [pair, w] : before) EXPECT_GE(g.weight(pair.first, pair.second), w);
  }
  for (const auto& [pair, w] : oracle) {
    EXPECT_EQ(g.weight(pair.first, pair.second), w);
    EXPECT_EQ(g.weight(pair.second, pair.first), w);
  }
  EXPECT_EQ(g.edge_count(), oracle.size());
}

// --- centrality oracles -------------------------------------------------------------------

std::vector<double> dense_pagerank(const CoChangeGraph& g, double d) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index u = 0; u < n; ++u) {
    double w_total = 0;
    for (const auto& [v, w] : g.neighbors(static_cast<std::size_t>(u))) w_total += w;
    if (w_total == 0) {
      m.col(u).setConstant(1.0 / static_cast<double>(n));
      continue;
    }
    for (const auto& [v, w] : g.neighbors(static_cast<std::size_t>(u))) m(static_cast<Eigen::Index>(v), u) = w / w_total;
  }
  const Eigen::VectorXd x = (Eigen::MatrixXd::Identity(n, n) - d * m)
                                .fullPivLu()
                                .solve(Eigen::VectorXd::Constant(n, (1 - d) / static_cast<double>(n)));
  std::vector<double> out(x.data(), x.data() + n);
  return out;
}

std::vector<std::vector<double>> hop_distances(const CoChangeGraph& g) {
  const std::size_t n = g.node_count();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (std::size_t v = 0; v < n; ++v) {
    d[v][v] = 0;
    for (const auto& [w, weight] : g.neighbors(v)) d[v][w] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

std::vector<double> oracle_closeness(const CoChangeGraph& g) {
  const auto d = hop_distances(g);
  std::vector<double> out(g.node_count(), 0);
  for (std::size_t v = 0; v < d.size(); ++v) {
    double sum = 0, r = 0;
    for (double x : d[v]) {
      if (std::isfinite(x)) {
        sum += x;
        r += 1;
      }
    }
    out[v] = sum > 0 ? (r - 1) / sum : 0;
  }
  return out;
}

// Counts, for every pair, the shortest paths through each vertex by
// enumerating all simple paths.
std::vector<double> oracle_betweenness(const CoChangeGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<double> bc(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = s + 1; t < n; ++t) {
      std::vector<std::vector<std::size_t>> paths;
      std::vector<std::size_t> path{s};
      std::vector<bool> on(n, false);
      on[s] = true;
      std::function<void(std::size_t)> walk = [&](std::size_t v) {
        if (v == t) {
          paths.push_back(path);
          return;
        }
        for (const auto& [w, weight] : g.neighbors(v)) {
          if (on[w]) continue;
          on[w] = true;
          path.push_back(w);
          walk(w);
          path.pop_back();
          on[w] = false;
        }
      };
      walk(s);
      if (paths.empty()) continue;
      std::size_t best = SIZE_MAX;
      for (const auto& p : paths) best = std::min(best, p.size());
      double total = 0;
      std::vector<double> through(n, 0);
      for (const auto& p : paths) {
        if (p.size() != best) continue;
        total += 1;
        for (std::size_t i = 1; i + 1 < p.size(); ++i) through[p[i]] += 1;
      }
      for (std::size_t v = 0; v < n; ++v) bc[v] += through[v] / total;
    }
  }
  return bc;
}

TEST(PageRank, SingleNode) {
  const auto pr = pagerank(graph_of({{"a"}}), {});
  ASSERT_EQ(pr.scores.size(), 1u);
  EXPECT_NEAR(pr.scores[0], 1.0, 1e-12);
}

TEST(PageRank, PathOfThree) {
  const auto g = graph_of({{"a", "b"}, {"b", "c"}});
  const auto pr = pagerank(g, {});
  EXPECT_NEAR(score(g, pr.scores, "a"), 0.256757, 1e-6);
  EXPECT_NEAR(score(g, pr.scores, "c"), 0.256757, 1e-6);
  EXPECT_NEAR(score(g, pr.scores, "b"), 0.486486, 1e-6);
  EXPECT_TRUE(pr.converged);
}

TEST(PageRank, EmptyGraphIsUsageError) { EXPECT_THROW(pagerank(CoChangeGraph{}, {}), UsageError); }

TEST(PageRank, NonConvergenceIsFlagged) {
  CentralityParams p;
  p.max_iterations = 1;
  const auto pr = pagerank(graph_of({{"a", "b"}, {"b", "c"}, {"c", "d"}}), p);
  EXPECT_FALSE(pr.converged);
}

CoChangeGraph random_graph(Rng& rng) {
  CoChangeGraph g;
  const std::size_t n = 1 + rng.index(8);
  for (std::size_t i = 0; i < n; ++i) g.add_node("n" + std::to_string(i));
  const double p = rng.unit();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (rng.unit() < p) g.add_edge_weight(a, b, static_cast<double>(1 + rng.index(5)));
  return g;
}

TEST(Centrality, RandomGraphsMatchOracles) {
  Rng rng(2718);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_graph(rng);
    const auto pr = pagerank(g, {});
    const auto pr_ref = dense_pagerank(g, 0.85);
    const auto bc = betweenness(g), bc_ref = oracle_betweenness(g);
    const auto cl = closeness(g), cl_ref = oracle_closeness(g);
    double sum = 0;
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      EXPECT_NEAR(pr.scores[v], pr_ref[v], 1e-8);
      EXPECT_GE(pr.scores[v], 0);
      EXPECT_NEAR(bc[v], bc_ref[v], 1e-9);
      EXPECT_NEAR(cl[v], cl_ref[v], 1e-9);
      sum += pr.scores[v];
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(pagerank(g, {}).scores, pr.scores);
  }
}

TEST(Betweenness, PathAndCompleteGraph) {
  const auto path = graph_of({{"a", "b"}, {"b", "c"}});
  const auto bc = betweenness(path);
  EXPECT_EQ(score(path, bc, "b"), 1.0);
  EXPECT_EQ(score(path, bc, "a"), 0.0);
  EXPECT_EQ(score(path, bc, "c"), 0.0);
  const auto k4 = graph_of({{"a", "b", "c", "d"}});
  for (double v : betweenness(k4)) EXPECT_EQ(v, 0.0);
}

TEST(Closeness, PathAndIsolatedNode) {
  const auto g = graph_of({{"a", "b"}, {"b", "c"}, {"z"}});
  const auto cl = closeness(g);
  EXPECT_DOUBLE_EQ(score(g, cl, "b"), 1.0);
  EXPECT_DOUBLE_EQ(score(g, cl, "a"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(score(g, cl, "c"), 2.0 / 3.0);
  EXPECT_EQ(score(g, cl, "z"), 0.0);
}

// --- features ----------------------------------------------------------------------------------

TEST(CoChangeFeatures, FirstCommitHasZeroPreviousSums) {
  CoChangeGraph g;
  const auto c = commit({"a", "b"});
  g.apply_commit(c, 0, {});
  const auto f = cochange_features(compute_snapshot(CoChangeGraph{}, {}), g, c, nullptr, {});
  EXPECT_DOUBLE_EQ(f.d_min_pr, 0.5);
  EXPECT_DOUBLE_EQ(f.d_max_pr, 0.5);
  EXPECT_DOUBLE_EQ(f.d_sum_betweenness, 0.0);
  EXPECT_DOUBLE_EQ(f.d_sum_closeness, 2.0);
}

TEST(CoChangeFeatures, NewIsolatedFileNegatesPreviousBetweenness) {
  std::vector<std::vector<std::string>> history{{"a", "b"}, {"b", "c"}, {"c", "d"}, {"a", "b", "c"}};
  CoChangeGraph g = graph_of(history);
  const auto prev_snapshot = compute_snapshot(g, {});
  const auto prev = commit(history.back());
  const auto next = commit({"fresh"});
  g.apply_commit(next, history.size(), {});
  const auto f = cochange_features(prev_snapshot, g, next, &prev, {});
  const double prev_sum = prev_snapshot.betweenness.at("a") + prev_snapshot.betweenness.at("b") +
                          prev_snapshot.betweenness.at("c");
  EXPECT_GT(prev_sum, 0);
  EXPECT_DOUBLE_EQ(f.d_sum_betweenness, -prev_sum);
}

TEST(CoChangeFeatures, HistoryMatchesRebuildPerStepOracle) {
  Rng rng(99);
  const std::vector<std::string> files{"a", "b", "c", "d", "e", "f", "g"};
  std::vector<CommitRecord> commits;
  for (int i = 0; i < 20; ++i) {
    std::set<std::string> touched;
    for (std::size_t k = 0, m = 1 + rng.index(3); k < m; ++k) touched.insert(files[rng.index(files.size())]);
    commits.push_back(commit({touched.begin(), touched.end()}));
  }
  const auto got = cochange_feature_history(commits, {});
  ASSERT_EQ(got.size(), commits.size());

  struct Snap {
    std::map<std::string, double> bc, cl;
    double min_pr = 0, max_pr = 0;
  };
  const auto rebuild = [&](std::size_t upto) {
    Snap s;
    if (upto == 0) return s;
    CoChangeGraph g;
    for (std::size_t i = 0; i < upto; ++i) g.apply_commit(commits[i], i, {});
    const auto pr = dense_pagerank(g, 0.85);
    const auto bc = oracle_betweenness(g), cl = oracle_closeness(g);
    s.min_pr = *std::min_element(pr.begin(), pr.end());
    s.max_pr = *std::max_element(pr.begin(), pr.end());
    for (const auto& f : files) {
      if (const auto id = g.find(f)) {
        s.bc[f] = bc[*id];
        s.cl[f] = cl[*id];
      }
    }
    return s;
  };
  const auto sum = [](const std::map<std::string, double>& m, const CommitRecord& c) {
    double total = 0;
    for (const auto& f : c.files) {
      if (const auto it = m.find(f.path); it != m.end()) total += it->second;
    }
    return total;
  };
  for (std::size_t t = 0; t < commits.size(); ++t) {
    const auto before = rebuild(t), after = rebuild(t + 1);
    const double prev_bc = t == 0 ? 0 : sum(before.bc, commits[t - 1]);
    const double prev_cl = t == 0 ? 0 : sum(before.cl, commits[t - 1]);
    EXPECT_NEAR(got[t].d_min_pr, after.min_pr - before.min_pr, 1e-8) << t;
    EXPECT_NEAR(got[t].d_max_pr, after.max_pr - before.max_pr, 1e-8) << t;
    EXPECT_NEAR(got[t].d_sum_betweenness, sum(after.bc, commits[t]) - prev_bc, 1e-9) << t;
    EXPECT_NEAR(got[t].d_sum_closeness, sum(after.cl, commits[t]) - prev_cl, 1e-9) << t;
  }
}

TEST(Export, EdgesAndSnapshotCsv) {
  const auto g = graph_of({{"b", "a"}, {"a", "b"}, {"c"}});
  EXPECT_EQ(export_edges_csv(g), "file_a,file_b,weight\na,b,2\n");
  const auto csv = export_snapshot_csv(compute_snapshot(g, {}));
  EXPECT_EQ(csv.rfind("file,pagerank,betweenness,closeness\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(CentralityParams, Validation) {
  CentralityParams p;
  p.damping = 1.0;
  EXPECT_THROW(p.validate(), UsageError);
  p = {};
  p.tolerance = 0;
  EXPECT_THROW(p.validate(), UsageError);
}

}  // namespace
}  // namespace cs
