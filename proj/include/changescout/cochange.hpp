#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "changescout/ingest.hpp"

namespace cs {

struct CentralityParams {
  double damping = 0.85;
  double tolerance = 1e-10;
  std::size_t max_iterations = 1000;
  std::size_t max_files_per_commit = 100;

  void validate() const;
};

/// Undirected file graph; edge weight counts the commits touching both files.
class CoChangeGraph {
 public:
  using NodeId = std::size_t;

  std::size_t node_count() const noexcept { return names_.size(); }
  std::size_t edge_count() const noexcept;
  bool empty() const noexcept { return names_.empty(); }

  /// Index of the last applied commit, or nullopt before the first one.
  std::optional<std::size_t> as_of() const noexcept { return as_of_; }

  const std::string& name(NodeId v) const { return names_[v]; }
  std::optional<NodeId> find(std::string_view path) const;
  /// Neighbors of v with weights, ordered by node id.
  const std::map<NodeId, double>& neighbors(NodeId v) const { return adj_[v]; }
  double weight(std::string_view a, std::string_view b) const;

  /// Applies commit number `index`, which must be as_of() + 1 (0 for the
  /// first). Every pair of distinct non-binary files gains weight 1; commits
  /// with more than max_files_per_commit such files add nodes only.
  void apply_commit(const CommitRecord& commit, std::size_t index, const CentralityParams& params);

  NodeId add_node(std::string_view path);
  void add_edge_weight(NodeId a, NodeId b, double w);

 private:
  std::vector<std::string> names_;
  std::map<std::string, NodeId, std::less<>> ids_;
  std::vector<std::map<NodeId, double>> adj_;
  std::optional<std::size_t> as_of_;
};

/// Distinct non-binary paths of a commit, in first-appearance order.
std::vector<std::string> graph_files(const CommitRecord& commit);

struct PageRankResult {
  std::vector<double> scores;  // by node id
  std::size_t iterations = 0;
  bool converged = true;
};

/// Weighted PageRank by power iteration. Nodes without edges spread their rank
/// uniformly. Throws UsageError on an empty graph.
PageRankResult pagerank(const CoChangeGraph& graph, const CentralityParams& params);

/// Unnormalized betweenness on the unweighted skeleton, unordered pairs (Brandes).
std::vector<double> betweenness(const CoChangeGraph& graph);

/// (r - 1) / sum of hop distances within the node's component; 0 if isolated.
std::vector<double> closeness(const CoChangeGraph& graph);

struct CentralitySnapshot {
  std::map<std::string, double> pagerank;
  std::map<std::string, double> betweenness;
  std::map<std::string, double> closeness;
  double min_pr = 0;
  double max_pr = 0;
  bool converged = true;

  /// Sum of a metric over `files`; files absent from the snapshot count 0.
  static double sum_over(const std::map<std::string, double>& metric,
                         const std::vector<std::string>& files);
};

/// All-zero snapshot for an empty graph.
CentralitySnapshot compute_snapshot(const CoChangeGraph& graph, const CentralityParams& params);

struct CoChangeFeatures {
  double d_min_pr = 0;
  double d_max_pr = 0;
  double d_sum_betweenness = 0;
  double d_sum_closeness = 0;
};

/// Deltas between the snapshot after `commit_t` (computed here on
/// `graph_after_commit`) and `snapshot_prev`. Previous sums use `commit_prev`'s
/// files on the previous snapshot and are 0 when there is no previous commit.
CoChangeFeatures cochange_features(const CentralitySnapshot& snapshot_prev,
                                   const CoChangeGraph& graph_after_commit,
                                   const CommitRecord& commit_t, const CommitRecord* commit_prev,
                                   const CentralityParams& params,
                                   CentralitySnapshot* snapshot_t_out = nullptr);

/// Co-change features for every commit of the history, in order.
std::vector<CoChangeFeatures> cochange_feature_history(const std::vector<CommitRecord>& commits,
                                                       const CentralityParams& params,
                                                       CoChangeGraph* final_graph = nullptr);

/// CSV "file_a,file_b,weight" (with header), rows sorted by name.
std::string export_edges_csv(const CoChangeGraph& graph);
/// CSV "file,pagerank,betweenness,closeness" (with header).
std::string export_snapshot_csv(const CentralitySnapshot& snapshot);

}  // namespace cs
