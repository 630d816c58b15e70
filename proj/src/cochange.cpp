#include "changescout/cochange.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <tuple>

namespace cs {

void CentralityParams::validate() const {
  if (!(damping > 0 && damping < 1)) throw UsageError("damping must be in (0, 1)");
  if (!(tolerance > 0)) throw UsageError("tolerance must be positive");
  if (max_iterations == 0) throw UsageError("max_iterations must be positive");
}

std::size_t CoChangeGraph::edge_count() const noexcept {
  std::size_t twice = 0;
  for (const auto& nb : adj_) twice += nb.size();
  return twice / 2;
}

std::optional<CoChangeGraph::NodeId> CoChangeGraph::find(std::string_view path) const {
  const auto it = ids_.find(path);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

double CoChangeGraph::weight(std::string_view a, std::string_view b) const {
  const auto ia = find(a), ib = find(b);
  if (!ia || !ib) return 0;
  const auto it = adj_[*ia].find(*ib);
  return it == adj_[*ia].end() ? 0 : it->second;
}

CoChangeGraph::NodeId CoChangeGraph::add_node(std::string_view path) {
  if (const auto id = find(path)) return *id;
  const NodeId id = names_.size();
  names_.emplace_back(path);
  ids_.emplace(std::string(path), id);
  adj_.emplace_back();
  return id;
}

void CoChangeGraph::add_edge_weight(NodeId a, NodeId b, double w) {
  if (a == b) throw UsageError("co-change graph has no self-loops");
  adj_[a][b] += w;
  adj_[b][a] += w;
}

void CoChangeGraph::apply_commit(const CommitRecord& commit, std::size_t index,
                                 const CentralityParams& params) {
  const std::size_t expected = as_of_ ? *as_of_ + 1 : 0;
  if (index != expected) {
    throw UsageError("apply_commit: expected commit index " + std::to_string(expected) + ", got " +
                     std::to_string(index));
  }
  const auto files = graph_files(commit);
  std::vector<NodeId> ids;
  ids.reserve(files.size());
  for (const auto& f : files) ids.push_back(add_node(f));
  if (ids.size() <= params.max_files_per_commit) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) add_edge_weight(ids[i], ids[j], 1.0);
    }
  }
  as_of_ = index;
}

std::vector<std::string> graph_files(const CommitRecord& commit) {
  std::vector<std::string> out;
  std::set<std::string_view> seen;
  for (const auto& f : commit.files) {
    if (f.status == FileStatus::kBinary) continue;
    if (seen.insert(f.path).second) out.push_back(f.path);
  }
  return out;
}

PageRankResult pagerank(const CoChangeGraph& graph, const CentralityParams& params) {
  params.validate();
  const std::size_t n = graph.node_count();
  if (n == 0) throw UsageError("pagerank: empty graph");
  const double d = params.damping;
  const double nd = static_cast<double>(n);

  std::vector<double> out_weight(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (const auto& [v, w] : graph.neighbors(u)) out_weight[u] += w;
  }

  PageRankResult res;
  std::vector<double> pr(n, 1.0 / nd), next(n);
  res.converged = false;
  for (std::size_t it = 0; it < params.max_iterations; ++it) {
    double dangling = 0;
    for (std::size_t u = 0; u < n; ++u) {
      if (out_weight[u] == 0) dangling += pr[u];
    }
    std::fill(next.begin(), next.end(), (1.0 - d) / nd + d * dangling / nd);
    for (std::size_t u = 0; u < n; ++u) {
      if (out_weight[u] == 0) continue;
      const double share = d * pr[u] / out_weight[u];
      for (const auto& [v, w] : graph.neighbors(u)) next[v] += share * w;
    }
    double change = 0;
    for (std::size_t v = 0; v < n; ++v) change += std::abs(next[v] - pr[v]);
    pr.swap(next);
    res.iterations = it + 1;
    if (change < params.tolerance) {
      res.converged = true;
      break;
    }
  }
  double total = 0;
  for (double x : pr) total += x;
  for (double& x : pr) x /= total;
  res.scores = std::move(pr);
  return res;
}

std::vector<double> betweenness(const CoChangeGraph& graph) {
  const std::size_t n = graph.node_count();
  std::vector<double> cb(n, 0.0);
  std::vector<std::vector<std::size_t>> preds(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<long> dist(n);
  std::vector<std::size_t> order;
  order.reserve(n);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    for (auto& p : preds) p.clear();
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1L);
    order.clear();
    sigma[s] = 1;
    dist[s] = 0;
    queue.push_back(s);
    while (!queue.empty()) {
      const auto v = queue.front();
      queue.pop_front();
      order.push_back(v);
      for (const auto& [w, weight] : graph.neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const auto w = *it;
      for (auto v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  for (double& x : cb) x /= 2.0;
  return cb;
}

std::vector<double> closeness(const CoChangeGraph& graph) {
  const std::size_t n = graph.node_count();
  std::vector<double> out(n, 0.0);
  std::vector<long> dist(n);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1L);
    dist[s] = 0;
    queue.push_back(s);
    std::size_t reached = 0;
    double total = 0;
    while (!queue.empty()) {
      const auto v = queue.front();
      queue.pop_front();
      ++reached;
      total += static_cast<double>(dist[v]);
      for (const auto& [w, weight] : graph.neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
      }
    }
    out[s] = total > 0 ? static_cast<double>(reached - 1) / total : 0.0;
  }
  return out;
}

double CentralitySnapshot::sum_over(const std::map<std::string, double>& metric,
                                    const std::vector<std::string>& files) {
  double s = 0;
  for (const auto& f : files) {
    const auto it = metric.find(f);
    if (it != metric.end()) s += it->second;
  }
  return s;
}

CentralitySnapshot compute_snapshot(const CoChangeGraph& graph, const CentralityParams& params) {
  CentralitySnapshot snap;
  if (graph.empty()) return snap;
  const auto pr = pagerank(graph, params);
  const auto btw = betweenness(graph);
  const auto clo = closeness(graph);
  snap.converged = pr.converged;
  snap.min_pr = std::numeric_limits<double>::infinity();
  snap.max_pr = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < graph.node_count(); ++v) {
    const auto& name = graph.name(v);
    snap.pagerank[name] = pr.scores[v];
    snap.betweenness[name] = btw[v];
    snap.closeness[name] = clo[v];
    snap.min_pr = std::min(snap.min_pr, pr.scores[v]);
    snap.max_pr = std::max(snap.max_pr, pr.scores[v]);
  }
  return snap;
}

CoChangeFeatures cochange_features(const CentralitySnapshot& snapshot_prev,
                                   const CoChangeGraph& graph_after_commit,
                                   const CommitRecord& commit_t, const CommitRecord* commit_prev,
                                   const CentralityParams& params, CentralitySnapshot* snapshot_t_out) {
  CentralitySnapshot snap_t = compute_snapshot(graph_after_commit, params);
  const auto files_t = graph_files(commit_t);
  const std::vector<std::string> files_prev =
      commit_prev != nullptr ? graph_files(*commit_prev) : std::vector<std::string>{};
  CoChangeFeatures f;
  f.d_min_pr = snap_t.min_pr - snapshot_prev.min_pr;
  f.d_max_pr = snap_t.max_pr - snapshot_prev.max_pr;
  f.d_sum_betweenness = CentralitySnapshot::sum_over(snap_t.betweenness, files_t) -
                        CentralitySnapshot::sum_over(snapshot_prev.betweenness, files_prev);
  f.d_sum_closeness = CentralitySnapshot::sum_over(snap_t.closeness, files_t) -
                      CentralitySnapshot::sum_over(snapshot_prev.closeness, files_prev);
  if (snapshot_t_out != nullptr) *snapshot_t_out = std::move(snap_t);
  return f;
}

std::vector<CoChangeFeatures> cochange_feature_history(const std::vector<CommitRecord>& commits,
                                                       const CentralityParams& params,
                                                       CoChangeGraph* final_graph) {
  params.validate();
  CoChangeGraph graph;
  CentralitySnapshot prev;
  std::vector<CoChangeFeatures> out;
  out.reserve(commits.size());
  for (std::size_t i = 0; i < commits.size(); ++i) {
    graph.apply_commit(commits[i], i, params);
    CentralitySnapshot snap;
    out.push_back(cochange_features(prev, graph, commits[i], i > 0 ? &commits[i - 1] : nullptr,
                                    params, &snap));
    prev = std::move(snap);
  }
  if (final_graph != nullptr) *final_graph = std::move(graph);
  return out;
}

std::string export_edges_csv(const CoChangeGraph& graph) {
  std::vector<std::tuple<std::string, std::string, double>> rows;
  for (std::size_t u = 0; u < graph.node_count(); ++u) {
    for (const auto& [v, w] : graph.neighbors(u)) {
      if (graph.name(u) < graph.name(v)) rows.emplace_back(graph.name(u), graph.name(v), w);
    }
  }
  std::sort(rows.begin(), rows.end());
  std::string out = "file_a,file_b,weight\n";
  for (const auto& [a, b, w] : rows) {
    out += csv_escape(a) + ',' + csv_escape(b) + ',' + format_double(w) + '\n';
  }
  return out;
}

std::string export_snapshot_csv(const CentralitySnapshot& snapshot) {
  std::string out = "file,pagerank,betweenness,closeness\n";
  for (const auto& [file, pr] : snapshot.pagerank) {
    out += csv_escape(file) + ',' + format_double(pr) + ',' +
           format_double(snapshot.betweenness.at(file)) + ',' +
           format_double(snapshot.closeness.at(file)) + '\n';
  }
  return out;
}

}  // namespace cs
