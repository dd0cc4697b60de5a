#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "unlearn/errors.hpp"
#include "unlearn/mechanism.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected weighted graph with weights in [0, B].
struct WeightedGraph {
  std::size_t vertex_count = 0;
  std::vector<Edge> edges;
  double bound_B = 1.0;

  /// Checks endpoints, self-loops, duplicate pairs and the weight range.
  void validate() const {
    if (!(bound_B > 0.0)) throw ConfigError("bound B must be positive");
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(edges.size());
    for (const Edge& e : edges) {
      if (e.u >= vertex_count || e.v >= vertex_count) throw DataError("edge endpoint out of range");
      if (e.u == e.v) throw DataError("self-loops are not allowed");
      if (!(e.weight >= 0.0 && e.weight <= bound_B)) throw DataError("edge weight outside [0, B]");
      const std::uint64_t key = static_cast<std::uint64_t>(std::min(e.u, e.v)) * vertex_count +
                                std::max(e.u, e.v);
      if (!seen.insert(key).second) throw DataError("duplicate edge between the same pair");
    }
  }

  double density() const {
    if (vertex_count < 2) return 0.0;
    const double pairs = 0.5 * static_cast<double>(vertex_count) * (vertex_count - 1);
    return static_cast<double>(edges.size()) / pairs;
  }
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
};

inline auto edge_key(const Edge& e) {
  return std::tuple(e.weight, std::min(e.u, e.v), std::max(e.u, e.v));
}

}  // namespace detail

inline bool is_connected(const WeightedGraph& g) {
  if (g.vertex_count == 0) return false;
  detail::DisjointSets sets(g.vertex_count);
  std::size_t components = g.vertex_count;
  for (const Edge& e : g.edges) {
    if (sets.unite(e.u, e.v)) --components;
  }
  return components == 1;
}

/// Kruskal with ties broken by (weight, min endpoint, max endpoint).
inline std::vector<Edge> minimum_spanning_tree(const WeightedGraph& g) {
  std::vector<Edge> sorted = g.edges;
  std::sort(sorted.begin(), sorted.end(),
            [](const Edge& a, const Edge& b) { return detail::edge_key(a) < detail::edge_key(b); });
  detail::DisjointSets sets(g.vertex_count);
  std::vector<Edge> tree;
  tree.reserve(g.vertex_count > 0 ? g.vertex_count - 1 : 0);
  for (const Edge& e : sorted) {
    if (sets.unite(e.u, e.v)) tree.push_back(e);
  }
  if (g.vertex_count == 0 || tree.size() + 1 != g.vertex_count) {
    throw DataError("graph is disconnected; the MST weight is undefined");
  }
  return tree;
}

inline double mst_weight(const WeightedGraph& g) {
  double total = 0.0;
  for (const Edge& e : minimum_spanning_tree(g)) total += e.weight;
  return total;
}

/// All-pairs bottleneck (largest edge weight) on the paths of a spanning tree.
/// One traversal per source: O(n^2) overall.
inline std::vector<std::vector<double>> tree_bottlenecks(std::size_t n,
                                                         const std::vector<Edge>& tree) {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const Edge& e : tree) {
    adj[e.u].emplace_back(e.v, e.weight);
    adj[e.v].emplace_back(e.u, e.weight);
  }
  std::vector<std::vector<double>> bottleneck(n, std::vector<double>(n, 0.0));
  std::vector<std::size_t> stack;
  std::vector<bool> visited(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(visited.begin(), visited.end(), false);
    visited[s] = true;
    stack.assign(1, s);
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      for (const auto& [y, w] : adj[x]) {
        if (visited[y]) continue;
        visited[y] = true;
        bottleneck[s][y] = std::max(bottleneck[s][x], w);
        stack.push_back(y);
      }
    }
  }
  return bottleneck;
}

/// Retain sensitivity of the MST weight under edge-weight adjacency: the
/// largest MST-path bottleneck over vertex pairs that are not yet edges. This
/// is the heaviest "lightest crossing edge" over cuts that some addable edge
/// crosses; a complete graph has no addable edge and sensitivity 0.
inline SensitivityReport rs_mst_edge(const WeightedGraph& g) {
  g.validate();
  const std::vector<Edge> tree = minimum_spanning_tree(g);
  const std::size_t n = g.vertex_count;
  std::vector<std::vector<bool>> present(n, std::vector<bool>(n, false));
  for (const Edge& e : g.edges) present[e.u][e.v] = present[e.v][e.u] = true;
  const auto bottleneck = tree_bottlenecks(n, tree);

  double worst = 0.0;
  std::size_t non_edges = 0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (present[u][v]) continue;
      ++non_edges;
      worst = std::max(worst, bottleneck[u][v]);
    }
  }
  double max_tree_edge = 0.0;
  for (const Edge& e : tree) max_tree_edge = std::max(max_tree_edge, e.weight);
  return SensitivityReport::make(worst, SensitivityKind::retain, "rs_mst_edge",
                                 {{"vertices", static_cast<double>(n)},
                                  {"edges", static_cast<double>(g.edges.size())},
                                  {"non_edges", static_cast<double>(non_edges)},
                                  {"max_mst_edge", max_tree_edge},
                                  {"B", g.bound_B}});
}

inline SensitivityReport gs_mst_edge(double bound_B) {
  if (!(bound_B > 0.0)) throw ConfigError("bound B must be positive");
  return SensitivityReport::make(bound_B, SensitivityKind::global, "gs_mst_edge",
                                 {{"B", bound_B}});
}

/// Exhaustive oracle: add every non-edge at weight 0 (the worst case, since
/// the MST weight is nonincreasing in the added weight) and recompute.
inline SensitivityReport oracle_rs_mst(const WeightedGraph& g) {
  g.validate();
  const double base = mst_weight(g);
  const std::size_t n = g.vertex_count;
  std::vector<std::vector<bool>> present(n, std::vector<bool>(n, false));
  for (const Edge& e : g.edges) present[e.u][e.v] = present[e.v][e.u] = true;
  double worst = 0.0;
  WeightedGraph augmented = g;
  augmented.edges.push_back({});
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (present[u][v]) continue;
      augmented.edges.back() = {u, v, 0.0};
      worst = std::max(worst, base - mst_weight(augmented));
    }
  }
  return SensitivityReport::make(worst, SensitivityKind::oracle, "oracle_rs_mst",
                                 {{"vertices", static_cast<double>(n)}});
}

/// Complete graph on n vertices minus the edge {0, 1}, every present weight B.
/// The extremal instance for the global bound.
inline WeightedGraph near_complete_graph(std::size_t n, double bound_B) {
  WeightedGraph g;
  g.vertex_count = n;
  g.bound_B = bound_B;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (u == 0 && v == 1) continue;
      g.edges.push_back({u, v, bound_B});
    }
  }
  return g;
}

/// Induced subgraph on `vertices`, relabelled in increasing original-id order.
inline WeightedGraph induced_subgraph(const WeightedGraph& g, std::vector<std::size_t> vertices) {
  std::sort(vertices.begin(), vertices.end());
  std::vector<std::size_t> local(g.vertex_count, g.vertex_count);
  for (std::size_t i = 0; i < vertices.size(); ++i) local[vertices[i]] = i;
  WeightedGraph sub;
  sub.vertex_count = vertices.size();
  sub.bound_B = g.bound_B;
  for (const Edge& e : g.edges) {
    if (local[e.u] == g.vertex_count || local[e.v] == g.vertex_count) continue;
    const std::size_t a = std::min(local[e.u], local[e.v]);
    const std::size_t b = std::max(local[e.u], local[e.v]);
    sub.edges.push_back({a, b, e.weight});
  }
  std::sort(sub.edges.begin(), sub.edges.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.u, x.v) < std::tie(y.u, y.v);
  });
  return sub;
}

struct SubgraphSampling {
  std::size_t target_nodes = 100;
  double min_density = 0.1;
  std::size_t count = 500;
  /// Attempts allowed per requested subgraph before giving up.
  std::size_t rejection_factor = 100;
};

/// BFS-grown induced subgraphs: uniform start vertex, breadth-first search
/// (neighbours in increasing id order) until `target_nodes` vertices, keep
/// the induced subgraph iff its edge density reaches `min_density`.
inline std::vector<WeightedGraph> sample_subgraphs(const WeightedGraph& g,
                                                   const SubgraphSampling& opts,
                                                   std::uint64_t seed) {
  g.validate();
  if (opts.target_nodes < 2) throw ConfigError("target_nodes must be at least 2");
  if (g.vertex_count < opts.target_nodes) {
    throw DataError("graph has fewer vertices than target_nodes");
  }
  std::vector<std::vector<std::size_t>> adj(g.vertex_count);
  for (const Edge& e : g.edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  for (auto& nb : adj) std::sort(nb.begin(), nb.end());

  CounterRng rng(seed);
  std::vector<WeightedGraph> accepted;
  accepted.reserve(opts.count);
  const std::size_t budget = opts.rejection_factor * std::max<std::size_t>(opts.count, 1);
  std::vector<bool> visited(g.vertex_count);
  std::size_t attempts = 0;
  while (accepted.size() < opts.count) {
    if (attempts++ >= budget) {
      throw DataError("sample_subgraphs: only " + std::to_string(accepted.size()) + " of " +
                      std::to_string(opts.count) + " subgraphs reached density " +
                      std::to_string(opts.min_density) + " within " + std::to_string(budget) +
                      " attempts");
    }
    std::fill(visited.begin(), visited.end(), false);
    const std::size_t start = rng.below(g.vertex_count);
    std::vector<std::size_t> order{start};
    visited[start] = true;
    std::queue<std::size_t> frontier;
    frontier.push(start);
    while (!frontier.empty() && order.size() < opts.target_nodes) {
      const std::size_t x = frontier.front();
      frontier.pop();
      for (std::size_t y : adj[x]) {
        if (visited[y]) continue;
        visited[y] = true;
        order.push_back(y);
        frontier.push(y);
        if (order.size() == opts.target_nodes) break;
      }
    }
    if (order.size() < opts.target_nodes) continue;  // component too small
    WeightedGraph sub = induced_subgraph(g, order);
    if (sub.density() + 1e-15 < opts.min_density) continue;
    accepted.push_back(std::move(sub));
  }
  return accepted;
}

}  // namespace unlearn
