#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qnav {

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadIdRange : GraphError {
  using GraphError::GraphError;
};
struct SelfLoop : GraphError {
  using GraphError::GraphError;
};
struct DuplicateEdge : GraphError {
  using GraphError::GraphError;
};
struct DisconnectedGraph : GraphError {
  using GraphError::GraphError;
};
struct CoincidentPositions : GraphError {
  using GraphError::GraphError;
};
struct InvalidTrajectory : GraphError {
  using GraphError::GraphError;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

inline double euclid(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct NodeRecord {
  int id = 0;
  Vec2 pos;
  std::vector<double> feature;
  int category = 0;
  bool operator==(const NodeRecord&) const = default;
};

struct Edge {
  int u = 0;  // u < v
  int v = 0;
  double length = 0.0;
  bool operator==(const Edge&) const = default;
};

struct Neighbor {
  int id = 0;
  double length = 0.0;
  bool operator==(const Neighbor&) const = default;
};

// Immutable undirected navigation graph. Node ids are dense 0..n-1,
// adjacency lists are sorted ascending by id; that order is the canonical
// tie-break used by everything built on top of this type.
class NavGraph {
 public:
  NavGraph() = default;

  int size() const { return static_cast<int>(nodes_.size()); }
  int feature_dim() const { return feature_dim_; }

  const NodeRecord& node(int id) const { return nodes_.at(static_cast<size_t>(id)); }
  const std::vector<NodeRecord>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Neighbor>& neighbors(int id) const {
    return adj_.at(static_cast<size_t>(id));
  }

  bool has_edge(int u, int v) const {
    const auto& nb = neighbors(u);
    return std::any_of(nb.begin(), nb.end(), [v](const Neighbor& n) { return n.id == v; });
  }

  double edge_length(int u, int v) const {
    for (const Neighbor& n : neighbors(u))
      if (n.id == v) return n.length;
    throw GraphError("edge_length: no edge " + std::to_string(u) + "-" + std::to_string(v));
  }

  bool operator==(const NavGraph& o) const {
    return nodes_ == o.nodes_ && edges_ == o.edges_;
  }

  friend NavGraph build_graph(std::vector<NodeRecord> nodes,
                              const std::vector<std::pair<int, int>>& edges);

 private:
  std::vector<NodeRecord> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adj_;
  int feature_dim_ = 0;
};

// Validates all NavGraph invariants; edge lengths are computed from the node
// positions, never taken from the caller.
inline NavGraph build_graph(std::vector<NodeRecord> nodes,
                            const std::vector<std::pair<int, int>>& edges) {
  const int n = static_cast<int>(nodes.size());
  if (n == 0) throw BadIdRange("graph must have at least one node");
  for (int i = 0; i < n; ++i) {
    if (nodes[static_cast<size_t>(i)].id != i)
      throw BadIdRange("node ids must be contiguous 0..n-1, got id " +
                       std::to_string(nodes[static_cast<size_t>(i)].id) + " at index " +
                       std::to_string(i));
  }
  const size_t d = nodes.front().feature.size();
  for (const NodeRecord& nr : nodes) {
    if (nr.feature.size() != d)
      throw GraphError("feature dimension mismatch at node " + std::to_string(nr.id));
  }

  NavGraph g;
  g.nodes_ = std::move(nodes);
  g.feature_dim_ = static_cast<int>(d);
  g.adj_.assign(static_cast<size_t>(n), {});

  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw BadIdRange("edge endpoint out of range: " + std::to_string(a) + "-" +
                       std::to_string(b));
    if (a == b) throw SelfLoop("self loop at node " + std::to_string(a));
    auto key = std::minmax(a, b);
    if (!seen.insert(key).second)
      throw DuplicateEdge("duplicate edge " + std::to_string(key.first) + "-" +
                          std::to_string(key.second));
  }
  for (auto [u, v] : seen) {
    double len = euclid(g.nodes_[static_cast<size_t>(u)].pos, g.nodes_[static_cast<size_t>(v)].pos);
    g.edges_.push_back({u, v, len});
    g.adj_[static_cast<size_t>(u)].push_back({v, len});
    g.adj_[static_cast<size_t>(v)].push_back({u, len});
  }
  for (auto& a : g.adj_)
    std::sort(a.begin(), a.end(), [](const Neighbor& x, const Neighbor& y) { return x.id < y.id; });

  // Connectivity: one BFS must reach everything.
  std::vector<char> vis(static_cast<size_t>(n), 0);
  std::queue<int> q;
  q.push(0);
  vis[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (const Neighbor& nb : g.adj_[static_cast<size_t>(u)]) {
      if (!vis[static_cast<size_t>(nb.id)]) {
        vis[static_cast<size_t>(nb.id)] = 1;
        ++reached;
        q.push(nb.id);
      }
    }
  }
  if (reached != n)
    throw DisconnectedGraph("graph is not connected (" + std::to_string(reached) + "/" +
                            std::to_string(n) + " nodes reachable from 0)");
  return g;
}

// Unweighted BFS distances from src.
inline std::vector<int> hop_distances(const NavGraph& g, int src) {
  std::vector<int> dist(static_cast<size_t>(g.size()), -1);
  dist[static_cast<size_t>(src)] = 0;
  std::queue<int> q;
  q.push(src);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (const Neighbor& nb : g.neighbors(u)) {
      if (dist[static_cast<size_t>(nb.id)] < 0) {
        dist[static_cast<size_t>(nb.id)] = dist[static_cast<size_t>(u)] + 1;
        q.push(nb.id);
      }
    }
  }
  return dist;
}

// Dijkstra over edge lengths. Ties are popped in (distance, id) order so the
// predecessor tree is deterministic.
inline std::vector<double> metric_distances(const NavGraph& g, int src,
                                            std::vector<int>* pred = nullptr) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<size_t>(g.size()), inf);
  if (pred) pred->assign(static_cast<size_t>(g.size()), -1);
  dist[static_cast<size_t>(src)] = 0.0;
  std::set<std::pair<double, int>> pq;
  pq.insert({0.0, src});
  while (!pq.empty()) {
    auto [du, u] = *pq.begin();
    pq.erase(pq.begin());
    for (const Neighbor& nb : g.neighbors(u)) {
      double cand = du + nb.length;
      if (cand < dist[static_cast<size_t>(nb.id)]) {
        pq.erase({dist[static_cast<size_t>(nb.id)], nb.id});
        dist[static_cast<size_t>(nb.id)] = cand;
        if (pred) (*pred)[static_cast<size_t>(nb.id)] = u;
        pq.insert({cand, nb.id});
      }
    }
  }
  return dist;
}

inline double metric_distance(const NavGraph& g, int u, int v) {
  if (u == v) return 0.0;
  return metric_distances(g, u)[static_cast<size_t>(v)];
}

// Metric shortest path src -> dst as a node sequence.
inline std::vector<int> metric_shortest_path(const NavGraph& g, int src, int dst) {
  std::vector<int> pred;
  metric_distances(g, src, &pred);
  std::vector<int> path;
  for (int at = dst; at != -1; at = pred[static_cast<size_t>(at)]) {
    path.push_back(at);
    if (at == src) break;
  }
  std::reverse(path.begin(), path.end());
  if (path.empty() || path.front() != src)
    throw GraphError("no path " + std::to_string(src) + " -> " + std::to_string(dst));
  return path;
}

// (sin, cos) of the straight segment from `from` to `to`.
inline std::pair<double, double> heading_encoding(const NavGraph& g, int from, int to) {
  const Vec2& a = g.node(from).pos;
  const Vec2& b = g.node(to).pos;
  if (from == to || (a.x == b.x && a.y == b.y))
    throw CoincidentPositions("heading undefined for coincident positions " +
                              std::to_string(from) + ", " + std::to_string(to));
  double theta = std::atan2(b.y - a.y, b.x - a.x);
  return {std::sin(theta), std::cos(theta)};
}

// Ordered node list; consecutive ids adjacent, no repeats.
struct PartialTrajectory {
  std::vector<int> node_ids;

  int tail() const { return node_ids.back(); }
  bool contains(int id) const {
    return std::find(node_ids.begin(), node_ids.end(), id) != node_ids.end();
  }
};

inline void validate_trajectory(const NavGraph& g, const PartialTrajectory& t) {
  if (t.node_ids.empty()) throw InvalidTrajectory("trajectory must contain at least one node");
  std::set<int> seen;
  for (size_t i = 0; i < t.node_ids.size(); ++i) {
    int id = t.node_ids[i];
    if (id < 0 || id >= g.size())
      throw InvalidTrajectory("trajectory node out of range: " + std::to_string(id));
    if (!seen.insert(id).second)
      throw InvalidTrajectory("trajectory revisits node " + std::to_string(id));
    if (i > 0 && !g.has_edge(t.node_ids[i - 1], id))
      throw InvalidTrajectory("trajectory nodes " + std::to_string(t.node_ids[i - 1]) + " and " +
                              std::to_string(id) + " are not adjacent");
  }
}

struct CandidateAction {
  int target_node_id = 0;
};

inline void validate_candidate(const NavGraph& g, const PartialTrajectory& t,
                               const CandidateAction& a) {
  if (!g.has_edge(t.tail(), a.target_node_id))
    throw InvalidTrajectory("candidate " + std::to_string(a.target_node_id) +
                            " not adjacent to trajectory tail");
  if (t.contains(a.target_node_id))
    throw InvalidTrajectory("candidate " + std::to_string(a.target_node_id) +
                            " already visited by the trajectory");
}

// Unvisited neighbors of the trajectory tail, ascending by id.
inline std::vector<int> candidate_actions(const NavGraph& g, const PartialTrajectory& t) {
  std::vector<int> out;
  for (const Neighbor& nb : g.neighbors(t.tail()))
    if (!t.contains(nb.id)) out.push_back(nb.id);
  return out;
}

}  // namespace qnav
