#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnav/json_io.hpp"
#include "qnav/navgraph.hpp"
#include "qnav/rng.hpp"

namespace qnav {

struct NotANeighbor : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rollout expansion rule.
//   shortest-canonical: shortest-path-preserving steps restricted to the
//     canonical BFS tree (each node's parent = its smallest-id neighbor one
//     hop closer to the origin). Makes node ownership unique by construction.
//   shortest-all: every shortest-path-preserving step. The literal reading;
//     nodes with several equal-hop shortest paths get multiple owners.
//   uniform-random: any unvisited neighbor; no exact distribution, only
//     Monte-Carlo simulation.
enum class RolloutMode { shortest_canonical, shortest_all, uniform_random };

inline std::string to_string(RolloutMode m) {
  switch (m) {
    case RolloutMode::shortest_canonical: return "shortest-canonical";
    case RolloutMode::shortest_all: return "shortest-all";
    default: return "uniform-random";
  }
}
inline RolloutMode parse_rollout_mode(const std::string& s) {
  if (s == "shortest-canonical" || s == "canonical") return RolloutMode::shortest_canonical;
  if (s == "shortest-all" || s == "all") return RolloutMode::shortest_all;
  if (s == "uniform-random" || s == "random") return RolloutMode::uniform_random;
  throw std::invalid_argument("unknown rollout mode: " + s);
}

inline bool is_shortest_mode(RolloutMode m) { return m != RolloutMode::uniform_random; }

// Smallest-id neighbor of `node` one BFS level closer to the origin.
inline int canonical_predecessor(const NavGraph& g, const std::vector<int>& hops, int node) {
  int level = hops[static_cast<size_t>(node)];
  for (const Neighbor& nb : g.neighbors(node))  // ascending ids
    if (hops[static_cast<size_t>(nb.id)] == level - 1) return nb.id;
  return -1;
}

// Next-step candidates of a rollout that started at `origin` and sits at
// `current`. `hops` are BFS distances from origin. `visited` is consulted
// only in uniform-random mode.
inline std::vector<int> feasible_candidates(const NavGraph& g, const std::vector<int>& hops,
                                            int origin, int current, RolloutMode mode,
                                            const std::vector<char>* visited = nullptr) {
  std::vector<int> out;
  if (mode == RolloutMode::uniform_random) {
    for (const Neighbor& nb : g.neighbors(current))
      if (!visited || !(*visited)[static_cast<size_t>(nb.id)]) out.push_back(nb.id);
    return out;
  }
  (void)origin;
  const int next_level = hops[static_cast<size_t>(current)] + 1;
  for (const Neighbor& nb : g.neighbors(current)) {
    if (hops[static_cast<size_t>(nb.id)] != next_level) continue;
    if (mode == RolloutMode::shortest_canonical &&
        canonical_predecessor(g, hops, nb.id) != current)
      continue;
    out.push_back(nb.id);
  }
  return out;
}

inline std::vector<int> feasible_candidates(const NavGraph& g, int origin, int current,
                                            RolloutMode mode,
                                            const std::vector<char>* visited = nullptr) {
  return feasible_candidates(g, hop_distances(g, origin), origin, current, mode, visited);
}

struct StepProb {
  int t = 0;
  double p = 0.0;
  bool operator==(const StepProb&) const = default;
};

// P(N, t | origin, candidate): for each node reachable by the rollout, the
// unique step index t at which it is reached and the probability that a
// rollout passes through it. The candidate itself is (t=0, p=1); every other
// node has t = hop(origin, N) - 1, so the immediate term stays undiscounted.
struct NodeStepDistribution {
  int origin = 0;
  int candidate = 0;
  std::map<int, StepProb> entries;
};

// Exact enumeration for the shortest modes: one BFS plus a sweep over nodes
// in ascending hop order, pushing each node's mass uniformly to its feasible
// children. Nodes with no feasible child terminate their mass.
inline NodeStepDistribution node_step_distribution(const NavGraph& g, int origin, int candidate,
                                                   RolloutMode mode) {
  if (!is_shortest_mode(mode))
    throw std::invalid_argument("node_step_distribution requires a shortest mode");
  if (!g.has_edge(origin, candidate))
    throw NotANeighbor("candidate " + std::to_string(candidate) + " is not a neighbor of " +
                       std::to_string(origin));

  const std::vector<int> hops = hop_distances(g, origin);
  const int n = g.size();
  std::vector<double> p(static_cast<size_t>(n), 0.0);
  p[static_cast<size_t>(candidate)] = 1.0;

  // Ascending t == ascending hop level; levels are processed in id order,
  // which is deterministic (mass only flows level k -> level k+1).
  std::vector<std::vector<int>> by_level;
  for (int v = 0; v < n; ++v) {
    int h = hops[static_cast<size_t>(v)];
    if (h <= 0) continue;
    if (static_cast<size_t>(h) > by_level.size()) by_level.resize(static_cast<size_t>(h));
    by_level[static_cast<size_t>(h - 1)].push_back(v);
  }
  for (const auto& level : by_level) {
    for (int v : level) {
      if (p[static_cast<size_t>(v)] == 0.0) continue;
      std::vector<int> children = feasible_candidates(g, hops, origin, v, mode);
      if (children.empty()) continue;
      double share = p[static_cast<size_t>(v)] / static_cast<double>(children.size());
      for (int c : children) p[static_cast<size_t>(c)] += share;
    }
  }

  NodeStepDistribution dist;
  dist.origin = origin;
  dist.candidate = candidate;
  for (int v = 0; v < n; ++v)
    if (p[static_cast<size_t>(v)] > 0.0)
      dist.entries[v] = {hops[static_cast<size_t>(v)] - 1, p[static_cast<size_t>(v)]};
  return dist;
}

// One sampled rollout [origin, candidate, ...]; each step uniform over the
// feasible set, ending when it is empty. Uniform-random mode never revisits.
inline std::vector<int> simulate_rollout(const NavGraph& g, int origin, int candidate,
                                         RolloutMode mode, SplitMix64& rng) {
  if (!g.has_edge(origin, candidate))
    throw NotANeighbor("candidate " + std::to_string(candidate) + " is not a neighbor of " +
                       std::to_string(origin));
  const std::vector<int> hops = hop_distances(g, origin);
  std::vector<char> visited(static_cast<size_t>(g.size()), 0);
  visited[static_cast<size_t>(origin)] = 1;
  visited[static_cast<size_t>(candidate)] = 1;
  std::vector<int> seq{origin, candidate};
  int current = candidate;
  for (;;) {
    std::vector<int> c = feasible_candidates(g, hops, origin, current, mode, &visited);
    if (c.empty()) return seq;
    current = c[rng.below(c.size())];
    visited[static_cast<size_t>(current)] = 1;
    seq.push_back(current);
  }
}

// Probability mass sitting on rollout termination points; exactly 1 for any
// graph, any origin/candidate, in either shortest mode.
inline double terminated_mass(const NavGraph& g, const NodeStepDistribution& dist,
                              RolloutMode mode) {
  const std::vector<int> hops = hop_distances(g, dist.origin);
  double total = 0.0;
  for (const auto& [node, sp] : dist.entries)
    if (feasible_candidates(g, hops, dist.origin, node, mode).empty()) total += sp.p;
  return total;
}

struct UniquenessViolation {
  int node = 0;
  std::vector<int> candidates;  // all candidates whose support contains node
};

// Nodes reachable from two or more candidate actions of the same origin.
// Empty in shortest-canonical mode (the canonical-parent rule is exactly what
// makes ownership a theorem); shortest-all mode reports one entry per node
// with several equal-hop shortest paths from the origin.
inline std::vector<UniquenessViolation> verify_uniqueness(const NavGraph& g, int origin,
                                                          RolloutMode mode) {
  if (!is_shortest_mode(mode))
    throw std::invalid_argument("verify_uniqueness requires a shortest mode");
  std::map<int, std::vector<int>> owners;
  for (const Neighbor& nb : g.neighbors(origin)) {
    NodeStepDistribution dist = node_step_distribution(g, origin, nb.id, mode);
    for (const auto& [node, sp] : dist.entries) owners[node].push_back(nb.id);
  }
  std::vector<UniquenessViolation> out;
  for (auto& [node, cands] : owners)
    if (cands.size() > 1) out.push_back({node, std::move(cands)});
  return out;
}

struct SupportEntry {
  int node = 0;
  int t = 0;
  double p = 0.0;
  double weight = 0.0;  // gamma^t
};

struct CandidateSupport {
  int candidate = 0;
  std::vector<SupportEntry> nodes;  // ascending (t, node)
};

// Per-candidate support sets with decay weights; the data behind the colored
// accumulation maps.
inline std::vector<CandidateSupport> export_support_map(const NavGraph& g, int origin,
                                                        RolloutMode mode, double gamma = 0.5) {
  std::vector<CandidateSupport> out;
  for (const Neighbor& nb : g.neighbors(origin)) {
    CandidateSupport cs;
    cs.candidate = nb.id;
    NodeStepDistribution dist = node_step_distribution(g, origin, nb.id, mode);
    for (const auto& [node, sp] : dist.entries)
      cs.nodes.push_back({node, sp.t, sp.p, std::pow(gamma, sp.t)});
    std::sort(cs.nodes.begin(), cs.nodes.end(), [](const SupportEntry& a, const SupportEntry& b) {
      return a.t != b.t ? a.t < b.t : a.node < b.node;
    });
    out.push_back(std::move(cs));
  }
  return out;
}

inline std::string support_map_to_json(const std::vector<CandidateSupport>& supports) {
  std::string out = "[\n";
  for (size_t i = 0; i < supports.size(); ++i) {
    const CandidateSupport& cs = supports[i];
    out += "{\"candidate\":" + std::to_string(cs.candidate) + ",\"nodes\":[";
    for (size_t k = 0; k < cs.nodes.size(); ++k) {
      const SupportEntry& e = cs.nodes[k];
      if (k) out += ",";
      out += "{\"id\":" + std::to_string(e.node) + ",\"t\":" + std::to_string(e.t) +
             ",\"p\":" + fmt_double(e.p) + ",\"w\":" + fmt_double(e.weight) + "}";
    }
    out += "]}";
    if (i + 1 < supports.size()) out += ",";
    out += "\n";
  }
  out += "]\n";
  return out;
}

}  // namespace qnav
