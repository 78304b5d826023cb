#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnav/navgraph.hpp"
#include "qnav/qmodel.hpp"
#include "qnav/qoracle.hpp"
#include "qnav/rng.hpp"
#include "qnav/rollout.hpp"

namespace qnav {

struct EmptyFrontier : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownFrontier : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// The goal is described semantically (category embedding), never positionally.
// goal_node is environment-side state used for distances and metrics only.
struct GoalSpec {
  std::vector<double> goal_feature;
  int goal_node = 0;
  int success_radius_hops = 0;
};

inline std::vector<double> make_goal_feature(const NavGraph& g, int goal_node, double noise_sigma,
                                             SplitMix64& rng) {
  std::vector<double> f(static_cast<size_t>(g.feature_dim()), 0.0);
  f[static_cast<size_t>(g.node(goal_node).category)] = 1.0;
  if (noise_sigma > 0.0)
    for (double& x : f) x += noise_sigma * rng.gaussian();
  return f;
}

// All-pairs shortest-path tables; graphs are small enough that this is the
// simplest thing that works.
struct DistanceCache {
  std::vector<std::vector<double>> metric;
  std::vector<std::vector<int>> hops;

  static DistanceCache build(const NavGraph& g) {
    DistanceCache c;
    c.metric.reserve(static_cast<size_t>(g.size()));
    c.hops.reserve(static_cast<size_t>(g.size()));
    for (int v = 0; v < g.size(); ++v) {
      c.metric.push_back(metric_distances(g, v));
      c.hops.push_back(hop_distances(g, v));
    }
    return c;
  }

  int hop_diameter() const {
    int d = 0;
    for (const auto& row : hops)
      for (int h : row) d = std::max(d, h);
    return d;
  }
};

// Read-only episode context shared by agent, stop rule and metrics.
// D1 = 2 * expert length, D2 = expert length.
struct Environment {
  const NavGraph* graph = nullptr;
  const DistanceCache* dist = nullptr;
  int start = 0;
  GoalSpec goal;
  std::vector<int> expert_path;
  double expert_length = 0.0;
  double d1 = 1.0;
  double d2 = 1.0;

  double metric(int u, int v) const { return dist->metric[static_cast<size_t>(u)][static_cast<size_t>(v)]; }
  int hop(int u, int v) const { return dist->hops[static_cast<size_t>(u)][static_cast<size_t>(v)]; }
};

inline Environment make_environment(const NavGraph& g, const DistanceCache& cache, int start,
                                    GoalSpec goal) {
  Environment env;
  env.graph = &g;
  env.dist = &cache;
  env.start = start;
  env.goal = std::move(goal);
  env.expert_path = metric_shortest_path(g, start, env.goal.goal_node);
  env.expert_length = cache.metric[static_cast<size_t>(start)][static_cast<size_t>(env.goal.goal_node)];
  if (env.expert_length <= 0.0)
    throw std::invalid_argument("episode needs start != goal (expert length is 0)");
  env.d2 = env.expert_length;
  env.d1 = 2.0 * env.expert_length;
  return env;
}

// Normalized traversed cost of committing to a frontier:
// (dist(start, current) + dist(current, frontier)) / D1, clipped to [0, 1].
inline double progress_s1(const Environment& env, int current, int frontier) {
  return clip01((env.metric(env.start, current) + env.metric(current, frontier)) / env.d1);
}

// Remaining-distance estimator head. The oracle head reads true distances
// from the environment; the learned head maps [Q | goal feature] to the
// normalized distance (regression, or argmax over 5 bins).
struct S2Head {
  enum class Kind { oracle, learned };
  Kind kind = Kind::oracle;
  const RegressorParams* params = nullptr;
  bool classifier = false;
  int n_bins = 5;
};

inline double heuristic_s2(const S2Head& head, const Environment& env, int node,
                           const std::vector<double>* q) {
  if (head.kind == S2Head::Kind::oracle)
    return clip01(env.metric(node, env.goal.goal_node) / env.d2);
  if (!head.params) throw std::invalid_argument("learned s2 head without parameters");
  if (!q) throw std::invalid_argument("learned s2 head needs a Q-feature channel");
  std::vector<double> x = *q;
  x.insert(x.end(), env.goal.goal_feature.begin(), env.goal.goal_feature.end());
  std::vector<double> out = forward(*head.params, x);
  if (head.classifier) {
    int best = 0;
    for (size_t i = 1; i < out.size(); ++i)
      if (out[i] > out[static_cast<size_t>(best)]) best = static_cast<int>(i);
    return (static_cast<double>(best) + 0.5) / static_cast<double>(head.n_bins);
  }
  return clip01(out[0]);
}

struct ScoreWeights {
  double alpha = 1.0;
  double beta = 1.0;
  enum class Fusion { weighted_sum, softmax_normalized };
  Fusion fusion = Fusion::weighted_sum;
};

inline void validate(const ScoreWeights& w) {
  if (w.alpha < 0.0 || w.beta < 0.0 || (w.alpha == 0.0 && w.beta == 0.0))
    throw std::invalid_argument("weights must be >= 0 and not both zero");
}

enum class AgentKind { random_frontier, history_only, foresighted_learned_q, foresighted_gt_q, pseudo_expert };

inline std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::random_frontier: return "random";
    case AgentKind::history_only: return "history";
    case AgentKind::foresighted_learned_q: return "learnedq";
    case AgentKind::foresighted_gt_q: return "gtq";
    default: return "expert";
  }
}
inline AgentKind parse_agent_kind(const std::string& s) {
  if (s == "random") return AgentKind::random_frontier;
  if (s == "history") return AgentKind::history_only;
  if (s == "learnedq") return AgentKind::foresighted_learned_q;
  if (s == "gtq") return AgentKind::foresighted_gt_q;
  if (s == "expert" || s == "pseudo-expert") return AgentKind::pseudo_expert;
  throw std::invalid_argument("unknown agent kind: " + s);
}

// Running mean of Q-feature observations for one node. A node observed from
// several visited neighbors keeps the mean of the per-observer Q-features.
struct QChannel {
  std::vector<double> sum;
  int count = 0;

  void add(const std::vector<double>& q) {
    if (sum.empty()) sum.assign(q.size(), 0.0);
    for (size_t i = 0; i < q.size(); ++i) sum[i] += q[i];
    ++count;
  }
  std::vector<double> mean() const {
    std::vector<double> m = sum;
    for (double& v : m) v /= static_cast<double>(count);
    return m;
  }
};

struct ExploredGraph {
  int start = 0;
  int current = 0;
  std::set<int> visited;
  std::set<int> frontier;
  std::map<int, QChannel> qchan;  // frontier nodes + retained after visiting
  std::set<std::pair<int, int>> known_edges;
};

struct AgentConfig {
  AgentKind kind = AgentKind::foresighted_gt_q;
  ScoreWeights weights;
  QOracleConfig oracle;                      // gt-q channel settings
  const RegressorParams* qmodel = nullptr;   // learned-q channel
  S2Head score_head;                         // frontier scoring (q agents)
  S2Head stop_head;                          // stop rule
  double stop_tau = 0.0;
  int budget = 64;
  std::uint64_t mc_seed = 0;  // gt-q channel under the uniform-random policy
};

inline bool agent_uses_q(AgentKind k) {
  return k == AgentKind::foresighted_learned_q || k == AgentKind::foresighted_gt_q;
}

// Shortest path from -> to over known edges, transiting visited nodes only.
inline std::vector<int> known_path(const Environment& env, const ExploredGraph& state, int from,
                                   int to) {
  const NavGraph& g = *env.graph;
  const double inf = std::numeric_limits<double>::infinity();
  std::map<int, double> dist;
  std::map<int, int> pred;
  auto expandable = [&](int v) { return state.visited.count(v) > 0; };
  std::set<std::pair<double, int>> pq;
  dist[from] = 0.0;
  pq.insert({0.0, from});
  while (!pq.empty()) {
    auto [du, u] = *pq.begin();
    pq.erase(pq.begin());
    if (u == to) break;
    if (!expandable(u)) continue;
    for (const Neighbor& nb : g.neighbors(u)) {
      if (!state.known_edges.count(std::minmax(u, nb.id))) continue;
      double cand = du + nb.length;
      auto it = dist.find(nb.id);
      double old = it == dist.end() ? inf : it->second;
      if (cand < old) {
        if (it != dist.end()) pq.erase({old, nb.id});
        dist[nb.id] = cand;
        pred[nb.id] = u;
        pq.insert({cand, nb.id});
      }
    }
  }
  if (!dist.count(to)) throw GraphError("no known path to " + std::to_string(to));
  std::vector<int> path;
  for (int at = to;; at = pred[at]) {
    path.push_back(at);
    if (at == from) break;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

namespace detail {

// Marks `node` visited, reveals its incident edges and unvisited neighbors,
// and fills the Q-channel of each newly observable neighbor (predicted for
// the learned-q agent, exact oracle for the gt-q agent).
inline void reveal(const Environment& env, const AgentConfig& cfg, ExploredGraph& state,
                   int node) {
  const NavGraph& g = *env.graph;
  state.frontier.erase(node);
  state.visited.insert(node);
  state.current = node;
  for (const Neighbor& nb : g.neighbors(node)) {
    state.known_edges.insert(std::minmax(node, nb.id));
    if (!state.visited.count(nb.id)) state.frontier.insert(nb.id);
  }
  if (!agent_uses_q(cfg.kind)) return;

  PartialTrajectory traj;
  traj.node_ids = known_path(env, state, state.start, node);
  for (const Neighbor& nb : g.neighbors(node)) {
    if (state.visited.count(nb.id)) continue;
    std::vector<double> q;
    if (cfg.kind == AgentKind::foresighted_gt_q) {
      if (is_shortest_mode(cfg.oracle.mode)) {
        q = gt_qfeature(g, node, nb.id, cfg.oracle).values;
      } else {
        // No exact oracle under the uniform-random policy; the Monte-Carlo
        // estimate stands in, seeded per (observer, neighbor).
        SplitMix64 rng(derive_seed(cfg.mc_seed, "mc-q",
                                   static_cast<std::uint64_t>(node) *
                                           static_cast<std::uint64_t>(g.size()) +
                                       static_cast<std::uint64_t>(nb.id)));
        q = mc_qfeature(g, node, nb.id, cfg.oracle, rng).values;
      }
    } else {
      q = forward(*cfg.qmodel, encode_input(g, traj, nb.id));
    }
    state.qchan[nb.id].add(q);
  }
}

}  // namespace detail

inline ExploredGraph init_explored(const Environment& env, const AgentConfig& cfg) {
  ExploredGraph state;
  state.start = env.start;
  state.current = env.start;
  state.visited.insert(env.start);
  detail::reveal(env, cfg, state, env.start);
  return state;
}

// score(A) = alpha * s1(A) + beta * s2(A), lower is better. The history-only
// baseline replaces the s2 branch by -cosine(frontier feature, goal feature)
// with unit weight. Softmax fusion normalizes each branch over the frontier
// before combining.
inline std::map<int, double> score_frontiers(const Environment& env, const ExploredGraph& state,
                                             const AgentConfig& cfg) {
  validate(cfg.weights);
  if (state.frontier.empty()) throw EmptyFrontier("no frontier to score");
  std::vector<int> ids(state.frontier.begin(), state.frontier.end());
  std::vector<double> b1, b2;
  b1.reserve(ids.size());
  b2.reserve(ids.size());
  double beta = cfg.weights.beta;
  for (int f : ids) {
    b1.push_back(progress_s1(env, state.current, f));
    if (cfg.kind == AgentKind::history_only) {
      b2.push_back(-cosine_similarity(env.graph->node(f).feature, env.goal.goal_feature));
    } else {
      auto it = state.qchan.find(f);
      std::vector<double> q = it == state.qchan.end() ? std::vector<double>{} : it->second.mean();
      b2.push_back(heuristic_s2(cfg.score_head, env, f, q.empty() ? nullptr : &q));
    }
  }
  if (cfg.kind == AgentKind::history_only) beta = 1.0;
  if (cfg.weights.fusion == ScoreWeights::Fusion::softmax_normalized) {
    auto softmax = [](std::vector<double>& v) {
      double mx = *std::max_element(v.begin(), v.end());
      double sum = 0.0;
      for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
      }
      for (double& x : v) x /= sum;
    };
    softmax(b1);
    softmax(b2);
  }
  std::map<int, double> scores;
  for (size_t i = 0; i < ids.size(); ++i)
    scores[ids[i]] = cfg.weights.alpha * b1[i] + beta * b2[i];
  return scores;
}

// Supervision policy: the frontier minimizing dist(current, f) + dist(f, goal)
// with true distances, ties to the smallest id.
inline int pseudo_expert_choice(const Environment& env, const ExploredGraph& state) {
  if (state.frontier.empty()) throw EmptyFrontier("no frontier to choose");
  int best = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int f : state.frontier) {
    double cost = env.metric(state.current, f) + env.metric(f, env.goal.goal_node);
    if (cost < best_cost) {
      best_cost = cost;
      best = f;
    }
  }
  return best;
}

inline int select_frontier(const Environment& env, const ExploredGraph& state,
                           const AgentConfig& cfg, SplitMix64& rng) {
  if (state.frontier.empty()) throw EmptyFrontier("no frontier to select");
  switch (cfg.kind) {
    case AgentKind::random_frontier: {
      std::vector<int> ids(state.frontier.begin(), state.frontier.end());
      return ids[rng.below(ids.size())];
    }
    case AgentKind::pseudo_expert:
      return pseudo_expert_choice(env, state);
    default: {
      std::map<int, double> scores = score_frontiers(env, state, cfg);
      int best = scores.begin()->first;
      double best_score = scores.begin()->second;
      for (const auto& [f, s] : scores)
        if (s < best_score) {
          best = f;
          best_score = s;
        }
      return best;
    }
  }
}

enum class StopReason { stop_rule, budget };
inline std::string to_string(StopReason r) { return r == StopReason::stop_rule ? "stop-rule" : "budget"; }

struct EpisodeResult {
  std::vector<int> path;              // physically traversed walk
  std::vector<int> chosen_frontiers;  // one per decision
  StopReason stop = StopReason::budget;
  std::vector<int> visit_order;       // first-visit order
  std::vector<int> expert_path;
};

// Traverse the known graph to `choice`, then reveal it.
inline void step(const Environment& env, const AgentConfig& cfg, ExploredGraph& state, int choice,
                 EpisodeResult& result) {
  if (!state.frontier.count(choice))
    throw UnknownFrontier("node " + std::to_string(choice) + " is not on the frontier");
  std::vector<int> sub = known_path(env, state, state.current, choice);
  result.path.insert(result.path.end(), sub.begin() + 1, sub.end());
  detail::reveal(env, cfg, state, choice);
  result.visit_order.push_back(choice);
}

namespace detail {

inline bool stop_triggered(const Environment& env, const AgentConfig& cfg,
                           const ExploredGraph& state) {
  if (cfg.stop_head.kind == S2Head::Kind::oracle)
    return heuristic_s2(cfg.stop_head, env, state.current, nullptr) <= cfg.stop_tau;
  auto it = state.qchan.find(state.current);
  if (it == state.qchan.end()) return false;  // start node was never a frontier
  std::vector<double> q = it->second.mean();
  return heuristic_s2(cfg.stop_head, env, state.current, &q) <= cfg.stop_tau;
}

}  // namespace detail

// Decision loop: stop when the current node's estimated remaining distance
// falls under stop_tau, otherwise pick and commit to a frontier, until the
// budget of decisions is spent or nothing is left to explore.
inline EpisodeResult run_episode(const Environment& env, const AgentConfig& cfg,
                                 SplitMix64& rng) {
  if (cfg.budget < 0) throw std::invalid_argument("budget must be >= 0");
  ExploredGraph state = init_explored(env, cfg);
  EpisodeResult result;
  result.path.push_back(env.start);
  result.visit_order.push_back(env.start);
  result.expert_path = env.expert_path;
  for (int decision = 0;; ++decision) {
    if (detail::stop_triggered(env, cfg, state)) {
      result.stop = StopReason::stop_rule;
      break;
    }
    if (decision >= cfg.budget || state.frontier.empty()) {
      result.stop = StopReason::budget;
      break;
    }
    int choice = select_frontier(env, state, cfg, rng);
    step(env, cfg, state, choice, result);
    result.chosen_frontiers.push_back(choice);
  }
  return result;
}

// ---- s2 head training -------------------------------------------------

enum class QSource { ground_truth, learned };

inline std::string to_string(QSource s) { return s == QSource::ground_truth ? "gt" : "learned"; }

struct S2TrainOptions {
  QSource qsource = QSource::ground_truth;
  const RegressorParams* qmodel = nullptr;  // required when qsource = learned
  QOracleConfig oracle;
  int n_samples = 10000;
  int max_traj_len = 8;
  int min_goal_hops = 2;  // matches the benchmark's episode sampling
  double goal_noise_sigma = 0.0;
  bool classifier = false;
  int n_bins = 5;
  std::vector<int> val_worlds;
  TrainConfig train;
  std::uint64_t seed = 0;
};

// (Q, goal feature) -> normalized-remaining-distance samples mirroring what
// the agent sees at decision time. Returns (train split, held-out-world split).
inline std::pair<Dataset, Dataset> build_s2_dataset(const std::vector<NavGraph>& worlds,
                                                    const S2TrainOptions& opt) {
  if (worlds.empty()) throw std::invalid_argument("build_s2_dataset needs worlds");
  if (opt.qsource == QSource::learned && !opt.qmodel)
    throw std::invalid_argument("qsource=learned requires a q-model");
  constexpr int kMaxAttempts = 100;

  Dataset train_set, val_set;
  for (int i = 0; i < opt.n_samples; ++i) {
    SplitMix64 rng(derive_seed(opt.seed, "s2-sample", static_cast<std::uint64_t>(i)));
    bool built = false;
    for (int attempt = 0; attempt < kMaxAttempts && !built; ++attempt) {
      int w = static_cast<int>(rng.below(worlds.size()));
      const NavGraph& g = worlds[static_cast<size_t>(w)];
      int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.size())));
      int goal = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.size())));
      if (goal == start) continue;
      std::vector<int> start_hops = hop_distances(g, start);
      if (start_hops[static_cast<size_t>(goal)] < opt.min_goal_hops) continue;

      int target_len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_traj_len)));
      PartialTrajectory traj;
      traj.node_ids.push_back(start);
      bool dead = false;
      while (static_cast<int>(traj.node_ids.size()) < target_len) {
        std::vector<int> next = candidate_actions(g, traj);
        if (next.empty()) {
          dead = true;
          break;
        }
        traj.node_ids.push_back(next[rng.below(next.size())]);
      }
      if (dead) continue;
      std::vector<int> cands = candidate_actions(g, traj);
      if (cands.empty()) continue;
      int cand = cands[rng.below(cands.size())];

      std::vector<double> q;
      if (opt.qsource == QSource::ground_truth) {
        if (is_shortest_mode(opt.oracle.mode))
          q = gt_qfeature(g, traj.tail(), cand, opt.oracle).values;
        else
          q = mc_qfeature(g, traj.tail(), cand, opt.oracle, rng).values;
      } else {
        q = forward(*opt.qmodel, encode_input(g, traj, cand));
      }
      std::vector<double> goal_feat = make_goal_feature(g, goal, opt.goal_noise_sigma, rng);

      double d2 = metric_distance(g, start, goal);
      double s2 = clip01(metric_distance(g, cand, goal) / d2);
      std::vector<double> x = q;
      x.insert(x.end(), goal_feat.begin(), goal_feat.end());
      std::vector<double> y;
      if (opt.classifier) {
        int bin = std::min(opt.n_bins - 1, static_cast<int>(s2 * opt.n_bins));
        y.assign(static_cast<size_t>(opt.n_bins), 0.0);
        y[static_cast<size_t>(bin)] = 1.0;
      } else {
        y.push_back(s2);
      }
      bool is_val = std::find(opt.val_worlds.begin(), opt.val_worlds.end(), w) !=
                    opt.val_worlds.end();
      Dataset& dst = is_val ? val_set : train_set;
      dst.inputs.push_back(std::move(x));
      dst.targets.push_back(std::move(y));
      built = true;
    }
    if (!built)
      throw RetriesExhausted("no valid s2 sample draw after " + std::to_string(kMaxAttempts) +
                             " attempts (sample " + std::to_string(i) + ")");
  }
  return {std::move(train_set), std::move(val_set)};
}

// Fits the head on build_s2_dataset with the shared trainer. Classifier mode
// trains one-hot bin targets and predicts by argmax.
inline TrainResult train_s2_head(const std::vector<NavGraph>& worlds, const S2TrainOptions& opt) {
  auto [train_set, val_set] = build_s2_dataset(worlds, opt);
  return train(train_set, val_set, opt.train);
}

}  // namespace qnav
