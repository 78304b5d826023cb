#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnav/json_io.hpp"
#include "qnav/navgraph.hpp"
#include "qnav/parallel.hpp"
#include "qnav/rng.hpp"
#include "qnav/rollout.hpp"

namespace qnav {

struct GraphTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RetriesExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct QOracleConfig {
  double gamma = 0.5;
  RolloutMode mode = RolloutMode::shortest_canonical;
  int mc_rollouts = 256;      // uniform-random mode estimator
  int bellman_node_cap = 64;  // bellman_qfeature refuses larger graphs
};

inline void validate(const QOracleConfig& cfg) {
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0))
    throw std::invalid_argument("gamma must lie in [0, 1)");
  if (cfg.mode == RolloutMode::uniform_random && cfg.mc_rollouts < 1)
    throw std::invalid_argument("uniform-random mode needs mc_rollouts >= 1");
}

// Decay-weighted aggregate of future node features for one (origin, candidate).
struct QFeatureVector {
  std::vector<double> values;
  double gamma = 0.0;
  int origin = 0;
  int candidate = 0;
};

// Sum over the node-step distribution: Q = sum_N p(N) gamma^t(N) R(N).
// The accumulator starts as a copy of R(candidate) (its term is p=1, t=0) and
// zero-weight terms are skipped, so gamma = 0 returns R(candidate) bit-exactly.
inline QFeatureVector gt_qfeature(const NavGraph& g, int origin, int candidate,
                                  const QOracleConfig& cfg) {
  validate(cfg);
  if (!is_shortest_mode(cfg.mode))
    throw std::invalid_argument("gt_qfeature requires a shortest mode; use mc_qfeature");
  NodeStepDistribution dist = node_step_distribution(g, origin, candidate, cfg.mode);

  QFeatureVector q;
  q.gamma = cfg.gamma;
  q.origin = origin;
  q.candidate = candidate;
  q.values = g.node(candidate).feature;
  for (const auto& [node, sp] : dist.entries) {
    if (node == candidate) continue;
    double w = sp.p * std::pow(cfg.gamma, sp.t);
    if (w == 0.0) continue;
    const std::vector<double>& r = g.node(node).feature;
    for (size_t i = 0; i < q.values.size(); ++i) q.values[i] += w * r[i];
  }
  return q;
}

namespace detail {

inline std::vector<double> bellman_value(const NavGraph& g, const std::vector<int>& hops,
                                         int origin, int current, double gamma,
                                         RolloutMode mode) {
  std::vector<double> v = g.node(current).feature;
  std::vector<int> children = feasible_candidates(g, hops, origin, current, mode);
  if (children.empty() || gamma == 0.0) return v;
  std::vector<double> acc(v.size(), 0.0);
  for (int c : children) {
    std::vector<double> child = bellman_value(g, hops, origin, c, gamma, mode);
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += child[i];
  }
  double w = gamma / static_cast<double>(children.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] += w * acc[i];
  return v;
}

}  // namespace detail

// Direct recursive evaluation of the Q definition:
// Q(T, a) = R(A) + gamma * E_{a' ~ pi}[Q(T u {A}, a')], zero continuation at
// rollout termination. Exponential in general -- a cross-check for small
// graphs, not a production path.
inline QFeatureVector bellman_qfeature(const NavGraph& g, int origin, int candidate,
                                       const QOracleConfig& cfg) {
  validate(cfg);
  if (!is_shortest_mode(cfg.mode))
    throw std::invalid_argument("bellman_qfeature requires a shortest mode");
  if (g.size() > cfg.bellman_node_cap)
    throw GraphTooLarge("bellman_qfeature capped at " + std::to_string(cfg.bellman_node_cap) +
                        " nodes, graph has " + std::to_string(g.size()));
  if (!g.has_edge(origin, candidate))
    throw NotANeighbor("candidate " + std::to_string(candidate) + " is not a neighbor of " +
                       std::to_string(origin));
  QFeatureVector q;
  q.gamma = cfg.gamma;
  q.origin = origin;
  q.candidate = candidate;
  q.values = detail::bellman_value(g, hop_distances(g, origin), origin, candidate, cfg.gamma,
                                   cfg.mode);
  return q;
}

// Monte-Carlo estimate: mean over sampled rollouts of sum_k gamma^t_k R(N_k).
// Every rollout starts [origin, candidate], so the t=0 term is the constant
// R(candidate); only the later terms are averaged.
inline QFeatureVector mc_qfeature(const NavGraph& g, int origin, int candidate,
                                  const QOracleConfig& cfg, SplitMix64& rng) {
  validate(cfg);
  const int n_rollouts = std::max(1, cfg.mc_rollouts);
  QFeatureVector q;
  q.gamma = cfg.gamma;
  q.origin = origin;
  q.candidate = candidate;
  q.values = g.node(candidate).feature;

  std::vector<double> acc(q.values.size(), 0.0);
  bool any = false;
  for (int r = 0; r < n_rollouts; ++r) {
    std::vector<int> seq = simulate_rollout(g, origin, candidate, cfg.mode, rng);
    for (size_t k = 2; k < seq.size(); ++k) {
      double w = std::pow(cfg.gamma, static_cast<double>(k - 1));
      if (w == 0.0) break;
      any = true;
      const std::vector<double>& r_feat = g.node(seq[k]).feature;
      for (size_t i = 0; i < acc.size(); ++i) acc[i] += w * r_feat[i];
    }
  }
  if (any)
    for (size_t i = 0; i < q.values.size(); ++i)
      q.values[i] += acc[i] / static_cast<double>(n_rollouts);
  return q;
}

struct TrainingSample {
  int world = 0;  // index into the world list the set was built from
  PartialTrajectory trajectory;
  int candidate = 0;
  double gamma = 0.0;
  std::vector<double> target;
};

// One sample: uniform world, uniform start, self-avoiding walk of length
// ~ Uniform[1, max_traj_len], then a uniform unvisited neighbor of the tail
// as the candidate. Dead ends resample the whole draw. The target is the
// exact oracle for shortest modes and the Monte-Carlo estimate otherwise.
inline std::vector<TrainingSample> build_training_set(const std::vector<NavGraph>& worlds,
                                                      int n_samples, const QOracleConfig& cfg,
                                                      int max_traj_len, std::uint64_t seed,
                                                      int workers = 1) {
  validate(cfg);
  if (worlds.empty()) throw std::invalid_argument("build_training_set needs at least one world");
  if (max_traj_len < 1) throw std::invalid_argument("max_traj_len must be >= 1");
  constexpr int kMaxAttempts = 100;

  std::vector<TrainingSample> samples(static_cast<size_t>(n_samples));
  parallel_for(static_cast<size_t>(n_samples), workers, [&](size_t i) {
    SplitMix64 rng(derive_seed(seed, "sample", i));
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      int w = static_cast<int>(rng.below(worlds.size()));
      const NavGraph& g = worlds[static_cast<size_t>(w)];
      int target_len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_traj_len)));

      PartialTrajectory traj;
      traj.node_ids.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(g.size()))));
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

      TrainingSample& s = samples[i];
      s.world = w;
      s.trajectory = std::move(traj);
      s.candidate = cand;
      s.gamma = cfg.gamma;
      if (is_shortest_mode(cfg.mode))
        s.target = gt_qfeature(g, s.trajectory.tail(), cand, cfg).values;
      else
        s.target = mc_qfeature(g, s.trajectory.tail(), cand, cfg, rng).values;
      return;
    }
    throw RetriesExhausted("no valid trajectory/candidate draw after " +
                           std::to_string(kMaxAttempts) + " attempts (sample " +
                           std::to_string(i) + ")");
  });
  return samples;
}

// JSON Lines, one sample per line:
// {"world":"<file>","traj":[ids],"cand":id,"gamma":g,"q":[d floats]}
inline std::string serialize_training_set(const std::vector<TrainingSample>& samples,
                                          const std::vector<std::string>& world_names) {
  std::string out;
  for (const TrainingSample& s : samples) {
    out += "{\"world\":\"" + json_escape(world_names.at(static_cast<size_t>(s.world))) +
           "\",\"traj\":" + int_array_json(s.trajectory.node_ids) +
           ",\"cand\":" + std::to_string(s.candidate) + ",\"gamma\":" + fmt_double(s.gamma) +
           ",\"q\":" + double_array_json(s.target) + "}\n";
  }
  return out;
}

inline void save_training_set(const std::string& path, const std::vector<TrainingSample>& samples,
                              const std::vector<std::string>& world_names) {
  atomic_write_file(path, serialize_training_set(samples, world_names));
}

inline std::vector<TrainingSample> load_training_set(const std::string& path,
                                                     const std::vector<std::string>& world_names) {
  std::istringstream in(read_file(path));
  std::vector<TrainingSample> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.contains("world") || !j.contains("traj") || !j.contains("cand") ||
        !j.contains("gamma") || !j.contains("q"))
      throw SchemaError(path + ":" + std::to_string(lineno) +
                        ": sample needs keys world, traj, cand, gamma, q");
    TrainingSample s;
    std::string name = j["world"].get<std::string>();
    auto it = std::find(world_names.begin(), world_names.end(), name);
    if (it == world_names.end())
      throw SchemaError(path + ":" + std::to_string(lineno) + ": unknown world " + name);
    s.world = static_cast<int>(it - world_names.begin());
    s.trajectory.node_ids = j["traj"].get<std::vector<int>>();
    s.candidate = j["cand"].get<int>();
    s.gamma = j["gamma"].get<double>();
    s.target = j["q"].get<std::vector<double>>();
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace qnav
