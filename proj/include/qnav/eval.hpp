#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qnav/agent.hpp"
#include "qnav/json_io.hpp"
#include "qnav/navgraph.hpp"
#include "qnav/parallel.hpp"
#include "qnav/qmodel.hpp"
#include "qnav/qoracle.hpp"
#include "qnav/worldgen.hpp"

namespace qnav {

// Persisted episode record; everything the metrics need, nothing else.
struct EpisodeLog {
  std::string world;
  std::string agent;
  int goal = 0;
  std::vector<int> path;
  std::vector<int> chosen;
  std::vector<int> expert;
  std::string stop;
};

inline bool success(const NavGraph& g, const std::vector<int>& path, int goal_node,
                    int radius_hops) {
  if (path.empty()) return false;
  if (radius_hops == 0) return path.back() == goal_node;
  return hop_distances(g, goal_node)[static_cast<size_t>(path.back())] <= radius_hops;
}

inline bool oracle_success(const NavGraph& g, const std::vector<int>& path, int goal_node,
                           int radius_hops) {
  if (radius_hops == 0)
    return std::find(path.begin(), path.end(), goal_node) != path.end();
  const std::vector<int> hops = hop_distances(g, goal_node);
  return std::any_of(path.begin(), path.end(),
                     [&](int v) { return hops[static_cast<size_t>(v)] <= radius_hops; });
}

inline double path_metric_length(const NavGraph& g, const std::vector<int>& path) {
  double len = 0.0;
  for (size_t i = 1; i < path.size(); ++i) len += g.edge_length(path[i - 1], path[i]);
  return len;
}

// Standard SPL contribution: S * l_star / max(l, l_star).
inline double spl_contribution(bool succeeded, double traversed, double shortest) {
  if (!succeeded) return 0.0;
  double denom = std::max(traversed, shortest);
  if (denom <= 0.0) return 1.0;  // start == goal degenerate case
  return shortest / denom;
}

struct FirstErrorHistogram {
  std::vector<long> bins;  // index of the first decision deviating from the expert
  long identical = 0;

  long total() const {
    long t = identical;
    for (long b : bins) t += b;
    return t;
  }
};

// Index of the first chosen frontier that leaves the expert path; episodes
// reproducing the expert decision-for-decision land in the identical bucket.
inline void record_first_error(FirstErrorHistogram& hist, const std::vector<int>& chosen,
                               const std::vector<int>& expert) {
  const size_t expert_decisions = expert.empty() ? 0 : expert.size() - 1;
  size_t i = 0;
  while (i < chosen.size() && i < expert_decisions &&
         chosen[i] == expert[i + 1])
    ++i;
  if (i == chosen.size() && i == expert_decisions) {
    ++hist.identical;
    return;
  }
  if (hist.bins.size() <= i) hist.bins.resize(i + 1, 0);
  ++hist.bins[i];
}

struct MetricsReport {
  std::string agent;
  double gamma = 0.0;
  std::string mode;
  int n = 0;
  double sr = 0.0;
  double osr = 0.0;
  double spl = 0.0;
  double mean_len = 0.0;
  FirstErrorHistogram first_error;
};

// Pure function of the logs (plus the graphs they reference); recomputing
// from persisted JSONL reproduces the report exactly.
inline MetricsReport compute_metrics(const std::map<std::string, const NavGraph*>& worlds,
                                     const std::vector<EpisodeLog>& logs, const std::string& agent,
                                     double gamma, const std::string& mode, int radius_hops = 0) {
  MetricsReport r;
  r.agent = agent;
  r.gamma = gamma;
  r.mode = mode;
  double sr_sum = 0.0, osr_sum = 0.0, spl_sum = 0.0, len_sum = 0.0;
  for (const EpisodeLog& log : logs) {
    if (log.agent != agent) continue;
    const NavGraph& g = *worlds.at(log.world);
    ++r.n;
    bool s = success(g, log.path, log.goal, radius_hops);
    sr_sum += s ? 1.0 : 0.0;
    osr_sum += oracle_success(g, log.path, log.goal, radius_hops) ? 1.0 : 0.0;
    double traversed = path_metric_length(g, log.path);
    double shortest = metric_distance(g, log.path.front(), log.goal);
    spl_sum += spl_contribution(s, traversed, shortest);
    len_sum += traversed;
    record_first_error(r.first_error, log.chosen, log.expert);
  }
  if (r.n > 0) {
    r.sr = sr_sum / r.n;
    r.osr = osr_sum / r.n;
    r.spl = spl_sum / r.n;
    r.mean_len = len_sum / r.n;
  }
  return r;
}

inline std::string fmt_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string report_csv(const std::vector<MetricsReport>& reports) {
  std::string out = "agent,gamma,mode,n,SR,OSR,SPL,mean_len\n";
  for (const MetricsReport& r : reports)
    out += r.agent + "," + fmt_metric(r.gamma) + "," + r.mode + "," + std::to_string(r.n) + "," +
           fmt_metric(r.sr) + "," + fmt_metric(r.osr) + "," + fmt_metric(r.spl) + "," +
           fmt_metric(r.mean_len) + "\n";
  return out;
}

inline std::string histogram_csv(const FirstErrorHistogram& hist) {
  std::string out = "bin,count\n";
  for (size_t i = 0; i < hist.bins.size(); ++i)
    out += std::to_string(i) + "," + std::to_string(hist.bins[i]) + "\n";
  out += "identical," + std::to_string(hist.identical) + "\n";
  return out;
}

inline std::string serialize_episode_logs(const std::vector<EpisodeLog>& logs) {
  std::string out;
  for (const EpisodeLog& e : logs) {
    out += "{\"world\":\"" + json_escape(e.world) + "\",\"goal\":" + std::to_string(e.goal) +
           ",\"agent\":\"" + json_escape(e.agent) + "\",\"path\":" + int_array_json(e.path) +
           ",\"frontchoices\":" + int_array_json(e.chosen) + ",\"stop\":\"" + e.stop +
           "\",\"expert\":" + int_array_json(e.expert) + "}\n";
  }
  return out;
}

inline std::vector<EpisodeLog> load_episode_logs(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<EpisodeLog> logs;
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
    EpisodeLog e;
    e.world = j.at("world").get<std::string>();
    e.goal = j.at("goal").get<int>();
    e.agent = j.at("agent").get<std::string>();
    e.path = j.at("path").get<std::vector<int>>();
    e.chosen = j.at("frontchoices").get<std::vector<int>>();
    e.stop = j.at("stop").get<std::string>();
    e.expert = j.at("expert").get<std::vector<int>>();
    logs.push_back(std::move(e));
  }
  return logs;
}

// ---- benchmark pipeline -------------------------------------------------

struct BenchmarkConfig {
  WorldConfig world;  // per-world seeds are derived from `seed`
  int n_worlds = 10;
  int n_val_worlds = 2;  // trailing worlds held out from all training
  int q_samples = 5000;
  int max_traj_len = 8;
  QOracleConfig oracle;
  TrainConfig q_train;
  int s2_samples = 10000;
  TrainConfig s2_train;
  double goal_noise_sigma = 0.05;
  int episodes = 200;
  int min_goal_hops = 2;
  int success_radius_hops = 0;
  ScoreWeights weights;
  double stop_tau = 0.0;
  S2Head::Kind stop_head_kind = S2Head::Kind::oracle;  // oracle stop for every agent
  int budget_override = 0;  // 0: hop diameter of the episode's world
  std::vector<AgentKind> agents = {AgentKind::random_frontier, AgentKind::history_only,
                                   AgentKind::foresighted_gt_q,
                                   AgentKind::foresighted_learned_q, AgentKind::pseudo_expert};
  std::uint64_t seed = 1;
  int workers = 1;
};

inline BenchmarkConfig default_benchmark(std::uint64_t seed) {
  BenchmarkConfig cfg;
  cfg.seed = seed;
  cfg.world.kind = WorldKind::grid_rooms;
  cfg.world.room_rows = 3;
  cfg.world.room_cols = 3;
  cfg.world.room_size = 2;
  cfg.world.feature_dim = 8;
  cfg.world.n_categories = 8;
  cfg.world.noise_sigma = 0.05;
  cfg.q_train.epochs = 30;
  cfg.q_train.hidden = {128};
  cfg.q_train.learning_rate = 3e-3;
  cfg.s2_train.epochs = 30;
  cfg.s2_train.hidden = {64};
  cfg.s2_train.learning_rate = 3e-3;
  return cfg;
}

inline std::string world_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "world_%03d.json", index);
  return buf;
}

struct BenchmarkArtifacts {
  std::vector<NavGraph> worlds;
  std::vector<std::string> world_names;
  std::vector<int> train_world_ids;
  std::vector<int> val_world_ids;
  std::vector<TrainingSample> qdata;
  TrainResult qmodel;
  TrainResult s2_gt;
  TrainResult s2_learned;
  std::vector<EpisodeLog> logs;
  std::vector<MetricsReport> reports;  // one per agent, in cfg.agents order
};

inline std::vector<NavGraph> generate_worlds(const BenchmarkConfig& cfg) {
  std::vector<NavGraph> worlds;
  for (int i = 0; i < cfg.n_worlds; ++i) {
    WorldConfig wc = cfg.world;
    wc.seed = derive_seed(cfg.seed, "world", static_cast<std::uint64_t>(i));
    worlds.push_back(generate_world(wc));
  }
  return worlds;
}

struct SuiteModels {
  const RegressorParams* qmodel = nullptr;
  const RegressorParams* s2_gt = nullptr;
  const RegressorParams* s2_learned = nullptr;
};

// Seeded episode suite over a fixed world set: every agent sees the same
// episodes (same starts, goals and goal features). Models are taken as-is.
inline std::vector<EpisodeLog> run_episode_suite(const BenchmarkConfig& cfg,
                                                 const std::vector<NavGraph>& worlds,
                                                 const std::vector<std::string>& world_names,
                                                 const SuiteModels& models) {
  std::vector<DistanceCache> caches;
  caches.reserve(worlds.size());
  for (const NavGraph& g : worlds) caches.push_back(DistanceCache::build(g));
  const int n_worlds = static_cast<int>(worlds.size());

  struct EpisodeSpec {
    int world;
    Environment env;
  };
  std::vector<EpisodeSpec> specs;
  for (int e = 0; e < cfg.episodes; ++e) {
    int w = e % n_worlds;
    const NavGraph& g = worlds[static_cast<size_t>(w)];
    SplitMix64 rng(derive_seed(cfg.seed, "episode", static_cast<std::uint64_t>(e)));
    int start = 0, goal = 0;
    bool ok = false;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      start = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.size())));
      goal = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.size())));
      if (caches[static_cast<size_t>(w)].hops[static_cast<size_t>(start)][static_cast<size_t>(goal)] >=
          cfg.min_goal_hops) {
        ok = true;
        break;
      }
    }
    if (!ok) throw RetriesExhausted("cannot draw start/goal at min hop distance");
    GoalSpec goal_spec;
    goal_spec.goal_node = goal;
    goal_spec.success_radius_hops = cfg.success_radius_hops;
    goal_spec.goal_feature = make_goal_feature(g, goal, cfg.goal_noise_sigma, rng);
    specs.push_back({w, make_environment(g, caches[static_cast<size_t>(w)], start,
                                         std::move(goal_spec))});
  }

  std::vector<EpisodeLog> logs;
  for (AgentKind kind : cfg.agents) {
    AgentConfig acfg;
    acfg.kind = kind;
    acfg.weights = cfg.weights;
    acfg.oracle = cfg.oracle;
    acfg.stop_tau = cfg.stop_tau;
    acfg.mc_seed = derive_seed(cfg.seed, "mc-channel");
    if (kind == AgentKind::foresighted_learned_q) {
      if (!models.qmodel || !models.s2_learned)
        throw std::invalid_argument("learnedq agent needs qmodel and s2-learned parameters");
      acfg.qmodel = models.qmodel;
      acfg.score_head = S2Head{S2Head::Kind::learned, models.s2_learned, false, 5};
    } else if (kind == AgentKind::foresighted_gt_q) {
      if (!models.s2_gt)
        throw std::invalid_argument("gtq agent needs s2-gt parameters");
      acfg.score_head = S2Head{S2Head::Kind::learned, models.s2_gt, false, 5};
    }
    acfg.stop_head = S2Head{};  // oracle stop unless configured otherwise
    if (cfg.stop_head_kind == S2Head::Kind::learned && agent_uses_q(kind))
      acfg.stop_head = acfg.score_head;
    std::vector<EpisodeLog> agent_logs(specs.size());
    parallel_for(specs.size(), cfg.workers, [&](size_t e) {
      const EpisodeSpec& spec = specs[e];
      AgentConfig ecfg = acfg;
      ecfg.budget = cfg.budget_override > 0
                        ? cfg.budget_override
                        : caches[static_cast<size_t>(spec.world)].hop_diameter();
      SplitMix64 episode_rng(
          derive_seed(cfg.seed, "rng-" + to_string(kind), static_cast<std::uint64_t>(e)));
      EpisodeResult res = run_episode(spec.env, ecfg, episode_rng);
      EpisodeLog log;
      log.world = world_names[static_cast<size_t>(spec.world)];
      log.agent = to_string(kind);
      log.goal = spec.env.goal.goal_node;
      log.path = res.path;
      log.chosen = res.chosen_frontiers;
      log.expert = res.expert_path;
      log.stop = to_string(res.stop);
      agent_logs[e] = std::move(log);
    });
    logs.insert(logs.end(), agent_logs.begin(), agent_logs.end());
  }
  return logs;
}

inline std::vector<MetricsReport> reports_from_logs(const BenchmarkConfig& cfg,
                                                    const std::vector<NavGraph>& worlds,
                                                    const std::vector<std::string>& world_names,
                                                    const std::vector<EpisodeLog>& logs) {
  std::map<std::string, const NavGraph*> by_name;
  for (size_t i = 0; i < worlds.size(); ++i) by_name[world_names[i]] = &worlds[i];
  std::vector<MetricsReport> reports;
  for (AgentKind kind : cfg.agents)
    reports.push_back(compute_metrics(by_name, logs, to_string(kind), cfg.oracle.gamma,
                                      to_string(cfg.oracle.mode), cfg.success_radius_hops));
  return reports;
}

// gen-worlds -> build-qdata -> train-qmodel -> train-s2 -> run episodes ->
// metrics, all derived from one master seed.
inline BenchmarkArtifacts run_benchmark(const BenchmarkConfig& cfg) {
  BenchmarkArtifacts art;
  art.worlds = generate_worlds(cfg);
  for (int i = 0; i < cfg.n_worlds; ++i) {
    art.world_names.push_back(world_file_name(i));
    if (i < cfg.n_worlds - cfg.n_val_worlds)
      art.train_world_ids.push_back(i);
    else
      art.val_world_ids.push_back(i);
  }

  const bool needs_learned = std::count(cfg.agents.begin(), cfg.agents.end(),
                                        AgentKind::foresighted_learned_q) > 0;
  const bool needs_gt_head = std::count(cfg.agents.begin(), cfg.agents.end(),
                                        AgentKind::foresighted_gt_q) > 0;
  SuiteModels models;
  if (needs_learned || needs_gt_head) {
    art.qdata = build_training_set(art.worlds, cfg.q_samples, cfg.oracle, cfg.max_traj_len,
                                   derive_seed(cfg.seed, "qdata"), cfg.workers);
    Dataset train_set = encode_dataset(art.worlds, art.qdata, &art.train_world_ids);
    Dataset val_set = encode_dataset(art.worlds, art.qdata, &art.val_world_ids);
    TrainConfig q_train = cfg.q_train;
    q_train.seed = derive_seed(cfg.seed, "train-qmodel");
    art.qmodel = train(train_set, val_set, q_train);

    S2TrainOptions s2opt;
    s2opt.oracle = cfg.oracle;
    s2opt.n_samples = cfg.s2_samples;
    s2opt.max_traj_len = cfg.max_traj_len;
    s2opt.min_goal_hops = cfg.min_goal_hops;
    s2opt.goal_noise_sigma = cfg.goal_noise_sigma;
    s2opt.val_worlds = art.val_world_ids;
    s2opt.train = cfg.s2_train;
    if (needs_gt_head) {
      S2TrainOptions gt_opt = s2opt;
      gt_opt.qsource = QSource::ground_truth;
      gt_opt.seed = derive_seed(cfg.seed, "train-s2-gt");
      gt_opt.train.seed = gt_opt.seed;
      art.s2_gt = train_s2_head(art.worlds, gt_opt);
      models.s2_gt = &art.s2_gt.params;
    }
    if (needs_learned) {
      S2TrainOptions ln_opt = s2opt;
      ln_opt.qsource = QSource::learned;
      ln_opt.qmodel = &art.qmodel.params;
      ln_opt.seed = derive_seed(cfg.seed, "train-s2-learned");
      ln_opt.train.seed = ln_opt.seed;
      art.s2_learned = train_s2_head(art.worlds, ln_opt);
      models.s2_learned = &art.s2_learned.params;
    }
    models.qmodel = &art.qmodel.params;
  }

  art.logs = run_episode_suite(cfg, art.worlds, art.world_names, models);
  art.reports = reports_from_logs(cfg, art.worlds, art.world_names, art.logs);
  return art;
}

// Full pipeline per gamma; the sweep grid from the decay-ratio study is
// {0, 0.3, 0.5, 0.7}.
inline std::vector<std::pair<double, std::vector<MetricsReport>>> ablate_gamma(
    const BenchmarkConfig& base, const std::vector<double>& gammas) {
  if (gammas.empty()) throw std::invalid_argument("gamma list must not be empty");
  std::vector<std::pair<double, std::vector<MetricsReport>>> table;
  for (double gamma : gammas) {
    BenchmarkConfig cfg = base;
    cfg.oracle.gamma = gamma;
    table.emplace_back(gamma, run_benchmark(cfg).reports);
  }
  return table;
}

// Full pipeline per rollout policy mode; uniform-random targets fall back to
// the Monte-Carlo estimator.
inline std::vector<std::pair<RolloutMode, std::vector<MetricsReport>>> ablate_policy(
    const BenchmarkConfig& base, const std::vector<RolloutMode>& modes) {
  if (modes.empty()) throw std::invalid_argument("mode list must not be empty");
  std::vector<std::pair<RolloutMode, std::vector<MetricsReport>>> table;
  for (RolloutMode mode : modes) {
    BenchmarkConfig cfg = base;
    cfg.oracle.mode = mode;
    table.emplace_back(mode, run_benchmark(cfg).reports);
  }
  return table;
}

}  // namespace qnav
