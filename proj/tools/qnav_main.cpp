// Command-line front end for the navigation-Q toolkit: world generation,
// Q-feature dataset building, model training, benchmarks and ablations.
// Every stage takes the master --seed and derives its own stream from it, so
// a whole pipeline is reproducible byte-for-byte from one number.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qnav/agent.hpp"
#include "qnav/eval.hpp"
#include "qnav/json_io.hpp"
#include "qnav/navgraph.hpp"
#include "qnav/qmodel.hpp"
#include "qnav/qoracle.hpp"
#include "qnav/rollout.hpp"
#include "qnav/worldgen.hpp"

namespace fs = std::filesystem;
using namespace qnav;

namespace {

// JSON flavor of CLI11's config-file support: a flat object of flag values,
// with nested objects acting as subcommand sections.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}\n";
  }
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::FileError(std::string("config parse: ") + e.what());
    }
    std::vector<CLI::ConfigItem> out;
    collect(j, {}, out);
    return out;
  }

 private:
  static void collect(const nlohmann::json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object()) {
        std::vector<std::string> deeper = parents;
        deeper.push_back(it.key());
        collect(*it, deeper, out);
      } else {
        CLI::ConfigItem item;
        item.parents = parents;
        item.name = it.key();
        if (it->is_string())
          item.inputs = {it->get<std::string>()};
        else if (it->is_boolean())
          item.inputs = {it->get<bool>() ? "true" : "false"};
        else
          item.inputs = {it->dump()};
        out.push_back(std::move(item));
      }
    }
  }
};

struct WorldSet {
  std::vector<std::string> names;
  std::vector<NavGraph> graphs;
};

std::string manifest_json(const WorldConfig& cfg, std::uint64_t seed,
                          const std::vector<std::string>& files,
                          const std::vector<std::uint64_t>& world_seeds) {
  std::string out = "{\"seed\":" + std::to_string(seed) + ",\"kind\":\"" + to_string(cfg.kind) +
                    "\",\"count\":" + std::to_string(files.size()) + ",\"config\":{";
  out += "\"feature_dim\":" + std::to_string(cfg.feature_dim);
  out += ",\"n_categories\":" + std::to_string(cfg.n_categories);
  out += ",\"noise_sigma\":" + fmt_double(cfg.noise_sigma);
  out += ",\"rows\":" + std::to_string(cfg.room_rows);
  out += ",\"cols\":" + std::to_string(cfg.room_cols);
  out += ",\"room_size\":" + std::to_string(cfg.room_size);
  out += ",\"doorway_fraction\":" + fmt_double(cfg.doorway_fraction);
  out += ",\"jitter\":" + fmt_double(cfg.jitter);
  out += ",\"n_nodes\":" + std::to_string(cfg.n_nodes);
  out += ",\"connect_radius\":" + fmt_double(cfg.connect_radius);
  out += "},\"worlds\":[";
  for (size_t i = 0; i < files.size(); ++i) {
    if (i) out += ",";
    out += "{\"file\":\"" + json_escape(files[i]) + "\",\"seed\":" + std::to_string(world_seeds[i]) +
           "}";
  }
  out += "]}\n";
  return out;
}

WorldSet load_world_set(const std::string& manifest_path) {
  nlohmann::json j = parse_json_file(manifest_path);
  if (!j.contains("worlds") || !j["worlds"].is_array())
    throw SchemaError(manifest_path + ": manifest needs a worlds array");
  fs::path dir = fs::path(manifest_path).parent_path();
  WorldSet set;
  for (const auto& wj : j["worlds"]) {
    std::string file = wj.at("file").get<std::string>();
    set.names.push_back(file);
    set.graphs.push_back(load_graph((dir / file).string()));
  }
  if (set.graphs.empty()) throw SchemaError(manifest_path + ": manifest lists no worlds");
  return set;
}

std::vector<int> trailing_val_worlds(size_t n_worlds, int n_val) {
  std::vector<int> ids;
  for (int i = static_cast<int>(n_worlds) - n_val; i < static_cast<int>(n_worlds); ++i)
    if (i >= 0) ids.push_back(i);
  return ids;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::string token;
  std::istringstream in(csv);
  while (std::getline(in, token, ','))
    if (!token.empty()) out.push_back(std::stod(token));
  return out;
}

std::vector<std::string> parse_string_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream in(csv);
  while (std::getline(in, token, ','))
    if (!token.empty()) out.push_back(token);
  return out;
}

// ---- gen-worlds -----------------------------------------------------------

struct GenWorldsArgs {
  std::string kind = "grid";
  int count = 10;
  std::uint64_t seed = 1;
  std::string out;
  WorldConfig world;
};

int cmd_gen_worlds(const GenWorldsArgs& args) {
  WorldConfig base = args.world;
  base.kind = parse_world_kind(args.kind);
  fs::create_directories(args.out);
  std::vector<std::string> files;
  std::vector<std::uint64_t> world_seeds;
  for (int i = 0; i < args.count; ++i) {
    WorldConfig cfg = base;
    cfg.seed = derive_seed(args.seed, "world", static_cast<std::uint64_t>(i));
    NavGraph g = generate_world(cfg);
    std::string file = world_file_name(i);
    save_graph(g, (fs::path(args.out) / file).string());
    files.push_back(file);
    world_seeds.push_back(cfg.seed);
  }
  atomic_write_file((fs::path(args.out) / "manifest.json").string(),
                    manifest_json(base, args.seed, files, world_seeds));
  std::cout << "wrote " << args.count << " worlds + manifest to " << args.out << "\n";
  return 0;
}

// ---- build-qdata ----------------------------------------------------------

struct BuildQDataArgs {
  std::string worlds;
  int n_samples = 5000;
  double gamma = 0.5;
  std::string mode = "shortest-canonical";
  int max_traj_len = 8;
  int mc_rollouts = 256;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out;
};

int cmd_build_qdata(const BuildQDataArgs& args) {
  WorldSet set = load_world_set(args.worlds);
  QOracleConfig oracle;
  oracle.gamma = args.gamma;
  oracle.mode = parse_rollout_mode(args.mode);
  oracle.mc_rollouts = args.mc_rollouts;
  auto samples = build_training_set(set.graphs, args.n_samples, oracle, args.max_traj_len,
                                    derive_seed(args.seed, "qdata"), args.workers);
  save_training_set(args.out, samples, set.names);
  double mean_len = 0.0;
  for (const TrainingSample& s : samples)
    mean_len += static_cast<double>(s.trajectory.node_ids.size());
  if (!samples.empty()) mean_len /= static_cast<double>(samples.size());
  std::string stats = "{\"n_samples\":" + std::to_string(samples.size()) +
                      ",\"mean_traj_len\":" + fmt_double(mean_len) + ",\"gamma\":" +
                      fmt_double(args.gamma) + ",\"mode\":\"" + to_string(oracle.mode) +
                      "\",\"seed\":" + std::to_string(args.seed) + "}\n";
  atomic_write_file(args.out + ".stats.json", stats);
  std::cout << samples.size() << " samples, mean |T| = " << fmt_metric(mean_len)
            << ", gamma = " << fmt_metric(args.gamma) << " -> " << args.out << "\n";
  return 0;
}

// ---- train-qmodel / train-s2 ----------------------------------------------

struct TrainCommonArgs {
  int epochs = 30;
  double lr = 3e-3;
  int batch = 64;
  std::string hidden = "64";
  std::string act = "tanh";
  std::string optimizer = "adam";
  double init_scale = 1.0;
};

TrainConfig make_train_config(const TrainCommonArgs& args, std::uint64_t stage_seed) {
  TrainConfig cfg;
  cfg.epochs = args.epochs;
  cfg.learning_rate = args.lr;
  cfg.batch_size = args.batch;
  cfg.hidden.clear();
  for (double h : parse_double_list(args.hidden)) cfg.hidden.push_back(static_cast<int>(h));
  cfg.act = parse_activation(args.act);
  if (args.optimizer == "adam")
    cfg.optimizer = TrainConfig::Optimizer::adam;
  else if (args.optimizer == "sgd")
    cfg.optimizer = TrainConfig::Optimizer::sgd;
  else
    throw std::invalid_argument("unknown optimizer: " + args.optimizer);
  cfg.init_scale = args.init_scale;
  cfg.seed = stage_seed;
  return cfg;
}

struct TrainQModelArgs {
  std::string data;
  std::string worlds;
  int val_worlds = 2;
  std::uint64_t seed = 1;
  std::string out;
  std::string loss_csv;
  TrainCommonArgs train;
};

int cmd_train_qmodel(const TrainQModelArgs& args) {
  WorldSet set = load_world_set(args.worlds);
  auto samples = load_training_set(args.data, set.names);
  std::vector<int> val_ids = trailing_val_worlds(set.graphs.size(), args.val_worlds);
  std::vector<int> train_ids;
  for (int i = 0; i < static_cast<int>(set.graphs.size()); ++i)
    if (std::find(val_ids.begin(), val_ids.end(), i) == val_ids.end()) train_ids.push_back(i);
  Dataset train_set = encode_dataset(set.graphs, samples, &train_ids);
  Dataset val_set = encode_dataset(set.graphs, samples, &val_ids);
  TrainResult res =
      train(train_set, val_set, make_train_config(args.train, derive_seed(args.seed, "train-qmodel")));
  save_params(res.params, args.out);
  if (!args.loss_csv.empty()) atomic_write_file(args.loss_csv, loss_curve_csv(res.curve));
  std::cout << "trained on " << train_set.size() << " samples, validated on " << val_set.size()
            << "; final train_mse = "
            << fmt_metric(res.curve.empty() ? 0.0 : res.curve.back().train_mse)
            << ", val_mse = " << fmt_metric(res.curve.empty() ? 0.0 : res.curve.back().val_mse)
            << " -> " << args.out << "\n";
  return 0;
}

struct TrainS2Args {
  std::string worlds;
  std::string qsource = "gt";  // "gt" or a qmodel params file
  int n_samples = 10000;
  double gamma = 0.5;
  std::string mode = "shortest-canonical";
  int mc_rollouts = 256;
  int max_traj_len = 8;
  int min_goal_hops = 2;
  double goal_noise = 0.05;
  bool classifier = false;
  int bins = 5;
  int val_worlds = 2;
  std::uint64_t seed = 1;
  std::string out;
  std::string loss_csv;
  TrainCommonArgs train;
};

int cmd_train_s2(const TrainS2Args& args) {
  WorldSet set = load_world_set(args.worlds);
  S2TrainOptions opt;
  RegressorParams qmodel;
  if (args.qsource == "gt") {
    opt.qsource = QSource::ground_truth;
  } else {
    opt.qsource = QSource::learned;
    qmodel = load_params(args.qsource);
    opt.qmodel = &qmodel;
  }
  opt.oracle.gamma = args.gamma;
  opt.oracle.mode = parse_rollout_mode(args.mode);
  opt.oracle.mc_rollouts = args.mc_rollouts;
  opt.n_samples = args.n_samples;
  opt.max_traj_len = args.max_traj_len;
  opt.min_goal_hops = args.min_goal_hops;
  opt.goal_noise_sigma = args.goal_noise;
  opt.classifier = args.classifier;
  opt.n_bins = args.bins;
  opt.val_worlds = trailing_val_worlds(set.graphs.size(), args.val_worlds);
  std::string stage = opt.qsource == QSource::ground_truth ? "train-s2-gt" : "train-s2-learned";
  opt.seed = derive_seed(args.seed, stage);
  opt.train = make_train_config(args.train, opt.seed);
  TrainResult res = train_s2_head(set.graphs, opt);
  save_params(res.params, args.out);
  if (!args.loss_csv.empty()) atomic_write_file(args.loss_csv, loss_curve_csv(res.curve));
  std::cout << "s2 head (" << to_string(opt.qsource) << " q-source) trained; final val_mse = "
            << fmt_metric(res.curve.empty() ? 0.0 : res.curve.back().val_mse) << " -> " << args.out
            << "\n";
  return 0;
}

// ---- run-bench --------------------------------------------------------------

struct RunBenchArgs {
  std::string worlds;
  std::string agents = "random,history,gtq,learnedq,expert";
  std::string qmodel;
  std::string s2_gt;
  std::string s2_learned;
  int episodes = 200;
  int min_goal_hops = 2;
  double goal_noise = 0.05;
  int radius = 0;
  double alpha = 1.0;
  double beta = 1.0;
  std::string fusion = "weighted-sum";
  double stop_tau = 0.0;
  std::string stop_head = "oracle";
  int budget = 0;
  double gamma = 0.5;
  std::string mode = "shortest-canonical";
  int mc_rollouts = 256;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out;
};

BenchmarkConfig bench_config_from_args(const RunBenchArgs& args, size_t n_worlds) {
  BenchmarkConfig cfg;
  cfg.agents.clear();
  for (const std::string& a : parse_string_list(args.agents))
    cfg.agents.push_back(parse_agent_kind(a));
  if (cfg.agents.empty()) throw std::invalid_argument("agent list must not be empty");
  cfg.n_worlds = static_cast<int>(n_worlds);
  cfg.oracle.gamma = args.gamma;
  cfg.oracle.mode = parse_rollout_mode(args.mode);
  cfg.oracle.mc_rollouts = args.mc_rollouts;
  cfg.episodes = args.episodes;
  cfg.min_goal_hops = args.min_goal_hops;
  cfg.goal_noise_sigma = args.goal_noise;
  cfg.success_radius_hops = args.radius;
  cfg.weights.alpha = args.alpha;
  cfg.weights.beta = args.beta;
  if (args.fusion == "weighted-sum")
    cfg.weights.fusion = ScoreWeights::Fusion::weighted_sum;
  else if (args.fusion == "softmax")
    cfg.weights.fusion = ScoreWeights::Fusion::softmax_normalized;
  else
    throw std::invalid_argument("unknown fusion: " + args.fusion);
  cfg.stop_tau = args.stop_tau;
  if (args.stop_head == "oracle")
    cfg.stop_head_kind = S2Head::Kind::oracle;
  else if (args.stop_head == "learned")
    cfg.stop_head_kind = S2Head::Kind::learned;
  else
    throw std::invalid_argument("unknown stop head: " + args.stop_head);
  cfg.budget_override = args.budget;
  cfg.seed = args.seed;
  cfg.workers = args.workers;
  return cfg;
}

int cmd_run_bench(const RunBenchArgs& args) {
  WorldSet set = load_world_set(args.worlds);
  BenchmarkConfig cfg = bench_config_from_args(args, set.graphs.size());

  RegressorParams qmodel, s2_gt, s2_learned;
  SuiteModels models;
  if (!args.qmodel.empty()) {
    qmodel = load_params(args.qmodel);
    models.qmodel = &qmodel;
  }
  if (!args.s2_gt.empty()) {
    s2_gt = load_params(args.s2_gt);
    models.s2_gt = &s2_gt;
  }
  if (!args.s2_learned.empty()) {
    s2_learned = load_params(args.s2_learned);
    models.s2_learned = &s2_learned;
  }

  std::vector<EpisodeLog> logs = run_episode_suite(cfg, set.graphs, set.names, models);
  std::vector<MetricsReport> reports = reports_from_logs(cfg, set.graphs, set.names, logs);

  fs::create_directories(args.out);
  atomic_write_file((fs::path(args.out) / "episodes.jsonl").string(),
                    serialize_episode_logs(logs));
  atomic_write_file((fs::path(args.out) / "report.csv").string(), report_csv(reports));
  for (const MetricsReport& r : reports)
    atomic_write_file((fs::path(args.out) / ("hist_" + r.agent + ".csv")).string(),
                      histogram_csv(r.first_error));
  std::string meta = "{\"seed\":" + std::to_string(args.seed) + ",\"episodes\":" +
                     std::to_string(args.episodes) + ",\"agents\":\"" + args.agents +
                     "\",\"gamma\":" + fmt_double(args.gamma) + ",\"mode\":\"" + args.mode +
                     "\",\"alpha\":" + fmt_double(args.alpha) + ",\"beta\":" +
                     fmt_double(args.beta) + ",\"stop_tau\":" + fmt_double(args.stop_tau) +
                     ",\"stop_head\":\"" + args.stop_head + "\",\"budget\":" +
                     std::to_string(args.budget) + ",\"min_goal_hops\":" +
                     std::to_string(args.min_goal_hops) + ",\"goal_noise\":" +
                     fmt_double(args.goal_noise) + ",\"radius\":" + std::to_string(args.radius) +
                     ",\"RGS\":\"N/A\",\"RGSPL\":\"N/A\"}\n";
  atomic_write_file((fs::path(args.out) / "bench_manifest.json").string(), meta);
  std::cout << report_csv(reports);
  std::cout << "RGS/RGSPL: N/A (no object grounding in these worlds)\n";
  return 0;
}

// ---- ablate -----------------------------------------------------------------

struct AblateArgs {
  std::string gammas;
  std::string modes;
  int worlds_count = 10;
  int val_worlds = 2;
  int q_samples = 5000;
  int s2_samples = 10000;
  int episodes = 200;
  int q_epochs = 30;
  int s2_epochs = 30;
  std::string agents = "random,history,gtq,learnedq,expert";
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out;
};

BenchmarkConfig ablate_base_config(const AblateArgs& args) {
  BenchmarkConfig cfg = default_benchmark(args.seed);
  cfg.n_worlds = args.worlds_count;
  cfg.n_val_worlds = args.val_worlds;
  cfg.q_samples = args.q_samples;
  cfg.s2_samples = args.s2_samples;
  cfg.episodes = args.episodes;
  cfg.q_train.epochs = args.q_epochs;
  cfg.s2_train.epochs = args.s2_epochs;
  cfg.workers = args.workers;
  cfg.agents.clear();
  for (const std::string& a : parse_string_list(args.agents))
    cfg.agents.push_back(parse_agent_kind(a));
  return cfg;
}

int cmd_ablate(const AblateArgs& args) {
  std::vector<double> gammas = parse_double_list(args.gammas);
  std::vector<std::string> mode_names = parse_string_list(args.modes);
  if (gammas.empty() && mode_names.empty())
    throw std::invalid_argument("ablate needs --gammas and/or --modes");
  BenchmarkConfig base = ablate_base_config(args);
  fs::create_directories(args.out);

  if (!gammas.empty()) {
    auto table = ablate_gamma(base, gammas);
    std::vector<MetricsReport> rows;
    for (const auto& [gamma, reports] : table)
      rows.insert(rows.end(), reports.begin(), reports.end());
    atomic_write_file((fs::path(args.out) / "ablate_gamma.csv").string(), report_csv(rows));
    std::cout << report_csv(rows);
    // Observed ordering of the learned-q agent over the sweep; reported, not
    // asserted.
    double best_gamma = gammas.front(), best_spl = -1.0;
    for (const auto& [gamma, reports] : table)
      for (const MetricsReport& r : reports)
        if (r.agent == "learnedq" && r.spl > best_spl) {
          best_spl = r.spl;
          best_gamma = gamma;
        }
    if (best_spl >= 0.0)
      std::cout << "best learnedq SPL at gamma = " << fmt_metric(best_gamma) << " (SPL "
                << fmt_metric(best_spl) << ")\n";
  }
  if (!mode_names.empty()) {
    std::vector<RolloutMode> modes;
    for (const std::string& m : mode_names) modes.push_back(parse_rollout_mode(m));
    auto table = ablate_policy(base, modes);
    std::vector<MetricsReport> rows;
    for (const auto& [mode, reports] : table)
      rows.insert(rows.end(), reports.begin(), reports.end());
    atomic_write_file((fs::path(args.out) / "ablate_policy.csv").string(), report_csv(rows));
    std::cout << report_csv(rows);
  }
  std::string meta = "{\"seed\":" + std::to_string(args.seed) + ",\"gammas\":\"" + args.gammas +
                     "\",\"modes\":\"" + args.modes + "\",\"episodes\":" +
                     std::to_string(args.episodes) + ",\"q_samples\":" +
                     std::to_string(args.q_samples) + ",\"s2_samples\":" +
                     std::to_string(args.s2_samples) + ",\"worlds\":" +
                     std::to_string(args.worlds_count) + "}\n";
  atomic_write_file((fs::path(args.out) / "ablate_manifest.json").string(), meta);
  return 0;
}

// ---- export-supports ---------------------------------------------------------

struct ExportSupportsArgs {
  std::string world;
  int origin = 0;
  double gamma = 0.5;
  std::string mode = "shortest-canonical";
  std::string out;
};

int cmd_export_supports(const ExportSupportsArgs& args) {
  NavGraph g = load_graph(args.world);
  auto supports = export_support_map(g, args.origin, parse_rollout_mode(args.mode), args.gamma);
  atomic_write_file(args.out, support_map_to_json(supports));
  std::cout << supports.size() << " candidate supports -> " << args.out << "\n";
  return 0;
}

// ---- verify -------------------------------------------------------------------

int cmd_verify(std::uint64_t seed) {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "ok   " : "FAIL ") << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  };

  std::vector<NavGraph> worlds;
  for (int i = 0; i < 6; ++i) {
    WorldConfig wc;
    wc.seed = derive_seed(seed, "verify-world", static_cast<std::uint64_t>(i));
    if (i % 2 == 0) {
      wc.kind = WorldKind::grid_rooms;
      wc.room_rows = 2;
      wc.room_cols = 3;
    } else {
      wc.kind = WorldKind::random_geometric;
      wc.n_nodes = 18;
      wc.connect_radius = 0.45;
      wc.feature_dim = 4;
      wc.n_categories = 3;
    }
    worlds.push_back(generate_world(wc));
  }

  {  // Graph invariants.
    bool ok = true;
    for (const NavGraph& g : worlds) {
      for (const Edge& e : g.edges())
        if (std::fabs(e.length - euclid(g.node(e.u).pos, g.node(e.v).pos)) > 1e-9) ok = false;
      for (int v = 0; v < g.size(); ++v) {
        const auto& nb = g.neighbors(v);
        for (size_t k = 1; k < nb.size(); ++k)
          if (nb[k - 1].id >= nb[k].id) ok = false;
      }
      for (int v = 0; v < g.size(); ++v) {
        auto hops = hop_distances(g, v);
        auto met = metric_distances(g, v);
        for (int u = 0; u < g.size(); ++u)
          if (hops[static_cast<size_t>(u)] >= 1 && met[static_cast<size_t>(u)] <= 0.0) ok = false;
      }
    }
    check("graph invariants (edge lengths, sorted adjacency, hop/metric)", ok);
  }
  {  // Uniqueness.
    bool clean = true;
    for (const NavGraph& g : worlds)
      for (int origin = 0; origin < g.size(); ++origin)
        if (!verify_uniqueness(g, origin, RolloutMode::shortest_canonical).empty()) clean = false;
    std::vector<NodeRecord> dn = {{0, {0, 0}, {0.0}, 0},
                                  {1, {1, 1}, {0.0}, 0},
                                  {2, {1, -1}, {0.0}, 0},
                                  {3, {2, 0}, {0.0}, 0}};
    NavGraph diamond = build_graph(dn, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
    auto violations = verify_uniqueness(diamond, 0, RolloutMode::shortest_all);
    bool diamond_ok = violations.size() == 1 && violations[0].node == 3 &&
                      verify_uniqueness(diamond, 0, RolloutMode::shortest_canonical).empty();
    check("ownership uniqueness (canonical clean, diamond flags shortest-all)",
          clean && diamond_ok);
  }
  {  // Mass conservation + step consistency + partition.
    bool ok = true;
    for (const NavGraph& g : worlds) {
      for (int origin = 0; origin < g.size(); ++origin) {
        auto hops = hop_distances(g, origin);
        std::map<int, int> owners;
        for (const Neighbor& nb : g.neighbors(origin)) {
          for (RolloutMode mode : {RolloutMode::shortest_canonical, RolloutMode::shortest_all}) {
            NodeStepDistribution d = node_step_distribution(g, origin, nb.id, mode);
            if (std::fabs(terminated_mass(g, d, mode) - 1.0) > 1e-12) ok = false;
            for (const auto& [node, sp] : d.entries)
              if (sp.t != hops[static_cast<size_t>(node)] - 1) ok = false;
            if (mode == RolloutMode::shortest_canonical)
              for (const auto& [node, sp] : d.entries) ++owners[node];
          }
        }
        for (int v = 0; v < g.size(); ++v) {
          int h = hops[static_cast<size_t>(v)];
          int own = owners.count(v) ? owners[v] : 0;
          if ((h >= 1 && own != 1) || (h == 0 && own != 0)) ok = false;
        }
      }
    }
    check("rollout mass conservation, step consistency, canonical partition", ok);
  }
  {  // Oracle equivalence.
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 8; ++s) {
      WorldConfig wc;
      wc.kind = WorldKind::random_geometric;
      wc.n_nodes = 14;
      wc.connect_radius = 0.5;
      wc.feature_dim = 3;
      wc.n_categories = 3;
      wc.seed = derive_seed(seed, "verify-oracle", s);
      NavGraph g = gen_random_geometric(wc);
      QOracleConfig cfg;
      for (int origin = 0; origin < g.size(); ++origin)
        for (const Neighbor& nb : g.neighbors(origin)) {
          auto a = gt_qfeature(g, origin, nb.id, cfg).values;
          auto b = bellman_qfeature(g, origin, nb.id, cfg).values;
          for (size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::fabs(a[k] - b[k]));
        }
    }
    check("recursive and distribution-sum Q-oracles agree", worst <= 1e-9,
          "max diff " + fmt_metric(worst));
  }
  {  // gamma = 0 reduction.
    bool ok = true;
    QOracleConfig cfg;
    cfg.gamma = 0.0;
    for (const NavGraph& g : worlds)
      for (const Neighbor& nb : g.neighbors(0))
        if (gt_qfeature(g, 0, nb.id, cfg).values != g.node(nb.id).feature) ok = false;
    check("gamma = 0 reduces Q to the candidate feature", ok);
  }
  {  // Monte-Carlo agreement.
    const NavGraph& g = worlds[1];
    int origin = 0;
    int candidate = g.neighbors(0).front().id;
    NodeStepDistribution exact =
        node_step_distribution(g, origin, candidate, RolloutMode::shortest_canonical);
    SplitMix64 rng(derive_seed(seed, "verify-mc"));
    std::map<int, long> counts;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      auto seq = simulate_rollout(g, origin, candidate, RolloutMode::shortest_canonical, rng);
      for (size_t k = 1; k < seq.size(); ++k) ++counts[seq[k]];
    }
    double worst = 0.0;
    for (const auto& [node, sp] : exact.entries) {
      double emp = counts.count(node) ? static_cast<double>(counts[node]) / n : 0.0;
      worst = std::max(worst, std::fabs(emp - sp.p));
    }
    check("simulated rollouts match the exact distribution", worst <= 0.02,
          "max err " + fmt_metric(worst));
  }
  {  // Gradient check.
    double worst = 0.0;
    SplitMix64 rng(derive_seed(seed, "verify-grad"));
    for (int rep = 0; rep < 20; ++rep) {
      RegressorParams p =
          init_params({5, 6, 2}, rep % 2 ? Activation::relu : Activation::tanh_fn,
                      derive_seed(seed, "verify-grad-p", static_cast<std::uint64_t>(rep)), 1.0);
      std::vector<double> x(5), y(2);
      for (double& v : x) v = rng.gaussian();
      for (double& v : y) v = rng.gaussian();
      worst = std::max(worst, grad_check(p, x, y));
    }
    check("analytic gradients match finite differences", worst <= 1e-4,
          "max rel err " + fmt_metric(worst));
  }
  {  // SPL fixtures.
    bool ok = spl_contribution(true, 4.0, 4.0) == 1.0 && spl_contribution(true, 8.0, 4.0) == 0.5 &&
              spl_contribution(false, 4.0, 4.0) == 0.0;
    check("SPL contribution fixtures", ok);
  }

  std::cout << (failures == 0 ? "all checks passed"
                              : std::to_string(failures) + " check(s) failed")
            << "\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"navigation Q-feature toolkit"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file with per-subcommand sections");

  GenWorldsArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-worlds", "generate synthetic worlds + manifest");
  gen_cmd->add_option("--kind", gen.kind, "grid | geometric");
  gen_cmd->add_option("--n", gen.count, "number of worlds");
  gen_cmd->add_option("--seed", gen.seed, "master seed");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--feature-dim", gen.world.feature_dim, "node feature dimension");
  gen_cmd->add_option("--categories", gen.world.n_categories, "category count");
  gen_cmd->add_option("--noise-sigma", gen.world.noise_sigma, "feature noise sigma");
  gen_cmd->add_option("--rows", gen.world.room_rows, "room rows (grid)");
  gen_cmd->add_option("--cols", gen.world.room_cols, "room cols (grid)");
  gen_cmd->add_option("--room-size", gen.world.room_size, "nodes per room side (grid)");
  gen_cmd->add_option("--doorway-frac", gen.world.doorway_fraction, "doorway fraction (grid)");
  gen_cmd->add_option("--jitter", gen.world.jitter, "position jitter (grid)");
  gen_cmd->add_option("--nodes", gen.world.n_nodes, "node count (geometric)");
  gen_cmd->add_option("--radius", gen.world.connect_radius, "connect radius (geometric)");

  BuildQDataArgs qd;
  CLI::App* qd_cmd = app.add_subcommand("build-qdata", "build the Q-feature training set");
  qd_cmd->add_option("--worlds", qd.worlds, "world manifest")->required();
  qd_cmd->add_option("--n-samples", qd.n_samples, "sample count");
  qd_cmd->add_option("--gamma", qd.gamma, "decay ratio");
  qd_cmd->add_option("--mode", qd.mode, "rollout policy mode");
  qd_cmd->add_option("--max-traj-len", qd.max_traj_len, "max trajectory length");
  qd_cmd->add_option("--mc-rollouts", qd.mc_rollouts, "rollouts for uniform-random targets");
  qd_cmd->add_option("--seed", qd.seed, "master seed");
  qd_cmd->add_option("--workers", qd.workers, "worker threads");
  qd_cmd->add_option("--out", qd.out, "output JSONL")->required();

  TrainQModelArgs tq;
  tq.train.hidden = "128";
  CLI::App* tq_cmd = app.add_subcommand("train-qmodel", "train the Q-feature regressor");
  tq_cmd->add_option("--data", tq.data, "dataset JSONL")->required();
  tq_cmd->add_option("--worlds", tq.worlds, "world manifest")->required();
  tq_cmd->add_option("--val-worlds", tq.val_worlds, "trailing worlds held out");
  tq_cmd->add_option("--epochs", tq.train.epochs, "epochs");
  tq_cmd->add_option("--lr", tq.train.lr, "learning rate");
  tq_cmd->add_option("--batch", tq.train.batch, "batch size");
  tq_cmd->add_option("--hidden", tq.train.hidden, "hidden sizes, comma separated");
  tq_cmd->add_option("--act", tq.train.act, "tanh | relu");
  tq_cmd->add_option("--optimizer", tq.train.optimizer, "adam | sgd");
  tq_cmd->add_option("--init-scale", tq.train.init_scale, "weight init scale");
  tq_cmd->add_option("--seed", tq.seed, "master seed");
  tq_cmd->add_option("--out", tq.out, "output params JSON")->required();
  tq_cmd->add_option("--loss-csv", tq.loss_csv, "loss curve CSV");

  TrainS2Args ts;
  CLI::App* ts_cmd = app.add_subcommand("train-s2", "train the remaining-distance head");
  ts_cmd->add_option("--worlds", ts.worlds, "world manifest")->required();
  ts_cmd->add_option("--qsource", ts.qsource, "'gt' or qmodel params file");
  ts_cmd->add_option("--n-samples", ts.n_samples, "sample count");
  ts_cmd->add_option("--gamma", ts.gamma, "decay ratio");
  ts_cmd->add_option("--mode", ts.mode, "rollout policy mode");
  ts_cmd->add_option("--mc-rollouts", ts.mc_rollouts, "rollouts for uniform-random q-source");
  ts_cmd->add_option("--max-traj-len", ts.max_traj_len, "max trajectory length");
  ts_cmd->add_option("--min-goal-hops", ts.min_goal_hops, "min start-goal hop distance");
  ts_cmd->add_option("--goal-noise", ts.goal_noise, "goal feature noise sigma");
  ts_cmd->add_flag("--classifier", ts.classifier, "5-bin classification head");
  ts_cmd->add_option("--bins", ts.bins, "bin count (classifier)");
  ts_cmd->add_option("--val-worlds", ts.val_worlds, "trailing worlds held out");
  ts_cmd->add_option("--epochs", ts.train.epochs, "epochs");
  ts_cmd->add_option("--lr", ts.train.lr, "learning rate");
  ts_cmd->add_option("--batch", ts.train.batch, "batch size");
  ts_cmd->add_option("--hidden", ts.train.hidden, "hidden sizes, comma separated");
  ts_cmd->add_option("--act", ts.train.act, "tanh | relu");
  ts_cmd->add_option("--optimizer", ts.train.optimizer, "adam | sgd");
  ts_cmd->add_option("--seed", ts.seed, "master seed");
  ts_cmd->add_option("--out", ts.out, "output params JSON")->required();
  ts_cmd->add_option("--loss-csv", ts.loss_csv, "loss curve CSV");

  RunBenchArgs rb;
  CLI::App* rb_cmd = app.add_subcommand("run-bench", "run the agent benchmark");
  rb_cmd->add_option("--worlds", rb.worlds, "world manifest")->required();
  rb_cmd->add_option("--agents", rb.agents, "comma separated agent kinds");
  rb_cmd->add_option("--qmodel", rb.qmodel, "qmodel params (learnedq)");
  rb_cmd->add_option("--s2-gt", rb.s2_gt, "s2 head params trained on GT q (gtq)");
  rb_cmd->add_option("--s2-learned", rb.s2_learned, "s2 head params trained on predicted q");
  rb_cmd->add_option("--episodes", rb.episodes, "episode count");
  rb_cmd->add_option("--min-goal-hops", rb.min_goal_hops, "min start-goal hop distance");
  rb_cmd->add_option("--goal-noise", rb.goal_noise, "goal feature noise sigma");
  rb_cmd->add_option("--radius", rb.radius, "success radius in hops");
  rb_cmd->add_option("--alpha", rb.alpha, "traversed-cost weight");
  rb_cmd->add_option("--beta", rb.beta, "distance-to-go weight");
  rb_cmd->add_option("--fusion", rb.fusion, "weighted-sum | softmax");
  rb_cmd->add_option("--stop-tau", rb.stop_tau, "stop threshold on s2");
  rb_cmd->add_option("--stop-head", rb.stop_head, "oracle | learned");
  rb_cmd->add_option("--budget", rb.budget, "decision budget (0 = world hop diameter)");
  rb_cmd->add_option("--gamma", rb.gamma, "decay ratio of the q channel");
  rb_cmd->add_option("--mode", rb.mode, "rollout policy mode of the q channel");
  rb_cmd->add_option("--mc-rollouts", rb.mc_rollouts, "rollouts for uniform-random q channel");
  rb_cmd->add_option("--seed", rb.seed, "master seed");
  rb_cmd->add_option("--workers", rb.workers, "worker threads");
  rb_cmd->add_option("--out", rb.out, "output directory")->required();

  AblateArgs ab;
  CLI::App* ab_cmd = app.add_subcommand("ablate", "full-pipeline sweeps (gamma, policy mode)");
  ab_cmd->add_option("--gammas", ab.gammas, "comma separated decay ratios");
  ab_cmd->add_option("--modes", ab.modes, "comma separated rollout modes");
  ab_cmd->add_option("--worlds-count", ab.worlds_count, "worlds per cell");
  ab_cmd->add_option("--val-worlds", ab.val_worlds, "trailing worlds held out");
  ab_cmd->add_option("--q-samples", ab.q_samples, "q-dataset size");
  ab_cmd->add_option("--s2-samples", ab.s2_samples, "s2-dataset size");
  ab_cmd->add_option("--episodes", ab.episodes, "episodes per cell");
  ab_cmd->add_option("--q-epochs", ab.q_epochs, "q-model epochs");
  ab_cmd->add_option("--s2-epochs", ab.s2_epochs, "s2 head epochs");
  ab_cmd->add_option("--agents", ab.agents, "comma separated agent kinds");
  ab_cmd->add_option("--seed", ab.seed, "master seed");
  ab_cmd->add_option("--workers", ab.workers, "worker threads");
  ab_cmd->add_option("--out", ab.out, "output directory")->required();

  ExportSupportsArgs ex;
  CLI::App* ex_cmd = app.add_subcommand("export-supports", "per-candidate support map JSON");
  ex_cmd->add_option("--world", ex.world, "graph JSON file")->required();
  ex_cmd->add_option("--origin", ex.origin, "origin node id");
  ex_cmd->add_option("--gamma", ex.gamma, "decay ratio for weights");
  ex_cmd->add_option("--mode", ex.mode, "rollout policy mode");
  ex_cmd->add_option("--out", ex.out, "output JSON")->required();

  std::uint64_t verify_seed = 1;
  CLI::App* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
  verify_cmd->add_option("--seed", verify_seed, "seed for generated fixtures");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen_cmd) return cmd_gen_worlds(gen);
    if (*qd_cmd) return cmd_build_qdata(qd);
    if (*tq_cmd) return cmd_train_qmodel(tq);
    if (*ts_cmd) return cmd_train_s2(ts);
    if (*rb_cmd) return cmd_run_bench(rb);
    if (*ab_cmd) return cmd_ablate(ab);
    if (*ex_cmd) return cmd_export_supports(ex);
    if (*verify_cmd) return cmd_verify(verify_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
