// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. argv[1] must point at the qnav CLI binary; the full-pipeline
// criteria run it exactly as a user would.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

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
using Clock = std::chrono::steady_clock;

namespace {

std::string g_cli;
fs::path g_scratch;
int g_failures = 0;

// Margins pinned from the pilot run of the default benchmark (seed 1):
// gtq SR 0.74 / SPL 0.57634 vs history SR 0.54 / SPL 0.374087.
constexpr double kPinnedSrMargin = 0.20;
constexpr double kPinnedSplMargin = 0.202253;
constexpr double kMarginTolerance = 0.02;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s [%2d] %s -- %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  std::string cmd = g_cli + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  std::array<char, 4096> buf;
  std::string out;
  while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  int status = pclose(pipe);
  if (output) *output = out;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

NavGraph seeded_geometric(int n, double radius, std::uint64_t seed, int dim = 4) {
  WorldConfig cfg;
  cfg.kind = WorldKind::random_geometric;
  cfg.n_nodes = n;
  cfg.connect_radius = radius;
  cfg.feature_dim = dim;
  cfg.n_categories = std::min(3, dim);
  cfg.noise_sigma = 0.1;
  cfg.seed = seed;
  return gen_random_geometric(cfg);
}

NavGraph seeded_grid(int rooms_r, int rooms_c, std::uint64_t seed) {
  WorldConfig cfg;
  cfg.room_rows = rooms_r;
  cfg.room_cols = rooms_c;
  cfg.seed = seed;
  return gen_grid_rooms(cfg);
}

NavGraph diamond_fixture() {
  std::vector<NodeRecord> nodes = {{0, {0.0, 0.0}, {1.0}, 0},
                                   {1, {1.0, 1.0}, {2.0}, 0},
                                   {2, {1.0, -1.0}, {3.0}, 0},
                                   {3, {2.0, 0.0}, {4.0}, 0}};
  return build_graph(nodes, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
}

// ---- criterion 1: the two Q-oracle routes agree -----------------------------

void criterion_1() {
  auto t0 = Clock::now();
  double worst = 0.0;
  long pairs = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    int n = 10 + static_cast<int>(s % 11);  // 10..20 nodes
    NavGraph g = seeded_geometric(n, 0.5, 1000 + s);
    for (RolloutMode mode : {RolloutMode::shortest_canonical, RolloutMode::shortest_all}) {
      QOracleConfig mode_cfg;
      mode_cfg.mode = mode;
      for (int origin = 0; origin < g.size(); ++origin) {
        for (const Neighbor& nb : g.neighbors(origin)) {
          auto a = gt_qfeature(g, origin, nb.id, mode_cfg).values;
          auto b = bellman_qfeature(g, origin, nb.id, mode_cfg).values;
          for (size_t k = 0; k < a.size(); ++k)
            worst = std::max(worst, std::fabs(a[k] - b[k]));
          ++pairs;
        }
      }
    }
  }
  double dt = seconds_since(t0);
  std::ostringstream detail;
  detail << "max |recursive - distribution-sum| = " << worst << " over " << pairs
         << " pairs (tol 1e-9), " << dt << " s (< 30 s)";
  report(1, "Q-oracle equivalence", worst <= 1e-9 && dt < 30.0, detail.str());
}

// ---- criterion 2: exact distribution vs Monte-Carlo -------------------------

void criterion_2() {
  auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    NavGraph g = seeded_geometric(12, 0.48, 2000 + s);
    SplitMix64 pick(derive_seed(42, "accept-pair", s));
    int origin = static_cast<int>(pick.below(static_cast<std::uint64_t>(g.size())));
    const auto& nbs = g.neighbors(origin);
    int candidate = nbs[pick.below(nbs.size())].id;
    for (RolloutMode mode : {RolloutMode::shortest_canonical, RolloutMode::shortest_all}) {
      NodeStepDistribution exact = node_step_distribution(g, origin, candidate, mode);
      std::map<int, long> counts;
      SplitMix64 rng(derive_seed(42, "accept-mc", s * 2 + (mode == RolloutMode::shortest_all)));
      const int n = 100000;
      for (int i = 0; i < n; ++i) {
        auto seq = simulate_rollout(g, origin, candidate, mode, rng);
        for (size_t k = 1; k < seq.size(); ++k) ++counts[seq[k]];
      }
      for (const auto& [node, sp] : exact.entries) {
        double emp = counts.count(node) ? static_cast<double>(counts[node]) / n : 0.0;
        worst = std::max(worst, std::fabs(emp - sp.p));
      }
      for (const auto& [node, c] : counts)
        if (!exact.entries.count(node)) worst = std::max(worst, static_cast<double>(c) / n);
    }
  }
  double dt = seconds_since(t0);
  std::ostringstream detail;
  detail << "max |empirical - exact| = " << worst << " at 1e5 rollouts (tol 0.01), " << dt
         << " s (< 60 s)";
  report(2, "node-step distribution vs Monte-Carlo", worst <= 0.01 && dt < 60.0, detail.str());
}

// ---- criterion 3: ownership uniqueness ---------------------------------------

void criterion_3() {
  auto t0 = Clock::now();
  long violations = 0;
  long origins = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    NavGraph g = s % 2 == 0 ? seeded_grid(2, 3, 3000 + s) : seeded_geometric(20, 0.42, 3000 + s);
    for (int origin = 0; origin < g.size(); ++origin) {
      violations += static_cast<long>(
          verify_uniqueness(g, origin, RolloutMode::shortest_canonical).size());
      ++origins;
    }
  }
  NavGraph diamond = diamond_fixture();
  auto all_mode = verify_uniqueness(diamond, 0, RolloutMode::shortest_all);
  bool diamond_ok = all_mode.size() == 1 && all_mode[0].node == 3 &&
                    all_mode[0].candidates == std::vector<int>{1, 2} &&
                    verify_uniqueness(diamond, 0, RolloutMode::shortest_canonical).empty();
  double dt = seconds_since(t0);
  std::ostringstream detail;
  detail << violations << " canonical violations over " << origins
         << " origins in 100 worlds; diamond shortest-all flags " << all_mode.size()
         << " node(s); " << dt << " s (< 60 s)";
  report(3, "ownership uniqueness theorem", violations == 0 && diamond_ok && dt < 60.0,
         detail.str());
}

// ---- criterion 4: gamma = 0 reduction ------------------------------------------

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

void criterion_4() {
  std::vector<NavGraph> fixtures;
  {
    std::vector<NodeRecord> line = {{0, {0.0, 0.0}, {1.0}, 0},
                                    {1, {1.0, 0.0}, {2.0}, 0},
                                    {2, {2.0, 0.0}, {3.0}, 0}};
    fixtures.push_back(build_graph(line, {{0, 1}, {1, 2}}));
    std::vector<NodeRecord> star = {{0, {0.0, 0.0}, {4.0}, 0},
                                    {1, {1.0, 0.0}, {5.0}, 0},
                                    {2, {-0.5, 0.9}, {6.0}, 0},
                                    {3, {-0.5, -0.9}, {7.0}, 0}};
    fixtures.push_back(build_graph(star, {{0, 1}, {0, 2}, {0, 3}}));
    fixtures.push_back(diamond_fixture());
  }
  for (std::uint64_t s = 0; s < 3; ++s) {
    fixtures.push_back(seeded_grid(2, 2, 4000 + s));
    fixtures.push_back(seeded_geometric(15, 0.45, 4000 + s));
  }
  long checked = 0, exact = 0;
  for (const NavGraph& g : fixtures) {
    for (RolloutMode mode : {RolloutMode::shortest_canonical, RolloutMode::shortest_all}) {
      QOracleConfig cfg;
      cfg.gamma = 0.0;
      cfg.mode = mode;
      for (int origin = 0; origin < g.size(); ++origin) {
        for (const Neighbor& nb : g.neighbors(origin)) {
          ++checked;
          if (bitwise_equal(gt_qfeature(g, origin, nb.id, cfg).values, g.node(nb.id).feature))
            ++exact;
        }
      }
    }
  }
  std::ostringstream detail;
  detail << exact << "/" << checked << " (origin, candidate) pairs bit-exact across "
         << fixtures.size() << " fixtures";
  report(4, "gamma = 0 reduces Q to R(candidate)", exact == checked, detail.str());
}

// ---- criterion 5: gradient correctness ------------------------------------------

void criterion_5() {
  auto t0 = Clock::now();
  double worst = 0.0;
  SplitMix64 rng(derive_seed(7, "accept-grad"));
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<int> dims = rep % 3 == 0   ? std::vector<int>{6, 8, 4}
                            : rep % 3 == 1 ? std::vector<int>{5, 10, 3}
                                           : std::vector<int>{4, 6, 6, 2};
    Activation act = rep % 2 == 0 ? Activation::tanh_fn : Activation::relu;
    RegressorParams p =
        init_params(dims, act, derive_seed(7, "accept-grad-p", static_cast<std::uint64_t>(rep)),
                    1.0);
    std::vector<double> x(static_cast<size_t>(dims.front()));
    std::vector<double> y(static_cast<size_t>(dims.back()));
    for (double& v : x) v = rng.gaussian();
    for (double& v : y) v = rng.gaussian();
    worst = std::max(worst, grad_check(p, x, y));
  }
  double dt = seconds_since(t0);
  std::ostringstream detail;
  detail << "max relative error = " << worst << " over 100 configurations (tol 1e-4), " << dt
         << " s (< 30 s)";
  report(5, "analytic gradients vs central differences", worst <= 1e-4 && dt < 30.0,
         detail.str());
}

// ---- criteria 6 + 7: pipeline determinism and GT-Q uplift -----------------------

struct ReportRow {
  std::string agent;
  double gamma = 0.0;
  std::string mode;
  int n = 0;
  double sr = 0.0, osr = 0.0, spl = 0.0, mean_len = 0.0;
};

std::vector<ReportRow> parse_report_csv(const std::string& text) {
  std::vector<ReportRow> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    ReportRow r;
    std::getline(ls, r.agent, ',');
    std::getline(ls, field, ',');
    r.gamma = std::stod(field);
    std::getline(ls, r.mode, ',');
    std::getline(ls, field, ',');
    r.n = std::stoi(field);
    std::getline(ls, field, ',');
    r.sr = std::stod(field);
    std::getline(ls, field, ',');
    r.osr = std::stod(field);
    std::getline(ls, field, ',');
    r.spl = std::stod(field);
    std::getline(ls, field, ',');
    r.mean_len = std::stod(field);
    rows.push_back(r);
  }
  return rows;
}

bool metric_sanity(const std::vector<ReportRow>& rows, std::string* why) {
  for (const ReportRow& r : rows) {
    if (!(r.spl >= 0.0 && r.spl <= r.sr + 1e-12 && r.sr <= r.osr + 1e-12 && r.osr <= 1.0)) {
      *why = "violated by agent " + r.agent + " at gamma " + fmt_metric(r.gamma);
      return false;
    }
  }
  return true;
}

bool run_pipeline(const fs::path& dir, std::string* fail_reason) {
  fs::create_directories(dir);
  std::string manifest = (dir / "worlds" / "manifest.json").string();
  struct Stage {
    std::string name;
    std::string args;
  };
  const std::vector<Stage> stages = {
      {"gen-worlds", "gen-worlds --n 10 --seed 1 --out " + (dir / "worlds").string()},
      {"build-qdata", "build-qdata --worlds " + manifest + " --n-samples 5000 --seed 1 --out " +
                          (dir / "qdata.jsonl").string()},
      {"train-qmodel", "train-qmodel --data " + (dir / "qdata.jsonl").string() + " --worlds " +
                           manifest + " --seed 1 --out " + (dir / "qmodel.json").string() +
                           " --loss-csv " + (dir / "qmodel_loss.csv").string()},
      {"train-s2-gt", "train-s2 --worlds " + manifest + " --qsource gt --seed 1 --out " +
                          (dir / "s2_gt.json").string() + " --loss-csv " +
                          (dir / "s2_gt_loss.csv").string()},
      {"train-s2-learned", "train-s2 --worlds " + manifest + " --qsource " +
                               (dir / "qmodel.json").string() + " --seed 1 --out " +
                               (dir / "s2_learned.json").string() + " --loss-csv " +
                               (dir / "s2_learned_loss.csv").string()},
      {"run-bench", "run-bench --worlds " + manifest + " --qmodel " +
                        (dir / "qmodel.json").string() + " --s2-gt " +
                        (dir / "s2_gt.json").string() + " --s2-learned " +
                        (dir / "s2_learned.json").string() + " --episodes 200 --seed 1 --out " +
                        (dir / "bench").string()},
  };
  for (const Stage& stage : stages) {
    std::string out;
    if (run_cli(stage.args, &out) != 0) {
      *fail_reason = stage.name + " failed: " + out;
      return false;
    }
  }
  return true;
}

std::vector<fs::path> pipeline_outputs(const fs::path& dir) {
  std::vector<fs::path> files;
  for (int i = 0; i < 10; ++i) files.push_back(dir / "worlds" / world_file_name(i));
  files.push_back(dir / "worlds" / "manifest.json");
  files.push_back(dir / "qdata.jsonl");
  files.push_back(dir / "qdata.jsonl.stats.json");
  files.push_back(dir / "qmodel.json");
  files.push_back(dir / "qmodel_loss.csv");
  files.push_back(dir / "s2_gt.json");
  files.push_back(dir / "s2_gt_loss.csv");
  files.push_back(dir / "s2_learned.json");
  files.push_back(dir / "s2_learned_loss.csv");
  files.push_back(dir / "bench" / "episodes.jsonl");
  files.push_back(dir / "bench" / "report.csv");
  for (const std::string a : {"random", "history", "gtq", "learnedq", "expert"})
    files.push_back(dir / "bench" / ("hist_" + a + ".csv"));
  return files;
}

std::vector<ReportRow> criteria_6_and_7() {
  auto t0 = Clock::now();
  fs::path run_a = g_scratch / "pipeline_a";
  fs::path run_b = g_scratch / "pipeline_b";
  std::string fail;
  if (!run_pipeline(run_a, &fail) || !run_pipeline(run_b, &fail)) {
    report(6, "pipeline determinism", false, fail);
    report(7, "GT-Q uplift over the history baseline", false, "pipeline did not complete");
    return {};
  }
  double dt = seconds_since(t0);
  size_t mismatched = 0;
  std::string first_mismatch;
  for (const fs::path& file_a : pipeline_outputs(run_a)) {
    fs::path file_b = run_b / fs::relative(file_a, run_a);
    if (!fs::exists(file_a) || !fs::exists(file_b) ||
        read_file(file_a.string()) != read_file(file_b.string())) {
      if (mismatched == 0) first_mismatch = file_a.string();
      ++mismatched;
    }
  }
  std::ostringstream d6;
  d6 << pipeline_outputs(run_a).size() << " artifacts byte-compared, " << mismatched
     << " mismatched";
  if (mismatched) d6 << " (first: " << first_mismatch << ")";
  d6 << ", two full runs in " << dt << " s (< 300 s)";
  report(6, "pipeline determinism", mismatched == 0 && dt < 300.0, d6.str());

  std::vector<ReportRow> rows =
      parse_report_csv(read_file((run_a / "bench" / "report.csv").string()));
  std::map<std::string, ReportRow> by_agent;
  for (const ReportRow& r : rows) by_agent[r.agent] = r;
  if (!by_agent.count("gtq") || !by_agent.count("history") || !by_agent.count("expert")) {
    report(7, "GT-Q uplift over the history baseline", false, "missing agent rows");
    return rows;
  }
  double sr_margin = by_agent["gtq"].sr - by_agent["history"].sr;
  double spl_margin = by_agent["gtq"].spl - by_agent["history"].spl;
  bool uplift = sr_margin > 0.0 && spl_margin > 0.0;
  bool pinned = std::fabs(sr_margin - kPinnedSrMargin) <= kMarginTolerance &&
                std::fabs(spl_margin - kPinnedSplMargin) <= kMarginTolerance;
  bool expert_perfect = by_agent["expert"].sr == 1.0;
  std::ostringstream d7;
  d7 << "SR margin " << sr_margin << " (pinned " << kPinnedSrMargin << " +-" << kMarginTolerance
     << "), SPL margin " << spl_margin << " (pinned " << kPinnedSplMargin << " +-"
     << kMarginTolerance << "), expert SR " << by_agent["expert"].sr << " at diameter budget";
  report(7, "GT-Q uplift over the history baseline", uplift && pinned && expert_perfect,
         d7.str());
  return rows;
}

// ---- criterion 8: generalization ordering -----------------------------------------

void criterion_8() {
  auto t0 = Clock::now();
  int ordered = 0;
  std::ostringstream pairs;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<NavGraph> train_worlds, val_worlds;
    for (std::uint64_t i = 0; i < 8; ++i)
      train_worlds.push_back(seeded_grid(3, 3, derive_seed(seed, "gen8-train", i)));
    for (std::uint64_t i = 0; i < 2; ++i)
      val_worlds.push_back(seeded_grid(3, 3, derive_seed(seed, "gen8-val", i)));
    QOracleConfig oracle;
    auto big = build_training_set(train_worlds, 10000, oracle, 8, derive_seed(seed, "big8"));
    auto small = build_training_set(train_worlds, 100, oracle, 8, derive_seed(seed, "small8"));
    auto val = build_training_set(val_worlds, 1500, oracle, 8, derive_seed(seed, "val8"));
    Dataset big_set = encode_dataset(train_worlds, big);
    Dataset small_set = encode_dataset(train_worlds, small);
    Dataset val_set = encode_dataset(val_worlds, val);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.hidden = {128};
    cfg.learning_rate = 3e-3;
    cfg.seed = derive_seed(seed, "train8");
    double mse_big = train(big_set, val_set, cfg).curve.back().val_mse;
    double mse_small = train(small_set, val_set, cfg).curve.back().val_mse;
    if (mse_big <= mse_small) ++ordered;
    pairs << (seed ? ", " : "") << mse_big << (mse_big <= mse_small ? " <= " : " > ")
          << mse_small;
  }
  double dt = seconds_since(t0);
  std::ostringstream detail;
  detail << ordered << "/5 seeds ordered (need >= 4): " << pairs.str() << "; " << dt << " s";
  report(8, "more random-path data generalizes better", ordered >= 4, detail.str());
}

// ---- criteria 9 + 10: metric sanity and the gamma sweep ----------------------------

void criteria_9_and_10(const std::vector<ReportRow>& bench_rows) {
  auto t0 = Clock::now();
  fs::path dir = g_scratch / "ablate";
  std::string out;
  int code = run_cli("ablate --gammas 0,0.3,0.5,0.7 --seed 1 --out " + dir.string(), &out);
  bool completed = code == 0 && fs::exists(dir / "ablate_gamma.csv");
  double dt = seconds_since(t0);

  std::vector<ReportRow> sweep_rows;
  std::vector<double> gammas_seen;
  bool grid_matches = false;
  bool zero_consistent = false;
  if (completed) {
    sweep_rows = parse_report_csv(read_file((dir / "ablate_gamma.csv").string()));
    for (const ReportRow& r : sweep_rows) gammas_seen.push_back(r.gamma);
    std::sort(gammas_seen.begin(), gammas_seen.end());
    gammas_seen.erase(std::unique(gammas_seen.begin(), gammas_seen.end()), gammas_seen.end());
    grid_matches = gammas_seen == std::vector<double>{0.0, 0.3, 0.5, 0.7};

    // gamma = 0 rows are backed by single-step targets: rebuild the gamma = 0
    // dataset on the pipeline worlds and check the degenerate form bit-exactly.
    fs::path worlds_dir = g_scratch / "pipeline_a" / "worlds";
    std::string zero_data = (g_scratch / "qdata_gamma0.jsonl").string();
    if (run_cli("build-qdata --worlds " + (worlds_dir / "manifest.json").string() +
                    " --n-samples 500 --gamma 0 --seed 1 --out " + zero_data,
                &out) == 0) {
      std::vector<std::string> names;
      std::vector<NavGraph> worlds;
      for (int i = 0; i < 10; ++i) {
        names.push_back(world_file_name(i));
        worlds.push_back(load_graph((worlds_dir / names.back()).string()));
      }
      auto samples = load_training_set(zero_data, names);
      zero_consistent = !samples.empty();
      for (const TrainingSample& s : samples)
        if (!bitwise_equal(s.target,
                           worlds[static_cast<size_t>(s.world)].node(s.candidate).feature))
          zero_consistent = false;
    }
  }

  // Criterion 9 covers every report produced during acceptance.
  std::string why;
  bool sane = metric_sanity(bench_rows, &why) && metric_sanity(sweep_rows, &why);
  bool fixtures = spl_contribution(true, 4.0, 4.0) == 1.0 &&
                  spl_contribution(true, 8.0, 4.0) == 0.5 &&
                  spl_contribution(false, 4.0, 4.0) == 0.0;
  std::ostringstream d9;
  d9 << (bench_rows.size() + sweep_rows.size())
     << " report rows satisfy 0 <= SPL <= SR <= OSR <= 1";
  if (!sane) d9 << " -- " << why;
  d9 << "; SPL fixtures 1.0/0.5/0.0 exact: " << (fixtures ? "yes" : "no");
  report(9, "metric sanity", sane && fixtures, d9.str());

  std::ostringstream d10;
  d10 << "sweep " << (completed ? "completed" : "failed") << " in " << dt << " s; gamma grid {";
  for (size_t i = 0; i < gammas_seen.size(); ++i) d10 << (i ? "," : "") << gammas_seen[i];
  d10 << "} matches {0,0.3,0.5,0.7}: " << (grid_matches ? "yes" : "no")
      << "; gamma=0 targets single-step: " << (zero_consistent ? "yes" : "no");
  // The observed ordering is reported, not asserted.
  if (completed) {
    double best_gamma = -1.0, best_spl = -1.0;
    for (const ReportRow& r : sweep_rows)
      if (r.agent == "learnedq" && r.spl > best_spl) {
        best_spl = r.spl;
        best_gamma = r.gamma;
      }
    d10 << "; observed best learnedq SPL at gamma " << best_gamma;
  }
  report(10, "gamma-sweep runner", completed && grid_matches && zero_consistent, d10.str());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path-to-qnav-cli>\n", argv[0]);
    return 2;
  }
  g_cli = argv[1];
  g_scratch = fs::temp_directory_path() / "qnav_acceptance";
  fs::remove_all(g_scratch);
  fs::create_directories(g_scratch);

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  std::vector<ReportRow> bench_rows = criteria_6_and_7();
  criterion_8();
  criteria_9_and_10(bench_rows);

  std::printf("%s\n", g_failures == 0 ? "acceptance: all criteria passed"
                                      : "acceptance: FAILURES PRESENT");
  return g_failures == 0 ? 0 : 1;
}
