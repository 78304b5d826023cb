// End-to-end tests of the qnav binary. The executable path is injected by the
// build as QNAV_CLI_PATH.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <gtest/gtest.h>
#include <string>

#include "qnav/eval.hpp"
#include "qnav/json_io.hpp"
#include "qnav/qoracle.hpp"
#include "qnav/worldgen.hpp"
#include "test_fixtures.hpp"

namespace fs = std::filesystem;
using namespace qnav;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  std::string cmd = std::string(QNAV_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  EXPECT_NE(pipe, nullptr);
  CliResult res;
  std::array<char, 4096> buf;
  while (fgets(buf.data(), buf.size(), pipe)) res.output += buf.data();
  int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "qnav_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

long count_lines(const std::string& text) {
  return std::count(text.begin(), text.end(), '\n');
}

TEST(CliGenWorlds, WritesWorldsAndManifestDeterministically) {
  fs::path a = fresh_dir("gen_a");
  fs::path b = fresh_dir("gen_b");
  std::string flags = "gen-worlds --kind grid --n 3 --seed 11 --rows 2 --cols 2 --out ";
  ASSERT_EQ(run_cli(flags + a.string()).exit_code, 0);
  ASSERT_EQ(run_cli(flags + b.string()).exit_code, 0);
  for (const std::string f : {"world_000.json", "world_001.json", "world_002.json",
                               "manifest.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  NavGraph g = load_graph((a / "world_000.json").string());
  EXPECT_EQ(g.size(), 16);
}

TEST(CliGenWorlds, InvalidKindIsUsageError) {
  fs::path dir = fresh_dir("gen_bad");
  CliResult res = run_cli("gen-worlds --kind voxel --out " + dir.string());
  EXPECT_NE(res.exit_code, 0);
  EXPECT_NE(res.output.find("voxel"), std::string::npos);
}

TEST(CliBuildQData, SamplesAreRevalidatableAndGammaZeroDegenerates) {
  fs::path dir = fresh_dir("qdata");
  ASSERT_EQ(run_cli("gen-worlds --kind grid --n 3 --rows 2 --cols 2 --seed 5 --out " +
                    (dir / "worlds").string())
                .exit_code,
            0);
  std::string manifest = (dir / "worlds" / "manifest.json").string();
  ASSERT_EQ(run_cli("build-qdata --worlds " + manifest + " --n-samples 120 --gamma 0.5 --seed 5 " +
                    "--out " + (dir / "d.jsonl").string())
                .exit_code,
            0);
  std::string text = slurp(dir / "d.jsonl");
  EXPECT_EQ(count_lines(text), 120);
  ASSERT_TRUE(fs::exists(dir / "d.jsonl.stats.json"));

  // Re-validate a subsample against the recursive oracle.
  std::vector<std::string> names{"world_000.json", "world_001.json", "world_002.json"};
  std::vector<NavGraph> worlds;
  for (const std::string& n : names) worlds.push_back(load_graph((dir / "worlds" / n).string()));
  auto samples = load_training_set((dir / "d.jsonl").string(), names);
  ASSERT_EQ(samples.size(), 120u);
  QOracleConfig oracle;
  for (size_t i = 0; i < samples.size(); i += 10) {
    const TrainingSample& s = samples[i];
    auto b = bellman_qfeature(worlds[static_cast<size_t>(s.world)], s.trajectory.tail(),
                              s.candidate, oracle);
    for (size_t k = 0; k < b.values.size(); ++k) ASSERT_NEAR(b.values[k], s.target[k], 1e-9);
  }

  // gamma = 0: every record's q equals the candidate feature.
  ASSERT_EQ(run_cli("build-qdata --worlds " + manifest + " --n-samples 60 --gamma 0 --seed 5 " +
                    "--out " + (dir / "d0.jsonl").string())
                .exit_code,
            0);
  auto zero = load_training_set((dir / "d0.jsonl").string(), names);
  for (const TrainingSample& s : zero)
    ASSERT_EQ(s.target, worlds[static_cast<size_t>(s.world)].node(s.candidate).feature);
}

TEST(CliBuildQData, MissingManifestFails) {
  CliResult res = run_cli("build-qdata --worlds /nonexistent/manifest.json --out /tmp/x.jsonl");
  EXPECT_NE(res.exit_code, 0);
  EXPECT_NE(res.output.find("error"), std::string::npos);
}

TEST(CliTraining, SeedsPinParameterBytesAndLossCurves) {
  fs::path dir = fresh_dir("train");
  ASSERT_EQ(run_cli("gen-worlds --kind grid --n 3 --rows 2 --cols 2 --seed 9 --out " +
                    (dir / "worlds").string())
                .exit_code,
            0);
  std::string manifest = (dir / "worlds" / "manifest.json").string();
  ASSERT_EQ(run_cli("build-qdata --worlds " + manifest + " --n-samples 200 --seed 9 --out " +
                    (dir / "d.jsonl").string())
                .exit_code,
            0);
  std::string train_flags = "train-qmodel --data " + (dir / "d.jsonl").string() + " --worlds " +
                            manifest + " --val-worlds 1 --epochs 4 --hidden 16 --seed 9";
  ASSERT_EQ(run_cli(train_flags + " --out " + (dir / "m1.json").string() + " --loss-csv " +
                    (dir / "l1.csv").string())
                .exit_code,
            0);
  ASSERT_EQ(run_cli(train_flags + " --out " + (dir / "m2.json").string() + " --loss-csv " +
                    (dir / "l2.csv").string())
                .exit_code,
            0);
  EXPECT_EQ(slurp(dir / "m1.json"), slurp(dir / "m2.json"));
  EXPECT_EQ(slurp(dir / "l1.csv"), slurp(dir / "l2.csv"));
  EXPECT_EQ(count_lines(slurp(dir / "l1.csv")), 5);  // header + 4 epochs

  // s2 head trains from the saved q-model.
  ASSERT_EQ(run_cli("train-s2 --worlds " + manifest + " --qsource " + (dir / "m1.json").string() +
                    " --n-samples 150 --epochs 3 --hidden 16 --val-worlds 1 --seed 9 --out " +
                    (dir / "s2.json").string())
                .exit_code,
            0);
  RegressorParams head = load_params((dir / "s2.json").string());
  EXPECT_EQ(head.out_dim(), 1);
}

TEST(CliRunBench, ExpertOnTreeWorldIsPerfect) {
  fs::path dir = fresh_dir("tree_bench");
  // Hand-built tree world (a star of corridors) plus its manifest.
  std::vector<NodeRecord> nodes;
  std::vector<std::pair<int, int>> edges;
  nodes.push_back({0, {0.0, 0.0}, {1.0, 0.0}, 0});
  for (int arm = 0; arm < 3; ++arm) {
    for (int k = 0; k < 3; ++k) {
      int id = 1 + arm * 3 + k;
      double angle = 2.0944 * arm;
      double r = 1.0 + k;
      nodes.push_back({id, {r * std::cos(angle), r * std::sin(angle)}, {0.0, 1.0}, 1});
      edges.emplace_back(k == 0 ? 0 : id - 1, id);
    }
  }
  NavGraph tree = build_graph(nodes, edges);
  save_graph(tree, (dir / "world_000.json").string());
  atomic_write_file((dir / "manifest.json").string(),
                    "{\"seed\":1,\"worlds\":[{\"file\":\"world_000.json\",\"seed\":1}]}\n");
  CliResult res = run_cli("run-bench --worlds " + (dir / "manifest.json").string() +
                          " --agents expert --episodes 40 --seed 3 --out " +
                          (dir / "bench").string());
  ASSERT_EQ(res.exit_code, 0) << res.output;
  std::string report = slurp(dir / "bench" / "report.csv");
  std::istringstream in(report);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "agent,gamma,mode,n,SR,OSR,SPL,mean_len");
  EXPECT_EQ(row.rfind("expert,0.5,shortest-canonical,40,1,1,1,", 0), 0u) << row;
  // Histogram partitions the episodes.
  std::string hist = slurp(dir / "bench" / "hist_expert.csv");
  EXPECT_NE(hist.find("identical,"), std::string::npos);
}

TEST(CliRunBench, FiveAgentsFiveRowsDeterministic) {
  fs::path dir = fresh_dir("full_bench");
  ASSERT_EQ(run_cli("gen-worlds --kind grid --n 3 --rows 2 --cols 2 --seed 21 --out " +
                    (dir / "worlds").string())
                .exit_code,
            0);
  std::string manifest = (dir / "worlds" / "manifest.json").string();
  ASSERT_EQ(run_cli("build-qdata --worlds " + manifest + " --n-samples 250 --seed 21 --out " +
                    (dir / "d.jsonl").string())
                .exit_code,
            0);
  ASSERT_EQ(run_cli("train-qmodel --data " + (dir / "d.jsonl").string() + " --worlds " + manifest +
                    " --val-worlds 1 --epochs 5 --hidden 24 --seed 21 --out " +
                    (dir / "qm.json").string())
                .exit_code,
            0);
  ASSERT_EQ(run_cli("train-s2 --worlds " + manifest +
                    " --qsource gt --n-samples 300 --epochs 5 --hidden 24 --val-worlds 1 "
                    "--seed 21 --out " +
                    (dir / "s2gt.json").string())
                .exit_code,
            0);
  ASSERT_EQ(run_cli("train-s2 --worlds " + manifest + " --qsource " + (dir / "qm.json").string() +
                    " --n-samples 300 --epochs 5 --hidden 24 --val-worlds 1 --seed 21 --out " +
                    (dir / "s2l.json").string())
                .exit_code,
            0);
  std::string bench_flags = "run-bench --worlds " + manifest + " --qmodel " +
                            (dir / "qm.json").string() + " --s2-gt " +
                            (dir / "s2gt.json").string() + " --s2-learned " +
                            (dir / "s2l.json").string() + " --episodes 25 --seed 21 --out ";
  ASSERT_EQ(run_cli(bench_flags + (dir / "b1").string()).exit_code, 0);
  ASSERT_EQ(run_cli(bench_flags + (dir / "b2").string()).exit_code, 0);
  std::string report = slurp(dir / "b1" / "report.csv");
  EXPECT_EQ(count_lines(report), 6);  // header + 5 agents
  EXPECT_EQ(report, slurp(dir / "b2" / "report.csv"));
  EXPECT_EQ(slurp(dir / "b1" / "episodes.jsonl"), slurp(dir / "b2" / "episodes.jsonl"));
  // Logs cover 5 agents x 25 episodes.
  auto logs = load_episode_logs((dir / "b1" / "episodes.jsonl").string());
  EXPECT_EQ(logs.size(), 125u);
}

TEST(CliAblate, EmptySweepIsUsageErrorTinySweepRuns) {
  fs::path dir = fresh_dir("ablate");
  CliResult bad = run_cli("ablate --out " + dir.string());
  EXPECT_NE(bad.exit_code, 0);
  CliResult res = run_cli(
      "ablate --gammas 0,0.5 --worlds-count 2 --val-worlds 1 --q-samples 120 --s2-samples 150 "
      "--episodes 10 --q-epochs 3 --s2-epochs 3 --agents history,learnedq --seed 2 --out " +
      dir.string());
  ASSERT_EQ(res.exit_code, 0) << res.output;
  std::string csv = slurp(dir / "ablate_gamma.csv");
  EXPECT_EQ(count_lines(csv), 5);  // header + 2 gammas x 2 agents
  EXPECT_NE(res.output.find("best learnedq SPL at gamma"), std::string::npos);
}

TEST(CliExportSupports, StarFixtureOwnsAllLeaves) {
  fs::path dir = fresh_dir("supports");
  NavGraph star = qnav::testing::make_star();
  save_graph(star, (dir / "star.json").string());
  CliResult res = run_cli("export-supports --world " + (dir / "star.json").string() +
                          " --origin 1 --gamma 0.5 --out " + (dir / "sup.json").string());
  ASSERT_EQ(res.exit_code, 0) << res.output;
  nlohmann::json j = nlohmann::json::parse(slurp(dir / "sup.json"));
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["candidate"], 0);
  EXPECT_EQ(j[0]["nodes"].size(), 3u);
  for (const auto& node : j[0]["nodes"])
    EXPECT_DOUBLE_EQ(node["w"].get<double>(), std::pow(0.5, node["t"].get<int>()));
}

TEST(CliConfigFile, JsonConfigEqualsFlags) {
  fs::path dir = fresh_dir("config");
  atomic_write_file((dir / "cfg.json").string(),
                    "{\"gen-worlds\":{\"kind\":\"grid\",\"n\":2,\"seed\":11,\"rows\":2,"
                    "\"cols\":2,\"out\":\"" + (dir / "w_cfg").string() + "\"}}");
  ASSERT_EQ(run_cli("--config " + (dir / "cfg.json").string() + " gen-worlds").exit_code, 0);
  ASSERT_EQ(run_cli("gen-worlds --kind grid --n 2 --seed 11 --rows 2 --cols 2 --out " +
                    (dir / "w_flags").string())
                .exit_code,
            0);
  EXPECT_EQ(slurp(dir / "w_cfg" / "world_000.json"), slurp(dir / "w_flags" / "world_000.json"));
  EXPECT_EQ(slurp(dir / "w_cfg" / "manifest.json"), slurp(dir / "w_flags" / "manifest.json"));
}

TEST(CliVerify, InvariantSuitePasses) {
  CliResult res = run_cli("verify --seed 4");
  EXPECT_EQ(res.exit_code, 0) << res.output;
  EXPECT_NE(res.output.find("all checks passed"), std::string::npos);
}

}  // namespace
