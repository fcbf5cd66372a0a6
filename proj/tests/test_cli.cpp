#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rrpi/cli.hpp"
#include "rrpi/io.hpp"

using namespace rrpi;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "rrpi");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("rrpi_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

fs::path write_config(const fs::path& dir, const json& j) {
  const auto p = dir / "config.json";
  write_json(p, j);
  return p;
}

const fs::path kFixtures = fs::path(RRPI_SOURCE_DIR) / "data" / "fixtures";

}  // namespace

TEST(Cli, CheckOnShippedFixtures) {
  const auto dir = scratch("check");
  const auto r = run({"check", "--instance", (kFixtures / "m2.json").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("PASS contraction"), std::string::npos);
  EXPECT_NE(r.out.find("PASS oracle_equivalence"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "check.csv"));
}

TEST(Cli, MissingConfigIsIoError) {
  const auto r = run({"rrpi", "--config", "missing.json"});
  EXPECT_EQ(r.code, kExitIo);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"rrpi", "--alpha"}).code, kExitUsage);
  EXPECT_EQ(run({"rrpi", "--seed", "abc"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, InvalidConfigContents) {
  const auto dir = scratch("badcfg");
  auto cfg = write_config(dir, json{{"sed", 3}});
  EXPECT_EQ(run({"rrpi", "--config", cfg.string(), "--out", dir.string()}).code, kExitIo);
  cfg = write_config(dir, json{{"instance", {{"source", "file"}, {"path", "nowhere.json"}}}});
  EXPECT_EQ(run({"rrpi", "--config", cfg.string(), "--out", dir.string()}).code, kExitIo);
  cfg = write_config(dir, json{{"instance", {{"source", "gridworld"}, {"slip_prob", 0.99}, {"perturbation", 0.1}}}});
  EXPECT_EQ(run({"solve", "--config", cfg.string(), "--out", dir.string()}).code, kExitIo);
  cfg = write_config(dir, json{{"solver", {{"alpha", 0}}}});
  EXPECT_EQ(run({"rrpi", "--config", cfg.string(), "--out", dir.string()}).code, kExitIo);
  EXPECT_EQ(run({"estimate", "--out", dir.string()}).code, kExitIo);
}

TEST(Cli, AblateIsByteReproducible) {
  const auto a = scratch("ablate_a");
  const auto b = scratch("ablate_b");
  ASSERT_EQ(run({"ablate", "--trials", "100", "--seed", "7", "--out", a.string()}).code, kExitOk);
  ASSERT_EQ(run({"ablate", "--trials", "100", "--seed", "7", "--jobs", "3", "--out", b.string()}).code, kExitOk);
  const auto csv = slurp(a / "ablation.csv");
  EXPECT_EQ(csv, slurp(b / "ablation.csv"));
  EXPECT_EQ(slurp(a / "ablation_summary.json"), slurp(b / "ablation_summary.json"));
  const auto t = read_csv(a / "ablation.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"trial", "variant", "final_J"}));
  EXPECT_EQ(t.rows.size(), 200u);
}

TEST(Cli, RrpiWritesReports) {
  const auto dir = scratch("rrpi");
  const auto cfg = write_config(dir, json{{"instance", {{"source", "file"}, {"path", (kFixtures / "m2.json").string()}}},
                                          {"solver", {{"alpha", 0.3}}}});
  const auto r = run({"rrpi", "--config", cfg.string(), "--out", (dir / "o").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"trace.csv", "result.json", "residuals.csv", "worst_members.csv"}) {
    EXPECT_TRUE(fs::exists(dir / "o" / f)) << f;
  }
  const auto res = result_from_json(read_json(dir / "o" / "result.json"));
  EXPECT_EQ(res.config.alpha, 0.3);
  EXPECT_NEAR(res.optimal_j, 5.280205255792258, 1e-9);
  const auto hist = read_csv(dir / "o" / "worst_members.csv");
  EXPECT_EQ(hist.rows.size(), 12u);
}

TEST(Cli, AlphaFlagOverridesConfig) {
  const auto dir = scratch("alpha");
  const auto cfg = write_config(dir, json{{"solver", {{"alpha", 0.3}}}});
  ASSERT_EQ(run({"rrpi", "--config", cfg.string(), "--alpha", "0.7", "--out", dir.string()}).code, kExitOk);
  EXPECT_EQ(result_from_json(read_json(dir / "result.json")).config.alpha, 0.7);
}

TEST(Cli, SeedOverridesConfig) {
  const auto dir = scratch("seed");
  const auto cfg = write_config(dir, json{{"seed", 1}});
  ASSERT_EQ(run({"gen", "--config", cfg.string(), "--out", (dir / "a").string()}).code, kExitOk);
  ASSERT_EQ(run({"gen", "--config", cfg.string(), "--seed", "2", "--out", (dir / "b").string()}).code, kExitOk);
  ASSERT_EQ(run({"gen", "--seed", "2", "--out", (dir / "c").string()}).code, kExitOk);
  EXPECT_NE(slurp(dir / "a" / "instance.json"), slurp(dir / "b" / "instance.json"));
  EXPECT_EQ(slurp(dir / "b" / "instance.json"), slurp(dir / "c" / "instance.json"));
}

TEST(Cli, OutFallsBackToEnvironment) {
  const auto dir = scratch("env");
  ::setenv("RRPI_OUT", (dir / "from_env").string().c_str(), 1);
  const auto r = run({"solve", "--instance", (kFixtures / "chain.json").string()});
  ::unsetenv("RRPI_OUT");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = read_json(dir / "from_env" / "solve.json");
  EXPECT_NEAR(j["J"].get<double>(), 1.0 / 0.55, 1e-9);
}

TEST(Cli, GenEstimatePipeline) {
  const auto dir = scratch("pipeline");
  const auto cfg = write_config(
      dir, json{{"instance", {{"source", "gridworld"}, {"width", 3}, {"height", 3}, {"perturbation", 0.05}}},
                {"dataset_size", 400},
                {"ensemble", {{"n_members", 4}, {"method", "bootstrap"}}}});
  ASSERT_EQ(run({"gen", "--config", cfg.string(), "--out", dir.string()}).code, kExitOk);
  const auto r = run({"estimate", "--config", cfg.string(), "--dataset", (dir / "dataset.jsonl").string(),
                      "--instance", (dir / "instance.json").string(), "--out", (dir / "est").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto t = read_csv(dir / "est" / "disagreement.csv");
  EXPECT_EQ(t.rows.size(), 10u * 4u);
  const auto set = read_json(dir / "est" / "uncertainty_set.json");
  EXPECT_EQ(set["members"][0].size(), 4u);
  EXPECT_EQ(set_from_json(10, 4, set["members"]).max_member_count(), 4u);
}
