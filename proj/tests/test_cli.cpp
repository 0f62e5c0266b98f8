#include <cstdio>
#include <map>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "dynodom/config.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status = -1;
  std::string output;
};

Outcome cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DYNODOM_CLI + "\" " + args + " 2>&1";
  Outcome r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST(Cli, NoSubcommandFails) { EXPECT_NE(cli("").status, 0); }

TEST(Cli, RunWithMissingConfigWritesNothing) {
  testing_support::TempDir dir("cli_run");
  dynodom::synth::generate(testing_support::tiny_scene(3), dir / "seq");
  const Outcome r = cli("run " + q(dir / "seq") + " --config " + q(dir / "absent.conf") +
                        " --out " + q(dir / "out"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("absent.conf"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, RunWithBadConfigKeyWritesNothing) {
  testing_support::TempDir dir("cli_badkey");
  dynodom::synth::generate(testing_support::tiny_scene(3), dir / "seq");
  testing_support::spit(dir / "bad.conf", "fx = 65.625\nfrobnicate = 1\n");
  const Outcome r = cli("run " + q(dir / "seq") + " --config " + q(dir / "bad.conf") +
                        " --out " + q(dir / "out"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("line 2"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, RunWritesOutputs) {
  testing_support::TempDir dir("cli_ok");
  const auto spec = testing_support::tiny_scene(6);
  dynodom::synth::generate(spec, dir / "seq");
  testing_support::spit(dir / "run.conf",
                        "fx = 65.625\nfy = 65.625\ncx = 39.5\ncy = 29.5\nwidth = 80\nheight = 60\n"
                        "grid_cell = 10\nfast_threshold = 10\ndbscan_eps = 0.12\ndbscan_min_pts = 4\n");
  const Outcome r = cli("run " + q(dir / "seq") + " --config " + q(dir / "run.conf") +
                        " --out " + q(dir / "out") + " --quiet");
  ASSERT_EQ(r.status, 0) << r.output;
  for (const char* f : {"trajectory.txt", "votes.csv", "objects.csv", "summary.txt"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
  EXPECT_EQ(dynodom::read_trajectory(dir / "out" / "trajectory.txt").size(), 6u);
  EXPECT_NE(r.output.find("frames_processed 6"), std::string::npos);
}

TEST(Cli, SynthRejectsSingleFrame) {
  testing_support::TempDir dir("cli_synth1");
  testing_support::spit(dir / "one.json", R"({"duration": 1})");
  const Outcome r = cli("synth " + q(dir / "one.json") + " --out " + q(dir / "seq"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("duration"), std::string::npos);
}

TEST(Cli, SynthBundledExample) {
  testing_support::TempDir dir("cli_synth");
  const fs::path spec = fs::path(DYNODOM_SOURCE_DIR) / "configs" / "example_scene.json";
  const Outcome r = cli("synth " + q(spec) + " --out " + q(dir / "seq"));
  ASSERT_EQ(r.status, 0) << r.output;
  for (const char* f : {"rgb.txt", "depth.txt", "groundtruth.txt", "manifest.txt"}) {
    EXPECT_TRUE(fs::exists(dir / "seq" / f)) << f;
  }
  EXPECT_EQ(dynodom::read_trajectory(dir / "seq" / "groundtruth.txt").size(), 40u);
}

TEST(Cli, EvalIdenticalTrajectories) {
  testing_support::TempDir dir("cli_eval");
  std::mt19937_64 rng(5);
  dynodom::write_trajectory(testing_support::random_trajectory(rng, 30), dir / "gt.txt");
  const Outcome r = cli("eval " + q(dir / "gt.txt") + " " + q(dir / "gt.txt") + " --delta 2" +
                        " --errors " + q(dir / "err.csv") + " --report " + q(dir / "rep.csv"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("matched pairs        30"), std::string::npos);
  std::istringstream rep(testing_support::slurp(dir / "rep.csv"));
  std::string line;
  std::getline(rep, line);
  int metrics = 0;
  while (std::getline(rep, line)) {
    const auto comma = line.find(',');
    ASSERT_NE(comma, std::string::npos);
    const std::string key = line.substr(0, comma);
    if (key == "matched_pairs") continue;
    EXPECT_NEAR(std::stod(line.substr(comma + 1)), 0.0, 1e-6) << key;
    ++metrics;
  }
  EXPECT_EQ(metrics, 6);
  EXPECT_TRUE(fs::exists(dir / "err.csv"));
}

TEST(Cli, EvalCommittedFixture) {
  const fs::path data = DYNODOM_TEST_DATA;
  testing_support::TempDir dir("cli_fixture");
  const Outcome r = cli("eval " + q(data / "fixture_est.txt") + " " + q(data / "fixture_gt.txt") +
                        " --errors " + q(dir / "err.csv"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("matched pairs        60"), std::string::npos);
  EXPECT_NE(r.output.find("0.018522"), std::string::npos) << r.output;
}

TEST(Cli, EvalPerSecondTooShort) {
  testing_support::TempDir dir("cli_eval_ps");
  std::mt19937_64 rng(6);
  dynodom::write_trajectory(testing_support::random_trajectory(rng, 10), dir / "gt.txt");
  const Outcome r = cli("eval " + q(dir / "gt.txt") + " " + q(dir / "gt.txt") +
                        " --per-second --errors " + q(dir / "e.csv"));
  EXPECT_NE(r.status, 0);
}

TEST(Cli, DefaultsParseBack) {
  testing_support::TempDir dir("cli_defaults");
  const Outcome r = cli("defaults");
  ASSERT_EQ(r.status, 0);
  testing_support::spit(dir / "d.conf", r.output);
  EXPECT_NO_THROW(dynodom::read_config(dir / "d.conf"));
}
