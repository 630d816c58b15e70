#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "changescout/cli.hpp"
#include "changescout/common.hpp"
#include "changescout/ingest.hpp"
#include "changescout/synth.hpp"
#include "json.hpp"

namespace cs {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("changescout-cli-test-" + std::to_string(::getpid()));
    fs::remove_all(root_);
    const auto fx = make_planted_fixture({});
    write_file_atomic(root_ / "raw" / "git.log", serialize_git_log(fx.commits));
    write_file_atomic(root_ / "raw" / "issues.jsonl", issues_jsonl(fx.issues));
    write_file_atomic(root_ / "raw" / "labels.csv", labels_csv(fx.labels));
    first_hash_ = fx.commits.front().hash;
    const auto r = cli({"ingest", "--git-log", raw("git.log"), "--issues", raw("issues.jsonl"), "--labels",
                        raw("labels.csv"), "--project-key", fx.project_key, "--corpus", corpus(), "-o",
                        (root_ / "ingest-out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  void TearDown() override {
    ::unsetenv("CS_SEED");
    ::unsetenv("CS_ALGO");
  }

  static std::string raw(const std::string& name) { return (root_ / "raw" / name).string(); }
  static std::string corpus() { return (root_ / "corpus").string(); }
  static std::string out(const std::string& name) { return (root_ / name).string(); }
  static json manifest(const std::string& dir) { return json::parse(read_file(root_ / dir / "manifest.json")); }

  static inline fs::path root_;
  static inline std::string first_hash_;
};

TEST_F(CliTest, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"detect", "--no-such-flag"}).code, kExitUsage);
}

TEST_F(CliTest, VersionAndHelpSucceed) {
  const auto v = cli({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find(tool_version()), std::string::npos);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST_F(CliTest, TrainWithoutSeedIsUsageErrorWithManifest) {
  const auto r = cli({"train", "--corpus", corpus(), "-o", out("noseed")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--seed"), std::string::npos);
  const auto m = manifest("noseed");
  EXPECT_EQ(m.at("status"), "usage-error");
  EXPECT_EQ(m.at("command"), "train");
}

TEST_F(CliTest, MissingCorpusIsDataError) {
  const auto r = cli({"detect", "--corpus", out("does-not-exist"), "-o", out("missing")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_EQ(manifest("missing").at("status"), "data-error");
}

TEST_F(CliTest, PredictUnknownCommitIsDataError) {
  ASSERT_EQ(cli({"train", "--corpus", corpus(), "--groups", "SI", "--n-trees", "5", "--seed", "1", "-o",
                 out("train-si")})
                .code,
            0);
  const auto model = out("train-si") + "/model.json";
  const auto r = cli({"predict", "--corpus", corpus(), "--model", model, "--commit", "deadbeef", "-o",
                      out("predict-bad")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("unknown commit"), std::string::npos);

  const auto ok = cli({"predict", "--corpus", corpus(), "--model", model, "--commit", first_hash_, "-o",
                       out("predict-ok")});
  ASSERT_EQ(ok.code, 0) << ok.err;
  const auto csv = read_file(root_ / "predict-ok" / "predictions.csv");
  EXPECT_EQ(csv.rfind("hash,label,score\n" + first_hash_ + ",", 0), 0u);
}

TEST_F(CliTest, DetectIsByteIdenticalAcrossRuns) {
  ASSERT_EQ(cli({"detect", "--corpus", corpus(), "--percentile", "98", "--seed", "7", "-o", out("d1")}).code, 0);
  ASSERT_EQ(cli({"detect", "--corpus", corpus(), "--percentile", "98", "--seed", "7", "-o", out("d2")}).code, 0);
  const auto a = read_file(root_ / "d1" / "candidates.json");
  EXPECT_EQ(a, read_file(root_ / "d2" / "candidates.json"));
  EXPECT_FALSE(json::parse(a).at("candidates").empty());
  const auto m = manifest("d1");
  EXPECT_EQ(m.at("status"), "ok");
  EXPECT_TRUE(m.at("outputs").contains((root_ / "d1" / "candidates.json").string()));
}

TEST_F(CliTest, CrossvalWritesSevenGroupRows) {
  const auto r = cli({"crossval", "--corpus", corpus(), "--groups", "all", "--algo", "nb", "--folds", "5", "--seed",
                      "3", "-o", out("cv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = json::parse(read_file(root_ / "cv" / "eval.json"));
  const auto text = read_file(root_ / "cv" / "report.txt");
  for (const char* g : {"CC ", "NL ", "SI ", "CC NL", "CC SI", "NL SI", "ALL"}) {
    EXPECT_NE(text.find(g), std::string::npos) << g;
  }
  EXPECT_NE(text.find("per-project average F"), std::string::npos);
  EXPECT_TRUE(doc.is_object());
}

TEST_F(CliTest, SeedPrecedenceFlagOverEnvOverConfig) {
  write_file_atomic(root_ / "seed.toml", "seed = 5\nalgo = \"nb\"\n");
  const auto cfg = (root_ / "seed.toml").string();
  const auto seed_of = [&](const std::string& dir) { return manifest(dir).at("config").at("seed").get<int>(); };
  const auto algo_of = [&](const std::string& dir) { return manifest(dir).at("config").at("algo").get<std::string>(); };
  const std::vector<std::string> base{"train", "--corpus", corpus(), "--groups", "SI", "--n-trees", "3"};

  auto args = base;
  args.insert(args.end(), {"--config", cfg, "-o", out("p-config")});
  ASSERT_EQ(cli(args).code, 0);
  EXPECT_EQ(seed_of("p-config"), 5);
  EXPECT_EQ(algo_of("p-config"), "nb");

  ::setenv("CS_SEED", "6", 1);
  args = base;
  args.insert(args.end(), {"--config", cfg, "-o", out("p-env")});
  ASSERT_EQ(cli(args).code, 0);
  EXPECT_EQ(seed_of("p-env"), 6);
  EXPECT_EQ(algo_of("p-env"), "nb");

  args = base;
  args.insert(args.end(), {"--config", cfg, "--seed", "7", "--algo", "rf", "-o", out("p-flag")});
  ASSERT_EQ(cli(args).code, 0);
  EXPECT_EQ(seed_of("p-flag"), 7);
  EXPECT_EQ(algo_of("p-flag"), "rf");
}

TEST_F(CliTest, ConfigUnknownKeyIsUsageError) {
  write_file_atomic(root_ / "bad.toml", "sead = 5\n");
  const auto r = cli({"detect", "--corpus", corpus(), "--config", (root_ / "bad.toml").string(), "-o", out("bad")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("sead"), std::string::npos);
}

TEST_F(CliTest, InvalidDetectorParameterIsUsageError) {
  EXPECT_EQ(cli({"detect", "--corpus", corpus(), "--contamination", "0.7", "-o", out("badc")}).code, kExitUsage);
  EXPECT_EQ(cli({"detect", "--corpus", corpus(), "--scope", "planet", "-o", out("bads")}).code, kExitUsage);
}

TEST_F(CliTest, CommittedMiniFixtureDetectIsDeterministic) {
  const std::string mini = std::string(CS_SOURCE_DIR) + "/fixtures/mini";
  ASSERT_TRUE(fs::exists(mini + "/commits.jsonl"));
  ASSERT_EQ(cli({"detect", "--corpus", mini, "--percentile", "99", "--seed", "7", "-o", out("mini1")}).code, 0);
  ASSERT_EQ(cli({"detect", "--corpus", mini, "--percentile", "99", "--seed", "7", "-o", out("mini2")}).code, 0);
  EXPECT_EQ(read_file(root_ / "mini1" / "candidates.json"), read_file(root_ / "mini2" / "candidates.json"));
}

TEST_F(CliTest, RepositoryAndRawExportIngestIdentically) {
  const auto repo = root_ / "repo";
  fs::create_directories(repo / "src");
  const auto git = [&](const std::string& args) {
    const std::string cmd = "git -C '" + repo.string() + "' " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  if (git("init -q") != 0) GTEST_SKIP() << "git unavailable";
  const std::string who = "-c user.name=Dev -c user.email=dev@example.org ";
  write_file_atomic(repo / "src" / "A.java", "a\n");
  ASSERT_EQ(git("add -A"), 0);
  ASSERT_EQ(git(who + "commit -q -m 'Add A' --date=2020-01-01T00:00:00Z"), 0);
  write_file_atomic(repo / "src" / "A.java", "a\nb\n");
  write_file_atomic(repo / "B.java", "b\n");
  ASSERT_EQ(git("add -A"), 0);
  ASSERT_EQ(git(who + "commit -q -m 'Fix AB-1' -m 'body line' --date=2020-01-02T00:00:00Z"), 0);

  const auto export_path = root_ / "repo-export.log";
  const std::string cmd = "git -C '" + repo.string() + "' log --numstat --format='" +
                          std::string(kRawGitPrettyFormat) + "' > '" + export_path.string() + "'";
  ASSERT_EQ(std::system(cmd.c_str()), 0);

  const auto a = cli({"ingest", "--repo", repo.string(), "--project-key", "AB", "--corpus", out("repo-c1"), "-o",
                      out("repo-o1")});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = cli({"ingest", "--git-log", export_path.string(), "--project-key", "AB", "--corpus",
                      out("repo-c2"), "-o", out("repo-o2")});
  ASSERT_EQ(b.code, 0) << b.err;
  const auto commits = read_file(root_ / "repo-c1" / "commits.jsonl");
  EXPECT_EQ(commits, read_file(root_ / "repo-c2" / "commits.jsonl"));
  EXPECT_NE(a.out.find("commits 2"), std::string::npos);
  EXPECT_NE(commits.find("B.java"), std::string::npos);
}

}  // namespace
}  // namespace cs
