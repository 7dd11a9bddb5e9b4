#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "oracles.hpp"
#include "surrogate/pipeline.hpp"

using namespace surrogate;
using testing_support::slurp;
using testing_support::spit;
using testing_support::TempDir;

namespace {

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome run(const TempDir& dir, const std::string& args, const std::string& env = "") {
  const auto out = dir.path() / "stdout.txt";
  const auto err = dir.path() / "stderr.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + SURROGATE_CLI_PATH + "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int raw = std::system(cmd.c_str());
  const int status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return {status, slurp(out), slurp(err)};
}

// Small run with absolute data paths.
std::string write_config(const TempDir& dir, const std::string& name, std::uint64_t seed = 3) {
  nlohmann::json doc = {{"schema", testing_support::data_file("default_schema.json").string()},
                        {"world", testing_support::data_file("toy_world.json").string()},
                        {"toy_runs", 1200},
                        {"generate", 3000},
                        {"seed", seed},
                        {"forest", {{"n_trees", 6}}}};
  const auto path = dir.path() / name;
  spit(path, doc.dump());
  return path.string();
}

std::uint64_t manifest_seed(const fs::path& out) {
  return nlohmann::json::parse(slurp(out / "manifest.json")).at("master_seed").get<std::uint64_t>();
}

}  // namespace

TEST(Cli, SchemaCheck) {
  TempDir dir("cli-schema");
  const auto r = run(dir, "schema-check --schema '" + testing_support::data_file("default_schema.json").string() + "'");
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("37 continuous"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("46 alternatives"), std::string::npos) << r.out;

  spit(dir.path() / "bad.json", R"({"continuous": [{"name": "x", "min": 2, "max": 1}]})");
  const auto bad = run(dir, "schema-check --schema '" + (dir.path() / "bad.json").string() + "'");
  EXPECT_EQ(bad.status, 1);
  EXPECT_EQ(bad.err.rfind("error: invalid-schema", 0), 0u) << bad.err;
}

TEST(Cli, MissingArtifactIsReported) {
  TempDir dir("cli-missing");
  const auto cfg = write_config(dir, "c.json");
  const auto out = dir.path() / "out";
  const auto r = run(dir, "train --config '" + cfg + "' --out '" + out.string() + "'");
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(r.err.rfind("error: missing-artifact", 0), 0u) << r.err;
  EXPECT_NE(r.err.find("labeled.csv"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(out / "forest.bin"));
}

TEST(Cli, UsageErrors) {
  TempDir dir("cli-usage");
  EXPECT_NE(run(dir, "train --bogus").status, 0);
  EXPECT_NE(run(dir, "").status, 0);
  EXPECT_NE(run(dir, "launch").status, 0);
  EXPECT_NE(run(dir, "train --workers 0").status, 0);
  EXPECT_NE(run(dir, "train --config /no/such/file.json").status, 0);
}

TEST(Cli, RunAllIsReproducible) {
  TempDir dir("cli-repro");
  const auto cfg = write_config(dir, "c.json");
  const auto a = dir.path() / "a";
  const auto b = dir.path() / "b";
  const auto ra = run(dir, "run-all --config '" + cfg + "' --out '" + a.string() + "'");
  ASSERT_EQ(ra.status, 0) << ra.err;
  const auto rb = run(dir, "--workers 3 run-all --config '" + cfg + "' --out '" + b.string() + "'");
  ASSERT_EQ(rb.status, 0) << rb.err;
  for (const auto& n : report_table_names())
    EXPECT_EQ(slurp(a / "report" / (n + ".csv")), slurp(b / "report" / (n + ".csv"))) << n;
  EXPECT_EQ(slurp(a / "forest.bin"), slurp(b / "forest.bin"));

  const auto again = run(dir, "run-all --config '" + cfg + "' --out '" + a.string() + "'");
  EXPECT_EQ(again.status, 0);
  EXPECT_NE(again.out.find("report: skipped"), std::string::npos) << again.out;

  const auto ev = run(dir, "eval --config '" + cfg + "' --out '" + a.string() + "'");
  EXPECT_EQ(ev.status, 0) << ev.err;
  EXPECT_NE(ev.out.find("Observed"), std::string::npos) << ev.out;
  EXPECT_NE(ev.out.find("Predicted"), std::string::npos) << ev.out;
  EXPECT_NE(ev.out.find("accuracy"), std::string::npos) << ev.out;
}

TEST(Cli, ModifiedArtifactNeedsForce) {
  TempDir dir("cli-force");
  const auto cfg = write_config(dir, "c.json");
  const auto out = dir.path() / "out";
  const std::string common = " --config '" + cfg + "' --out '" + out.string() + "'";
  ASSERT_EQ(run(dir, "toygen" + common).status, 0);
  spit(out / "corpus.csv", slurp(out / "corpus.csv") + "\n");
  const auto r = run(dir, "toygen" + common);
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.err.rfind("error: checksum-conflict", 0), 0u) << r.err;
  EXPECT_EQ(run(dir, "--force toygen" + common).status, 0);
  EXPECT_EQ(run(dir, "toygen" + common).status, 0);
}

TEST(Cli, SeedPrecedence) {
  TempDir dir("cli-seed");
  const auto cfg = write_config(dir, "c.json", 11);
  auto seed_for = [&](const std::string& tag, const std::string& flags, const std::string& env) {
    const auto out = dir.path() / tag;
    const auto r = run(dir, "toygen --config '" + cfg + "' --out '" + out.string() + "'" + flags, env);
    EXPECT_EQ(r.status, 0) << r.err;
    return manifest_seed(out);
  };
  EXPECT_EQ(seed_for("file", "", "env -u SURROGATE_SEED"), 11u);
  EXPECT_EQ(seed_for("env", "", "SURROGATE_SEED=22"), 22u);
  EXPECT_EQ(seed_for("flag", " --seed 33", "SURROGATE_SEED=22"), 33u);
  EXPECT_EQ(run(dir, "toygen --config '" + cfg + "' --out x", "SURROGATE_SEED=abc").status, 1);
}
