// Command-line front end: one subcommand per pipeline stage plus run-all.
//
// Seed precedence: --seed, then SURROGATE_SEED, then the config file.
// Failures print a single "error: <code>: <message>" line on stderr.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "surrogate/surrogate.hpp"

namespace {

using namespace surrogate;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> workers;
  std::string schema;
  bool desk_scale = false;
  bool force = false;
};

PipelineConfig resolve_config(const GlobalOptions& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : PipelineConfig::load(g.config);
  if (const char* env = std::getenv("SURROGATE_SEED"); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw Error(ErrorCode::kInvalidArgument, "SURROGATE_SEED is not an integer: " + std::string(env));
    cfg.seed = v;
  }
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.out = g.out;
  if (g.workers) cfg.workers = *g.workers;
  if (!g.schema.empty()) cfg.schema = g.schema;
  if (g.desk_scale) cfg.apply_desk_scale();
  return cfg;
}

void print_result(const StageResult& r) {
  std::cout << stage_name(r.stage) << ": " << (r.skipped ? "skipped (up to date)" : r.summary) << '\n';
}

int schema_check(const GlobalOptions& g) {
  const auto cfg = resolve_config(g);
  const auto schema = load_schema(cfg.schema);
  std::size_t rules = schema.discrete().size() - 2;
  std::cout << cfg.schema.string() << ": " << schema.continuous().size() << " continuous, " << rules
            << " rules, policy '" << schema.policy().name << "' with " << schema.policy().alternatives.size()
            << " alternatives (baseline '" << schema.policy().baseline << "'), region '" << schema.region().name
            << "' with " << schema.region().alternatives.size() << " alternatives\n";
  return 0;
}

void print_eval(const Pipeline& p) {
  const auto doc = nlohmann::json::parse(read_text_file(p.artifact("eval.json")));
  Evaluation ev;
  const auto& c = doc.at("confusion");
  ev.confusion = {c.at("tn").get<std::uint64_t>(), c.at("fp").get<std::uint64_t>(), c.at("fn").get<std::uint64_t>(),
                  c.at("tp").get<std::uint64_t>()};
  ev.metrics = metrics_from_confusion(ev.confusion);
  std::cout << Pipeline::format_confusion(ev) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-forest surrogate for agent-based policy simulations"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed (overrides SURROGATE_SEED and the config file)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--workers", g.workers, "Worker threads for training and emulation")->check(CLI::PositiveNumber);
  app.add_option("--schema", g.schema, "Parameter schema file")->check(CLI::ExistingFile);
  app.add_flag("--desk-scale", g.desk_scale, "100 trees and 100,000 generated configs");
  app.add_flag("--force", g.force, "Rerun stages and overwrite modified artifacts");

  auto* check = app.add_subcommand("schema-check", "Validate a parameter schema and print its shape");
  check->fallthrough();
  std::vector<std::pair<CLI::App*, Stage>> stage_cmds;
  const std::pair<Stage, const char*> stages[] = {
      {Stage::kToygen, "Generate a synthetic run corpus from the toy world"},
      {Stage::kIngest, "Read and validate the run corpus"},
      {Stage::kLabel, "Label runs optimal/non-optimal and split train/test"},
      {Stage::kTrain, "Train the random forest"},
      {Stage::kEval, "Evaluate the forest on the test split"},
      {Stage::kGenerate, "Sample new configurations"},
      {Stage::kEmulate, "Classify the generated configurations"},
      {Stage::kReport, "Write result tables and figure data"},
  };
  for (const auto& [stage, help] : stages) {
    auto* cmd = app.add_subcommand(stage_name(stage), help);
    cmd->fallthrough();
    stage_cmds.emplace_back(cmd, stage);
  }
  auto* all = app.add_subcommand("run-all", "Run every stage in order");
  all->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (check->parsed()) return schema_check(g);
    Pipeline pipeline(resolve_config(g));
    if (all->parsed()) {
      for (const auto& r : pipeline.run_all(g.force)) print_result(r);
      return 0;
    }
    for (const auto& [cmd, stage] : stage_cmds) {
      if (!cmd->parsed()) continue;
      const auto r = pipeline.run_stage(stage, g.force);
      if (stage == Stage::kEval) {
        std::cout << "eval: " << (r.skipped ? "skipped (up to date)" : "done") << '\n';
        print_eval(pipeline);
      } else {
        print_result(r);
      }
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
}
