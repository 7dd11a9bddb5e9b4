#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "surrogate/pipeline.hpp"

using namespace surrogate;
using testing_support::slurp;
using testing_support::spit;
using testing_support::TempDir;

namespace {

PipelineConfig tiny(const fs::path& out) {
  PipelineConfig cfg;
  cfg.out = out;
  cfg.toy_runs = 1500;
  cfg.forest.n_trees = 8;
  cfg.generate_count = 4000;
  cfg.seed = 17;
  return cfg;
}

ErrorCode code_of(const std::function<void()>& fn, std::string* message = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

std::size_t data_rows(const fs::path& p) {
  const auto text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) - 1;
}

}  // namespace

TEST(Pipeline, RunAllPopulatesEverything) {
  TempDir dir("pipe-all");
  Pipeline p(tiny(dir.path()));
  const auto results = p.run_all();
  ASSERT_EQ(results.size(), 8u);
  for (const auto& r : results) EXPECT_FALSE(r.skipped) << stage_name(r.stage);
  for (const char* f : {"corpus.csv", "ingest.json", "labeled.csv", "label.json", "forest.bin", "eval.json",
                        "moments.json", "configs.csv", "predictions.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
  for (const auto& n : report_table_names()) EXPECT_TRUE(fs::exists(dir.path() / "report" / (n + ".csv"))) << n;

  // Conservation across stages.
  EXPECT_EQ(data_rows(dir.path() / "corpus.csv"), 1500u);
  EXPECT_EQ(data_rows(dir.path() / "labeled.csv"), 1500u);
  EXPECT_EQ(data_rows(dir.path() / "configs.csv"), 4000u);
  EXPECT_EQ(data_rows(dir.path() / "predictions.csv"), 4000u);
  const auto label = nlohmann::json::parse(slurp(dir.path() / "label.json"));
  EXPECT_EQ(label.at("test").get<int>(), 375);
  const auto ev = nlohmann::json::parse(slurp(dir.path() / "eval.json"));
  EXPECT_EQ(ev.at("test_rows").get<int>(), 375);

  const auto manifest = nlohmann::json::parse(slurp(dir.path() / "manifest.json"));
  EXPECT_EQ(manifest.at("master_seed").get<std::uint64_t>(), 17u);
  EXPECT_EQ(manifest.at("stages").size(), 8u);
  EXPECT_TRUE(manifest.at("paths").contains("report"));
  for (const auto& [name, st] : manifest.at("stages").items()) EXPECT_FALSE(st.at("inputs").empty()) << name;
  EXPECT_FALSE(fs::exists(dir.path() / ".staging-report"));
}

TEST(Pipeline, RerunIsSkipped) {
  TempDir dir("pipe-skip");
  {
    Pipeline p(tiny(dir.path()));
    p.run_all();
  }
  const auto before = slurp(dir.path() / "manifest.json");
  Pipeline p(tiny(dir.path()));
  for (const auto& r : p.run_all()) EXPECT_TRUE(r.skipped) << stage_name(r.stage);
  EXPECT_TRUE(p.run_stage(Stage::kTrain).skipped);
  EXPECT_EQ(slurp(dir.path() / "manifest.json"), before);

  // Changing a parameter reruns only what depends on it.
  auto cfg = tiny(dir.path());
  cfg.forest.n_trees = 9;
  Pipeline q(cfg);
  EXPECT_TRUE(q.run_stage(Stage::kLabel).skipped);
  EXPECT_FALSE(q.run_stage(Stage::kTrain).skipped);
  EXPECT_FALSE(q.run_stage(Stage::kEval).skipped);
  EXPECT_TRUE(q.run_stage(Stage::kGenerate).skipped);
}

TEST(Pipeline, EditedOutputIsAChecksumConflict) {
  TempDir dir("pipe-conflict");
  Pipeline p(tiny(dir.path()));
  for (auto s : {Stage::kToygen, Stage::kIngest, Stage::kLabel, Stage::kTrain}) p.run_stage(s);
  const auto forest = dir.path() / "forest.bin";
  auto bytes = slurp(forest);
  bytes[bytes.size() / 2] ^= 1;
  spit(forest, bytes);
  EXPECT_EQ(code_of([&] { p.run_stage(Stage::kTrain); }), ErrorCode::kChecksumConflict);
  const auto r = p.run_stage(Stage::kTrain, true);
  EXPECT_FALSE(r.skipped);
  EXPECT_NO_THROW(load_forest(forest));
  EXPECT_TRUE(p.run_stage(Stage::kTrain).skipped);
}

TEST(Pipeline, DeletedOutputIsRebuilt) {
  TempDir dir("pipe-deleted");
  Pipeline p(tiny(dir.path()));
  p.run_stage(Stage::kToygen);
  const auto text = slurp(dir.path() / "corpus.csv");
  fs::remove(dir.path() / "corpus.csv");
  EXPECT_FALSE(p.run_stage(Stage::kToygen).skipped);
  EXPECT_EQ(slurp(dir.path() / "corpus.csv"), text);
}

TEST(Pipeline, MissingInputNamesTheArtifact) {
  TempDir dir("pipe-missing");
  Pipeline p(tiny(dir.path()));
  std::string msg;
  EXPECT_EQ(code_of([&] { p.run_stage(Stage::kEmulate); }, &msg), ErrorCode::kMissingArtifact);
  EXPECT_NE(msg.find("forest.bin"), std::string::npos) << msg;
  EXPECT_NE(msg.find("train"), std::string::npos) << msg;
  EXPECT_EQ(code_of([&] { p.run_stage(Stage::kTrain); }, &msg), ErrorCode::kMissingArtifact);
  EXPECT_NE(msg.find("labeled.csv"), std::string::npos) << msg;
  EXPECT_FALSE(fs::exists(dir.path() / "forest.bin"));
}

TEST(Pipeline, WorkerCountDoesNotChangeArtifacts) {
  TempDir d1("pipe-w1"), d4("pipe-w4");
  auto c1 = tiny(d1.path());
  auto c4 = tiny(d4.path());
  c4.workers = 4;
  Pipeline(c1).run_all();
  Pipeline(c4).run_all();
  for (const char* f : {"labeled.csv", "forest.bin", "configs.csv", "predictions.csv", "eval.json"})
    EXPECT_EQ(slurp(d1.path() / f), slurp(d4.path() / f)) << f;
  for (const auto& n : report_table_names())
    EXPECT_EQ(slurp(d1.path() / "report" / (n + ".csv")), slurp(d4.path() / "report" / (n + ".csv"))) << n;
}

TEST(Pipeline, ExternalCorpusSkipsToygen) {
  TempDir src("pipe-src"), dir("pipe-ext");
  Pipeline(tiny(src.path())).run_stage(Stage::kToygen);
  auto cfg = tiny(dir.path());
  cfg.corpus = src.path() / "corpus.csv";
  Pipeline p(cfg);
  const auto results = p.run_all();
  ASSERT_EQ(results.size(), 7u);
  EXPECT_EQ(results.front().stage, Stage::kIngest);
  EXPECT_FALSE(fs::exists(dir.path() / "corpus.csv"));
}

TEST(Pipeline, ConfigFileResolvesRelativePaths) {
  TempDir dir("pipe-config");
  fs::copy_file(testing_support::data_file("default_schema.json"), dir.path() / "s.json");
  spit(dir.path() / "c.json", R"({"schema": "s.json", "out": "o", "seed": 5, "forest": {"n_trees": 3},
                                  "label": {"high_quantile": 0.8}, "generate": 10})");
  const auto cfg = PipelineConfig::load(dir.path() / "c.json");
  EXPECT_EQ(cfg.schema, dir.path() / "s.json");
  EXPECT_EQ(cfg.out, dir.path() / "o");
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.forest.n_trees, 3u);
  EXPECT_EQ(cfg.forest.max_depth, 15u);
  EXPECT_EQ(cfg.label.high_quantile, 0.8);
  EXPECT_EQ(cfg.label.low_quantile, 0.25);
  EXPECT_EQ(cfg.generate_count, 10u);
  spit(dir.path() / "bad.json", R"({"forest": {"n_trees": 0}})");
  EXPECT_THROW(PipelineConfig::load(dir.path() / "bad.json"), Error);
  spit(dir.path() / "broken.json", "{");
  EXPECT_THROW(PipelineConfig::load(dir.path() / "broken.json"), Error);

  PipelineConfig desk;
  desk.apply_desk_scale();
  EXPECT_EQ(desk.forest.n_trees, 100u);
  EXPECT_EQ(desk.generate_count, 100000u);
  EXPECT_EQ(PipelineConfig{}.forest.n_trees, 10000u);
  EXPECT_EQ(PipelineConfig{}.generate_count, 1000000u);
}

TEST(Emulate, EmptyAndDuplicates) {
  const auto schema = testing_support::default_schema();
  ToyWorld world(load_world(testing_support::data_file("toy_world.json")), schema);
  const auto data = label_dataset(generate_records(world, 1000, 1), schema, LabelSpec{});
  ForestParams params;
  params.n_trees = 10;
  const auto forest = fit_forest(data, params, 3);
  EXPECT_TRUE(emulate(forest, std::vector<Config>{}, schema).empty());

  std::vector<Config> configs(data.configs.begin(), data.configs.begin() + 50);
  configs.insert(configs.end(), data.configs.begin(), data.configs.begin() + 50);
  const auto preds = emulate(forest, configs, schema);
  ASSERT_EQ(preds.size(), 100u);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(preds[i].label, preds[i + 50].label);
    EXPECT_EQ(preds[i].votes, preds[i + 50].votes);
  }

  std::stringstream empty_in("config_id," + [&] {
    std::string h;
    for (const auto& n : schema.column_names()) h += (h.empty() ? "" : ",") + n;
    return h;
  }() + "\n");
  std::ostringstream out;
  EXPECT_EQ(emulate_stream(forest, schema, empty_in, out), 0u);
  const auto text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
}

TEST(Emulate, StreamConservesRowsAndOrder) {
  const auto schema = testing_support::default_schema();
  ToyWorld world(load_world(testing_support::data_file("toy_world.json")), schema);
  const auto data = label_dataset(generate_records(world, 1000, 1), schema, LabelSpec{});
  ForestParams params;
  params.n_trees = 10;
  const auto forest = fit_forest(data, params, 3);
  const auto moments = fit_moments(generate_records(world, 1000, 1).records, schema);
  const ConfigGenerator gen(schema, moments, 8);
  std::stringstream configs;
  write_generated_configs(configs, schema, gen, 3001, 250);
  std::ostringstream a, b;
  std::istringstream in_a(configs.str()), in_b(configs.str());
  EXPECT_EQ(emulate_stream(forest, schema, in_a, a, 1, 100), 3001u);
  EXPECT_EQ(emulate_stream(forest, schema, in_b, b, 4, 1000), 3001u);
  EXPECT_EQ(a.str(), b.str());
  const auto direct = emulate(forest, gen.range(0, 3001), schema);
  std::istringstream back(a.str());
  CsvReader reader(back);
  std::vector<std::string> fields;
  reader.read_row(fields);
  const auto pred_col = fields.size() - 2;
  for (std::size_t i = 0; reader.read_row(fields); ++i) {
    EXPECT_EQ(fields[0], std::to_string(i));
    EXPECT_EQ(fields[pred_col], direct[i].label ? "1" : "0");
  }
}

TEST(Emulate, EncodingMismatch) {
  const auto schema = testing_support::default_schema();
  ToyWorld world(load_world(testing_support::data_file("toy_world.json")), schema);
  const auto data = label_dataset(generate_records(world, 500, 1), schema, LabelSpec{});
  ForestParams params;
  params.n_trees = 2;
  const auto forest = fit_forest(data, params, 3);
  const auto other = testing_support::small_schema();
  std::istringstream in("config_id,Markup,Policy days,Interest,policy,region\n0,0.1,1,real,Purchase,North\n");
  std::ostringstream out;
  EXPECT_EQ(code_of([&] { emulate_stream(forest, other, in, out); }), ErrorCode::kEncodingMismatch);
}

TEST(Manifest, JsonRoundTrip) {
  PipelineManifest m;
  m.master_seed = 99;
  m.paths = {{"report", "report"}};
  m.stages["train"] = {{{"labeled.csv", "abc"}}, "def", {{"forest.bin", "123"}}};
  const auto back = PipelineManifest::from_json(m.to_json());
  EXPECT_EQ(back.to_json(), m.to_json());
  EXPECT_EQ(parse_stage("emulate"), Stage::kEmulate);
  EXPECT_FALSE(parse_stage("deploy"));
}
