#pragma once

// Stage orchestration. Every stage reads and writes files under the output
// directory and records content hashes of its inputs, parameters and outputs
// in manifest.json. A stage whose inputs, parameters and outputs all still
// match the manifest is skipped. An output edited since it was recorded is a
// checksum conflict unless forced.
//
//   toygen   -> corpus.csv
//   ingest   -> ingest.json
//   label    -> labeled.csv, label.json
//   train    -> forest.bin
//   eval     -> eval.json
//   generate -> moments.json, configs.csv
//   emulate  -> predictions.csv
//   report   -> report/*.csv

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "surrogate/analysis.hpp"
#include "surrogate/csv.hpp"
#include "surrogate/error.hpp"
#include "surrogate/features.hpp"
#include "surrogate/forest.hpp"
#include "surrogate/hash.hpp"
#include "surrogate/labeling.hpp"
#include "surrogate/sampler.hpp"
#include "surrogate/schema.hpp"
#include "surrogate/toyabm.hpp"

#ifndef SURROGATE_DATA_DIR
#define SURROGATE_DATA_DIR "data"
#endif

namespace surrogate {

namespace fs = std::filesystem;

struct PipelineConfig {
  fs::path schema = fs::path(SURROGATE_DATA_DIR) / "default_schema.json";
  fs::path world = fs::path(SURROGATE_DATA_DIR) / "toy_world.json";
  fs::path corpus;  // external run corpus; empty means the toygen output
  fs::path out = "surrogate-out";
  std::uint64_t toy_runs = 11076;
  std::optional<double> noise_sigma;  // overrides the world preset
  LabelSpec label;
  double test_fraction = 0.25;
  bool stratified = true;
  ForestParams forest;
  std::uint64_t generate_count = 1'000'000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  void apply_desk_scale() {
    forest.n_trees = 100;
    generate_count = 100'000;
  }

  /// Relative paths in the document resolve against `base`.
  void merge_json(const nlohmann::json& doc, const fs::path& base) {
    try {
      auto path_of = [&](const char* key, fs::path& target) {
        if (doc.contains(key) && !doc.at(key).is_null()) {
          fs::path p = doc.at(key).get<std::string>();
          target = p.is_absolute() ? p : base / p;
        }
      };
      path_of("schema", schema);
      path_of("world", world);
      path_of("corpus", corpus);
      path_of("out", out);
      toy_runs = doc.value("toy_runs", toy_runs);
      if (doc.contains("noise_sigma") && !doc.at("noise_sigma").is_null())
        noise_sigma = doc.at("noise_sigma").get<double>();
      if (doc.contains("label")) label = LabelSpec::from_json(doc.at("label"));
      test_fraction = doc.value("test_fraction", test_fraction);
      stratified = doc.value("stratified", stratified);
      if (doc.contains("forest")) forest = ForestParams::from_json(doc.at("forest"), forest);
      generate_count = doc.value("generate", generate_count);
      seed = doc.value("seed", seed);
      workers = doc.value("workers", workers);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
    }
  }

  static PipelineConfig load(const fs::path& path) {
    PipelineConfig cfg;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParseError, "config '" + path.string() + "': " + e.what());
    }
    cfg.merge_json(doc, path.parent_path());
    return cfg;
  }
};

enum class Stage { kToygen, kIngest, kLabel, kTrain, kEval, kGenerate, kEmulate, kReport };

inline constexpr Stage kAllStages[] = {Stage::kToygen, Stage::kIngest,   Stage::kLabel,   Stage::kTrain,
                                       Stage::kEval,   Stage::kGenerate, Stage::kEmulate, Stage::kReport};

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::kToygen: return "toygen";
    case Stage::kIngest: return "ingest";
    case Stage::kLabel: return "label";
    case Stage::kTrain: return "train";
    case Stage::kEval: return "eval";
    case Stage::kGenerate: return "generate";
    case Stage::kEmulate: return "emulate";
    case Stage::kReport: return "report";
  }
  return "?";
}

inline std::optional<Stage> parse_stage(std::string_view name) {
  for (auto s : kAllStages)
    if (name == stage_name(s)) return s;
  return std::nullopt;
}

struct StageRecord {
  std::map<std::string, std::string> inputs;   // role -> content hash
  std::string params;                          // hash of the stage parameters
  std::map<std::string, std::string> outputs;  // path relative to out -> content hash
};

struct PipelineManifest {
  std::uint64_t master_seed = 0;
  std::map<std::string, std::string> paths;
  std::map<std::string, StageRecord> stages;

  nlohmann::json to_json() const {
    nlohmann::json st = nlohmann::json::object();
    for (const auto& [name, rec] : stages)
      st[name] = {{"inputs", rec.inputs}, {"params", rec.params}, {"outputs", rec.outputs}};
    return {{"format", "surrogate-manifest/1"}, {"master_seed", master_seed}, {"paths", paths}, {"stages", st}};
  }

  static PipelineManifest from_json(const nlohmann::json& doc) {
    PipelineManifest m;
    m.master_seed = doc.value("master_seed", std::uint64_t{0});
    if (doc.contains("paths")) m.paths = doc.at("paths").get<std::map<std::string, std::string>>();
    if (doc.contains("stages")) {
      for (auto it = doc.at("stages").begin(); it != doc.at("stages").end(); ++it) {
        StageRecord rec;
        rec.inputs = it.value().at("inputs").get<std::map<std::string, std::string>>();
        rec.params = it.value().at("params").get<std::string>();
        rec.outputs = it.value().at("outputs").get<std::map<std::string, std::string>>();
        m.stages[it.key()] = std::move(rec);
      }
    }
    return m;
  }
};

struct StageResult {
  Stage stage = Stage::kToygen;
  bool skipped = false;
  std::string summary;
};

// ---------------------------------------------------------------------------
// Emulation

/// Predictions for in-memory configs, in input order.
inline std::vector<Prediction> emulate(const Forest& forest, std::span<const Config> configs,
                                       const ParameterSchema& schema, std::size_t workers = 1) {
  if (configs.empty()) return {};
  return forest.predict(encode_features(configs, schema), workers);
}

/// Streams a config file into a prediction file batch by batch: config_id,
/// the schema columns, predicted, vote_fraction. Returns the row count.
inline std::uint64_t emulate_stream(const Forest& forest, const ParameterSchema& schema, std::istream& in,
                                    std::ostream& out, std::size_t workers = 1, std::size_t batch = 65536) {
  forest.check_encoding(FeatureEncoding::from_schema(schema));
  ConfigReader reader(in, schema);
  std::vector<std::string> header{"config_id"};
  for (auto& name : schema.column_names()) header.push_back(name);
  header.push_back("predicted");
  header.push_back("vote_fraction");
  write_csv_row(out, header);

  std::uint64_t rows = 0;
  std::vector<Config> configs;
  std::vector<std::string> ids;
  std::vector<std::string> fields;
  while (true) {
    configs.clear();
    ids.clear();
    if (reader.read_batch(configs, ids, batch) == 0) break;
    const auto preds = emulate(forest, configs, schema, workers);
    for (std::size_t i = 0; i < configs.size(); ++i) {
      fields.clear();
      fields.push_back(ids[i]);
      append_config_fields(configs[i], schema, fields);
      fields.push_back(preds[i].label ? "1" : "0");
      fields.push_back(format_double(preds[i].vote_fraction));
      write_csv_row(out, fields);
    }
    rows += configs.size();
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Artifact readers

namespace detail {

inline std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingArtifact, "cannot read '" + path.string() + "'");
  return in;
}

inline std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  return out;
}

inline void write_json(const fs::path& path, const nlohmann::json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

/// Calls fn(config, label_column_value) for each row of a file holding the
/// schema columns plus an integer 0/1 column named `label_col`.
template <typename Fn>
void for_each_labeled_row(const fs::path& path, const ParameterSchema& schema, const std::string& label_col,
                          Fn&& fn) {
  auto in = open_input(path);
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.read_row(fields)) throw Error(ErrorCode::kEmptyInput, "'" + path.string() + "' is empty");
  CsvHeader header(fields);
  SchemaColumns columns(header, schema, path.filename().string());
  const auto lc = header.require(label_col, path.filename().string());
  while (reader.read_row(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != header.size())
      throw Error(ErrorCode::kParseError, path.filename().string() + " line " + std::to_string(reader.line()) +
                                              ": wrong field count");
    const Config cfg = columns.parse(fields, schema, reader.line());
    if (fields[lc] != "0" && fields[lc] != "1")
      throw Error(ErrorCode::kParseError, path.filename().string() + " line " + std::to_string(reader.line()) +
                                              ": " + label_col + " must be 0 or 1");
    fn(cfg, fields, header, static_cast<std::uint8_t>(fields[lc] == "1"));
  }
}

struct LabeledSplit {
  LabeledDataset train;
  LabeledDataset test;
  LabeledDataset all;
};

inline LabeledSplit read_labeled(const fs::path& path, const ParameterSchema& schema) {
  LabeledDataset all;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for_each_labeled_row(path, schema, "label",
                       [&](const Config& cfg, const std::vector<std::string>& fields, const CsvHeader& header,
                           std::uint8_t label) {
                         const auto split = fields[header.require("split", "labeled.csv")];
                         (split == "test" ? test_rows : train_rows).push_back(all.labels.size());
                         all.labels.push_back(label);
                         all.provenance.push_back(fields[header.require("run_id", "labeled.csv")]);
                         all.configs.push_back(cfg);
                       });
  all.features = encode_features(std::span<const Config>(all.configs), schema);
  LabeledSplit out;
  out.train = all.subset(train_rows);
  out.test = all.subset(test_rows);
  out.all = std::move(all);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pipeline

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config) : cfg_(std::move(config)) {
    std::error_code ec;
    fs::create_directories(cfg_.out, ec);
    if (ec || !fs::is_directory(cfg_.out))
      throw Error(ErrorCode::kIo, "cannot create output directory '" + cfg_.out.string() + "'");
    const auto mpath = manifest_path();
    if (fs::exists(mpath)) {
      try {
        manifest_ = PipelineManifest::from_json(nlohmann::json::parse(read_text_file(mpath)));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kCorruptFile, "manifest '" + mpath.string() + "': " + e.what());
      }
    }
  }

  const PipelineConfig& config() const noexcept { return cfg_; }
  const PipelineManifest& manifest() const noexcept { return manifest_; }
  fs::path manifest_path() const { return cfg_.out / "manifest.json"; }
  fs::path artifact(const std::string& name) const { return cfg_.out / name; }
  fs::path corpus_path() const { return cfg_.corpus.empty() ? artifact("corpus.csv") : cfg_.corpus; }

  StageResult run_stage(Stage stage, bool force = false) {
    Plan plan = make_plan(stage);
    const std::string name = stage_name(stage);

    StageRecord fresh;
    for (const auto& [role, path] : plan.inputs) {
      if (!fs::exists(path)) {
        std::string hint = plan.producers.count(role) ? "; run '" + plan.producers.at(role) + "' first" : "";
        throw Error(ErrorCode::kMissingArtifact,
                    "stage '" + name + "' needs " + role + " at '" + path.string() + "'" + hint);
      }
      fresh.inputs[role] = hash_file(path);
    }
    fresh.params = hash_text(plan.params.dump());

    if (auto it = manifest_.stages.find(name); it != manifest_.stages.end()) {
      const auto& old = it->second;
      bool outputs_intact = true;
      for (const auto& [rel, hash] : old.outputs) {
        const auto p = artifact(rel);
        if (!fs::exists(p)) {
          outputs_intact = false;
        } else if (hash_file(p) != hash) {
          outputs_intact = false;
          if (!force)
            throw Error(ErrorCode::kChecksumConflict, "'" + p.string() + "' changed since stage '" + name +
                                                          "' wrote it; rerun with --force to overwrite");
        }
      }
      if (outputs_intact && !force && old.inputs == fresh.inputs && old.params == fresh.params)
        return {stage, true, "up to date"};
    }

    const auto staging = cfg_.out / (".staging-" + name);
    std::error_code ec;
    fs::remove_all(staging, ec);
    fs::create_directories(staging);
    std::string summary;
    try {
      summary = plan.action(staging);
    } catch (...) {
      fs::remove_all(staging, ec);
      throw;
    }
    for (const auto& rel : plan.outputs) {
      const auto target = artifact(rel);
      fs::create_directories(target.parent_path());
      fs::rename(staging / rel, target);
      fresh.outputs[rel] = hash_file(target);
    }
    fs::remove_all(staging, ec);

    manifest_.master_seed = cfg_.seed;
    manifest_.stages[name] = std::move(fresh);
    record_paths();
    save_manifest();
    return {stage, false, summary};
  }

  /// Every stage in order; toygen only when no external corpus is configured.
  std::vector<StageResult> run_all(bool force = false) {
    std::vector<StageResult> out;
    for (auto s : kAllStages) {
      if (s == Stage::kToygen && !cfg_.corpus.empty()) continue;
      out.push_back(run_stage(s, force));
    }
    return out;
  }

 private:
  struct Plan {
    std::vector<std::pair<std::string, fs::path>> inputs;
    std::map<std::string, std::string> producers;  // input role -> stage that writes it
    std::vector<std::string> outputs;
    nlohmann::json params;
    std::function<std::string(const fs::path&)> action;
  };

  void record_paths() {
    manifest_.paths = {{"schema", cfg_.schema.string()},
                       {"corpus", corpus_path().string()},
                       {"labeled", "labeled.csv"},
                       {"forest", "forest.bin"},
                       {"configs", "configs.csv"},
                       {"predictions", "predictions.csv"},
                       {"report", "report"}};
  }

  void save_manifest() const {
    const auto tmp = manifest_path().string() + ".tmp";
    detail::write_json(tmp, manifest_.to_json());
    fs::rename(tmp, manifest_path());
  }

  ParameterSchema schema() const { return load_schema(cfg_.schema); }

  Plan make_plan(Stage stage) const {
    Plan plan;
    auto need = [&](std::string role, fs::path path, std::string producer = "") {
      if (!producer.empty()) plan.producers[role] = producer;
      plan.inputs.emplace_back(std::move(role), std::move(path));
    };
    const auto labeled = artifact("labeled.csv");
    switch (stage) {
      case Stage::kToygen:
        need("schema", cfg_.schema);
        need("world", cfg_.world);
        plan.outputs = {"corpus.csv"};
        plan.params = {{"runs", cfg_.toy_runs}, {"seed", cfg_.seed},
                       {"noise_sigma", cfg_.noise_sigma ? nlohmann::json(*cfg_.noise_sigma) : nlohmann::json()}};
        plan.action = [this](const fs::path& dir) {
          const auto s = schema();
          auto spec = load_world(cfg_.world);
          if (cfg_.noise_sigma) spec.noise_sigma = *cfg_.noise_sigma;
          ToyWorld world(spec, s);
          auto out = detail::open_output(dir / "corpus.csv");
          generate_corpus(world, cfg_.toy_runs, cfg_.seed, out);
          return "wrote " + std::to_string(cfg_.toy_runs) + " runs";
        };
        break;

      case Stage::kIngest:
        need("schema", cfg_.schema);
        need("corpus.csv", corpus_path(), cfg_.corpus.empty() ? "toygen" : "");
        plan.outputs = {"ingest.json"};
        plan.params = nlohmann::json::object();
        plan.action = [this](const fs::path& dir) {
          const auto s = schema();
          const auto corpus = ingest_runs(corpus_path(), s);
          nlohmann::json invalid = nlohmann::json::array();
          for (const auto& rec : corpus.records) {
            if (rec.valid || invalid.size() >= 100) continue;
            nlohmann::json msgs = nlohmann::json::array();
            for (const auto& v : validate_record(rec, s)) msgs.push_back(v.message);
            invalid.push_back({{"run_id", rec.run_id}, {"violations", msgs}});
          }
          detail::write_json(dir / "ingest.json", {{"records", corpus.records.size()},
                                                   {"valid", corpus.valid_count},
                                                   {"invalid", corpus.invalid_count},
                                                   {"indicators", corpus.indicator_names.size()},
                                                   {"invalid_runs", invalid}});
          return std::to_string(corpus.valid_count) + " valid, " + std::to_string(corpus.invalid_count) +
                 " invalid records";
        };
        break;

      case Stage::kLabel:
        need("schema", cfg_.schema);
        need("corpus.csv", corpus_path(), cfg_.corpus.empty() ? "toygen" : "");
        need("ingest.json", artifact("ingest.json"), "ingest");
        plan.outputs = {"labeled.csv", "label.json"};
        plan.params = {{"label", cfg_.label.to_json()}, {"test_fraction", cfg_.test_fraction},
                       {"stratified", cfg_.stratified}, {"seed", cfg_.seed}};
        plan.action = [this](const fs::path& dir) { return run_label(dir); };
        break;

      case Stage::kTrain:
        need("schema", cfg_.schema);
        need("labeled.csv", labeled, "label");
        plan.outputs = {"forest.bin"};
        plan.params = {{"forest", cfg_.forest.to_json()}, {"seed", cfg_.seed}};
        plan.action = [this, labeled](const fs::path& dir) {
          const auto s = schema();
          const auto data = detail::read_labeled(labeled, s);
          const auto forest = fit_forest(data.train, cfg_.forest, derive_seed(cfg_.seed, StreamTag::kTrain, 0),
                                         cfg_.workers);
          save_forest(forest, dir / "forest.bin");
          return std::to_string(forest.trees().size()) + " trees on " + std::to_string(data.train.size()) + " rows";
        };
        break;

      case Stage::kEval:
        need("schema", cfg_.schema);
        need("labeled.csv", labeled, "label");
        need("forest.bin", artifact("forest.bin"), "train");
        plan.outputs = {"eval.json"};
        plan.params = nlohmann::json::object();
        plan.action = [this, labeled](const fs::path& dir) {
          const auto s = schema();
          const auto data = detail::read_labeled(labeled, s);
          const auto forest = load_forest(artifact("forest.bin"));
          const auto ev = evaluate(forest, data.test, cfg_.workers);
          detail::write_json(dir / "eval.json", evaluation_json(ev, data.test.size()));
          return format_confusion(ev);
        };
        break;

      case Stage::kGenerate:
        need("schema", cfg_.schema);
        need("labeled.csv", labeled, "label");
        plan.outputs = {"moments.json", "configs.csv"};
        plan.params = {{"n", cfg_.generate_count}, {"seed", cfg_.seed}};
        plan.action = [this, labeled](const fs::path& dir) {
          const auto s = schema();
          const auto data = detail::read_labeled(labeled, s);
          std::vector<RunRecord> records(data.all.configs.size());
          for (std::size_t i = 0; i < records.size(); ++i) records[i].config = data.all.configs[i];
          const auto moments = fit_moments(records, s);
          detail::write_json(dir / "moments.json", moments.to_json());
          ConfigGenerator gen(s, moments, derive_seed(cfg_.seed, StreamTag::kGenerate, 0));
          auto out = detail::open_output(dir / "configs.csv");
          write_generated_configs(out, s, gen, cfg_.generate_count);
          return "generated " + std::to_string(cfg_.generate_count) + " configs";
        };
        break;

      case Stage::kEmulate:
        need("schema", cfg_.schema);
        need("forest.bin", artifact("forest.bin"), "train");
        need("configs.csv", artifact("configs.csv"), "generate");
        plan.outputs = {"predictions.csv"};
        plan.params = nlohmann::json::object();
        plan.action = [this](const fs::path& dir) {
          const auto s = schema();
          const auto forest = load_forest(artifact("forest.bin"));
          auto in = detail::open_input(artifact("configs.csv"));
          auto out = detail::open_output(dir / "predictions.csv");
          const auto rows = emulate_stream(forest, s, in, out, cfg_.workers);
          return "classified " + std::to_string(rows) + " configs";
        };
        break;

      case Stage::kReport:
        need("schema", cfg_.schema);
        need("labeled.csv", labeled, "label");
        need("predictions.csv", artifact("predictions.csv"), "emulate");
        for (const auto& n : report_table_names()) plan.outputs.push_back("report/" + n + ".csv");
        plan.params = {{"significance", kSignificance}};
        plan.action = [this, labeled](const fs::path& dir) {
          const auto s = schema();
          OutcomeAccumulator surrogate(s);
          detail::for_each_labeled_row(artifact("predictions.csv"), s, "predicted",
                                       [&](const Config& c, auto&, auto&, std::uint8_t y) { surrogate.add(c, y); });
          OutcomeAccumulator abm(s);
          detail::for_each_labeled_row(labeled, s, "label",
                                       [&](const Config& c, auto&, auto&, std::uint8_t y) { abm.add(c, y); });
          const auto rep = build_report(surrogate, s, &abm);
          emit_report(rep, dir / "report");
          std::string tally;
          for (std::size_t p = 0; p < rep.deltas.policies.size(); ++p)
            tally += rep.deltas.policies[p] + " " + std::to_string(rep.ranking.wins[p]) + ", ";
          return "best policy per region: " + tally + "tie " + std::to_string(rep.ranking.ties);
        };
        break;
    }
    return plan;
  }

  std::string run_label(const fs::path& dir) const {
    const auto s = schema();
    const auto corpus = ingest_runs(corpus_path(), s);
    LabelSummary summary;
    const auto data = label_dataset(corpus, s, cfg_.label, &summary);
    const auto split = split_indices(data.labels, cfg_.test_fraction, cfg_.seed, cfg_.stratified);
    std::vector<std::uint8_t> is_test(data.size(), 0);
    for (auto i : split.test) is_test[i] = 1;

    const auto hi = *corpus.find_indicator(cfg_.label.high_indicator);
    const auto lo = *corpus.find_indicator(cfg_.label.low_indicator);
    auto out = detail::open_output(dir / "labeled.csv");
    std::vector<std::string> row{"run_id", "split", "label", cfg_.label.high_indicator, cfg_.label.low_indicator};
    for (auto& n : s.column_names()) row.push_back(n);
    write_csv_row(out, row);
    std::size_t k = 0;
    for (const auto& rec : corpus.records) {
      if (!rec.valid) continue;
      row.assign({rec.run_id, is_test[k] ? "test" : "train", data.labels[k] ? "1" : "0",
                  format_double(rec.indicators[hi]), format_double(rec.indicators[lo])});
      append_config_fields(rec.config, s, row);
      write_csv_row(out, row);
      ++k;
    }
    detail::write_json(dir / "label.json", {{"high_threshold", summary.thresholds.high},
                                            {"low_threshold", summary.thresholds.low},
                                            {"labeled", summary.labeled},
                                            {"skipped_invalid", summary.skipped_invalid},
                                            {"optimal", summary.positives},
                                            {"train", split.train.size()},
                                            {"test", split.test.size()}});
    return std::to_string(summary.positives) + " of " + std::to_string(summary.labeled) + " runs optimal";
  }

 public:
  static nlohmann::json evaluation_json(const Evaluation& ev, std::size_t rows) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
    return {{"test_rows", rows},
            {"confusion", {{"tn", ev.confusion.tn}, {"fp", ev.confusion.fp},
                           {"fn", ev.confusion.fn}, {"tp", ev.confusion.tp}}},
            {"accuracy", ev.metrics.accuracy},
            {"precision", opt(ev.metrics.precision)},
            {"recall", opt(ev.metrics.recall)},
            {"f1", opt(ev.metrics.f1)}};
  }

  /// Confusion matrix laid out observed x predicted, then the four metrics.
  static std::string format_confusion(const Evaluation& ev) {
    auto metric = [](const std::optional<double>& v) { return v ? format_fixed(*v, 4) : std::string("NA"); };
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "                      Predicted\n"
                  "Observed       non-optimal   optimal\n"
                  "non-optimal    %11llu %9llu\n"
                  "optimal        %11llu %9llu\n",
                  static_cast<unsigned long long>(ev.confusion.tn), static_cast<unsigned long long>(ev.confusion.fp),
                  static_cast<unsigned long long>(ev.confusion.fn), static_cast<unsigned long long>(ev.confusion.tp));
    return std::string(buf) + "accuracy " + format_fixed(ev.metrics.accuracy, 4) + "  precision " +
           metric(ev.metrics.precision) + "  recall " + metric(ev.metrics.recall) + "  f1 " + metric(ev.metrics.f1);
  }

 private:
  PipelineConfig cfg_;
  PipelineManifest manifest_;
};

}  // namespace surrogate
