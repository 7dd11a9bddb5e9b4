#pragma once

// Simulation parameter space and run-record ingestion.
//
// A schema lists continuous parameters (closed bounds) followed by discrete
// parameters (ordered alternatives). Exactly one discrete parameter carries
// the `policy` role (with a designated no-policy baseline) and exactly one the
// `region` role. Schema files are JSON:
//
//   {"format": "surrogate-schema/1",
//    "continuous": [{"name": "Markup", "max": 0.5, "min": 0}, ...],
//    "discrete": [{"name": "Interest", "alternatives": ["nominal", ...]},
//                 {"name": "policy", "role": "policy", "baseline": "No-policy",
//                  "alternatives": [...]}, ...]}

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "surrogate/csv.hpp"
#include "surrogate/error.hpp"

namespace surrogate {

struct ContinuousParamSpec {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;

  double normalize(double value) const { return (value - lower) / (upper - lower); }
  bool contains(double value) const { return value >= lower && value <= upper; }
  friend bool operator==(const ContinuousParamSpec&, const ContinuousParamSpec&) = default;
};

enum class DiscreteRole { kRule, kPolicy, kRegion };

inline constexpr std::uint32_t kUnknownAlternative = std::numeric_limits<std::uint32_t>::max();

struct DiscreteParamSpec {
  std::string name;
  std::vector<std::string> alternatives;
  DiscreteRole role = DiscreteRole::kRule;
  std::string baseline;  // policy role only

  std::uint32_t index_of(std::string_view symbol) const {
    for (std::size_t i = 0; i < alternatives.size(); ++i)
      if (alternatives[i] == symbol) return static_cast<std::uint32_t>(i);
    return kUnknownAlternative;
  }
  friend bool operator==(const DiscreteParamSpec&, const DiscreteParamSpec&) = default;
};

class ParameterSchema {
 public:
  ParameterSchema() = default;

  /// Validates every invariant; throws Error(kInvalidSchema) on violation.
  ParameterSchema(std::vector<ContinuousParamSpec> continuous,
                  std::vector<DiscreteParamSpec> discrete)
      : continuous_(std::move(continuous)), discrete_(std::move(discrete)) {
    validate();
  }

  const std::vector<ContinuousParamSpec>& continuous() const noexcept { return continuous_; }
  const std::vector<DiscreteParamSpec>& discrete() const noexcept { return discrete_; }

  std::size_t policy_index() const noexcept { return policy_; }
  std::size_t region_index() const noexcept { return region_; }
  const DiscreteParamSpec& policy() const { return discrete_[policy_]; }
  const DiscreteParamSpec& region() const { return discrete_[region_]; }
  std::uint32_t baseline_policy() const { return policy().index_of(policy().baseline); }

  std::optional<std::size_t> find_continuous(std::string_view name) const {
    for (std::size_t i = 0; i < continuous_.size(); ++i)
      if (continuous_[i].name == name) return i;
    return std::nullopt;
  }
  std::optional<std::size_t> find_discrete(std::string_view name) const {
    for (std::size_t i = 0; i < discrete_.size(); ++i)
      if (discrete_[i].name == name) return i;
    return std::nullopt;
  }

  /// Column order used by every tabular artifact: continuous then discrete.
  std::vector<std::string> column_names() const {
    std::vector<std::string> names;
    names.reserve(continuous_.size() + discrete_.size());
    for (const auto& c : continuous_) names.push_back(c.name);
    for (const auto& d : discrete_) names.push_back(d.name);
    return names;
  }

  friend bool operator==(const ParameterSchema& a, const ParameterSchema& b) {
    return a.continuous_ == b.continuous_ && a.discrete_ == b.discrete_;
  }

 private:
  void validate() {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidSchema, msg); };
    std::set<std::string> names;
    for (const auto& c : continuous_) {
      if (c.name.empty()) fail("continuous parameter with empty name");
      if (!names.insert(c.name).second) fail("duplicate parameter name '" + c.name + "'");
      if (!std::isfinite(c.lower) || !std::isfinite(c.upper))
        fail("parameter '" + c.name + "' has non-finite bounds");
      if (!(c.lower < c.upper))
        fail("parameter '" + c.name + "': lower bound must be < upper bound");
    }
    std::optional<std::size_t> policy, region;
    for (std::size_t i = 0; i < discrete_.size(); ++i) {
      const auto& d = discrete_[i];
      if (d.name.empty()) fail("discrete parameter with empty name");
      if (!names.insert(d.name).second) fail("duplicate parameter name '" + d.name + "'");
      if (d.alternatives.empty()) fail("parameter '" + d.name + "' has no alternatives");
      std::set<std::string> seen(d.alternatives.begin(), d.alternatives.end());
      if (seen.size() != d.alternatives.size())
        fail("parameter '" + d.name + "' has duplicate alternatives");
      if (d.role == DiscreteRole::kPolicy) {
        if (policy) fail("more than one parameter designated 'policy'");
        policy = i;
        if (d.index_of(d.baseline) == kUnknownAlternative)
          fail("policy baseline '" + d.baseline + "' is not one of its alternatives");
      } else if (d.role == DiscreteRole::kRegion) {
        if (region) fail("more than one parameter designated 'region'");
        region = i;
      }
    }
    if (!policy) fail("no parameter designated 'policy'");
    if (!region) fail("no parameter designated 'region'");
    policy_ = *policy;
    region_ = *region;
  }

  std::vector<ContinuousParamSpec> continuous_;
  std::vector<DiscreteParamSpec> discrete_;
  std::size_t policy_ = 0;
  std::size_t region_ = 0;
};

inline ParameterSchema schema_from_json(const nlohmann::json& doc) {
  try {
    std::vector<ContinuousParamSpec> continuous;
    std::vector<DiscreteParamSpec> discrete;
    for (const auto& row : doc.at("continuous")) {
      continuous.push_back({row.at("name").get<std::string>(), row.at("min").get<double>(),
                            row.at("max").get<double>()});
    }
    for (const auto& row : doc.at("discrete")) {
      DiscreteParamSpec spec;
      spec.name = row.at("name").get<std::string>();
      spec.alternatives = row.at("alternatives").get<std::vector<std::string>>();
      const std::string role = row.value("role", std::string("rule"));
      if (role == "policy") {
        spec.role = DiscreteRole::kPolicy;
        spec.baseline = row.at("baseline").get<std::string>();
      } else if (role == "region") {
        spec.role = DiscreteRole::kRegion;
      } else if (role != "rule") {
        throw Error(ErrorCode::kInvalidSchema, "unknown role '" + role + "' for '" + spec.name + "'");
      }
      discrete.push_back(std::move(spec));
    }
    return ParameterSchema(std::move(continuous), std::move(discrete));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidSchema, std::string("malformed schema document: ") + e.what());
  }
}

inline nlohmann::json schema_to_json(const ParameterSchema& schema) {
  nlohmann::json doc;
  doc["format"] = "surrogate-schema/1";
  doc["continuous"] = nlohmann::json::array();
  for (const auto& c : schema.continuous())
    doc["continuous"].push_back({{"name", c.name}, {"max", c.upper}, {"min", c.lower}});
  doc["discrete"] = nlohmann::json::array();
  for (const auto& d : schema.discrete()) {
    nlohmann::json row{{"name", d.name}, {"alternatives", d.alternatives}};
    if (d.role == DiscreteRole::kPolicy) {
      row["role"] = "policy";
      row["baseline"] = d.baseline;
    } else if (d.role == DiscreteRole::kRegion) {
      row["role"] = "region";
    }
    doc["discrete"].push_back(std::move(row));
  }
  return doc;
}

inline ParameterSchema parse_schema(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidSchema, std::string("schema is not valid JSON: ") + e.what());
  }
  return schema_from_json(doc);
}

inline std::string serialize_schema(const ParameterSchema& schema) {
  return schema_to_json(schema).dump(2) + "\n";
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ParameterSchema load_schema(const std::filesystem::path& path) {
  return parse_schema(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Run records

/// One assignment of every schema parameter. Discrete values are stored as
/// alternative indices; kUnknownAlternative marks a symbol outside the schema.
struct Config {
  std::vector<double> continuous;
  std::vector<std::uint32_t> discrete;

  friend bool operator==(const Config&, const Config&) = default;
};

struct RunRecord {
  std::string run_id;
  Config config;
  std::vector<double> indicators;  // aligned with RunCorpus::indicator_names
  bool valid = true;
  std::vector<std::string> unknown_symbols;  // raw text where discrete == kUnknownAlternative
};

struct RunCorpus {
  std::vector<std::string> indicator_names;
  std::vector<RunRecord> records;
  std::size_t valid_count = 0;
  std::size_t invalid_count = 0;

  std::optional<std::size_t> find_indicator(std::string_view name) const {
    for (std::size_t i = 0; i < indicator_names.size(); ++i)
      if (indicator_names[i] == name) return i;
    return std::nullopt;
  }
};

struct Violation {
  enum class Kind { kOutOfBounds, kNonFinite, kUnknownAlternative, kShape };
  Kind kind;
  std::string parameter;
  std::string message;
};

/// Empty iff the record satisfies every schema invariant.
inline std::vector<Violation> validate_record(const RunRecord& record,
                                              const ParameterSchema& schema) {
  std::vector<Violation> out;
  const auto& cont = schema.continuous();
  const auto& disc = schema.discrete();
  if (record.config.continuous.size() != cont.size() || record.config.discrete.size() != disc.size()) {
    out.push_back({Violation::Kind::kShape, "", "record does not match schema shape"});
    return out;
  }
  for (std::size_t i = 0; i < cont.size(); ++i) {
    const double v = record.config.continuous[i];
    const auto& spec = cont[i];
    if (!std::isfinite(v)) {
      out.push_back({Violation::Kind::kNonFinite, spec.name, spec.name + " is not finite"});
    } else if (v > spec.upper) {
      out.push_back({Violation::Kind::kOutOfBounds, spec.name,
                     "out-of-bounds: " + spec.name + " > " + format_double(spec.upper)});
    } else if (v < spec.lower) {
      out.push_back({Violation::Kind::kOutOfBounds, spec.name,
                     "out-of-bounds: " + spec.name + " < " + format_double(spec.lower)});
    }
  }
  for (std::size_t i = 0; i < disc.size(); ++i) {
    const auto idx = record.config.discrete[i];
    if (idx >= disc[i].alternatives.size()) {
      std::string symbol = i < record.unknown_symbols.size() ? record.unknown_symbols[i] : "";
      out.push_back({Violation::Kind::kUnknownAlternative, disc[i].name,
                     "unknown alternative '" + symbol + "' for " + disc[i].name});
    }
  }
  return out;
}

/// Maps schema columns of a header to positions; every schema name is required.
struct SchemaColumns {
  std::vector<std::size_t> continuous;
  std::vector<std::size_t> discrete;

  SchemaColumns(const CsvHeader& header, const ParameterSchema& schema, std::string_view what) {
    for (const auto& c : schema.continuous()) continuous.push_back(header.require(c.name, what));
    for (const auto& d : schema.discrete()) discrete.push_back(header.require(d.name, what));
  }

  /// Parses the schema cells of one row. Unknown discrete symbols become
  /// kUnknownAlternative (recorded in `unknown`); bad numbers throw.
  Config parse(const std::vector<std::string>& fields, const ParameterSchema& schema,
               std::size_t line, std::vector<std::string>* unknown = nullptr) const {
    Config cfg;
    cfg.continuous.resize(continuous.size());
    cfg.discrete.resize(discrete.size());
    if (unknown) unknown->assign(discrete.size(), std::string());
    for (std::size_t i = 0; i < continuous.size(); ++i) {
      auto v = try_parse_double(fields[continuous[i]]);
      if (!v) {
        throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": cannot parse '" +
                                                fields[continuous[i]] + "' as a number for " +
                                                schema.continuous()[i].name);
      }
      cfg.continuous[i] = *v;
    }
    for (std::size_t i = 0; i < discrete.size(); ++i) {
      const auto& text = fields[discrete[i]];
      cfg.discrete[i] = schema.discrete()[i].index_of(text);
      if (cfg.discrete[i] == kUnknownAlternative && unknown) (*unknown)[i] = text;
    }
    return cfg;
  }
};

/// Appends the schema cells of `cfg` to `fields` in schema column order.
inline void append_config_fields(const Config& cfg, const ParameterSchema& schema,
                                 std::vector<std::string>& fields) {
  for (double v : cfg.continuous) fields.push_back(format_double(v));
  for (std::size_t i = 0; i < cfg.discrete.size(); ++i)
    fields.push_back(schema.discrete()[i].alternatives.at(cfg.discrete[i]));
}

/// Reads a run corpus: a header row naming every schema parameter, an
/// optional `run_id` column, and any number of indicator columns. Records that
/// violate the schema are kept with `valid == false`.
inline RunCorpus ingest_runs(std::istream& in, const ParameterSchema& schema) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.read_row(fields)) throw Error(ErrorCode::kEmptyInput, "run corpus has no header row");
  CsvHeader header(fields);
  SchemaColumns columns(header, schema, "run corpus");
  const auto run_id_col = header.find("run_id");

  std::vector<bool> is_param(header.size(), false);
  for (auto c : columns.continuous) is_param[c] = true;
  for (auto c : columns.discrete) is_param[c] = true;
  if (run_id_col) is_param[*run_id_col] = true;

  RunCorpus corpus;
  std::vector<std::size_t> indicator_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!is_param[i]) {
      indicator_cols.push_back(i);
      corpus.indicator_names.push_back(header.names()[i]);
    }
  }

  std::size_t row_index = 0;
  while (reader.read_row(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    const std::size_t line = reader.line();
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": expected " +
                                              std::to_string(header.size()) + " fields, found " +
                                              std::to_string(fields.size()));
    }
    RunRecord rec;
    rec.run_id = run_id_col ? fields[*run_id_col] : std::to_string(row_index);
    rec.config = columns.parse(fields, schema, line, &rec.unknown_symbols);
    rec.indicators.reserve(indicator_cols.size());
    for (std::size_t k = 0; k < indicator_cols.size(); ++k) {
      auto v = try_parse_double(fields[indicator_cols[k]]);
      if (!v) {
        throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": cannot parse '" +
                                                fields[indicator_cols[k]] + "' as a number for " +
                                                corpus.indicator_names[k]);
      }
      rec.indicators.push_back(*v);
    }
    rec.valid = validate_record(rec, schema).empty();
    (rec.valid ? corpus.valid_count : corpus.invalid_count) += 1;
    corpus.records.push_back(std::move(rec));
    ++row_index;
  }
  return corpus;
}

inline RunCorpus ingest_runs(const std::filesystem::path& path, const ParameterSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path.string() + "'");
  return ingest_runs(in, schema);
}

}  // namespace surrogate
