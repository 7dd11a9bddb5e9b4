#pragma once

// New configurations drawn from the empirical sample: continuous parameters
// from a truncated normal with the sample mean and three times the sample
// standard deviation, discrete parameters uniformly over their alternatives.
//
// Config i always comes from its own stream derive_seed(master, kConfig, i),
// so any sharding of [0, n) concatenates to the single-threaded output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "surrogate/csv.hpp"
#include "surrogate/error.hpp"
#include "surrogate/numerics.hpp"
#include "surrogate/rng.hpp"
#include "surrogate/schema.hpp"

namespace surrogate {

inline constexpr double kStdInflation = 3.0;

struct EmpiricalMoments {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> std;  // sample standard deviation (n - 1)

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < names.size(); ++i)
      rows.push_back({{"name", names[i]}, {"mean", mean[i]}, {"std", std[i]}});
    return {{"parameters", rows}};
  }

  static EmpiricalMoments from_json(const nlohmann::json& doc, const ParameterSchema& schema) {
    EmpiricalMoments m;
    const auto& rows = doc.at("parameters");
    if (rows.size() != schema.continuous().size())
      throw Error(ErrorCode::kDimensionMismatch, "moments do not cover the schema's continuous parameters");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto name = rows[i].at("name").get<std::string>();
      if (name != schema.continuous()[i].name)
        throw Error(ErrorCode::kDimensionMismatch, "moments parameter '" + name + "' out of schema order");
      m.names.push_back(name);
      m.mean.push_back(rows[i].at("mean").get<double>());
      m.std.push_back(rows[i].at("std").get<double>());
    }
    return m;
  }
};

/// Mean and sample std per continuous parameter over the valid records.
inline EmpiricalMoments fit_moments(std::span<const RunRecord> records, const ParameterSchema& schema) {
  const std::size_t p = schema.continuous().size();
  std::vector<double> mean(p, 0.0);
  std::vector<double> m2(p, 0.0);
  std::size_t n = 0;
  for (const auto& rec : records) {
    if (!rec.valid) continue;
    if (rec.config.continuous.size() != p)
      throw Error(ErrorCode::kDimensionMismatch, "record does not match schema");
    ++n;
    for (std::size_t j = 0; j < p; ++j) {
      const double x = rec.config.continuous[j];
      const double d = x - mean[j];
      mean[j] += d / static_cast<double>(n);
      m2[j] += d * (x - mean[j]);
    }
  }
  if (n < 2) throw Error(ErrorCode::kEmptyInput, "need at least 2 valid records to fit moments");
  EmpiricalMoments out;
  for (std::size_t j = 0; j < p; ++j) {
    out.names.push_back(schema.continuous()[j].name);
    out.mean.push_back(mean[j]);
    out.std.push_back(std::sqrt(std::max(0.0, m2[j]) / static_cast<double>(n - 1)));
  }
  return out;
}

/// Normal(mu, sigma^2) restricted to [lower, upper], sampled by inverse CDF.
class TruncatedNormal {
 public:
  TruncatedNormal(double mu, double sigma, double lower, double upper)
      : mu_(mu), sigma_(sigma), lower_(lower), upper_(upper) {
    if (!(lower < upper)) throw Error(ErrorCode::kInvalidArgument, "truncation bounds need lower < upper");
    degenerate_ = !(sigma > 0.0) || !std::isfinite(sigma);
    if (degenerate_) return;
    double a = (lower - mu) / sigma;
    double b = (upper - mu) / sigma;
    // Work in the left half so tail probabilities keep their precision.
    reflect_ = a > 0.0;
    if (reflect_) {
      std::swap(a, b);
      a = -a;
      b = -b;
    }
    a_ = a;
    b_ = b;
    cdf_a_ = normal_cdf(a);
    cdf_b_ = normal_cdf(b);
  }

  template <typename Rng>
  double operator()(Rng& rng) const {
    if (degenerate_) return std::clamp(mu_, lower_, upper_);
    const double u = uniform_open01(rng);
    const double mass = cdf_b_ - cdf_a_;
    double z;
    if (mass > 0.0) {
      z = normal_quantile(cdf_a_ + u * mass);
    } else {
      // Both bounds deep in the left tail: exponential approximation at b.
      z = b_ + std::log(u) / std::max(std::abs(b_), 1.0);
    }
    z = std::clamp(z, a_, b_);
    if (reflect_) z = -z;
    return std::clamp(mu_ + sigma_ * z, lower_, upper_);
  }

  bool degenerate() const noexcept { return degenerate_; }

 private:
  double mu_, sigma_, lower_, upper_;
  bool degenerate_ = false;
  bool reflect_ = false;
  double a_ = 0.0, b_ = 0.0, cdf_a_ = 0.0, cdf_b_ = 0.0;
};

template <typename Rng>
double sample_continuous(const ContinuousParamSpec& spec, double mean, double std, Rng& rng) {
  return TruncatedNormal(mean, kStdInflation * std, spec.lower, spec.upper)(rng);
}

template <typename Rng>
std::uint32_t sample_discrete(const DiscreteParamSpec& spec, Rng& rng) {
  return static_cast<std::uint32_t>(uniform_index(rng, spec.alternatives.size()));
}

class ConfigGenerator {
 public:
  ConfigGenerator(const ParameterSchema& schema, const EmpiricalMoments& moments, std::uint64_t master_seed)
      : schema_(schema), master_seed_(master_seed) {
    const auto& cont = schema.continuous();
    if (moments.mean.size() != cont.size() || moments.std.size() != cont.size())
      throw Error(ErrorCode::kDimensionMismatch, "moments do not match schema");
    for (std::size_t j = 0; j < cont.size(); ++j)
      samplers_.emplace_back(moments.mean[j], kStdInflation * moments.std[j], cont[j].lower, cont[j].upper);
  }

  Config operator()(std::uint64_t index) const {
    SplitMix64 rng(derive_seed(master_seed_, StreamTag::kConfig, index));
    Config cfg;
    cfg.continuous.reserve(samplers_.size());
    for (const auto& s : samplers_) cfg.continuous.push_back(s(rng));
    for (const auto& d : schema_.discrete()) cfg.discrete.push_back(sample_discrete(d, rng));
    return cfg;
  }

  /// Configs [first, first + count).
  std::vector<Config> range(std::uint64_t first, std::uint64_t count) const {
    std::vector<Config> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) out.push_back((*this)(first + i));
    return out;
  }

  /// Shard k of K covers [k n / K, (k + 1) n / K).
  std::vector<Config> shard(std::uint64_t k, std::uint64_t shards, std::uint64_t n) const {
    if (shards == 0 || k >= shards) throw Error(ErrorCode::kInvalidArgument, "shard index out of range");
    const auto first = static_cast<std::uint64_t>(static_cast<unsigned __int128>(n) * k / shards);
    const auto last = static_cast<std::uint64_t>(static_cast<unsigned __int128>(n) * (k + 1) / shards);
    return range(first, last - first);
  }

 private:
  const ParameterSchema& schema_;
  std::uint64_t master_seed_;
  std::vector<TruncatedNormal> samplers_;
};

inline std::vector<Config> generate_configs(const ParameterSchema& schema, const EmpiricalMoments& moments,
                                            std::uint64_t n, std::uint64_t master_seed) {
  return ConfigGenerator(schema, moments, master_seed).range(0, n);
}

// ---------------------------------------------------------------------------
// Config files: `config_id` then the schema columns.

inline void write_config_header(std::ostream& out, const ParameterSchema& schema) {
  std::vector<std::string> header{"config_id"};
  for (auto& name : schema.column_names()) header.push_back(name);
  write_csv_row(out, header);
}

inline void write_config_row(std::ostream& out, const ParameterSchema& schema, std::uint64_t id,
                             const Config& cfg, std::vector<std::string>& scratch) {
  scratch.clear();
  scratch.push_back(std::to_string(id));
  append_config_fields(cfg, schema, scratch);
  write_csv_row(out, scratch);
}

/// Streams `n` generated configs in batches of `batch`.
inline void write_generated_configs(std::ostream& out, const ParameterSchema& schema,
                                    const ConfigGenerator& gen, std::uint64_t n,
                                    std::uint64_t batch = 65536) {
  write_config_header(out, schema);
  std::vector<std::string> scratch;
  for (std::uint64_t first = 0; first < n; first += batch) {
    const auto count = std::min(batch, n - first);
    const auto configs = gen.range(first, count);
    for (std::uint64_t i = 0; i < count; ++i) write_config_row(out, schema, first + i, configs[i], scratch);
  }
}

/// Batched reader for config files (any extra columns are ignored).
class ConfigReader {
 public:
  ConfigReader(std::istream& in, const ParameterSchema& schema) : reader_(in), schema_(schema) {
    std::vector<std::string> fields;
    if (!reader_.read_row(fields)) throw Error(ErrorCode::kEmptyInput, "config file has no header row");
    header_ = CsvHeader(fields);
    columns_.emplace(header_, schema, "config file");
    id_col_ = header_.find("config_id");
  }

  const CsvHeader& header() const noexcept { return header_; }

  /// Appends up to `max` configs; returns how many were read.
  std::size_t read_batch(std::vector<Config>& configs, std::vector<std::string>& ids, std::size_t max) {
    std::size_t got = 0;
    while (got < max && reader_.read_row(fields_)) {
      if (fields_.size() == 1 && fields_[0].empty()) continue;
      if (fields_.size() != header_.size())
        throw Error(ErrorCode::kParseError, "line " + std::to_string(reader_.line()) + ": expected " +
                                                std::to_string(header_.size()) + " fields");
      std::vector<std::string> unknown;
      Config cfg = columns_->parse(fields_, schema_, reader_.line(), &unknown);
      for (std::size_t i = 0; i < cfg.discrete.size(); ++i)
        if (cfg.discrete[i] == kUnknownAlternative)
          throw Error(ErrorCode::kEncodingMismatch, "line " + std::to_string(reader_.line()) +
                                                        ": unknown alternative '" + unknown[i] + "' for " +
                                                        schema_.discrete()[i].name);
      configs.push_back(std::move(cfg));
      ids.push_back(id_col_ ? fields_[*id_col_] : std::to_string(next_row_));
      ++next_row_;
      ++got;
    }
    return got;
  }

 private:
  CsvReader reader_;
  const ParameterSchema& schema_;
  CsvHeader header_;
  std::optional<SchemaColumns> columns_;
  std::optional<std::size_t> id_col_;
  std::vector<std::string> fields_;
  std::uint64_t next_row_ = 0;
};

}  // namespace surrogate
