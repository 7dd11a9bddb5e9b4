#pragma once

// Feature encoding: continuous parameters are copied verbatim, every discrete
// parameter (rules, policy and region alike) expands to one-hot columns.
// Column order is schema order, alternatives in declared order.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "surrogate/error.hpp"
#include "surrogate/schema.hpp"

namespace surrogate {

struct EncodedParam {
  std::string name;
  bool discrete = false;
  std::size_t first_column = 0;
  std::size_t width = 1;
  std::vector<std::string> alternatives;

  friend bool operator==(const EncodedParam&, const EncodedParam&) = default;
};

class FeatureEncoding {
 public:
  FeatureEncoding() = default;

  static FeatureEncoding from_schema(const ParameterSchema& schema) {
    FeatureEncoding enc;
    std::size_t col = 0;
    for (const auto& c : schema.continuous()) {
      enc.params_.push_back({c.name, false, col, 1, {}});
      enc.columns_.push_back(c.name);
      ++col;
    }
    for (const auto& d : schema.discrete()) {
      enc.params_.push_back({d.name, true, col, d.alternatives.size(), d.alternatives});
      for (const auto& alt : d.alternatives) enc.columns_.push_back(d.name + "=" + alt);
      col += d.alternatives.size();
    }
    return enc;
  }

  std::size_t n_columns() const noexcept { return columns_.size(); }
  const std::vector<std::string>& column_names() const noexcept { return columns_; }
  const std::vector<EncodedParam>& params() const noexcept { return params_; }

  /// Writes the encoded form of `cfg` into `row` (size n_columns()).
  void encode(const Config& cfg, std::span<double> row) const {
    std::size_t n_cont = 0;
    for (const auto& p : params_) n_cont += p.discrete ? 0 : 1;
    if (row.size() != n_columns() || cfg.continuous.size() != n_cont ||
        cfg.continuous.size() + cfg.discrete.size() != params_.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "config does not match feature encoding");
    }
    std::size_t ci = 0;
    std::size_t di = 0;
    for (const auto& p : params_) {
      if (!p.discrete) {
        row[p.first_column] = cfg.continuous[ci++];
        continue;
      }
      const auto idx = cfg.discrete[di++];
      if (idx >= p.width) {
        throw Error(ErrorCode::kEncodingMismatch, "unknown alternative for '" + p.name + "'");
      }
      for (std::size_t k = 0; k < p.width; ++k) row[p.first_column + k] = (k == idx) ? 1.0 : 0.0;
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : params_) {
      nlohmann::json row{{"name", p.name}, {"first_column", p.first_column}, {"width", p.width}};
      if (p.discrete) row["alternatives"] = p.alternatives;
      out.push_back(std::move(row));
    }
    return out;
  }

  static FeatureEncoding from_json(const nlohmann::json& doc) {
    FeatureEncoding enc;
    for (const auto& row : doc) {
      EncodedParam p;
      p.name = row.at("name").get<std::string>();
      p.first_column = row.at("first_column").get<std::size_t>();
      p.width = row.at("width").get<std::size_t>();
      p.discrete = row.contains("alternatives");
      if (p.first_column != enc.columns_.size())
        throw Error(ErrorCode::kCorruptFile, "feature encoding columns are not contiguous");
      if (p.discrete) {
        p.alternatives = row.at("alternatives").get<std::vector<std::string>>();
        if (p.alternatives.size() != p.width)
          throw Error(ErrorCode::kCorruptFile, "one-hot width does not match alternatives");
        for (const auto& alt : p.alternatives) enc.columns_.push_back(p.name + "=" + alt);
      } else {
        enc.columns_.push_back(p.name);
      }
      enc.params_.push_back(std::move(p));
    }
    return enc;
  }

  friend bool operator==(const FeatureEncoding& a, const FeatureEncoding& b) {
    return a.params_ == b.params_;
  }

 private:
  std::vector<EncodedParam> params_;
  std::vector<std::string> columns_;
};

/// Dense row-major design matrix plus the encoding that produced it.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                FeatureEncoding encoding = {})
      : rows_(rows), cols_(cols), data_(std::move(data)), encoding_(std::move(encoding)) {
    if (data_.size() != rows_ * cols_)
      throw Error(ErrorCode::kDimensionMismatch, "matrix data does not match its shape");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  const std::vector<double>& data() const noexcept { return data_; }
  const FeatureEncoding& encoding() const noexcept { return encoding_; }

  /// Rows `indices` in the given order.
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const {
    std::vector<double> out;
    out.reserve(indices.size() * cols_);
    for (auto i : indices) {
      auto r = row(i);
      out.insert(out.end(), r.begin(), r.end());
    }
    return FeatureMatrix(indices.size(), cols_, std::move(out), encoding_);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  FeatureEncoding encoding_;
};

inline FeatureMatrix encode_features(std::span<const Config> configs, const ParameterSchema& schema) {
  auto enc = FeatureEncoding::from_schema(schema);
  const std::size_t cols = enc.n_columns();
  std::vector<double> data(configs.size() * cols);
  for (std::size_t i = 0; i < configs.size(); ++i)
    enc.encode(configs[i], std::span<double>(data.data() + i * cols, cols));
  return FeatureMatrix(configs.size(), cols, std::move(data), std::move(enc));
}

inline FeatureMatrix encode_features(std::span<const RunRecord> records, const ParameterSchema& schema) {
  std::vector<Config> configs;
  configs.reserve(records.size());
  for (const auto& r : records) configs.push_back(r.config);
  return encode_features(std::span<const Config>(configs), schema);
}

}  // namespace surrogate
