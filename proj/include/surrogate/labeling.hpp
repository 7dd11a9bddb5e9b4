#pragma once

// Optimal/non-optimal labels from two indicator columns, and the train/test
// split. Thresholds are pooled over the whole corpus, never per region.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "surrogate/error.hpp"
#include "surrogate/features.hpp"
#include "surrogate/rng.hpp"
#include "surrogate/schema.hpp"

namespace surrogate {

struct LabelSpec {
  std::string high_indicator = "gdp_index";
  std::string low_indicator = "gini_index";
  double high_quantile = 0.75;
  double low_quantile = 0.25;

  void validate() const {
    auto in_open_unit = [](double q) { return q > 0.0 && q < 1.0; };
    if (!in_open_unit(high_quantile) || !in_open_unit(low_quantile))
      throw Error(ErrorCode::kInvalidArgument, "label quantiles must lie in (0, 1)");
    if (high_indicator.empty() || low_indicator.empty())
      throw Error(ErrorCode::kInvalidArgument, "label indicators must be named");
    if (high_indicator == low_indicator)
      throw Error(ErrorCode::kInvalidArgument, "label indicators must be distinct");
  }

  nlohmann::json to_json() const {
    return {{"high_indicator", high_indicator},
            {"low_indicator", low_indicator},
            {"high_quantile", high_quantile},
            {"low_quantile", low_quantile}};
  }

  static LabelSpec from_json(const nlohmann::json& doc) {
    LabelSpec spec;
    spec.high_indicator = doc.value("high_indicator", spec.high_indicator);
    spec.low_indicator = doc.value("low_indicator", spec.low_indicator);
    spec.high_quantile = doc.value("high_quantile", spec.high_quantile);
    spec.low_quantile = doc.value("low_quantile", spec.low_quantile);
    spec.validate();
    return spec;
  }
};

/// Type-7 quantile: linear interpolation at h = (n - 1) q of the sorted values.
inline double compute_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "quantile level outside [0, 1]");
  for (double v : values)
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "quantile input is not finite");

  std::vector<double> work(values.begin(), values.end());
  const double h = static_cast<double>(work.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(lo), work.end());
  const double x_lo = work[lo];
  if (frac == 0.0 || lo + 1 == work.size()) return x_lo;
  const double x_hi = *std::min_element(work.begin() + static_cast<std::ptrdiff_t>(lo) + 1, work.end());
  return x_lo + frac * (x_hi - x_lo);
}

struct LabelThresholds {
  double high = 0.0;  // label needs high indicator >= this
  double low = 0.0;   // and low indicator <= this
};

inline LabelThresholds label_thresholds(std::span<const double> high_values,
                                        std::span<const double> low_values, const LabelSpec& spec) {
  spec.validate();
  return {compute_quantile(high_values, spec.high_quantile),
          compute_quantile(low_values, spec.low_quantile)};
}

/// Labels aligned with the inputs: 1 iff high >= Q(high_quantile) and low <= Q(low_quantile).
inline std::vector<std::uint8_t> compute_labels(std::span<const double> high_values,
                                                std::span<const double> low_values,
                                                const LabelSpec& spec) {
  if (high_values.size() != low_values.size())
    throw Error(ErrorCode::kDimensionMismatch, "indicator columns differ in length");
  const auto t = label_thresholds(high_values, low_values, spec);
  std::vector<std::uint8_t> labels(high_values.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    labels[i] = (high_values[i] >= t.high && low_values[i] <= t.low) ? 1 : 0;
  return labels;
}

struct LabeledDataset {
  FeatureMatrix features;
  std::vector<std::uint8_t> labels;
  std::vector<std::string> provenance;  // run ids
  std::vector<Config> configs;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t positives() const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  }

  LabeledDataset subset(std::span<const std::size_t> rows) const {
    LabeledDataset out;
    out.features = features.select_rows(rows);
    for (auto r : rows) {
      out.labels.push_back(labels[r]);
      out.provenance.push_back(provenance[r]);
      if (!configs.empty()) out.configs.push_back(configs[r]);
    }
    return out;
  }
};

struct LabelSummary {
  LabelThresholds thresholds;
  std::size_t labeled = 0;
  std::size_t skipped_invalid = 0;
  std::size_t positives = 0;
};

/// Labels every valid record of the corpus. Invalid records are left out of
/// both the quantile pool and the dataset.
inline LabeledDataset label_dataset(const RunCorpus& corpus, const ParameterSchema& schema,
                                    const LabelSpec& spec, LabelSummary* summary = nullptr) {
  spec.validate();
  const auto hi = corpus.find_indicator(spec.high_indicator);
  const auto lo = corpus.find_indicator(spec.low_indicator);
  if (!hi) throw Error(ErrorCode::kMissingIndicator, "indicator '" + spec.high_indicator + "' not in corpus");
  if (!lo) throw Error(ErrorCode::kMissingIndicator, "indicator '" + spec.low_indicator + "' not in corpus");

  std::vector<double> high_values;
  std::vector<double> low_values;
  LabeledDataset out;
  for (const auto& rec : corpus.records) {
    if (!rec.valid) continue;
    high_values.push_back(rec.indicators.at(*hi));
    low_values.push_back(rec.indicators.at(*lo));
    out.provenance.push_back(rec.run_id);
    out.configs.push_back(rec.config);
  }
  if (high_values.empty()) throw Error(ErrorCode::kEmptyInput, "corpus has no valid records to label");

  out.labels = compute_labels(high_values, low_values, spec);
  out.features = encode_features(std::span<const Config>(out.configs), schema);
  if (summary) {
    summary->thresholds = label_thresholds(high_values, low_values, spec);
    summary->labeled = out.size();
    summary->skipped_invalid = corpus.records.size() - out.size();
    summary->positives = out.positives();
  }
  return out;
}

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Test size is round(fraction * n). When stratified, class 1 contributes
/// round(fraction * n1) rows and class 0 the rest. Both lists come back sorted.
inline SplitIndices split_indices(std::span<const std::uint8_t> labels, double test_fraction,
                                  std::uint64_t seed, bool stratified) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "test fraction must lie in (0, 1)");
  const std::size_t n = labels.size();
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n)
    throw Error(ErrorCode::kInvalidArgument, "test fraction " + format_double(test_fraction) +
                                                 " leaves an empty split of " + std::to_string(n) + " rows");

  SplitIndices out;
  std::vector<bool> in_test(n, false);
  if (!stratified) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    SplitMix64 rng(derive_seed(seed, StreamTag::kSplit, 0));
    shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < n_test; ++i) in_test[order[i]] = true;
  } else {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i] ? 1 : 0].push_back(i);
    auto take1 = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(by_class[1].size())));
    take1 = std::min(take1, n_test);
    std::size_t take0 = n_test - take1;
    if (take0 > by_class[0].size()) {
      take1 += take0 - by_class[0].size();
      take0 = by_class[0].size();
    }
    const std::size_t take[2] = {take0, take1};
    for (int c = 0; c < 2; ++c) {
      SplitMix64 rng(derive_seed(seed, StreamTag::kSplit, static_cast<std::uint64_t>(c) + 1));
      shuffle(by_class[c].begin(), by_class[c].end(), rng);
      for (std::size_t i = 0; i < take[c]; ++i) in_test[by_class[c][i]] = true;
    }
  }
  for (std::size_t i = 0; i < n; ++i) (in_test[i] ? out.test : out.train).push_back(i);
  return out;
}

inline std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& labeled,
                                                                  double test_fraction,
                                                                  std::uint64_t seed,
                                                                  bool stratified = true) {
  auto idx = split_indices(labeled.labels, test_fraction, seed, stratified);
  return {labeled.subset(idx.train), labeled.subset(idx.test)};
}

}  // namespace surrogate
