#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "surrogate/labeling.hpp"
#include "surrogate/rng.hpp"

using namespace surrogate;
using testing_support::small_schema;

namespace {

// Corpus over the small schema with the given indicator columns.
RunCorpus corpus_from(const std::vector<double>& gdp, const std::vector<double>& gini, std::uint64_t seed = 1) {
  SplitMix64 rng(seed);
  RunCorpus c;
  c.indicator_names = {"gdp_index", "gini_index"};
  for (std::size_t i = 0; i < gdp.size(); ++i) {
    RunRecord r;
    r.run_id = "r" + std::to_string(i);
    r.config.continuous = {0.5 * uniform_open01(rng), 3600 * uniform_open01(rng)};
    r.config.discrete = {static_cast<std::uint32_t>(uniform_index(rng, 3)),
                         static_cast<std::uint32_t>(uniform_index(rng, 4)),
                         static_cast<std::uint32_t>(uniform_index(rng, 3))};
    r.indicators = {gdp[i], gini[i]};
    c.records.push_back(r);
  }
  c.valid_count = gdp.size();
  return c;
}

std::vector<double> uniform(std::size_t n, SplitMix64& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform_open01(rng);
  return v;
}

}  // namespace

TEST(Quantile, Examples) {
  const std::vector<double> five{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(compute_quantile(five, 0.5), 3.0);
  const std::vector<double> two{0, 10};
  EXPECT_DOUBLE_EQ(compute_quantile(two, 0.75), 7.5);
  const std::vector<double> one{4};
  EXPECT_DOUBLE_EQ(compute_quantile(one, 0.25), 4.0);
  const std::vector<double> shuffled{5, 1, 4, 2, 3};
  EXPECT_DOUBLE_EQ(compute_quantile(shuffled, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(compute_quantile(shuffled, 0.1), 1.4);
}

TEST(Quantile, Errors) {
  const std::vector<double> empty;
  EXPECT_THROW(compute_quantile(empty, 0.5), Error);
  const std::vector<double> nan{1, std::nan("")};
  EXPECT_THROW(compute_quantile(nan, 0.5), Error);
}

TEST(Quantile, UniformDrawsMatchFullSort) {
  SplitMix64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto v = uniform(1000, rng);
    const double q = compute_quantile(v, 0.25);
    EXPECT_NEAR(q, 0.25, 0.05);
    EXPECT_DOUBLE_EQ(q, oracle::quantile_sorted(v, 0.25));
    EXPECT_DOUBLE_EQ(compute_quantile(v, 0.75), oracle::quantile_sorted(v, 0.75));
  }
}

TEST(Labeling, DominantRecordIsOptimal) {
  SplitMix64 rng(3);
  auto gdp = uniform(200, rng), gini = uniform(200, rng);
  gdp[17] = 2.0;
  gini[17] = -1.0;
  const auto data = label_dataset(corpus_from(gdp, gini), small_schema(), LabelSpec{});
  EXPECT_EQ(data.labels[17], 1);
}

TEST(Labeling, MedianGdpIsNotOptimal) {
  std::vector<double> gdp, gini;
  for (int i = 0; i < 101; ++i) {
    gdp.push_back(i);
    gini.push_back(i == 50 ? -100.0 : i);
  }
  const auto data = label_dataset(corpus_from(gdp, gini), small_schema(), LabelSpec{});
  EXPECT_EQ(data.labels[50], 0);
}

// 25% of rows share the top gdp quartile and the bottom gini quartile.
TEST(Labeling, ConstructedQuarterCorpus) {
  const std::size_t n = 1000;
  std::vector<double> gdp(n), gini(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool top = i % 4 == 0;
    gdp[i] = top ? 10.0 + static_cast<double>(i) : static_cast<double>(i) / n;
    gini[i] = top ? -10.0 - static_cast<double>(i) : static_cast<double>(i) / n;
  }
  const auto data = label_dataset(corpus_from(gdp, gini), small_schema(), LabelSpec{});
  const auto expected = oracle::labels(gdp, gini, 0.75, 0.25);
  EXPECT_EQ(data.labels, expected);
  EXPECT_NEAR(static_cast<double>(data.positives()) / n, 0.25, 0.002);
}

TEST(Labeling, AgreesWithFullSortOracle) {
  SplitMix64 rng(99);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 100 + uniform_index(rng, 900);
    auto gdp = uniform(n, rng), gini = uniform(n, rng);
    // Ties on purpose.
    for (std::size_t i = 0; i < n; i += 7) gdp[i] = std::round(gdp[i] * 10) / 10;
    LabelSpec spec;
    spec.high_quantile = 0.5 + 0.45 * uniform_open01(rng);
    spec.low_quantile = 0.05 + 0.45 * uniform_open01(rng);
    const auto data = label_dataset(corpus_from(gdp, gini), small_schema(), spec);
    EXPECT_EQ(data.labels, oracle::labels(gdp, gini, spec.high_quantile, spec.low_quantile));
  }
}

TEST(Labeling, PositiveRateBound) {
  SplitMix64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 50 + uniform_index(rng, 500);
    auto gdp = uniform(n, rng), gini = uniform(n, rng);
    if (rep % 2) gini = gdp;  // perfectly correlated
    const auto data = label_dataset(corpus_from(gdp, gini), small_schema(), LabelSpec{});
    const double rate = static_cast<double>(data.positives()) / static_cast<double>(n);
    EXPECT_LE(rate, 0.25 + 2.0 / static_cast<double>(n));
  }
}

TEST(Labeling, MonotoneTransformInvariance) {
  SplitMix64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    auto gdp = uniform(400, rng), gini = uniform(400, rng);
    const auto base = label_dataset(corpus_from(gdp, gini), small_schema(), LabelSpec{}).labels;
    std::vector<double> gdp2(gdp.size()), gini2(gini.size());
    for (std::size_t i = 0; i < gdp.size(); ++i) {
      gdp2[i] = std::exp(3 * gdp[i]) - 7;
      gini2[i] = -1.0 / (gini[i] + 1.0);  // increasing too
    }
    EXPECT_EQ(label_dataset(corpus_from(gdp2, gini2), small_schema(), LabelSpec{}).labels, base);
    // A decreasing map on gini with the complementary quantile.
    for (std::size_t i = 0; i < gini.size(); ++i) gini2[i] = -gini[i];
    std::vector<std::uint8_t> flipped(gdp.size());
    const double th = compute_quantile(gdp, 0.75), tl = compute_quantile(gini2, 0.75);
    for (std::size_t i = 0; i < gdp.size(); ++i) flipped[i] = gdp[i] >= th && gini2[i] >= tl;
    EXPECT_EQ(flipped, base);
  }
}

TEST(Labeling, InvalidRecordsAreLeftOut) {
  auto c = corpus_from({1, 2, 3, 4}, {4, 3, 2, 1});
  c.records[2].valid = false;
  LabelSummary summary;
  const auto data = label_dataset(c, small_schema(), LabelSpec{}, &summary);
  EXPECT_EQ(data.size(), 3u);
  EXPECT_EQ(summary.skipped_invalid, 1u);
  EXPECT_EQ(data.provenance, (std::vector<std::string>{"r0", "r1", "r3"}));
  EXPECT_EQ(data.features.rows(), 3u);
}

TEST(Labeling, Errors) {
  auto c = corpus_from({1, 2}, {1, 2});
  LabelSpec spec;
  spec.high_indicator = "output";
  EXPECT_THROW(label_dataset(c, small_schema(), spec), Error);
  try {
    label_dataset(c, small_schema(), spec);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingIndicator);
  }
  LabelSpec same;
  same.low_indicator = same.high_indicator;
  EXPECT_THROW(same.validate(), Error);
  LabelSpec q;
  q.high_quantile = 1.0;
  EXPECT_THROW(q.validate(), Error);
}

TEST(Split, FullCorpusTestSize) {
  std::vector<std::uint8_t> labels(11076, 0);
  for (std::size_t i = 0; i < labels.size(); i += 9) labels[i] = 1;
  for (bool strat : {false, true}) {
    const auto s = split_indices(labels, 0.25, 42, strat);
    EXPECT_EQ(s.test.size(), 2769u);
    EXPECT_EQ(s.train.size(), 11076u - 2769u);
  }
}

TEST(Split, TwoRows) {
  const std::vector<std::uint8_t> labels{0, 1};
  const auto s = split_indices(labels, 0.5, 1, false);
  EXPECT_EQ(s.train.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
}

TEST(Split, PartitionAndDeterminism) {
  SplitMix64 rng(4);
  std::vector<std::uint8_t> labels(1234);
  for (auto& l : labels) l = uniform_open01(rng) < 0.12;
  for (bool strat : {false, true}) {
    const auto a = split_indices(labels, 0.3, 77, strat);
    const auto b = split_indices(labels, 0.3, 77, strat);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    std::set<std::size_t> all(a.train.begin(), a.train.end());
    for (auto i : a.test) EXPECT_TRUE(all.insert(i).second);
    EXPECT_EQ(all.size(), labels.size());
    const auto c = split_indices(labels, 0.3, 78, strat);
    EXPECT_NE(a.test, c.test);
  }
}

TEST(Split, StratifiedKeepsClassCounts) {
  SplitMix64 rng(6);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 20 + uniform_index(rng, 3000);
    std::vector<std::uint8_t> labels(n);
    for (auto& l : labels) l = uniform_open01(rng) < 0.15;
    const double frac = 0.1 + 0.5 * uniform_open01(rng);
    if (std::llround(frac * n) == 0) continue;
    const auto s = split_indices(labels, frac, rep, true);
    double ones = 0, test_ones = 0;
    for (auto l : labels) ones += l;
    for (auto i : s.test) test_ones += labels[i];
    EXPECT_LE(std::abs(test_ones - frac * ones), 1.0);
    const double test0 = static_cast<double>(s.test.size()) - test_ones;
    EXPECT_LE(std::abs(test0 - frac * (static_cast<double>(n) - ones)), 1.0 + 1e-9);
  }
}

TEST(Split, EmptySplitIsAnError) {
  const std::vector<std::uint8_t> labels{0, 1, 0};
  EXPECT_THROW(split_indices(labels, 0.1, 1, false), Error);
  EXPECT_THROW(split_indices(labels, 0.9, 1, false), Error);
  EXPECT_THROW(split_indices(labels, 0.0, 1, false), Error);
  EXPECT_THROW(split_indices(labels, 1.0, 1, true), Error);
}

TEST(Split, SplitTrainTestCarriesRows) {
  SplitMix64 rng(12);
  auto gdp = uniform(100, rng), gini = uniform(100, rng);
  const auto data = label_dataset(corpus_from(gdp, gini), small_schema(), LabelSpec{});
  const auto [train, test] = split_train_test(data, 0.25, 5);
  EXPECT_EQ(train.size() + test.size(), 100u);
  EXPECT_EQ(test.size(), 25u);
  EXPECT_EQ(train.positives() + test.positives(), data.positives());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto k = std::stoul(test.provenance[i].substr(1));
    EXPECT_EQ(test.labels[i], data.labels[k]);
    for (std::size_t c = 0; c < data.features.cols(); ++c) EXPECT_EQ(test.features.at(i, c), data.features.at(k, c));
  }
}
