#pragma once

// Bagged CART forest over an encoded feature matrix.
//
// Trees are stored as flat pre-order node lists: an internal node's left
// child is the next node, its right child is at `right`. Rows go left when
// x[feature] <= threshold.
//
// Split scores are compared exactly. For a split into children L and R with
// class counts (a, b), the weighted child Gini impurity is
//   (n - S) / n   with   S = (aL^2 + bL^2) / nL + (aR^2 + bR^2) / nR,
// so minimizing impurity is maximizing S, and S is compared as a fraction in
// 128-bit integers. Bootstrap duplicates are carried as integer row weights.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "surrogate/error.hpp"
#include "surrogate/features.hpp"
#include "surrogate/hash.hpp"
#include "surrogate/labeling.hpp"
#include "surrogate/rng.hpp"

namespace surrogate {

struct ForestParams {
  std::uint32_t n_trees = 10000;
  std::uint32_t max_depth = 15;
  std::uint32_t features_per_split = 0;  // 0 = ceil(sqrt(columns))
  std::uint32_t min_samples_leaf = 1;
  bool bootstrap = true;

  std::size_t resolved_features(std::size_t columns) const {
    if (features_per_split != 0) return std::min<std::size_t>(features_per_split, columns);
    std::size_t k = 0;
    while (k * k < columns) ++k;
    return std::max<std::size_t>(k, 1);
  }

  void validate() const {
    if (n_trees == 0) throw Error(ErrorCode::kInvalidArgument, "n_trees must be at least 1");
    if (max_depth == 0) throw Error(ErrorCode::kInvalidArgument, "max_depth must be at least 1");
    if (min_samples_leaf == 0) throw Error(ErrorCode::kInvalidArgument, "min_samples_leaf must be at least 1");
  }

  nlohmann::json to_json() const {
    return {{"n_trees", n_trees},
            {"max_depth", max_depth},
            {"features_per_split", features_per_split},
            {"min_samples_leaf", min_samples_leaf},
            {"bootstrap", bootstrap}};
  }

  static ForestParams from_json(const nlohmann::json& doc, ForestParams base) {
    base.n_trees = doc.value("n_trees", base.n_trees);
    base.max_depth = doc.value("max_depth", base.max_depth);
    base.features_per_split = doc.value("features_per_split", base.features_per_split);
    base.min_samples_leaf = doc.value("min_samples_leaf", base.min_samples_leaf);
    base.bootstrap = doc.value("bootstrap", base.bootstrap);
    base.validate();
    return base;
  }
  static ForestParams from_json(const nlohmann::json& doc) { return from_json(doc, ForestParams()); }

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// 1 - p0^2 - p1^2.
inline double gini_impurity(std::uint64_t count0, std::uint64_t count1) {
  const std::uint64_t total = count0 + count1;
  if (total == 0) throw Error(ErrorCode::kInvalidArgument, "gini impurity of an empty node");
  const double p0 = static_cast<double>(count0) / static_cast<double>(total);
  const double p1 = static_cast<double>(count1) / static_cast<double>(total);
  return 1.0 - p0 * p0 - p1 * p1;
}

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  std::uint32_t right = 0;
  double threshold = 0.0;
  std::uint32_t count0 = 0;  // bootstrap-weighted class counts reaching the node
  std::uint32_t count1 = 0;

  bool is_leaf() const noexcept { return feature < 0; }
  std::uint8_t vote() const noexcept { return count1 > count0 ? 1 : 0; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? i + 1 : n.right;
    }
    return nodes[i];
  }

  std::uint8_t predict(std::span<const double> row) const { return leaf_for(row).vote(); }

  /// Edges on the longest root-to-leaf path.
  std::size_t depth() const {
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      deepest = std::max(deepest, d);
      if (!nodes[i].is_leaf()) {
        stack.push_back({i + 1, d + 1});
        stack.push_back({nodes[i].right, d + 1});
      }
    }
    return deepest;
  }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;  // child-size-weighted Gini impurity
};

namespace detail {

using u128 = unsigned __int128;

// Rows are capped so that every product in the exact comparison fits in 128 bits.
inline constexpr std::size_t kMaxTrainingRows = 2'000'000;

/// S as num / den, see the file comment.
struct SplitScore {
  u128 num = 0;
  u128 den = 1;
};

inline SplitScore split_score(std::uint64_t a_l, std::uint64_t b_l, std::uint64_t a_r, std::uint64_t b_r) {
  const u128 n_l = a_l + b_l;
  const u128 n_r = a_r + b_r;
  const u128 s_l = static_cast<u128>(a_l) * a_l + static_cast<u128>(b_l) * b_l;
  const u128 s_r = static_cast<u128>(a_r) * a_r + static_cast<u128>(b_r) * b_r;
  return {s_l * n_r + s_r * n_l, n_l * n_r};
}

inline bool score_greater(const SplitScore& x, const SplitScore& y) { return x.num * y.den > y.num * x.den; }

inline double score_impurity(const SplitScore& s, std::uint64_t total) {
  const long double S = static_cast<long double>(s.num) / static_cast<long double>(s.den);
  return static_cast<double>((static_cast<long double>(total) - S) / static_cast<long double>(total));
}

/// Midpoint of a < b that still separates them.
inline double midpoint_threshold(double a, double b) {
  const double m = a + (b - a) * 0.5;
  return (m >= b || m < a) ? a : m;
}

/// Column-major copy of the training matrix, shared read-only by all trees.
class TrainingColumns {
 public:
  TrainingColumns(const FeatureMatrix& m, std::span<const std::uint8_t> labels)
      : n_(m.rows()), p_(m.cols()), data_(m.rows() * m.cols()), binary_(m.cols(), 1),
        labels_(labels.begin(), labels.end()) {
    if (labels.size() != n_)
      throw Error(ErrorCode::kDimensionMismatch, "label count does not match matrix rows");
    if (n_ > kMaxTrainingRows)
      throw Error(ErrorCode::kInvalidArgument, "training set exceeds " + std::to_string(kMaxTrainingRows) + " rows");
    for (auto y : labels_)
      if (y > 1) throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    for (std::size_t r = 0; r < n_; ++r) {
      for (std::size_t f = 0; f < p_; ++f) {
        const double v = m.at(r, f);
        if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "feature matrix has a non-finite value");
        data_[f * n_ + r] = v;
        if (v != 0.0 && v != 1.0) binary_[f] = 0;
      }
    }
  }

  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return p_; }
  double value(std::size_t f, std::uint32_t r) const noexcept { return data_[f * n_ + r]; }
  bool binary(std::size_t f) const noexcept { return binary_[f] != 0; }
  std::uint8_t label(std::uint32_t r) const noexcept { return labels_[r]; }

 private:
  std::size_t n_;
  std::size_t p_;
  std::vector<double> data_;
  std::vector<std::uint8_t> binary_;
  std::vector<std::uint8_t> labels_;
};

struct Counts {
  std::uint64_t c0 = 0;
  std::uint64_t c1 = 0;
  std::uint64_t total() const noexcept { return c0 + c1; }
};

struct Candidate {
  double threshold = 0.0;
  SplitScore score;
};

/// Splits a node's weighted rows. Scratch buffers are reused across nodes.
class SplitSearcher {
 public:
  explicit SplitSearcher(const TrainingColumns& cols) : cols_(cols) {}

  bool constant(std::size_t f, std::span<const std::uint32_t> rows) const {
    const double first = cols_.value(f, rows.front());
    for (auto r : rows)
      if (cols_.value(f, r) != first) return false;
    return true;
  }

  /// Best threshold of one feature, or nothing if no split respects min_leaf.
  std::optional<Candidate> best_for_feature(std::size_t f, std::span<const std::uint32_t> rows,
                                            std::span<const std::uint32_t> weights, Counts node,
                                            std::uint64_t min_leaf) {
    if (cols_.binary(f)) {
      Counts left;
      for (auto r : rows) {
        if (cols_.value(f, r) == 0.0) (cols_.label(r) ? left.c1 : left.c0) += weights[r];
      }
      const Counts right{node.c0 - left.c0, node.c1 - left.c1};
      if (left.total() < min_leaf || right.total() < min_leaf) return std::nullopt;
      return Candidate{0.5, split_score(left.c0, left.c1, right.c0, right.c1)};
    }

    pairs_.clear();
    for (auto r : rows) pairs_.emplace_back(cols_.value(f, r), r);
    std::sort(pairs_.begin(), pairs_.end());
    std::optional<Candidate> best;
    Counts left;
    for (std::size_t i = 0; i + 1 < pairs_.size(); ++i) {
      const auto r = pairs_[i].second;
      (cols_.label(r) ? left.c1 : left.c0) += weights[r];
      const double a = pairs_[i].first;
      const double b = pairs_[i + 1].first;
      if (!(a < b)) continue;
      const Counts right{node.c0 - left.c0, node.c1 - left.c1};
      if (left.total() < min_leaf || right.total() < min_leaf) continue;
      const auto score = split_score(left.c0, left.c1, right.c0, right.c1);
      if (!best || score_greater(score, best->score)) best = Candidate{midpoint_threshold(a, b), score};
    }
    return best;
  }

  /// Best split over `features` in ascending index order; only splits that
  /// strictly lower the node impurity qualify.
  std::optional<std::pair<std::size_t, Candidate>> best_split(std::span<const std::size_t> features,
                                                              std::span<const std::uint32_t> rows,
                                                              std::span<const std::uint32_t> weights,
                                                              Counts node, std::uint64_t min_leaf) {
    std::optional<std::pair<std::size_t, Candidate>> best;
    for (auto f : features) {
      auto cand = best_for_feature(f, rows, weights, node, min_leaf);
      if (cand && (!best || score_greater(cand->score, best->second.score))) best = {{f, *cand}};
    }
    if (!best) return std::nullopt;
    // Parent score (a^2 + b^2) / n must be beaten strictly.
    const u128 n = node.total();
    const u128 parent = static_cast<u128>(node.c0) * node.c0 + static_cast<u128>(node.c1) * node.c1;
    if (!(best->second.score.num * n > parent * best->second.score.den)) return std::nullopt;
    return best;
  }

 private:
  const TrainingColumns& cols_;
  std::vector<std::pair<double, std::uint32_t>> pairs_;
};

class TreeBuilder {
 public:
  TreeBuilder(const TrainingColumns& cols, const ForestParams& params, std::uint64_t seed)
      : cols_(cols), params_(params), rng_(seed), searcher_(cols),
        n_features_(params.resolved_features(cols.cols())) {}

  DecisionTree build() {
    const std::size_t n = cols_.rows();
    weights_.assign(n, 0);
    if (params_.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) ++weights_[uniform_index(rng_, n)];
    } else {
      std::fill(weights_.begin(), weights_.end(), 1u);
    }
    rows_.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (weights_[i] > 0) rows_.push_back(static_cast<std::uint32_t>(i));
    order_.resize(cols_.cols());
    tree_.nodes.clear();
    grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  void grow(std::size_t begin, std::size_t end, std::uint32_t depth) {
    std::span<const std::uint32_t> rows(rows_.data() + begin, end - begin);
    Counts counts;
    for (auto r : rows) (cols_.label(r) ? counts.c1 : counts.c0) += weights_[r];

    const std::size_t self = tree_.nodes.size();
    TreeNode node;
    node.count0 = static_cast<std::uint32_t>(counts.c0);
    node.count1 = static_cast<std::uint32_t>(counts.c1);
    tree_.nodes.push_back(node);

    const std::uint64_t min_leaf = params_.min_samples_leaf;
    if (depth >= params_.max_depth || counts.c0 == 0 || counts.c1 == 0 || counts.total() < 2 * min_leaf)
      return;

    const auto features = draw_features(rows);
    if (features.empty()) return;
    auto best = searcher_.best_split(features, rows, weights_, counts, min_leaf);
    if (!best) return;

    const auto f = best->first;
    const double t = best->second.threshold;
    auto mid = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                              rows_.begin() + static_cast<std::ptrdiff_t>(end),
                              [&](std::uint32_t r) { return cols_.value(f, r) <= t; });
    const auto split_at = static_cast<std::size_t>(mid - rows_.begin());

    tree_.nodes[self].feature = static_cast<std::int32_t>(f);
    tree_.nodes[self].threshold = t;
    grow(begin, split_at, depth + 1);
    tree_.nodes[self].right = static_cast<std::uint32_t>(tree_.nodes.size());
    grow(split_at, end, depth + 1);
  }

  // Features are visited in a random order; ones constant within the node are
  // skipped and do not count toward the per-node budget.
  std::vector<std::size_t> draw_features(std::span<const std::uint32_t> rows) {
    const std::size_t p = order_.size();
    for (std::size_t i = 0; i < p; ++i) order_[i] = i;
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < p && chosen.size() < n_features_; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng_, p - i));
      std::swap(order_[i], order_[j]);
      if (!searcher_.constant(order_[i], rows)) chosen.push_back(order_[i]);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  const TrainingColumns& cols_;
  const ForestParams& params_;
  SplitMix64 rng_;
  SplitSearcher searcher_;
  std::size_t n_features_;
  std::vector<std::uint32_t> weights_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::size_t> order_;
  DecisionTree tree_;
};

inline std::size_t resolve_workers(std::size_t workers) {
  if (workers != 0) return workers;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) on `workers` threads; rethrows the first failure.
template <typename Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
  workers = std::min(resolve_workers(workers), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next++; i < count; i = next++) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Best split of `rows` (unit weights) over `candidate_features`, or nothing
/// when no split strictly lowers impurity.
inline std::optional<Split> best_split(std::span<const std::uint32_t> rows, const FeatureMatrix& matrix,
                                       std::span<const std::uint8_t> labels,
                                       std::span<const std::size_t> candidate_features,
                                       std::size_t min_samples_leaf = 1) {
  if (rows.size() < 2) return std::nullopt;
  detail::TrainingColumns cols(matrix, labels);
  std::vector<std::uint32_t> weights(matrix.rows(), 1);
  detail::Counts counts;
  for (auto r : rows) (labels[r] ? counts.c1 : counts.c0) += 1;
  if (counts.c0 == 0 || counts.c1 == 0) return std::nullopt;

  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());
  for (auto f : features)
    if (f >= matrix.cols()) throw Error(ErrorCode::kDimensionMismatch, "candidate feature out of range");

  detail::SplitSearcher searcher(cols);
  auto best = searcher.best_split(features, rows, weights, counts, std::max<std::size_t>(min_samples_leaf, 1));
  if (!best) return std::nullopt;
  return Split{best->first, best->second.threshold, detail::score_impurity(best->second.score, counts.total())};
}

inline DecisionTree fit_tree(const FeatureMatrix& matrix, std::span<const std::uint8_t> labels,
                             std::uint64_t bootstrap_seed, const ForestParams& params) {
  params.validate();
  if (matrix.rows() == 0) throw Error(ErrorCode::kEmptyInput, "cannot fit a tree on zero rows");
  detail::TrainingColumns cols(matrix, labels);
  return detail::TreeBuilder(cols, params, bootstrap_seed).build();
}

struct Prediction {
  std::uint8_t label = 0;
  std::uint32_t votes = 0;  // trees voting optimal
  double vote_fraction = 0.0;
};

class Forest {
 public:
  Forest() = default;
  Forest(ForestParams params, std::uint64_t seed, FeatureEncoding encoding, std::size_t n_features,
         std::vector<DecisionTree> trees)
      : params_(params), seed_(seed), encoding_(std::move(encoding)), n_features_(n_features),
        trees_(std::move(trees)) {}

  const ForestParams& params() const noexcept { return params_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const FeatureEncoding& encoding() const noexcept { return encoding_; }
  std::size_t n_features() const noexcept { return n_features_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

  /// Majority of tree votes; exactly half predicts non-optimal.
  Prediction predict(std::span<const double> row) const {
    if (row.size() != n_features_)
      throw Error(ErrorCode::kDimensionMismatch, "row has " + std::to_string(row.size()) +
                                                     " columns, forest expects " + std::to_string(n_features_));
    std::uint32_t votes = 0;
    for (const auto& t : trees_) votes += t.predict(row);
    Prediction p;
    p.votes = votes;
    p.vote_fraction = static_cast<double>(votes) / static_cast<double>(trees_.size());
    p.label = 2ull * votes > trees_.size() ? 1 : 0;
    return p;
  }

  std::vector<Prediction> predict(const FeatureMatrix& matrix, std::size_t workers = 1) const {
    check_encoding(matrix.encoding());
    if (matrix.cols() != n_features_)
      throw Error(ErrorCode::kDimensionMismatch, "matrix column count does not match forest");
    std::vector<Prediction> out(matrix.rows());
    constexpr std::size_t kChunk = 1024;
    const std::size_t chunks = (matrix.rows() + kChunk - 1) / kChunk;
    detail::parallel_for(chunks, workers, [&](std::size_t c) {
      const std::size_t end = std::min(matrix.rows(), (c + 1) * kChunk);
      for (std::size_t r = c * kChunk; r < end; ++r) out[r] = predict(matrix.row(r));
    });
    return out;
  }

  void check_encoding(const FeatureEncoding& other) const {
    if (other.n_columns() == 0 || encoding_.n_columns() == 0) return;
    if (!(other == encoding_))
      throw Error(ErrorCode::kEncodingMismatch, "feature encoding differs from the one the forest was trained on");
  }

 private:
  ForestParams params_;
  std::uint64_t seed_ = 0;
  FeatureEncoding encoding_;
  std::size_t n_features_ = 0;
  std::vector<DecisionTree> trees_;
};

/// Tree i is grown from derive_seed(master_seed, kTree, i), so the result does
/// not depend on `workers`.
inline Forest fit_forest(const FeatureMatrix& matrix, std::span<const std::uint8_t> labels,
                         const ForestParams& params, std::uint64_t master_seed, std::size_t workers = 1) {
  params.validate();
  if (matrix.rows() < 2) throw Error(ErrorCode::kEmptyInput, "need at least 2 training rows");
  detail::TrainingColumns cols(matrix, labels);
  const auto ones = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  if (ones == 0 || ones == labels.size())
    throw Error(ErrorCode::kSingleClass, "training labels contain a single class");

  std::vector<DecisionTree> trees(params.n_trees);
  detail::parallel_for(params.n_trees, workers, [&](std::size_t i) {
    trees[i] = detail::TreeBuilder(cols, params, derive_seed(master_seed, StreamTag::kTree, i)).build();
  });
  return Forest(params, master_seed, matrix.encoding(), matrix.cols(), std::move(trees));
}

inline Forest fit_forest(const LabeledDataset& train, const ForestParams& params, std::uint64_t master_seed,
                         std::size_t workers = 1) {
  return fit_forest(train.features, train.labels, params, master_seed, workers);
}

// ---------------------------------------------------------------------------
// Evaluation

struct ConfusionMatrix {
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tp = 0;

  std::uint64_t total() const noexcept { return tn + fp + fn + tp; }
  void add(std::uint8_t observed, std::uint8_t predicted) noexcept {
    if (observed) {
      (predicted ? tp : fn) += 1;
    } else {
      (predicted ? fp : tn) += 1;
    }
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct Metrics {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

inline Metrics metrics_from_confusion(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::kEmptyInput, "confusion matrix is empty");
  auto d = [](std::uint64_t v) { return static_cast<double>(v); };
  Metrics m;
  m.accuracy = d(cm.tp + cm.tn) / d(cm.total());
  if (cm.tp + cm.fp > 0) m.precision = d(cm.tp) / d(cm.tp + cm.fp);
  if (cm.tp + cm.fn > 0) m.recall = d(cm.tp) / d(cm.tp + cm.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  return m;
}

struct Evaluation {
  ConfusionMatrix confusion;
  Metrics metrics;
};

inline Evaluation evaluate(const Forest& forest, const LabeledDataset& test, std::size_t workers = 1) {
  forest.check_encoding(test.features.encoding());
  const auto preds = forest.predict(test.features, workers);
  Evaluation ev;
  for (std::size_t i = 0; i < preds.size(); ++i) ev.confusion.add(test.labels[i], preds[i].label);
  ev.metrics = metrics_from_confusion(ev.confusion);
  return ev;
}

// ---------------------------------------------------------------------------
// Persistence
//
// Little-endian layout:
//   "SRGFORST" | u32 version | u32 n_trees max_depth features_per_split
//   min_samples_leaf | u8 bootstrap | u64 seed | u64 n_features
//   | u32 length + encoding JSON | per tree: u32 node count, nodes as
//   (i32 feature, u32 right, f64 threshold, u32 count0, u32 count1)
//   | u64 FNV-1a of everything before it

inline constexpr char kForestMagic[8] = {'S', 'R', 'G', 'F', 'O', 'R', 'S', 'T'};
inline constexpr std::uint32_t kForestVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  const std::vector<unsigned char>& bytes() const noexcept { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> data) : data_(data) {}

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(ErrorCode::kCorruptFile, "forest file is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  std::span<const unsigned char> data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<unsigned char> serialize_forest(const Forest& forest) {
  detail::ByteWriter w;
  w.raw(kForestMagic, sizeof kForestMagic);
  w.u32(kForestVersion);
  const auto& p = forest.params();
  w.u32(p.n_trees);
  w.u32(p.max_depth);
  w.u32(p.features_per_split);
  w.u32(p.min_samples_leaf);
  w.u8(p.bootstrap ? 1 : 0);
  w.u64(forest.seed());
  w.u64(forest.n_features());
  const std::string enc = forest.encoding().to_json().dump();
  w.u32(static_cast<std::uint32_t>(enc.size()));
  w.raw(enc.data(), enc.size());
  for (const auto& t : forest.trees()) {
    w.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      w.u32(static_cast<std::uint32_t>(n.feature));
      w.u32(n.right);
      w.f64(n.threshold);
      w.u32(n.count0);
      w.u32(n.count1);
    }
  }
  Fnv1a64 h;
  h.update(w.bytes().data(), w.bytes().size());
  w.u64(h.digest());
  return w.bytes();
}

inline Forest deserialize_forest(std::span<const unsigned char> bytes) {
  if (bytes.size() < sizeof kForestMagic || std::memcmp(bytes.data(), kForestMagic, sizeof kForestMagic) != 0)
    throw Error(ErrorCode::kCorruptFile, "not a forest file (bad magic)");
  detail::ByteReader r(bytes.subspan(sizeof kForestMagic));
  const std::uint32_t version = r.u32();
  if (version != kForestVersion)
    throw Error(ErrorCode::kVersionMismatch, "forest format version " + std::to_string(version) +
                                                 ", expected " + std::to_string(kForestVersion));
  if (bytes.size() < sizeof kForestMagic + 12) throw Error(ErrorCode::kCorruptFile, "forest file is truncated");
  {
    detail::ByteReader tail(bytes.subspan(bytes.size() - 8));
    Fnv1a64 h;
    h.update(bytes.data(), bytes.size() - 8);
    if (h.digest() != tail.u64()) throw Error(ErrorCode::kCorruptFile, "forest file checksum mismatch");
  }

  ForestParams p;
  p.n_trees = r.u32();
  p.max_depth = r.u32();
  p.features_per_split = r.u32();
  p.min_samples_leaf = r.u32();
  p.bootstrap = r.u8() != 0;
  const std::uint64_t seed = r.u64();
  const std::uint64_t n_features = r.u64();
  const std::uint32_t enc_len = r.u32();
  FeatureEncoding encoding;
  try {
    encoding = FeatureEncoding::from_json(nlohmann::json::parse(r.str(enc_len)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, std::string("forest encoding: ") + e.what());
  }
  if (p.n_trees == 0) throw Error(ErrorCode::kCorruptFile, "forest file has no trees");

  std::vector<DecisionTree> trees(p.n_trees);
  for (auto& t : trees) {
    const std::uint32_t count = r.u32();
    r.need(static_cast<std::size_t>(count) * 24);
    if (count == 0) throw Error(ErrorCode::kCorruptFile, "empty tree in forest file");
    t.nodes.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      auto& n = t.nodes[i];
      n.feature = static_cast<std::int32_t>(r.u32());
      n.right = r.u32();
      n.threshold = r.f64();
      n.count0 = r.u32();
      n.count1 = r.u32();
      if (!n.is_leaf() && (static_cast<std::uint64_t>(n.feature) >= n_features || n.right <= i + 1 ||
                           n.right >= count))
        throw Error(ErrorCode::kCorruptFile, "forest file has an invalid node");
    }
  }
  if (r.remaining() != 8) throw Error(ErrorCode::kCorruptFile, "forest file has trailing data");
  return Forest(p, seed, std::move(encoding), n_features, std::move(trees));
}

inline void save_forest(const Forest& forest, const std::filesystem::path& path) {
  const auto bytes = serialize_forest(forest);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

inline Forest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingArtifact, "cannot read forest file '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_forest(bytes);
}

}  // namespace surrogate
