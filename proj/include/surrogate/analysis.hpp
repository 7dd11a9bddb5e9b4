#pragma once

// Aggregation of classified configurations into the result tables: optimal
// shares per region x policy, differences to the baseline policy, Bernoulli
// dispersion, min-max parameter scores and Welch tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surrogate/csv.hpp"
#include "surrogate/error.hpp"
#include "surrogate/numerics.hpp"
#include "surrogate/schema.hpp"

namespace surrogate {

// ---------------------------------------------------------------------------
// Welch's t-test

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Welch test from summary statistics (sample variances, n - 1 denominator).
inline WelchResult welch_from_moments(double mean_a, double var_a, double n_a, double mean_b, double var_b,
                                      double n_b) {
  if (n_a < 2 || n_b < 2) throw Error(ErrorCode::kInvalidArgument, "welch test needs at least 2 values per sample");
  const double va = var_a / n_a;
  const double vb = var_b / n_b;
  const double se2 = va + vb;
  if (!(se2 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "welch test: both samples have zero variance");
  WelchResult r;
  r.t = (mean_a - mean_b) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (n_a - 1.0) + vb * vb / (n_b - 1.0));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  auto moments = [](std::span<const double> x) {
    double sum = 0.0;
    for (double v : x) sum += v;
    const double mean = sum / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, x.size() > 1 ? ss / static_cast<double>(x.size() - 1) : 0.0};
  };
  if (a.size() < 2 || b.size() < 2)
    throw Error(ErrorCode::kInvalidArgument, "welch test needs at least 2 values per sample");
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  return welch_from_moments(ma, va, static_cast<double>(a.size()), mb, vb, static_cast<double>(b.size()));
}

// ---------------------------------------------------------------------------
// Streaming accumulation

/// Welford mean/variance with Chan's pairwise merge.
struct RunningStats {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const RunningStats& o) noexcept {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }

  double variance() const noexcept { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

inline std::optional<WelchResult> welch_from_stats(const RunningStats& a, const RunningStats& b) {
  if (a.n < 2 || b.n < 2 || !(a.variance() > 0.0 || b.variance() > 0.0)) return std::nullopt;
  return welch_from_moments(a.mean, a.variance(), static_cast<double>(a.n), b.mean, b.variance(),
                            static_cast<double>(b.n));
}

/// Optimal/non-optimal counts per region x policy.
struct GroupShareTable {
  std::vector<std::string> regions;
  std::vector<std::string> policies;
  std::size_t baseline = 0;
  std::vector<std::uint64_t> n;        // [region * policies + policy]
  std::vector<std::uint64_t> optimal;  // same layout

  GroupShareTable() = default;
  GroupShareTable(std::vector<std::string> region_names, std::vector<std::string> policy_names,
                  std::size_t baseline_policy)
      : regions(std::move(region_names)), policies(std::move(policy_names)), baseline(baseline_policy),
        n(regions.size() * policies.size(), 0), optimal(regions.size() * policies.size(), 0) {}

  static GroupShareTable for_schema(const ParameterSchema& schema) {
    return GroupShareTable(schema.region().alternatives, schema.policy().alternatives, schema.baseline_policy());
  }

  /// Region index meaning "all regions pooled".
  std::size_t all() const noexcept { return regions.size(); }

  void add(std::size_t region, std::size_t policy, bool is_optimal, std::uint64_t count = 1) {
    const auto i = region * policies.size() + policy;
    n.at(i) += count;
    if (is_optimal) optimal.at(i) += count;
  }

  std::uint64_t count(std::size_t region, std::size_t policy) const {
    if (region == all()) {
      std::uint64_t s = 0;
      for (std::size_t r = 0; r < regions.size(); ++r) s += n[r * policies.size() + policy];
      return s;
    }
    return n[region * policies.size() + policy];
  }

  std::uint64_t optimal_count(std::size_t region, std::size_t policy) const {
    if (region == all()) {
      std::uint64_t s = 0;
      for (std::size_t r = 0; r < regions.size(); ++r) s += optimal[r * policies.size() + policy];
      return s;
    }
    return optimal[region * policies.size() + policy];
  }

  std::uint64_t region_count(std::size_t region) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < policies.size(); ++p) s += count(region, p);
    return s;
  }
  std::uint64_t region_optimal(std::size_t region) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < policies.size(); ++p) s += optimal_count(region, p);
    return s;
  }
  std::uint64_t total() const { return region_count(all()); }

  /// Optimal share in percent; NaN for an empty group.
  double percent(std::size_t region, std::size_t policy) const {
    const auto k = count(region, policy);
    if (k == 0) return std::numeric_limits<double>::quiet_NaN();
    return 100.0 * static_cast<double>(optimal_count(region, policy)) / static_cast<double>(k);
  }

  std::string region_name(std::size_t region) const { return region == all() ? "All" : regions.at(region); }
};

/// Bernoulli standard deviation in percentage points: 100 sqrt(p (1 - p)).
inline double bernoulli_std_pp(double p) {
  if (std::isnan(p)) return p;
  return 100.0 * std::sqrt(std::max(0.0, p * (1.0 - p)));
}

/// Shares and per-parameter statistics over a stream of classified configs.
class OutcomeAccumulator {
 public:
  explicit OutcomeAccumulator(const ParameterSchema& schema)
      : schema_(&schema), shares_(GroupShareTable::for_schema(schema)), stats_(2 * schema.continuous().size()) {}

  void add(const Config& cfg, std::uint8_t label) {
    const auto region = cfg.discrete.at(schema_->region_index());
    const auto policy = cfg.discrete.at(schema_->policy_index());
    shares_.add(region, policy, label != 0);
    const std::size_t p = schema_->continuous().size();
    for (std::size_t j = 0; j < p; ++j) stats_[(label ? p : 0) + j].add(cfg.continuous[j]);
  }

  void merge(const OutcomeAccumulator& other) {
    for (std::size_t i = 0; i < shares_.n.size(); ++i) {
      shares_.n[i] += other.shares_.n[i];
      shares_.optimal[i] += other.shares_.optimal[i];
    }
    for (std::size_t i = 0; i < stats_.size(); ++i) stats_[i].merge(other.stats_[i]);
  }

  const GroupShareTable& shares() const noexcept { return shares_; }
  std::uint64_t total() const { return shares_.total(); }
  std::uint64_t optimal_total() const { return shares_.region_optimal(shares_.all()); }

  const RunningStats& stats(std::size_t param, bool optimal) const {
    return stats_[(optimal ? schema_->continuous().size() : 0) + param];
  }
  RunningStats stats_all(std::size_t param) const {
    RunningStats s = stats(param, false);
    s.merge(stats(param, true));
    return s;
  }

 private:
  const ParameterSchema* schema_;
  GroupShareTable shares_;
  std::vector<RunningStats> stats_;  // non-optimal block then optimal block
};

inline GroupShareTable optimal_share_by_group(std::span<const Config> configs, std::span<const std::uint8_t> labels,
                                              const ParameterSchema& schema) {
  if (configs.size() != labels.size())
    throw Error(ErrorCode::kDimensionMismatch, "configs and predictions differ in length");
  if (configs.empty()) throw Error(ErrorCode::kEmptyInput, "no predictions to group");
  auto table = GroupShareTable::for_schema(schema);
  for (std::size_t i = 0; i < configs.size(); ++i)
    table.add(configs[i].discrete.at(schema.region_index()), configs[i].discrete.at(schema.policy_index()),
              labels[i] != 0);
  return table;
}

// ---------------------------------------------------------------------------
// Baseline differences and ranking

struct DeltaRow {
  std::string region;
  double baseline = 0.0;      // baseline value (share % or std p.p.)
  std::vector<double> delta;  // aligned with BaselineDeltaTable::policies
};

struct BaselineDeltaTable {
  std::string baseline;
  std::vector<std::string> policies;  // non-baseline policies in schema order
  std::vector<DeltaRow> rows;         // one per region
  std::optional<DeltaRow> all;
};

namespace detail {

template <typename Value>
BaselineDeltaTable baseline_differences(const GroupShareTable& t, Value value) {
  if (t.total() == 0) throw Error(ErrorCode::kEmptyInput, "no predictions to compare");
  BaselineDeltaTable out;
  out.baseline = t.policies.at(t.baseline);
  for (std::size_t p = 0; p < t.policies.size(); ++p)
    if (p != t.baseline) out.policies.push_back(t.policies[p]);
  auto row_for = [&](std::size_t r) {
    if (t.count(r, t.baseline) == 0)
      throw Error(ErrorCode::kEmptyInput, "region '" + t.region_name(r) + "' has no baseline group");
    DeltaRow row{t.region_name(r), value(r, t.baseline), {}};
    for (std::size_t p = 0; p < t.policies.size(); ++p)
      if (p != t.baseline) row.delta.push_back(value(r, p) - row.baseline);
    return row;
  };
  for (std::size_t r = 0; r < t.regions.size(); ++r)
    if (t.region_count(r) > 0) out.rows.push_back(row_for(r));
  out.all = row_for(t.all());
  return out;
}

}  // namespace detail

/// Percentage-point difference of each policy's optimal share to the baseline.
/// Each delta is formed from integer counts with a single final rounding.
inline BaselineDeltaTable diff_to_baseline(const GroupShareTable& t) {
  auto out = detail::baseline_differences(t, [&](std::size_t r, std::size_t p) { return t.percent(r, p); });
  auto exact = [&](std::size_t r, std::size_t p) {
    const auto np = t.count(r, p);
    const auto nb = t.count(r, t.baseline);
    if (np == 0) return std::numeric_limits<double>::quiet_NaN();
    const auto kp = static_cast<__int128>(t.optimal_count(r, p));
    const auto kb = static_cast<__int128>(t.optimal_count(r, t.baseline));
    const __int128 num = kp * static_cast<__int128>(nb) - kb * static_cast<__int128>(np);
    return 100.0 * static_cast<double>(num) / (static_cast<double>(np) * static_cast<double>(nb));
  };
  auto fix = [&](DeltaRow& row, std::size_t r) {
    std::size_t k = 0;
    for (std::size_t p = 0; p < t.policies.size(); ++p)
      if (p != t.baseline) row.delta[k++] = exact(r, p);
  };
  std::size_t i = 0;
  for (std::size_t r = 0; r < t.regions.size(); ++r)
    if (t.region_count(r) > 0) fix(out.rows[i++], r);
  fix(*out.all, t.all());
  return out;
}

/// The same layout for Bernoulli standard deviations.
inline BaselineDeltaTable std_to_baseline(const GroupShareTable& t) {
  return detail::baseline_differences(
      t, [&](std::size_t r, std::size_t p) { return bernoulli_std_pp(t.percent(r, p) / 100.0); });
}

struct RegionRanking {
  std::string region;
  std::vector<std::size_t> best;  // indices into BaselineDeltaTable::policies; >1 is a tie
  double best_delta = 0.0;
  bool improves = false;  // best delta > 0
};

struct PolicyRanking {
  std::vector<RegionRanking> regions;
  std::vector<std::size_t> wins;  // per policy, regions where it alone is best
  std::size_t ties = 0;
  std::size_t no_improvement = 0;  // regions left out of the tally
};

/// Argmax of the deltas per region. Regions where no policy beats the
/// baseline are reported but not tallied.
inline PolicyRanking rank_policies_per_mr(const BaselineDeltaTable& table) {
  PolicyRanking out;
  out.wins.assign(table.policies.size(), 0);
  for (const auto& row : table.rows) {
    RegionRanking rr{row.region, {}, -std::numeric_limits<double>::infinity(), false};
    for (std::size_t p = 0; p < row.delta.size(); ++p) {
      const double d = row.delta[p];
      if (std::isnan(d)) continue;
      if (d > rr.best_delta) {
        rr.best_delta = d;
        rr.best.assign(1, p);
      } else if (d == rr.best_delta) {
        rr.best.push_back(p);
      }
    }
    rr.improves = !rr.best.empty() && rr.best_delta > 0.0;
    if (!rr.improves) {
      ++out.no_improvement;
    } else if (rr.best.size() > 1) {
      ++out.ties;
    } else {
      ++out.wins[rr.best.front()];
    }
    out.regions.push_back(std::move(rr));
  }
  return out;
}

struct Band {
  std::string region;
  std::string policy;
  double mean = 0.0;  // percent
  double std = 0.0;   // percentage points
  double lower() const { return mean - std; }
  double upper() const { return mean + std; }
};

/// Mean +- one Bernoulli standard deviation per region x policy, pooled row last.
inline std::vector<Band> mean_std_bands(const GroupShareTable& t) {
  std::vector<Band> out;
  for (std::size_t r = 0; r <= t.regions.size(); ++r) {
    if (t.region_count(r) == 0) continue;
    for (std::size_t p = 0; p < t.policies.size(); ++p) {
      const double mean = t.percent(r, p);
      out.push_back({t.region_name(r), t.policies[p], mean, bernoulli_std_pp(mean / 100.0)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameter scores

/// (mean - lower) / (upper - lower).
inline double standardized_param_score(double mean, const ContinuousParamSpec& spec) {
  return (mean - spec.lower) / (spec.upper - spec.lower);
}

struct ParamScoreRow {
  std::string name;
  std::optional<double> abm_optimal;
  double surrogate_optimal = 0.0;
  double surrogate_all = 0.0;
  std::optional<WelchResult> optimal_vs_rest;    // surrogate optimal vs non-optimal
  std::optional<WelchResult> abm_vs_surrogate;   // ABM optimal vs surrogate optimal
};

struct ParamScoreTable {
  std::vector<ParamScoreRow> rows;
};

/// Scores over the surrogate's optimal rows and all rows; `abm` (the labeled
/// training corpus) adds the ABM-optimal column when given.
inline ParamScoreTable standardized_param_scores(const OutcomeAccumulator& surrogate, const ParameterSchema& schema,
                                                 const OutcomeAccumulator* abm = nullptr) {
  if (surrogate.optimal_total() == 0)
    throw Error(ErrorCode::kEmptyInput, "no optimal predictions to score parameters on");
  ParamScoreTable out;
  for (std::size_t j = 0; j < schema.continuous().size(); ++j) {
    const auto& spec = schema.continuous()[j];
    ParamScoreRow row;
    row.name = spec.name;
    const auto& opt = surrogate.stats(j, true);
    row.surrogate_optimal = standardized_param_score(opt.mean, spec);
    row.surrogate_all = standardized_param_score(surrogate.stats_all(j).mean, spec);
    row.optimal_vs_rest = welch_from_stats(opt, surrogate.stats(j, false));
    if (abm && abm->optimal_total() > 0) {
      const auto& abm_opt = abm->stats(j, true);
      row.abm_optimal = standardized_param_score(abm_opt.mean, spec);
      row.abm_vs_surrogate = welch_from_stats(abm_opt, opt);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report files

struct EmulationReport {
  GroupShareTable shares;
  BaselineDeltaTable deltas;
  BaselineDeltaTable std_deltas;
  PolicyRanking ranking;
  std::vector<Band> bands;
  ParamScoreTable params;
};

inline EmulationReport build_report(const OutcomeAccumulator& surrogate, const ParameterSchema& schema,
                                    const OutcomeAccumulator* abm = nullptr) {
  if (surrogate.total() == 0) throw Error(ErrorCode::kEmptyInput, "empty prediction set");
  EmulationReport rep;
  rep.shares = surrogate.shares();
  rep.deltas = diff_to_baseline(rep.shares);
  rep.std_deltas = std_to_baseline(rep.shares);
  rep.ranking = rank_policies_per_mr(rep.deltas);
  rep.bands = mean_std_bands(rep.shares);
  rep.params = standardized_param_scores(surrogate, schema, abm);
  return rep;
}

inline constexpr double kSignificance = 0.05;

namespace detail {

inline std::string pct(double v) { return format_fixed(v, 2); }
inline std::string score(double v) { return format_fixed(v, 3); }
inline std::string opt_num(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

inline void write_delta_table(std::ostream& out, const BaselineDeltaTable& t, std::string_view unit) {
  std::vector<std::string> row{"region", t.baseline + " (" + std::string(unit) + ")"};
  for (const auto& p : t.policies) row.push_back(p + " (pp)");
  write_csv_row(out, row);
  auto emit = [&](const DeltaRow& r) {
    row.assign({r.region, pct(r.baseline)});
    for (double d : r.delta) row.push_back(pct(d));
    write_csv_row(out, row);
  };
  if (t.all) emit(*t.all);
  // Highest baseline first, schema order among equals.
  std::vector<std::size_t> order(t.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return t.rows[a].baseline > t.rows[b].baseline; });
  for (auto i : order) emit(t.rows[i]);
}

}  // namespace detail

/// Reads a table written by write_delta_table (or the shipped fixture).
inline BaselineDeltaTable read_delta_table(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.read_row(fields) || fields.size() < 3 || fields[0] != "region")
    throw Error(ErrorCode::kParseError, "delta table needs a 'region' header and at least 3 columns");
  auto strip = [](const std::string& h, std::string_view suffix) {
    if (h.size() <= suffix.size() || h.compare(h.size() - suffix.size(), suffix.size(), suffix) != 0)
      throw Error(ErrorCode::kParseError, "unexpected delta table column '" + h + "'");
    return h.substr(0, h.size() - suffix.size());
  };
  BaselineDeltaTable t;
  t.baseline = fields[1].substr(0, fields[1].rfind(" ("));
  for (std::size_t i = 2; i < fields.size(); ++i) t.policies.push_back(strip(fields[i], " (pp)"));
  const std::size_t width = fields.size();
  while (reader.read_row(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != width)
      throw Error(ErrorCode::kParseError, "line " + std::to_string(reader.line()) + ": wrong field count");
    DeltaRow row;
    row.region = fields[0];
    auto num = [&](const std::string& s) {
      if (s == "NA") return std::numeric_limits<double>::quiet_NaN();
      auto v = try_parse_double(s);
      if (!v) throw Error(ErrorCode::kParseError, "line " + std::to_string(reader.line()) + ": bad number '" + s + "'");
      return *v;
    };
    row.baseline = num(fields[1]);
    for (std::size_t i = 2; i < width; ++i) row.delta.push_back(num(fields[i]));
    if (row.region == "All") {
      t.all = std::move(row);
    } else {
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

inline BaselineDeltaTable read_delta_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path.string() + "'");
  return read_delta_table(in);
}

/// File names written by emit_report, without the .csv suffix.
inline const std::vector<std::string>& report_table_names() {
  static const std::vector<std::string> names{
      "table_mean_acp", "table_son_acps", "table_son_dummies", "table_std_acp", "table_params",
      "table_policy_ranking", "fig_sorted_policies", "fig_mean_std", "fig_parameters"};
  return names;
}

/// Writes every table; nothing is written if the report is empty.
inline std::vector<std::filesystem::path> emit_report(const EmulationReport& rep,
                                                      const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  const auto& t = rep.shares;
  if (t.total() == 0) throw Error(ErrorCode::kEmptyInput, "empty prediction set, no report written");
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec || !fs::is_directory(directory))
    throw Error(ErrorCode::kIo, "cannot create report directory '" + directory.string() + "'");

  std::vector<fs::path> written;
  auto open = [&](const std::string& name) {
    auto path = directory / (name + ".csv");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
    written.push_back(path);
    return out;
  };
  using detail::pct;
  using detail::score;
  const double total = static_cast<double>(t.total());
  std::vector<std::string> row;

  {
    auto out = open("table_mean_acp");
    detail::write_delta_table(out, rep.deltas, "%");
  }
  {
    auto out = open("table_std_acp");
    detail::write_delta_table(out, rep.std_deltas, "pp");
  }
  {
    auto out = open("table_son_acps");
    write_csv_row(out, std::vector<std::string>{"region", "n", "size (%)", "optimal (%)", "non-optimal (%)"});
    for (std::size_t r = 0; r <= t.regions.size(); ++r) {
      const auto n = t.region_count(r);
      const double opt = n ? 100.0 * static_cast<double>(t.region_optimal(r)) / static_cast<double>(n) : NAN;
      row.assign({t.region_name(r), std::to_string(n), pct(100.0 * static_cast<double>(n) / total), pct(opt),
                  pct(100.0 - opt)});
      write_csv_row(out, row);
    }
  }
  {
    auto out = open("table_son_dummies");
    write_csv_row(out, std::vector<std::string>{"policy", "n", "size (%)", "optimal (%)", "non-optimal (%)"});
    for (std::size_t p = 0; p < t.policies.size(); ++p) {
      const auto n = t.count(t.all(), p);
      const double opt = t.percent(t.all(), p);
      row.assign({t.policies[p], std::to_string(n), pct(100.0 * static_cast<double>(n) / total), pct(opt),
                  pct(100.0 - opt)});
      write_csv_row(out, row);
    }
  }
  {
    auto out = open("table_params");
    write_csv_row(out, std::vector<std::string>{"parameter", "abm_optimal", "surrogate_optimal", "surrogate_all",
                                                "welch_t", "welch_df", "welch_p", "abm_welch_t", "abm_welch_df",
                                                "abm_welch_p"});
    for (const auto& r : rep.params.rows) {
      row.assign({r.name, r.abm_optimal ? score(*r.abm_optimal) : "NA", score(r.surrogate_optimal),
                  score(r.surrogate_all)});
      for (const auto* w : {&r.optimal_vs_rest, &r.abm_vs_surrogate}) {
        if (*w) {
          row.push_back(format_double((*w)->t));
          row.push_back(format_double((*w)->df));
          row.push_back(format_double((*w)->p));
        } else {
          row.insert(row.end(), {"NA", "NA", "NA"});
        }
      }
      write_csv_row(out, row);
    }
  }
  {
    auto out = open("table_policy_ranking");
    write_csv_row(out, std::vector<std::string>{"region", "best", "best_delta (pp)", "tie", "tallied"});
    for (const auto& r : rep.ranking.regions) {
      std::string best;
      for (auto p : r.best) best += (best.empty() ? "" : "|") + rep.deltas.policies[p];
      row.assign({r.region, best, r.best.empty() ? "NA" : pct(r.best_delta), r.best.size() > 1 ? "1" : "0",
                  r.improves ? "1" : "0"});
      write_csv_row(out, row);
    }
    for (std::size_t p = 0; p < rep.deltas.policies.size(); ++p) {
      row.assign({"TOTAL", rep.deltas.policies[p], std::to_string(rep.ranking.wins[p]), "", ""});
      write_csv_row(out, row);
    }
    write_csv_row(out, std::vector<std::string>{"TOTAL", "tie", std::to_string(rep.ranking.ties), "", ""});
    write_csv_row(out, std::vector<std::string>{"TOTAL", "no-improvement",
                                                std::to_string(rep.ranking.no_improvement), "", ""});
  }
  {
    auto out = open("fig_sorted_policies");
    write_csv_row(out, std::vector<std::string>{"region", "policy", "optimal (%)"});
    std::vector<const Band*> sorted;
    for (const auto& b : rep.bands)
      if (b.region != "All" && !std::isnan(b.mean)) sorted.push_back(&b);
    std::stable_sort(sorted.begin(), sorted.end(), [](const Band* a, const Band* b) { return a->mean > b->mean; });
    for (const auto* b : sorted) {
      row.assign({b->region, b->policy, pct(b->mean)});
      write_csv_row(out, row);
    }
  }
  {
    auto out = open("fig_mean_std");
    write_csv_row(out, std::vector<std::string>{"region", "policy", "mean (%)", "std (pp)", "lower", "upper"});
    for (const auto& b : rep.bands) {
      row.assign({b.region, b.policy, pct(b.mean), pct(b.std), pct(b.lower()), pct(b.upper())});
      write_csv_row(out, row);
    }
  }
  {
    // Parameters whose surrogate optimum differs both from the surrogate
    // non-optimum and from the ABM optimum, ordered by that difference.
    auto out = open("fig_parameters");
    write_csv_row(out, std::vector<std::string>{"parameter", "abm_optimal", "surrogate_optimal", "surrogate_all",
                                                "difference"});
    std::vector<const ParamScoreRow*> keep;
    for (const auto& r : rep.params.rows) {
      if (!r.abm_optimal || !r.optimal_vs_rest || !r.abm_vs_surrogate) continue;
      if (r.optimal_vs_rest->p < kSignificance && r.abm_vs_surrogate->p < kSignificance) keep.push_back(&r);
    }
    auto diff = [](const ParamScoreRow* r) { return r->surrogate_optimal - *r->abm_optimal; };
    std::stable_sort(keep.begin(), keep.end(), [&](auto* a, auto* b) { return diff(a) < diff(b); });
    for (const auto* r : keep) {
      row.assign({r->name, score(*r->abm_optimal), score(r->surrogate_optimal), score(r->surrogate_all),
                  score(diff(r))});
      write_csv_row(out, row);
    }
  }
  return written;
}

}  // namespace surrogate
