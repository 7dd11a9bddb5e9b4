#pragma once

// Synthetic stand-in for the expensive simulation. Indicators are linear in
// the normalized parameters plus per-alternative shifts and Gaussian noise:
//
//   gdp  = sum_j w_gdp[j]  * norm(x_j) + sum_d shift_gdp[d][alt_d]  + N(0, s^2)
//   gini = sum_j w_gini[j] * norm(x_j) + sum_d shift_gini[d][alt_d] + N(0, s^2)
//
// where d runs over rules, policy and region. The remaining indicator columns
// are noisy mixtures of the two so the corpus has the original's width.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "surrogate/csv.hpp"
#include "surrogate/error.hpp"
#include "surrogate/numerics.hpp"
#include "surrogate/rng.hpp"
#include "surrogate/schema.hpp"

namespace surrogate {

struct Effect {
  double gdp = 0.0;
  double gini = 0.0;
};

struct ToyWorldSpec {
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  std::size_t indicator_count = 66;
  std::map<std::string, Effect> loadings;
  std::map<std::string, std::map<std::string, Effect>> rule_effects;
  std::map<std::string, Effect> policy_effects;
  std::map<std::string, Effect> region_effects;
  // Continuous parameters drawn across their range in a corpus; the rest sit
  // at their midpoint. Absent means every parameter varies.
  std::optional<std::vector<std::string>> varied_parameters;

  static ToyWorldSpec from_json(const nlohmann::json& doc) {
    auto effect = [](const nlohmann::json& e) { return Effect{e.value("gdp", 0.0), e.value("gini", 0.0)}; };
    auto effect_map = [&](const nlohmann::json& obj) {
      std::map<std::string, Effect> out;
      for (auto it = obj.begin(); it != obj.end(); ++it) out[it.key()] = effect(it.value());
      return out;
    };
    try {
      ToyWorldSpec w;
      w.seed = doc.value("seed", std::uint64_t{0});
      w.noise_sigma = doc.value("noise_sigma", 0.0);
      w.indicator_count = doc.value("indicator_count", std::size_t{66});
      if (doc.contains("loadings")) w.loadings = effect_map(doc.at("loadings"));
      if (doc.contains("rule_effects")) {
        const auto& rules = doc.at("rule_effects");
        for (auto it = rules.begin(); it != rules.end(); ++it) w.rule_effects[it.key()] = effect_map(it.value());
      }
      w.policy_effects = effect_map(doc.at("policy_effects"));
      w.region_effects = effect_map(doc.at("region_effects"));
      if (doc.contains("varied_parameters"))
        w.varied_parameters = doc.at("varied_parameters").get<std::vector<std::string>>();
      if (!(w.noise_sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise_sigma must be >= 0");
      if (w.indicator_count < 2) throw Error(ErrorCode::kInvalidArgument, "indicator_count must be >= 2");
      return w;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument, std::string("toy world: ") + e.what());
    }
  }

  nlohmann::json to_json() const {
    auto effect_map = [](const std::map<std::string, Effect>& m) {
      nlohmann::json out = nlohmann::json::object();
      for (const auto& [k, e] : m) out[k] = {{"gdp", e.gdp}, {"gini", e.gini}};
      return out;
    };
    nlohmann::json doc{{"seed", seed},
                       {"noise_sigma", noise_sigma},
                       {"indicator_count", indicator_count},
                       {"loadings", effect_map(loadings)},
                       {"policy_effects", effect_map(policy_effects)},
                       {"region_effects", effect_map(region_effects)}};
    nlohmann::json rules = nlohmann::json::object();
    for (const auto& [k, m] : rule_effects) rules[k] = effect_map(m);
    doc["rule_effects"] = rules;
    if (varied_parameters) doc["varied_parameters"] = *varied_parameters;
    return doc;
  }
};

inline ToyWorldSpec load_world(const std::filesystem::path& path) {
  try {
    return ToyWorldSpec::from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, "toy world '" + path.string() + "': " + e.what());
  }
}

inline std::vector<std::string> toy_indicator_names(std::size_t count) {
  std::vector<std::string> names{"gdp_index", "gini_index"};
  for (std::size_t k = 3; k <= count; ++k) {
    std::string s = std::to_string(k);
    names.push_back("indicator_" + std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s);
  }
  return names;
}

/// A world resolved against a schema: every effect indexed by position.
class ToyWorld {
 public:
  ToyWorld(ToyWorldSpec spec, const ParameterSchema& schema) : spec_(std::move(spec)), schema_(schema) {
    const auto& cont = schema.continuous();
    loadings_.assign(cont.size(), Effect{});
    for (const auto& [name, e] : spec_.loadings) {
      auto j = schema.find_continuous(name);
      if (!j) throw Error(ErrorCode::kInvalidArgument, "toy world loading for unknown parameter '" + name + "'");
      loadings_[*j] = e;
    }
    varied_.assign(cont.size(), spec_.varied_parameters ? 0 : 1);
    if (spec_.varied_parameters) {
      for (const auto& name : *spec_.varied_parameters) {
        auto j = schema.find_continuous(name);
        if (!j) throw Error(ErrorCode::kInvalidArgument, "toy world varies unknown parameter '" + name + "'");
        varied_[*j] = 1;
      }
    }

    const auto& disc = schema.discrete();
    shifts_.resize(disc.size());
    for (std::size_t d = 0; d < disc.size(); ++d) shifts_[d].assign(disc[d].alternatives.size(), Effect{});
    auto fill = [&](std::size_t d, const std::map<std::string, Effect>& m, bool complete) {
      for (const auto& [alt, e] : m) {
        const auto k = disc[d].index_of(alt);
        if (k == kUnknownAlternative)
          throw Error(ErrorCode::kInvalidArgument,
                      "toy world effect for unknown alternative '" + alt + "' of " + disc[d].name);
        shifts_[d][k] = e;
      }
      if (complete) {
        for (const auto& alt : disc[d].alternatives)
          if (!m.count(alt))
            throw Error(ErrorCode::kInvalidArgument,
                        "toy world has no effect for " + disc[d].name + " '" + alt + "'");
      }
    };
    fill(schema.policy_index(), spec_.policy_effects, true);
    fill(schema.region_index(), spec_.region_effects, true);
    for (const auto& [name, m] : spec_.rule_effects) {
      auto d = schema.find_discrete(name);
      if (!d || *d == schema.policy_index() || *d == schema.region_index())
        throw Error(ErrorCode::kInvalidArgument, "toy world rule effect for unknown rule '" + name + "'");
      fill(*d, m, false);
    }
    names_ = toy_indicator_names(spec_.indicator_count);
  }

  const ToyWorldSpec& spec() const noexcept { return spec_; }
  const ParameterSchema& schema() const noexcept { return schema_; }
  const std::vector<std::string>& indicator_names() const noexcept { return names_; }

  /// Noise-free (gdp, gini) of a configuration.
  Effect expected(const Config& cfg) const {
    Effect out;
    const auto& cont = schema_.continuous();
    for (std::size_t j = 0; j < cont.size(); ++j) {
      const double u = cont[j].normalize(cfg.continuous[j]);
      out.gdp += loadings_[j].gdp * u;
      out.gini += loadings_[j].gini * u;
    }
    for (std::size_t d = 0; d < shifts_.size(); ++d) {
      const auto& e = shifts_[d].at(cfg.discrete[d]);
      out.gdp += e.gdp;
      out.gini += e.gini;
    }
    return out;
  }

  template <typename Rng>
  std::vector<double> simulate(const Config& cfg, Rng& rng) const {
    auto normal = [&] { return normal_quantile(uniform_open01(rng)); };
    const Effect mean = expected(cfg);
    const double s = spec_.noise_sigma;
    std::vector<double> out;
    out.reserve(names_.size());
    const double gdp = mean.gdp + s * normal();
    const double gini = mean.gini + s * normal();
    out.push_back(gdp);
    out.push_back(gini);
    for (std::size_t k = 2; k < names_.size(); ++k) {
      const double mix = static_cast<double>(k % 7) / 6.0;
      out.push_back(mix * gdp + (1.0 - mix) * gini + 0.1 * normal());
    }
    return out;
  }

  /// Corpus configuration: varied parameters uniform on their range, the
  /// others at the midpoint, discrete parameters uniform.
  template <typename Rng>
  Config draw_config(Rng& rng) const {
    Config cfg;
    for (std::size_t j = 0; j < schema_.continuous().size(); ++j) {
      const auto& c = schema_.continuous()[j];
      const double u = varied_[j] ? uniform_open01(rng) : 0.5;
      cfg.continuous.push_back(std::clamp(c.lower + u * (c.upper - c.lower), c.lower, c.upper));
    }
    for (const auto& d : schema_.discrete())
      cfg.discrete.push_back(static_cast<std::uint32_t>(uniform_index(rng, d.alternatives.size())));
    return cfg;
  }

  /// Record i of the corpus generated under `seed`.
  RunRecord record(std::uint64_t seed, std::uint64_t i) const {
    SplitMix64 config_rng(derive_seed(seed, StreamTag::kToyCorpus, i));
    SplitMix64 run_rng(derive_seed(seed, StreamTag::kToyRun, i));
    RunRecord rec;
    rec.run_id = std::to_string(i);
    rec.config = draw_config(config_rng);
    rec.indicators = simulate(rec.config, run_rng);
    return rec;
  }

 private:
  ToyWorldSpec spec_;
  const ParameterSchema& schema_;
  std::vector<Effect> loadings_;
  std::vector<std::uint8_t> varied_;
  std::vector<std::vector<Effect>> shifts_;
  std::vector<std::string> names_;
};

template <typename Rng>
std::vector<double> simulate_run(const Config& cfg, const ToyWorld& world, Rng& rng) {
  return world.simulate(cfg, rng);
}

/// In-memory corpus, identical to what ingest_runs reads back from generate_corpus.
inline RunCorpus generate_records(const ToyWorld& world, std::uint64_t n, std::uint64_t seed) {
  RunCorpus corpus;
  corpus.indicator_names = world.indicator_names();
  corpus.records.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) corpus.records.push_back(world.record(seed, i));
  corpus.valid_count = n;
  return corpus;
}

/// Writes `n` runs in the ingestion format: run_id, schema columns, indicators.
inline void generate_corpus(const ToyWorld& world, std::uint64_t n, std::uint64_t seed, std::ostream& out) {
  std::vector<std::string> row{"run_id"};
  for (auto& name : world.schema().column_names()) row.push_back(name);
  for (auto& name : world.indicator_names()) row.push_back(name);
  write_csv_row(out, row);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto rec = world.record(seed, i);
    row.clear();
    row.push_back(rec.run_id);
    append_config_fields(rec.config, world.schema(), row);
    for (double v : rec.indicators) row.push_back(format_double(v));
    write_csv_row(out, row);
  }
}

}  // namespace surrogate
