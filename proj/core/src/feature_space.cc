#include "driftscope/feature_space.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_set>

#include "driftscope/error.h"
#include "driftscope/half.h"
#include "overloaded.h"

namespace driftscope {

void ValidateKind(const FeatureKind& kind) {
  std::visit(Overloaded{
                 [](const NumericKind&) {},
                 [](const CategoricalKind& k) {
                   if (k.cardinality < 1) throw ConfigError("categorical cardinality must be >= 1");
                 },
                 [](const EmbeddingKind& k) {
                   if (k.dim < 1) throw ConfigError("embedding dim must be >= 1");
                 },
                 [](const SparseIdListKind& k) {
                   if (k.max_len < 1) throw ConfigError("sparse id list max_len must be >= 1");
                 },
                 [](const WeightedSparseIdListKind& k) {
                   if (k.max_len < 1) throw ConfigError("weighted id list max_len must be >= 1");
                 },
                 [](const EncodedEmbeddingKind& k) {
                   if (k.decoded_dim < 4 || k.decoded_dim % 4 != 0) {
                     throw ConfigError("encoded embedding decoded_dim must be a positive multiple of 4");
                   }
                 },
             },
             kind);
}

std::string KindName(const FeatureKind& kind) {
  return std::visit(Overloaded{
                        [](const NumericKind&) { return std::string("numeric"); },
                        [](const CategoricalKind&) { return std::string("categorical"); },
                        [](const EmbeddingKind&) { return std::string("embedding"); },
                        [](const SparseIdListKind&) { return std::string("sparse_id_list"); },
                        [](const WeightedSparseIdListKind&) {
                          return std::string("weighted_sparse_id_list");
                        },
                        [](const EncodedEmbeddingKind&) { return std::string("encoded_embedding"); },
                    },
                    kind);
}

bool ValueMatchesKind(const FeatureValue& value, const FeatureKind& kind) {
  if (value.index() != kind.index()) return false;
  switch (kind.index()) {
    case 0:
      return std::isfinite(std::get<NumericValue>(value).value);
    case 1: {
      const auto id = std::get<CategoricalValue>(value).id;
      return id >= 0 && id <= std::get<CategoricalKind>(kind).cardinality;
    }
    case 2:
      return static_cast<int64_t>(std::get<EmbeddingValue>(value).values.size()) ==
             std::get<EmbeddingKind>(kind).dim;
    case 3:
      return static_cast<int64_t>(std::get<SparseIdListValue>(value).ids.size()) <=
             std::get<SparseIdListKind>(kind).max_len;
    case 4:
      return static_cast<int64_t>(std::get<WeightedSparseIdListValue>(value).entries.size()) <=
             std::get<WeightedSparseIdListKind>(kind).max_len;
    case 5:
      return static_cast<int64_t>(std::get<EncodedEmbeddingValue>(value).words.size()) * 4 ==
             std::get<EncodedEmbeddingKind>(kind).decoded_dim;
  }
  return false;
}

FeatureValue BaselineValue(const FeatureKind& kind) {
  return std::visit(
      Overloaded{
          [](const NumericKind&) -> FeatureValue { return NumericValue{0.0}; },
          [](const CategoricalKind&) -> FeatureValue { return CategoricalValue{kUnknownCategory}; },
          [](const EmbeddingKind& k) -> FeatureValue {
            return EmbeddingValue{std::vector<double>(static_cast<size_t>(k.dim), 0.0)};
          },
          [](const SparseIdListKind&) -> FeatureValue { return SparseIdListValue{}; },
          [](const WeightedSparseIdListKind&) -> FeatureValue {
            return WeightedSparseIdListValue{};
          },
          [](const EncodedEmbeddingKind& k) -> FeatureValue {
            // All-zero words decode to +0.0 in every lane.
            return EncodedEmbeddingValue{std::vector<uint64_t>(static_cast<size_t>(k.decoded_dim / 4), 0)};
          },
      },
      kind);
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> entries) : entries_(std::move(entries)) {
  std::unordered_set<std::string> seen;
  for (const auto& e : entries_) {
    if (e.id.empty()) throw ConfigError("feature id must not be empty");
    // Ids appear in whitespace-separated text formats.
    if (std::any_of(e.id.begin(), e.id.end(), [](unsigned char c) { return c <= ' ' || c == 0x7F; })) {
      throw ConfigError("feature id contains whitespace or control characters: " + e.id);
    }
    if (!seen.insert(e.id).second) throw ConfigError("duplicate feature id: " + e.id);
    ValidateKind(e.kind);
    if (!ValueMatchesKind(e.baseline, e.kind)) {
      throw ConfigError("baseline of " + e.id + " does not match its kind");
    }
    if (!std::holds_alternative<NumericKind>(e.kind) && e.baseline != BaselineValue(e.kind)) {
      throw ConfigError("non-numeric feature " + e.id + " must use the canonical baseline");
    }
    const auto& g = e.generator;
    if (!(g.missing_rate >= 0.0 && g.missing_rate <= 1.0)) {
      throw ConfigError("missing_rate of " + e.id + " must be in [0, 1]");
    }
    if (g.stddev < 0.0) throw ConfigError("stddev of " + e.id + " must be >= 0");
    if (g.vocab < 2) throw ConfigError("vocab of " + e.id + " must be >= 2");
    if (g.min_len < 0) throw ConfigError("min_len of " + e.id + " must be >= 0");
    if (g.weight_max < g.weight_min) throw ConfigError("weight range of " + e.id + " is empty");
    if (g.drift_period <= 0.0) throw ConfigError("drift_period of " + e.id + " must be > 0");
  }
}

std::optional<size_t> FeatureSchema::Find(std::string_view feature_id) const {
  for (size_t j = 0; j < entries_.size(); ++j) {
    if (entries_[j].id == feature_id) return j;
  }
  return std::nullopt;
}

size_t FeatureSchema::ColumnOf(std::string_view feature_id) const {
  if (auto j = Find(feature_id)) return *j;
  throw ConfigError("unknown feature id: " + std::string(feature_id));
}

std::vector<std::string> FeatureSchema::FeatureIds() const {
  std::vector<std::string> ids;
  ids.reserve(entries_.size());
  for (const auto& e : entries_) ids.push_back(e.id);
  return ids;
}

FeatureSpec MakeFeature(std::string id, FeatureKind kind, GeneratorParams generator) {
  ValidateKind(kind);
  FeatureValue baseline = BaselineValue(kind);
  return FeatureSpec{std::move(id), std::move(kind), std::move(baseline), generator};
}

namespace {

std::string ColumnName(std::string_view prefix, size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 2) digits.insert(0, 2 - digits.size(), '0');
  return std::string(prefix) + "_" + digits;
}

}  // namespace

FeatureSchema StandardSchema(size_t num_features, uint64_t seed) {
  if (num_features < 6) throw ConfigError("standard schema needs at least 6 features");
  const size_t m = num_features;
  const size_t n_encoded = std::max<size_t>(2, m / 15);
  const size_t n_embedding = m / 10;
  const size_t n_categorical = m * 15 / 100;
  const size_t n_ids = m * 15 / 100;
  const size_t n_weighted = m * 13 / 100;
  const size_t n_numeric = m - n_encoded - n_embedding - n_categorical - n_ids - n_weighted;

  Rng rng(DeriveSeed(seed, 0x5C4E3A));
  std::vector<FeatureSpec> entries;
  entries.reserve(m);
  for (size_t i = 0; i < n_numeric; ++i) {
    GeneratorParams g;
    g.mean = rng.Uniform(-0.5, 0.5);
    g.stddev = rng.Uniform(0.5, 1.5);
    g.missing_rate = rng.Uniform(0.0, 0.3);
    entries.push_back(MakeFeature(ColumnName("num", i), NumericKind{}, g));
  }
  constexpr int64_t kCardinalities[] = {20, 50, 100, 500, 1000};
  for (size_t i = 0; i < n_categorical; ++i) {
    GeneratorParams g;
    g.zipf_exponent = rng.Uniform(0.8, 1.3);
    g.missing_rate = rng.Uniform(0.0, 0.2);
    entries.push_back(MakeFeature(ColumnName("cat", i), CategoricalKind{kCardinalities[rng.Below(5)]}, g));
  }
  for (size_t i = 0; i < n_embedding; ++i) {
    GeneratorParams g;
    g.stddev = rng.Uniform(0.3, 1.0);
    g.missing_rate = rng.Uniform(0.0, 0.2);
    entries.push_back(MakeFeature(ColumnName("emb", i), EmbeddingKind{8}, g));
  }
  constexpr int64_t kMaxLens[] = {10, 20, 50};
  for (size_t i = 0; i < n_ids; ++i) {
    GeneratorParams g;
    g.vocab = 1000;
    g.min_len = 1;
    g.missing_rate = rng.Uniform(0.0, 0.3);
    entries.push_back(MakeFeature(ColumnName("ids", i), SparseIdListKind{kMaxLens[rng.Below(3)]}, g));
  }
  for (size_t i = 0; i < n_weighted; ++i) {
    GeneratorParams g;
    g.vocab = 1000;
    g.min_len = 1;
    g.missing_rate = rng.Uniform(0.0, 0.3);
    entries.push_back(
        MakeFeature(ColumnName("wids", i), WeightedSparseIdListKind{kMaxLens[rng.Below(3)]}, g));
  }
  for (size_t i = 0; i < n_encoded; ++i) {
    GeneratorParams g;
    g.stddev = rng.Uniform(0.02, 0.1);
    g.missing_rate = rng.Uniform(0.0, 0.1);
    entries.push_back(MakeFeature(ColumnName("enc", i), EncodedEmbeddingKind{64}, g));
  }
  return FeatureSchema(std::move(entries));
}

std::string_view WindowLabelName(WindowLabel label) {
  return label == WindowLabel::kControl ? "control" : "anomaly";
}

WindowLabel ParseWindowLabel(std::string_view name) {
  if (name == "control") return WindowLabel::kControl;
  if (name == "anomaly") return WindowLabel::kAnomaly;
  throw DataError("unknown window label: " + std::string(name));
}

void ValidateExample(const FeatureSchema& schema, const Example& example) {
  if (example.features.size() != schema.size()) {
    throw DataError("example " + example.example_id + " has " +
                    std::to_string(example.features.size()) + " features, schema has " +
                    std::to_string(schema.size()));
  }
  for (size_t j = 0; j < schema.size(); ++j) {
    if (!ValueMatchesKind(example.features[j], schema.entry(j).kind)) {
      throw DataError("example " + example.example_id + ": value of " + schema.entry(j).id +
                      " does not match kind " + KindName(schema.entry(j).kind));
    }
  }
}

void ValidateDataset(const Dataset& dataset) {
  for (const auto& example : dataset.examples) {
    ValidateExample(dataset.schema, example);
    if (example.timestamp < dataset.window.start || example.timestamp > dataset.window.end) {
      throw DataError("example " + example.example_id + " lies outside the dataset window");
    }
  }
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

FeatureSampler::FeatureSampler(const FeatureSchema& schema) : schema_(schema) {
  zipf_cdf_.resize(schema_.size());
  for (size_t j = 0; j < schema_.size(); ++j) {
    const auto* cat = std::get_if<CategoricalKind>(&schema_.entry(j).kind);
    if (cat == nullptr) continue;
    auto& cdf = zipf_cdf_[j];
    cdf.resize(static_cast<size_t>(cat->cardinality));
    double total = 0.0;
    for (int64_t r = 1; r <= cat->cardinality; ++r) {
      total += std::pow(static_cast<double>(r), -schema_.entry(j).generator.zipf_exponent);
      cdf[static_cast<size_t>(r - 1)] = total;
    }
  }
}

std::vector<FeatureValue> FeatureSampler::Draw(int64_t timestamp, Rng& rng) const {
  std::vector<FeatureValue> values;
  values.reserve(schema_.size());
  for (size_t j = 0; j < schema_.size(); ++j) values.push_back(DrawOne(j, timestamp, rng));
  return values;
}

FeatureValue FeatureSampler::DrawOne(size_t column, int64_t timestamp, Rng& rng) const {
  const FeatureSpec& spec = schema_.entry(column);
  const GeneratorParams& g = spec.generator;
  // The missing draw happens first and unconditionally so the stream of
  // draws per column does not depend on the missing rate of other columns.
  const bool missing = rng.Uniform() < g.missing_rate;

  auto draw_length = [&](int64_t max_len) {
    const int64_t lo = std::min(g.min_len, max_len);
    return lo + static_cast<int64_t>(rng.Below(static_cast<uint64_t>(max_len - lo + 1)));
  };

  FeatureValue value = std::visit(
      Overloaded{
          [&](const NumericKind&) -> FeatureValue {
            double x = rng.Normal(g.mean, g.stddev);
            if (g.drift_amplitude != 0.0) {
              x += g.drift_amplitude *
                   std::sin(2.0 * std::numbers::pi * static_cast<double>(timestamp) / g.drift_period);
            }
            return NumericValue{x};
          },
          [&](const CategoricalKind&) -> FeatureValue {
            const auto& cdf = zipf_cdf_[column];
            const double u = rng.Uniform() * cdf.back();
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            const auto rank = std::min<size_t>(static_cast<size_t>(it - cdf.begin()), cdf.size() - 1);
            return CategoricalValue{static_cast<int64_t>(rank) + 1};
          },
          [&](const EmbeddingKind& k) -> FeatureValue {
            EmbeddingValue v;
            v.values.resize(static_cast<size_t>(k.dim));
            for (auto& x : v.values) x = rng.Normal(0.0, g.stddev);
            return v;
          },
          [&](const SparseIdListKind& k) -> FeatureValue {
            SparseIdListValue v;
            v.ids.resize(static_cast<size_t>(draw_length(k.max_len)));
            for (auto& id : v.ids) id = 1 + static_cast<int64_t>(rng.Below(static_cast<uint64_t>(g.vocab - 1)));
            return v;
          },
          [&](const WeightedSparseIdListKind& k) -> FeatureValue {
            WeightedSparseIdListValue v;
            v.entries.resize(static_cast<size_t>(draw_length(k.max_len)));
            for (auto& e : v.entries) {
              e.id = 1 + static_cast<int64_t>(rng.Below(static_cast<uint64_t>(g.vocab - 1)));
              e.weight = rng.Uniform(g.weight_min, g.weight_max);
            }
            return v;
          },
          [&](const EncodedEmbeddingKind& k) -> FeatureValue {
            std::vector<double> decoded(static_cast<size_t>(k.decoded_dim));
            for (auto& x : decoded) x = rng.Normal(0.0, g.stddev);
            return EncodedEmbeddingValue{EncodeEmbedding(decoded)};
          },
      },
      spec.kind);
  if (missing) return spec.baseline;
  return value;
}

size_t ApplyDisplayRule(std::vector<Example>& examples, std::span<const double> scores,
                        double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("display fraction must be in (0, 1]");
  if (scores.size() != examples.size()) throw ConfigError("one score per example is required");
  if (examples.empty()) return 0;
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  const auto count = std::clamp<size_t>(
      static_cast<size_t>(std::llround(fraction * static_cast<double>(examples.size()))), 1,
      examples.size());
  for (auto& e : examples) e.displayed = false;
  for (size_t r = 0; r < count; ++r) examples[order[r]].displayed = true;
  return count;
}

Dataset GenerateDataset(const GeneratorConfig& config, TimeWindow window,
                        const ExampleScorer& scorer) {
  if (config.schema.size() == 0) throw ConfigError("generator needs at least one feature");
  if (config.num_examples == 0) throw ConfigError("generator needs at least one example");
  if (!(config.display_fraction > 0.0 && config.display_fraction <= 1.0)) {
    throw ConfigError("display fraction must be in (0, 1]");
  }
  if (window.end < window.start) throw ConfigError("window end precedes its start");
  if (!scorer) throw ConfigError("generator needs a scorer for the display rule");

  Dataset dataset;
  dataset.schema = config.schema;
  dataset.window = window;
  dataset.label = WindowLabel::kControl;
  dataset.examples.reserve(config.num_examples);

  const FeatureSampler sampler(config.schema);
  Rng rng(DeriveSeed(config.seed, 0xD47A));
  const auto n = static_cast<int64_t>(config.num_examples);
  const int64_t span = window.end - window.start;
  for (int64_t i = 0; i < n; ++i) {
    Example e;
    e.example_id = config.id_prefix + "-" + std::to_string(i);
    e.timestamp = window.start + (n > 1 ? span * i / (n - 1) : 0);
    e.features = sampler.Draw(e.timestamp, rng);
    dataset.examples.push_back(std::move(e));
  }

  std::vector<double> scores;
  scores.reserve(dataset.examples.size());
  for (const auto& e : dataset.examples) scores.push_back(scorer(e));
  ApplyDisplayRule(dataset.examples, scores, config.display_fraction);
  return dataset;
}

}  // namespace driftscope
