#pragma once

// Typed feature universe: feature kinds and values, per-kind static
// baselines, schemas, examples and datasets, and the seeded synthetic
// traffic generator.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "driftscope/rng.h"

namespace driftscope {

// ---------------------------------------------------------------------------
// Kinds
// ---------------------------------------------------------------------------

struct NumericKind {
  bool operator==(const NumericKind&) const = default;
};
struct CategoricalKind {
  int64_t cardinality = 1;
  bool operator==(const CategoricalKind&) const = default;
};
struct EmbeddingKind {
  int64_t dim = 1;
  bool operator==(const EmbeddingKind&) const = default;
};
struct SparseIdListKind {
  int64_t max_len = 1;
  bool operator==(const SparseIdListKind&) const = default;
};
struct WeightedSparseIdListKind {
  int64_t max_len = 1;
  bool operator==(const WeightedSparseIdListKind&) const = default;
};
// An upstream real vector quantized to fp16 and packed four lanes per
// 64-bit word. decoded_dim must be a multiple of 4.
struct EncodedEmbeddingKind {
  int64_t decoded_dim = 4;
  bool operator==(const EncodedEmbeddingKind&) const = default;
};

using FeatureKind = std::variant<NumericKind, CategoricalKind, EmbeddingKind, SparseIdListKind,
                                 WeightedSparseIdListKind, EncodedEmbeddingKind>;

// Throws ConfigError when a dimension, cardinality or length is invalid.
void ValidateKind(const FeatureKind& kind);
std::string KindName(const FeatureKind& kind);

// ---------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------

// Category ids run from 1 to cardinality; 0 is the reserved unknown category.
inline constexpr int64_t kUnknownCategory = 0;

struct NumericValue {
  double value = 0.0;
  bool operator==(const NumericValue&) const = default;
};
struct CategoricalValue {
  int64_t id = kUnknownCategory;
  bool operator==(const CategoricalValue&) const = default;
};
struct EmbeddingValue {
  std::vector<double> values;
  bool operator==(const EmbeddingValue&) const = default;
};
// Ids are stored oldest first; the most recent id is last.
struct SparseIdListValue {
  std::vector<int64_t> ids;
  bool operator==(const SparseIdListValue&) const = default;
};
struct WeightedId {
  int64_t id = 0;
  double weight = 0.0;
  bool operator==(const WeightedId&) const = default;
};
struct WeightedSparseIdListValue {
  std::vector<WeightedId> entries;
  bool operator==(const WeightedSparseIdListValue&) const = default;
};
struct EncodedEmbeddingValue {
  std::vector<uint64_t> words;
  bool operator==(const EncodedEmbeddingValue&) const = default;
};

using FeatureValue = std::variant<NumericValue, CategoricalValue, EmbeddingValue,
                                  SparseIdListValue, WeightedSparseIdListValue,
                                  EncodedEmbeddingValue>;

// True when the value's tag and shape are valid for the kind.
bool ValueMatchesKind(const FeatureValue& value, const FeatureKind& kind);

// Static, data-independent baseline: 0.0 for numeric features, the unknown
// category, zero vectors for embeddings and empty id lists.
FeatureValue BaselineValue(const FeatureKind& kind);

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

// Parameters for the synthetic generator. Fields that do not apply to a
// feature's kind are ignored.
struct GeneratorParams {
  double missing_rate = 0.0;
  // Numeric: N(mean, stddev) plus drift_amplitude * sin(2*pi*t/drift_period).
  // Embedding and encoded embedding: per-component N(0, stddev).
  double mean = 0.0;
  double stddev = 1.0;
  double drift_amplitude = 0.0;
  double drift_period = 86400.0;
  // Categorical: Zipf exponent over ids 1..cardinality.
  double zipf_exponent = 1.0;
  // Id lists: ids drawn uniformly from [1, vocab), lengths from [min_len, max_len].
  int64_t vocab = 1000;
  int64_t min_len = 1;
  // Weighted id lists: weights uniform in [weight_min, weight_max].
  double weight_min = 0.1;
  double weight_max = 2.0;

  bool operator==(const GeneratorParams&) const = default;
};

struct FeatureSpec {
  std::string id;
  FeatureKind kind;
  // Numeric baselines may be any finite constant; other kinds must use the
  // canonical BaselineValue.
  FeatureValue baseline;
  GeneratorParams generator;

  bool operator==(const FeatureSpec&) const = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Validates ids (unique, non-empty), kinds and baselines.
  explicit FeatureSchema(std::vector<FeatureSpec> entries);

  size_t size() const { return entries_.size(); }
  const FeatureSpec& entry(size_t column) const { return entries_.at(column); }
  const std::vector<FeatureSpec>& entries() const { return entries_; }
  const FeatureValue& baseline(size_t column) const { return entries_.at(column).baseline; }
  std::optional<size_t> Find(std::string_view feature_id) const;
  // Throws ConfigError for unknown ids.
  size_t ColumnOf(std::string_view feature_id) const;
  std::vector<std::string> FeatureIds() const;

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<FeatureSpec> entries_;
};

// Builds a spec whose baseline is BaselineValue(kind).
FeatureSpec MakeFeature(std::string id, FeatureKind kind, GeneratorParams generator = {});

// Small mixed-kind schema with `num_features` columns. Generator
// parameters (missing rates, spreads) are drawn from `seed`.
FeatureSchema StandardSchema(size_t num_features = 60, uint64_t seed = 2024);

// ---------------------------------------------------------------------------
// Examples and datasets
// ---------------------------------------------------------------------------

struct Example {
  std::string example_id;
  // One value per schema column, in schema order.
  std::vector<FeatureValue> features;
  bool displayed = false;
  int64_t timestamp = 0;

  bool operator==(const Example&) const = default;
};

enum class WindowLabel { kControl, kAnomaly };
std::string_view WindowLabelName(WindowLabel label);
WindowLabel ParseWindowLabel(std::string_view name);

struct TimeWindow {
  int64_t start = 0;
  int64_t end = 0;
  bool operator==(const TimeWindow&) const = default;
};

struct Dataset {
  FeatureSchema schema;
  std::vector<Example> examples;
  WindowLabel label = WindowLabel::kControl;
  TimeWindow window;

  bool operator==(const Dataset&) const = default;
};

// Checks that every example has one value per column with matching kinds and
// a timestamp inside the window. Throws DataError naming the first violation.
void ValidateExample(const FeatureSchema& schema, const Example& example);
void ValidateDataset(const Dataset& dataset);

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

struct GeneratorConfig {
  FeatureSchema schema;
  size_t num_examples = 1000;
  uint64_t seed = 0;
  // Examples whose teacher score ranks in the top fraction are displayed.
  double display_fraction = 0.2;
  std::string id_prefix = "ex";
};

// Scores an example for the display rule (typically a teacher model).
using ExampleScorer = std::function<double(const Example&)>;

// Draws examples independently from the per-feature generators. Output is a
// pure function of (config, window, scorer).
Dataset GenerateDataset(const GeneratorConfig& config, TimeWindow window,
                        const ExampleScorer& scorer);

// Per-feature value generators for one schema. Exposed for stream
// generation; GenerateDataset uses it internally.
class FeatureSampler {
 public:
  explicit FeatureSampler(const FeatureSchema& schema);
  std::vector<FeatureValue> Draw(int64_t timestamp, Rng& rng) const;

 private:
  FeatureValue DrawOne(size_t column, int64_t timestamp, Rng& rng) const;

  FeatureSchema schema_;
  // Cumulative Zipf weights per categorical column (empty otherwise).
  std::vector<std::vector<double>> zipf_cdf_;
};

// Marks the top `fraction` of examples by score as displayed (ties broken by
// position). Returns the number displayed.
size_t ApplyDisplayRule(std::vector<Example>& examples, std::span<const double> scores,
                        double fraction);

}  // namespace driftscope
