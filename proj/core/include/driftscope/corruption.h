#pragma once

// Declarative feature corruptions, the control -> anomaly experiment harness
// and recall metrics for comparing GFI-shift and MFC-shift root causing.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "driftscope/aggregation.h"
#include "driftscope/attribution.h"
#include "driftscope/feature_space.h"
#include "driftscope/model.h"

namespace driftscope {

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

struct IdentityTransform {
  bool operator==(const IdentityTransform&) const = default;
};
struct LinearScale {  // numeric x -> factor * x
  double factor = 2.0;
  bool operator==(const LinearScale&) const = default;
};
struct PowerTransform {  // numeric x -> x^exponent
  double exponent = 3.0;
  bool operator==(const PowerTransform&) const = default;
};
struct SetCategoricalConstant {
  int64_t category = 1;
  bool operator==(const SetCategoricalConstant&) const = default;
};
struct ReplaceWithBaseline {
  bool operator==(const ReplaceWithBaseline&) const = default;
};
struct DropRandomIds {  // removes ceil(fraction * len) ids chosen at random
  double fraction = 0.5;
  bool operator==(const DropRandomIds&) const = default;
};
struct DropRecentIds {  // removes the last ceil(fraction * len) ids
  double fraction = 0.5;
  bool operator==(const DropRecentIds&) const = default;
};
struct ZeroWeights {  // weighted id lists keep their ids with weight 0
  bool operator==(const ZeroWeights&) const = default;
};
struct EncodedIntDivide {  // every packed word w -> floor(w / divisor)
  uint64_t divisor = 10;
  bool operator==(const EncodedIntDivide&) const = default;
};

using CorruptionTransform =
    std::variant<IdentityTransform, LinearScale, PowerTransform, SetCategoricalConstant,
                 ReplaceWithBaseline, DropRandomIds, DropRecentIds, ZeroWeights, EncodedIntDivide>;

std::string DescribeTransform(const CorruptionTransform& transform);
// Throws ConfigError when the transform cannot apply to `kind`.
void CheckTransformCompatible(const CorruptionTransform& transform, const FeatureKind& kind,
                              const std::string& feature_id);

// ---------------------------------------------------------------------------
// Targets and specs
// ---------------------------------------------------------------------------

struct ExplicitTargets {
  std::vector<std::string> features;
  bool operator==(const ExplicitTargets&) const = default;
};
// `count` distinct features drawn with the spec seed, optionally restricted
// to one kind (KindName spelling).
struct RandomTargets {
  size_t count = 1;
  std::string kind;
  bool operator==(const RandomTargets&) const = default;
};
// Top and bottom features by control-window GFI.
struct PriorGfiTargets {
  size_t important = 2;
  size_t unimportant = 2;
  bool operator==(const PriorGfiTargets&) const = default;
};
using TargetSelector = std::variant<ExplicitTargets, RandomTargets, PriorGfiTargets>;

struct CorruptionSpec {
  int case_id = 0;
  std::string description;
  TargetSelector targets;
  CorruptionTransform transform;
  // Fraction of examples modified, in (0, 1].
  double example_fraction = 1.0;
  uint64_t seed = 0;

  bool operator==(const CorruptionSpec&) const = default;
};

// Top `important` plus bottom `unimportant` features by GFI, ties ordered by
// feature id. Throws ConfigError when the vector is too short.
std::vector<std::string> SelectTargetsByPriorGfi(const GfiVector& control, size_t important,
                                                 size_t unimportant);

// Resolves the selector to feature ids in schema order (prior-GFI selections
// keep their important-then-unimportant order). `prior` is required for
// PriorGfiTargets.
std::vector<std::string> ResolveTargets(const CorruptionSpec& spec, const FeatureSchema& schema,
                                        const GfiVector* prior = nullptr);

// Returns an anomaly-labelled copy of `dataset` where the targeted features of
// ceil(example_fraction * N) seeded examples are transformed. Everything else
// is left bit-identical.
Dataset ApplyCorruption(const Dataset& dataset, const CorruptionSpec& spec,
                        std::span<const std::string> targets);
Dataset ApplyCorruption(const Dataset& dataset, const CorruptionSpec& spec);

// 100 * (mean(anomaly) - mean(control)) / mean(control).
double AveragePredictionChange(std::span<const double> control, std::span<const double> anomaly);

// The eleven standard corruption cases, seeded from `seed`.
std::vector<CorruptionSpec> StandardCases(uint64_t seed = 11);

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

struct BenchConfig {
  size_t num_features = 60;
  uint64_t schema_seed = 2024;
  // The schema field is filled from num_features/schema_seed.
  ModelConfig model;
  uint64_t data_seed = 7;
  size_t pool_size = 30000;
  double display_fraction = 0.2;
  TimeWindow window{1'700'000'000, 1'700'003'600};
  size_t sample_size = kDefaultSampleSizeCeiling;
  uint64_t sample_seed = 13;
  size_t k = 10;
  LfiMethod method;
  size_t parallelism = 1;
  std::vector<CorruptionSpec> cases = StandardCases();

  bool operator==(const BenchConfig&) const = default;
};

struct CaseResult {
  int case_id = 0;
  std::string description;
  std::vector<std::string> corrupted_features;
  double avg_prediction_change = 0.0;
  size_t gfi_hits = 0;
  // Unset when MFC has no proxy for any corrupted feature.
  std::optional<size_t> mfc_hits;
  RankedReport gfi_report;
  RankedReport mfc_report;

  bool operator==(const CaseResult&) const = default;
};

// Control-side state shared by every case of one benchmark configuration:
// the frozen checkpoint, the scored control pool, the aggregation sample and
// its LFIs, GFIs and logged predictions.
class BenchContext {
 public:
  explicit BenchContext(BenchConfig config);

  const BenchConfig& config() const { return config_; }
  const Model& model() const { return *model_; }
  const FeatureSchema& schema() const { return model_->schema(); }
  const Dataset& control_pool() const { return pool_; }
  const Dataset& control_sample() const { return sample_; }
  const std::vector<double>& control_predictions() const { return predictions_; }
  const LfiMatrix& control_lfi() const { return lfi_; }
  const GfiVector& control_gfi() const { return gfi_; }
  const std::string& checkpoint_id() const { return checkpoint_id_; }

  CaseResult RunCase(const CorruptionSpec& spec) const;

 private:
  BenchConfig config_;
  std::unique_ptr<Model> model_;
  Dataset pool_;
  Dataset sample_;
  std::vector<double> predictions_;
  LfiMatrix lfi_;
  GfiVector gfi_;
  std::string checkpoint_id_;
};

// Builds a fresh context and runs one case.
CaseResult RunCase(const CorruptionSpec& spec, const BenchConfig& config);

struct MethodRecall {
  // Percentages.
  double overall = 0.0;
  double at_least_one = 0.0;
  size_t cases = 0;
  size_t corrupted = 0;
  size_t hits = 0;

  bool operator==(const MethodRecall&) const = default;
};

struct RecallSummary {
  MethodRecall gfi;
  // Unset when MFC is not applicable to any case.
  std::optional<MethodRecall> mfc;

  bool operator==(const RecallSummary&) const = default;
};

// Throws ConfigError on empty input.
RecallSummary ComputeRecall(std::span<const CaseResult> results);

// Hits of `corrupted` within the report's top K.
size_t CountHits(const RankedReport& report, std::span<const std::string> corrupted);

}  // namespace driftscope
