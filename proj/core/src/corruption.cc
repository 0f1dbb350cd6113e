#include "driftscope/corruption.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "driftscope/error.h"
#include "driftscope/io.h"
#include "driftscope/mfc.h"
#include "driftscope/rng.h"
#include "overloaded.h"

namespace driftscope {
namespace {

std::string FormatNumber(double x) {
  std::ostringstream out;
  out << x;
  return out.str();
}

size_t CeilFraction(double fraction, size_t n) {
  return static_cast<size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

void CheckFraction(double fraction, const char* what) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError(std::string(what) + " must be in (0, 1]");
  }
}

}  // namespace

std::string DescribeTransform(const CorruptionTransform& transform) {
  return std::visit(
      Overloaded{
          [](const IdentityTransform&) { return std::string("identity"); },
          [](const LinearScale& t) { return "x -> " + FormatNumber(t.factor) + "x"; },
          [](const PowerTransform& t) { return "x -> x^" + FormatNumber(t.exponent); },
          [](const SetCategoricalConstant& t) {
            return "set category to constant " + std::to_string(t.category);
          },
          [](const ReplaceWithBaseline&) { return std::string("replace with baseline"); },
          [](const DropRandomIds& t) {
            return "randomly remove " + FormatNumber(100.0 * t.fraction) + "% of ids";
          },
          [](const DropRecentIds& t) {
            return "remove most recent " + FormatNumber(100.0 * t.fraction) + "% of ids";
          },
          [](const ZeroWeights&) { return std::string("zero weights"); },
          [](const EncodedIntDivide& t) {
            return "x -> floor(x/" + std::to_string(t.divisor) + ") in encoded representation";
          },
      },
      transform);
}

void CheckTransformCompatible(const CorruptionTransform& transform, const FeatureKind& kind,
                              const std::string& feature_id) {
  const bool ok = std::visit(
      Overloaded{
          [](const IdentityTransform&) { return true; },
          [&](const LinearScale&) { return std::holds_alternative<NumericKind>(kind); },
          [&](const PowerTransform&) { return std::holds_alternative<NumericKind>(kind); },
          [&](const SetCategoricalConstant& t) {
            const auto* k = std::get_if<CategoricalKind>(&kind);
            return k != nullptr && t.category != kUnknownCategory && t.category >= 1 &&
                   t.category <= k->cardinality;
          },
          [](const ReplaceWithBaseline&) { return true; },
          [&](const DropRandomIds& t) {
            CheckFraction(t.fraction, "id drop fraction");
            return std::holds_alternative<SparseIdListKind>(kind) ||
                   std::holds_alternative<WeightedSparseIdListKind>(kind);
          },
          [&](const DropRecentIds& t) {
            CheckFraction(t.fraction, "id drop fraction");
            return std::holds_alternative<SparseIdListKind>(kind) ||
                   std::holds_alternative<WeightedSparseIdListKind>(kind);
          },
          [&](const ZeroWeights&) { return std::holds_alternative<WeightedSparseIdListKind>(kind); },
          [&](const EncodedIntDivide& t) {
            return t.divisor >= 1 && std::holds_alternative<EncodedEmbeddingKind>(kind);
          },
      },
      transform);
  if (!ok) {
    throw ConfigError("transform '" + DescribeTransform(transform) + "' cannot apply to " + feature_id +
                      " (" + KindName(kind) + ")");
  }
}

namespace {

template <class Entry>
void DropRandom(std::vector<Entry>& items, double fraction, Rng& rng) {
  const size_t remove = std::min(items.size(), CeilFraction(fraction, items.size()));
  std::vector<size_t> index(items.size());
  std::iota(index.begin(), index.end(), size_t{0});
  for (size_t k = 0; k < remove; ++k) {
    std::swap(index[k], index[k + static_cast<size_t>(rng.Below(index.size() - k))]);
  }
  std::vector<bool> dropped(items.size(), false);
  for (size_t k = 0; k < remove; ++k) dropped[index[k]] = true;
  std::vector<Entry> kept;
  kept.reserve(items.size() - remove);
  for (size_t k = 0; k < items.size(); ++k) {
    if (!dropped[k]) kept.push_back(items[k]);
  }
  items = std::move(kept);
}

template <class Entry>
void DropRecent(std::vector<Entry>& items, double fraction) {
  const size_t remove = std::min(items.size(), CeilFraction(fraction, items.size()));
  items.resize(items.size() - remove);
}

void TransformValue(const CorruptionTransform& transform, const FeatureValue& baseline,
                    FeatureValue& value, Rng& rng) {
  std::visit(
      Overloaded{
          [](const IdentityTransform&) {},
          [&](const LinearScale& t) { std::get<NumericValue>(value).value *= t.factor; },
          [&](const PowerTransform& t) {
            double& x = std::get<NumericValue>(value).value;
            x = std::pow(x, t.exponent);
            if (!std::isfinite(x)) throw DataError("power transform produced a non-finite value");
          },
          [&](const SetCategoricalConstant& t) { std::get<CategoricalValue>(value).id = t.category; },
          [&](const ReplaceWithBaseline&) { value = baseline; },
          [&](const DropRandomIds& t) {
            if (auto* v = std::get_if<SparseIdListValue>(&value)) {
              DropRandom(v->ids, t.fraction, rng);
            } else {
              DropRandom(std::get<WeightedSparseIdListValue>(value).entries, t.fraction, rng);
            }
          },
          [&](const DropRecentIds& t) {
            if (auto* v = std::get_if<SparseIdListValue>(&value)) {
              DropRecent(v->ids, t.fraction);
            } else {
              DropRecent(std::get<WeightedSparseIdListValue>(value).entries, t.fraction);
            }
          },
          [&](const ZeroWeights&) {
            for (auto& e : std::get<WeightedSparseIdListValue>(value).entries) e.weight = 0.0;
          },
          [&](const EncodedIntDivide& t) {
            for (auto& w : std::get<EncodedEmbeddingValue>(value).words) w /= t.divisor;
          },
      },
      transform);
}

}  // namespace

std::vector<std::string> SelectTargetsByPriorGfi(const GfiVector& control, size_t important,
                                                 size_t unimportant) {
  if (control.features.size() < important + unimportant) {
    throw ConfigError("not enough features to select " + std::to_string(important) + " important and " +
                      std::to_string(unimportant) + " unimportant ones");
  }
  std::vector<const FeatureGfi*> order;
  for (const auto& f : control.features) order.push_back(&f);
  std::sort(order.begin(), order.end(), [](const FeatureGfi* a, const FeatureGfi* b) {
    if (a->gfi != b->gfi) return a->gfi > b->gfi;
    return a->feature_id < b->feature_id;
  });
  std::vector<std::string> picked;
  for (size_t r = 0; r < important; ++r) picked.push_back(order[r]->feature_id);
  // Bottom by ascending GFI with the same id tiebreak.
  std::stable_sort(order.begin(), order.end(), [](const FeatureGfi* a, const FeatureGfi* b) {
    if (a->gfi != b->gfi) return a->gfi < b->gfi;
    return a->feature_id < b->feature_id;
  });
  for (size_t r = 0; picked.size() < important + unimportant; ++r) {
    const auto& id = order[r]->feature_id;
    if (std::find(picked.begin(), picked.end(), id) == picked.end()) picked.push_back(id);
  }
  return picked;
}

std::vector<std::string> ResolveTargets(const CorruptionSpec& spec, const FeatureSchema& schema,
                                        const GfiVector* prior) {
  std::vector<std::string> targets = std::visit(
      Overloaded{
          [&](const ExplicitTargets& t) {
            for (const auto& id : t.features) schema.ColumnOf(id);
            return t.features;
          },
          [&](const RandomTargets& t) {
            std::vector<size_t> eligible;
            for (size_t j = 0; j < schema.size(); ++j) {
              if (t.kind.empty() || KindName(schema.entry(j).kind) == t.kind) eligible.push_back(j);
            }
            if (eligible.size() < t.count) {
              throw ConfigError("case " + std::to_string(spec.case_id) + ": only " +
                                std::to_string(eligible.size()) + " eligible features for " +
                                std::to_string(t.count) + " random targets");
            }
            Rng rng(DeriveSeed(spec.seed, 0x7A6));
            for (size_t k = 0; k < t.count; ++k) {
              std::swap(eligible[k], eligible[k + static_cast<size_t>(rng.Below(eligible.size() - k))]);
            }
            eligible.resize(t.count);
            std::sort(eligible.begin(), eligible.end());
            std::vector<std::string> ids;
            for (size_t j : eligible) ids.push_back(schema.entry(j).id);
            return ids;
          },
          [&](const PriorGfiTargets& t) {
            if (prior == nullptr) {
              throw ConfigError("case " + std::to_string(spec.case_id) +
                                ": prior-GFI targets need control GFIs");
            }
            return SelectTargetsByPriorGfi(*prior, t.important, t.unimportant);
          },
      },
      spec.targets);
  std::unordered_set<std::string> unique(targets.begin(), targets.end());
  if (unique.size() != targets.size()) throw ConfigError("corruption targets must be distinct");
  return targets;
}

Dataset ApplyCorruption(const Dataset& dataset, const CorruptionSpec& spec,
                        std::span<const std::string> targets) {
  CheckFraction(spec.example_fraction, "affected example fraction");
  if (targets.empty()) throw ConfigError("corruption selects no features");
  std::vector<size_t> columns;
  for (const auto& id : targets) {
    const size_t j = dataset.schema.ColumnOf(id);
    CheckTransformCompatible(spec.transform, dataset.schema.entry(j).kind, id);
    columns.push_back(j);
  }

  const size_t n = dataset.examples.size();
  const size_t affected = std::min(n, CeilFraction(spec.example_fraction, n));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng pick(DeriveSeed(spec.seed, 0xE8A));
  if (affected < n) {
    for (size_t k = 0; k < affected; ++k) {
      std::swap(order[k], order[k + static_cast<size_t>(pick.Below(n - k))]);
    }
  }
  order.resize(affected);

  Dataset out = dataset;
  out.label = WindowLabel::kAnomaly;
  for (size_t i : order) {
    Rng rng(DeriveSeed(spec.seed, 0x10000 + i));
    for (size_t j : columns) {
      TransformValue(spec.transform, dataset.schema.baseline(j), out.examples[i].features[j], rng);
    }
  }
  return out;
}

Dataset ApplyCorruption(const Dataset& dataset, const CorruptionSpec& spec) {
  const auto targets = ResolveTargets(spec, dataset.schema);
  return ApplyCorruption(dataset, spec, targets);
}

double AveragePredictionChange(std::span<const double> control, std::span<const double> anomaly) {
  if (control.size() != anomaly.size() || control.empty()) {
    throw DataError("prediction change needs equally many non-zero control and anomaly predictions");
  }
  double c = 0.0;
  double a = 0.0;
  for (double p : control) c += p;
  for (double p : anomaly) a += p;
  c /= static_cast<double>(control.size());
  a /= static_cast<double>(anomaly.size());
  if (c < 1e-9) throw DataError("mean control prediction is too small for a relative change");
  return 100.0 * (a - c) / c;
}

std::vector<CorruptionSpec> StandardCases(uint64_t seed) {
  auto make = [&](int id, std::string description, TargetSelector targets, CorruptionTransform transform,
                  double fraction) {
    return CorruptionSpec{id, std::move(description), std::move(targets), std::move(transform), fraction,
                          DeriveSeed(seed, static_cast<uint64_t>(id))};
  };
  return {
      make(1, "x -> 2x (linear change)", RandomTargets{1, "numeric"}, LinearScale{2.0}, 1.0),
      make(2, "x -> x^3 (non-linear change)", RandomTargets{1, "numeric"}, PowerTransform{3.0}, 1.0),
      make(3, "set categorical feature to a constant other than unknown", RandomTargets{1, "categorical"},
           SetCategoricalConstant{1}, 1.0),
      make(4, "replace 3 random features with baseline for 100% of examples", RandomTargets{3, ""},
           ReplaceWithBaseline{}, 1.0),
      make(5, "replace 3 random features with baseline for 50% of examples", RandomTargets{3, ""},
           ReplaceWithBaseline{}, 0.5),
      make(6, "replace 2 important and 2 unimportant features with baseline for 100% of examples",
           PriorGfiTargets{2, 2}, ReplaceWithBaseline{}, 1.0),
      make(7, "replace 2 important and 2 unimportant features with baseline for 50% of examples",
           PriorGfiTargets{2, 2}, ReplaceWithBaseline{}, 0.5),
      make(8, "randomly remove 50% of ids from a sparse id list", RandomTargets{1, "sparse_id_list"},
           DropRandomIds{0.5}, 1.0),
      make(9, "remove the most recent 50% of ids from a sparse id list", RandomTargets{1, "sparse_id_list"},
           DropRecentIds{0.5}, 1.0),
      make(10, "zero weights in a weighted sparse id list for 100% of examples",
           RandomTargets{1, "weighted_sparse_id_list"}, ZeroWeights{}, 1.0),
      make(11, "x -> floor(x/10) in encoded representation of 2 encoded embeddings",
           RandomTargets{2, "encoded_embedding"}, EncodedIntDivide{10}, 1.0),
  };
}

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

BenchContext::BenchContext(BenchConfig config) : config_(std::move(config)) {
  if (config_.k == 0) throw ConfigError("K must be >= 1");
  config_.model.schema = StandardSchema(config_.num_features, config_.schema_seed);
  model_ = std::make_unique<Model>(Model::Create(config_.model));

  GeneratorConfig gen;
  gen.schema = model_->schema();
  gen.num_examples = config_.pool_size;
  gen.seed = config_.data_seed;
  gen.display_fraction = config_.display_fraction;
  const Model& teacher = *model_;
  pool_ = GenerateDataset(gen, config_.window, [&](const Example& e) { return teacher.Predict(e); });
  sample_ = SampleForAggregation(pool_, config_.sample_size, config_.sample_seed);
  predictions_ = model_->PredictBatch(sample_.examples);

  AttributionOptions options;
  options.parallelism = config_.parallelism;
  lfi_ = ComputeLfiMatrix(*model_, sample_, config_.method, options);
  checkpoint_id_ = CheckpointId(*model_);
  lfi_.checkpoint_id = checkpoint_id_;
  gfi_ = ComputeGfi(lfi_, "control");
}

size_t CountHits(const RankedReport& report, std::span<const std::string> corrupted) {
  const auto top = report.TopK();
  size_t hits = 0;
  for (const auto& id : corrupted) {
    if (std::find(top.begin(), top.end(), id) != top.end()) ++hits;
  }
  return hits;
}

CaseResult BenchContext::RunCase(const CorruptionSpec& spec) const {
  try {
    const auto targets = ResolveTargets(spec, schema(), &gfi_);
    const Dataset anomaly_pool = ApplyCorruption(pool_, spec, targets);
    const Dataset anomaly_sample = SampleForAggregation(anomaly_pool, config_.sample_size, config_.sample_seed);
    const auto anomaly_predictions = model_->PredictBatch(anomaly_sample.examples);

    AttributionOptions options;
    options.parallelism = config_.parallelism;
    LfiMatrix anomaly_lfi = ComputeLfiMatrix(*model_, anomaly_sample, config_.method, options);
    const GfiVector anomaly_gfi = ComputeGfi(anomaly_lfi, "anomaly");

    CaseResult result;
    result.case_id = spec.case_id;
    result.description = spec.description;
    result.corrupted_features = targets;
    result.avg_prediction_change = AveragePredictionChange(predictions_, anomaly_predictions);

    result.gfi_report = RankFeatures(gfi_, anomaly_gfi, config_.k);
    result.gfi_report.meta.method = "gfi:" + config_.method.Name();
    result.gfi_report.meta.checkpoint_id = checkpoint_id_;
    result.gfi_hits = CountHits(result.gfi_report, targets);

    result.mfc_report = MfcRank(sample_, predictions_, anomaly_sample, anomaly_predictions, config_.k);
    result.mfc_report.meta.checkpoint_id = checkpoint_id_;
    const bool mfc_applicable = std::any_of(targets.begin(), targets.end(), [&](const std::string& id) {
      return !std::holds_alternative<EncodedEmbeddingKind>(schema().entry(schema().ColumnOf(id)).kind);
    });
    if (mfc_applicable) result.mfc_hits = CountHits(result.mfc_report, targets);
    return result;
  } catch (const ConfigError& e) {
    throw ConfigError("case " + std::to_string(spec.case_id) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError("case " + std::to_string(spec.case_id) + ": " + e.what());
  }
}

CaseResult RunCase(const CorruptionSpec& spec, const BenchConfig& config) {
  return BenchContext(config).RunCase(spec);
}

RecallSummary ComputeRecall(std::span<const CaseResult> results) {
  if (results.empty()) throw ConfigError("recall needs at least one case");
  RecallSummary summary;
  MethodRecall mfc;
  for (const auto& r : results) {
    summary.gfi.cases += 1;
    summary.gfi.corrupted += r.corrupted_features.size();
    summary.gfi.hits += r.gfi_hits;
    summary.gfi.at_least_one += r.gfi_hits > 0 ? 1.0 : 0.0;
    if (r.mfc_hits) {
      mfc.cases += 1;
      mfc.corrupted += r.corrupted_features.size();
      mfc.hits += *r.mfc_hits;
      mfc.at_least_one += *r.mfc_hits > 0 ? 1.0 : 0.0;
    }
  }
  auto finish = [](MethodRecall& m) {
    m.overall = m.corrupted == 0 ? 0.0 : 100.0 * static_cast<double>(m.hits) / static_cast<double>(m.corrupted);
    m.at_least_one = 100.0 * m.at_least_one / static_cast<double>(m.cases);
  };
  finish(summary.gfi);
  if (mfc.cases > 0) {
    finish(mfc);
    summary.mfc = mfc;
  }
  return summary;
}

}  // namespace driftscope
