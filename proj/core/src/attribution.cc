#include "driftscope/attribution.h"

#include <atomic>
#include <cmath>

#include "driftscope/error.h"
#include "driftscope/model.h"
#include "driftscope/parallel.h"

namespace driftscope {

LfiMethod LfiMethod::PseudoLoss(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("pseudo-loss threshold must be in (0, 1)");
  }
  return LfiMethod{Kind::kPseudoLoss, threshold};
}

LfiMethod LfiMethod::PredictionRatio() { return LfiMethod{Kind::kPredictionRatio, 0.5}; }

std::string LfiMethod::Name() const {
  return kind == Kind::kPseudoLoss ? "pseudo-loss" : "prediction-ratio";
}

LfiMethod LfiMethod::Parse(std::string_view name, double threshold) {
  if (name == "pseudo-loss") return PseudoLoss(threshold);
  if (name == "prediction-ratio") return PredictionRatio();
  throw ConfigError("unknown LFI method: " + std::string(name));
}

namespace {

// ln(1 + delta / base) evaluated without cancellation: log1p near 1, a plain
// log of the ratio otherwise.
double LogRatio(double numerator, double denominator) {
  const double delta = numerator - denominator;
  if (std::fabs(delta) < 0.5 * denominator) return std::log1p(delta / denominator);
  return std::log(numerator / denominator);
}

}  // namespace

double LfiPseudoLoss(double p, double p_ablated, int pseudo_label) {
  if (pseudo_label == 1) return LogRatio(p_ablated, p);
  return LogRatio(1.0 - p_ablated, 1.0 - p);
}

double LfiPredictionRatio(double p, double p_ablated) { return (p - p_ablated) / p; }

double AblatePredict(const Scorer& model, const Example& example, std::string_view feature_id) {
  const size_t column = model.schema().ColumnOf(feature_id);
  return model.PredictReplacing(example, column, model.schema().baseline(column));
}

LfiMatrix::LfiMatrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

LfiMatrix::LfiMatrix(size_t rows, size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) throw DataError("LFI matrix value count does not match its shape");
}

LfiMatrix ComputeLfiMatrix(const Scorer& model, std::span<const Example> examples,
                           const LfiMethod& method, const AttributionOptions& options,
                           AttributionStats* stats) {
  const FeatureSchema& schema = model.schema();
  const size_t n = examples.size();
  const size_t m = schema.size();
  LfiMatrix matrix(n, m);
  matrix.method = method;
  matrix.column_ids = schema.FeatureIds();
  matrix.row_ids.reserve(n);
  for (const auto& e : examples) matrix.row_ids.push_back(e.example_id);

  std::atomic<uint64_t> passes{0};
  ParallelFor(n, options.parallelism, [&](size_t i) {
    const Example& example = examples[i];
    if (example.features.size() != m) {
      throw DataError("example " + std::to_string(i) + " (" + example.example_id +
                      ") does not match the model schema");
    }
    double p;
    try {
      p = model.Predict(example);
    } catch (const std::exception& e) {
      throw DataError("example " + std::to_string(i) + ": " + e.what());
    }
    const int label = PseudoLabel(p, method.threshold);
    auto row = matrix.row(i);
    std::vector<size_t> columns;
    columns.reserve(m);
    for (size_t j = 0; j < m; ++j) {
      row[j] = 0.0;
      if (!(options.baseline_fast_path && example.features[j] == schema.baseline(j))) columns.push_back(j);
    }
    std::vector<double> ablated(columns.size());
    try {
      model.PredictAblations(example, columns, ablated);
    } catch (const std::exception&) {
      // Locate the failing cell for the error message.
      for (size_t j : columns) {
        try {
          model.PredictReplacing(example, j, schema.baseline(j));
        } catch (const std::exception& e) {
          throw DataError("cell (" + std::to_string(i) + ", " + std::to_string(j) + "): " + e.what());
        }
      }
      throw;
    }
    for (size_t c = 0; c < columns.size(); ++c) {
      row[columns[c]] = method.kind == LfiMethod::Kind::kPseudoLoss ? LfiPseudoLoss(p, ablated[c], label)
                                                                   : LfiPredictionRatio(p, ablated[c]);
    }
    const uint64_t local_passes = 1 + columns.size();
    passes.fetch_add(local_passes, std::memory_order_relaxed);
  });
  if (stats != nullptr) stats->forward_passes = passes.load();
  return matrix;
}

LfiMatrix ComputeLfiMatrix(const Scorer& model, const Dataset& dataset, const LfiMethod& method,
                           const AttributionOptions& options, AttributionStats* stats) {
  if (!(dataset.schema == model.schema())) throw DataError("dataset schema does not match the model");
  return ComputeLfiMatrix(model, std::span<const Example>(dataset.examples), method, options, stats);
}

}  // namespace driftscope
