#pragma once

// Feature-ablation attribution: every (example, feature) cell is scored by
// replacing that one feature with its static baseline and comparing the
// ablated prediction with the original one.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftscope/feature_space.h"
#include "driftscope/scorer.h"

namespace driftscope {

struct LfiMethod {
  enum class Kind { kPseudoLoss, kPredictionRatio };

  Kind kind = Kind::kPseudoLoss;
  // Pseudo-label threshold; only used by kPseudoLoss.
  double threshold = 0.5;

  static LfiMethod PseudoLoss(double threshold = 0.5);
  static LfiMethod PredictionRatio();

  // "pseudo-loss" or "prediction-ratio".
  std::string Name() const;
  static LfiMethod Parse(std::string_view name, double threshold = 0.5);

  bool operator==(const LfiMethod&) const = default;
};

// Change in the pseudo binary cross-entropy when the prediction moves from p
// to p_ablated: ln(p_ablated / p) for pseudo label 1, else
// ln((1 - p_ablated) / (1 - p)).
double LfiPseudoLoss(double p, double p_ablated, int pseudo_label);

// 1 - p_ablated / p.
double LfiPredictionRatio(double p, double p_ablated);

// Prediction with `feature_id` set to its schema baseline.
double AblatePredict(const Scorer& model, const Example& example, std::string_view feature_id);

// Dense N x M matrix of local importances, row-major.
class LfiMatrix {
 public:
  LfiMatrix() = default;
  LfiMatrix(size_t rows, size_t cols);
  LfiMatrix(size_t rows, size_t cols, std::vector<double> values);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  double at(size_t i, size_t j) const { return values_[i * cols_ + j]; }
  double& at(size_t i, size_t j) { return values_[i * cols_ + j]; }
  std::span<const double> row(size_t i) const { return {values_.data() + i * cols_, cols_}; }
  std::span<double> row(size_t i) { return {values_.data() + i * cols_, cols_}; }
  const std::vector<double>& values() const { return values_; }

  std::vector<std::string> row_ids;
  std::vector<std::string> column_ids;
  LfiMethod method;
  std::string checkpoint_id;

  bool operator==(const LfiMatrix&) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> values_;
};

struct AttributionOptions {
  size_t parallelism = 1;
  // Cells whose value equals the baseline are 0 without a model call.
  bool baseline_fast_path = true;
};

struct AttributionStats {
  // Model invocations: one per example plus one per ablated cell.
  uint64_t forward_passes = 0;
};

// Computes one row per example. Model errors are rethrown as DataError
// carrying the (example, feature) coordinates.
LfiMatrix ComputeLfiMatrix(const Scorer& model, std::span<const Example> examples,
                           const LfiMethod& method, const AttributionOptions& options = {},
                           AttributionStats* stats = nullptr);

LfiMatrix ComputeLfiMatrix(const Scorer& model, const Dataset& dataset, const LfiMethod& method,
                           const AttributionOptions& options = {},
                           AttributionStats* stats = nullptr);

}  // namespace driftscope
