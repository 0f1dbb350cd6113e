#pragma once

// Small scoring model: a numeric tower, embedding lookups for id and
// embedding features, optional per-vector layer normalization, a dot-product
// interaction with the tower output, and an MLP head with a sigmoid output.

#include <cstdint>
#include <span>
#include <vector>

#include "driftscope/feature_space.h"
#include "driftscope/scorer.h"

namespace driftscope {

inline constexpr double kPredictionFloor = 1e-6;
inline constexpr double kPredictionCeiling = 1.0 - 1e-6;
inline constexpr double kLayerNormEpsilon = 1e-5;

struct ModelConfig {
  FeatureSchema schema;
  // Width of every embedding-derived vector and of the tower output.
  int64_t embedding_dim = 8;
  std::vector<int64_t> dense_widths = {32};
  std::vector<int64_t> top_widths = {16};
  // Id-list features are hashed into tables of this many rows.
  int64_t hash_buckets = 1000;
  bool layer_norm_enabled = false;
  uint64_t weight_seed = 0;
  double pseudo_label_threshold = 0.5;
  // Per-feature gains are drawn log-uniformly from [10^-spread, 1].
  double importance_spread = 2.0;
  double output_bias = -1.5;
  // Multiplier on the output layer init stddev; sets the logit spread.
  double output_scale = 4.0;

  bool operator==(const ModelConfig&) const = default;
};

// Throws ConfigError on non-positive widths or a threshold outside (0, 1).
void ValidateModelConfig(const ModelConfig& config);

// Row-major `out x in` weight matrix plus bias.
struct DenseLayer {
  int64_t in = 0;
  int64_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

struct ModelWeights {
  // Numeric tower; hidden layers use ReLU, the last layer is linear and
  // outputs embedding_dim values.
  std::vector<DenseLayer> tower;
  // Per schema column (empty for numeric columns). Categorical: (cardinality
  // + 1) rows with row 0 for the unknown category; id lists: hash_buckets
  // rows; embedding and encoded embedding: an embedding_dim x input_dim
  // projection. All row-major with embedding_dim columns or rows.
  std::vector<std::vector<double>> tables;
  std::vector<double> gains;
  // Head; hidden layers use ReLU, the last layer outputs the logit.
  std::vector<DenseLayer> head;

  bool operator==(const ModelWeights&) const = default;
};

class Model final : public Scorer {
 public:
  // Seeded random initialization. No training is involved.
  static Model Create(ModelConfig config);

  // Validates weight shapes against the config.
  Model(ModelConfig config, ModelWeights weights);

  const ModelConfig& config() const { return config_; }
  const ModelWeights& weights() const { return weights_; }
  const FeatureSchema& schema() const override { return config_.schema; }

  // Probability in [kPredictionFloor, kPredictionCeiling]. Throws DataError
  // when the example does not match the schema.
  double Predict(const Example& example) const override;
  double PredictReplacing(const Example& example, size_t column,
                          const FeatureValue& replacement) const override;

  // Computes the unablated state once and redoes only the ablated column's
  // contribution per entry.
  void PredictAblations(const Example& example, std::span<const size_t> columns,
                        std::span<double> out) const override;

  // Element-wise Predict; errors name the failing example index.
  std::vector<double> PredictBatch(std::span<const Example> examples) const;

 private:
  // Intermediate values of one forward pass.
  struct State {
    // Gain-scaled numeric inputs.
    std::vector<double> x;
    // Tower output.
    std::vector<double> u;
    // Head input: [sqrt(d) x, u, s_f..., <u, s_f>...].
    std::vector<double> z;
  };

  void CheckKinds(const Example& example) const;
  void Build(const Example& example, State& state) const;
  // Recomputes u and everything in z that depends on x.
  void RunTower(State& state) const;
  // Writes s_f and <u, s_f> for embedded slot f.
  void FillSlot(size_t f, const FeatureValue& value, State& state) const;
  double Head(std::span<const double> z) const;
  void EmbedColumn(size_t column, const FeatureValue& value, std::span<double> out) const;

  ModelConfig config_;
  ModelWeights weights_;
  std::vector<size_t> numeric_columns_;
  std::vector<size_t> embedded_columns_;
  // Column -> index into numeric_columns_ or embedded_columns_.
  std::vector<size_t> slot_of_;
};

// 1 when p >= threshold, else 0.
int PseudoLabel(double p, double threshold);

// Decoded encoded-embedding lanes as fed to the model: NaN becomes 0 and
// infinities saturate to the largest finite half-precision magnitude.
double SanitizeDecodedLane(double value);

}  // namespace driftscope
