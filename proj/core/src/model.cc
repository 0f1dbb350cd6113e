#include "driftscope/model.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "driftscope/error.h"
#include "driftscope/half.h"
#include "driftscope/rng.h"
#include "overloaded.h"

namespace driftscope {
namespace {

constexpr double kMaxHalf = 65504.0;

DenseLayer RandomLayer(int64_t in, int64_t out, double stddev, Rng& rng) {
  DenseLayer layer{in, out, std::vector<double>(static_cast<size_t>(in * out)),
                   std::vector<double>(static_cast<size_t>(out), 0.0)};
  for (auto& w : layer.weights) w = rng.Normal(0.0, stddev);
  return layer;
}

// y = W x + b, optionally followed by ReLU.
void Apply(const DenseLayer& layer, std::span<const double> x, std::vector<double>& y, bool relu) {
  y.assign(layer.bias.begin(), layer.bias.end());
  const double* w = layer.weights.data();
  for (int64_t r = 0; r < layer.out; ++r) {
    double acc = y[static_cast<size_t>(r)];
    const double* row = w + r * layer.in;
    for (int64_t c = 0; c < layer.in; ++c) acc += row[c] * x[static_cast<size_t>(c)];
    y[static_cast<size_t>(r)] = relu ? std::max(acc, 0.0) : acc;
  }
}

size_t Bucket(int64_t id, int64_t buckets) {
  const int64_t m = id % buckets;
  return static_cast<size_t>(m < 0 ? m + buckets : m);
}

// Rows and columns of the per-column table, given embedding_dim.
std::pair<int64_t, int64_t> TableShape(const FeatureKind& kind, const ModelConfig& config) {
  const int64_t d = config.embedding_dim;
  return std::visit(Overloaded{
                        [](const NumericKind&) { return std::pair<int64_t, int64_t>{0, 0}; },
                        [&](const CategoricalKind& k) { return std::pair{k.cardinality + 1, d}; },
                        [&](const EmbeddingKind& k) { return std::pair{d, k.dim}; },
                        [&](const SparseIdListKind&) { return std::pair{config.hash_buckets, d}; },
                        [&](const WeightedSparseIdListKind&) {
                          return std::pair{config.hash_buckets, d};
                        },
                        [&](const EncodedEmbeddingKind& k) { return std::pair{d, k.decoded_dim}; },
                    },
                    kind);
}

size_t NumNumeric(const FeatureSchema& schema) {
  return static_cast<size_t>(std::count_if(schema.entries().begin(), schema.entries().end(), [](const auto& e) {
    return std::holds_alternative<NumericKind>(e.kind);
  }));
}

}  // namespace

void ValidateModelConfig(const ModelConfig& config) {
  if (config.embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
  if (config.hash_buckets < 1) throw ConfigError("hash_buckets must be >= 1");
  for (auto w : config.dense_widths) {
    if (w < 1) throw ConfigError("dense widths must be >= 1");
  }
  for (auto w : config.top_widths) {
    if (w < 1) throw ConfigError("top widths must be >= 1");
  }
  if (!(config.pseudo_label_threshold > 0.0 && config.pseudo_label_threshold < 1.0)) {
    throw ConfigError("pseudo label threshold must be in (0, 1)");
  }
  if (!(config.importance_spread >= 0.0)) throw ConfigError("importance_spread must be >= 0");
  if (!std::isfinite(config.output_bias)) throw ConfigError("output_bias must be finite");
  if (!(config.output_scale > 0.0 && std::isfinite(config.output_scale))) {
    throw ConfigError("output_scale must be positive");
  }
}

Model Model::Create(ModelConfig config) {
  ValidateModelConfig(config);
  Rng rng(DeriveSeed(config.weight_seed, 0x30DE1));
  const int64_t d = config.embedding_dim;
  const FeatureSchema& schema = config.schema;
  ModelWeights weights;

  weights.gains.resize(schema.size());
  for (auto& g : weights.gains) g = std::pow(10.0, -config.importance_spread * rng.Uniform());

  int64_t in = static_cast<int64_t>(NumNumeric(schema));
  for (auto width : config.dense_widths) {
    weights.tower.push_back(RandomLayer(in, width, std::sqrt(2.0 / std::max<int64_t>(in, 1)), rng));
    in = width;
  }
  weights.tower.push_back(RandomLayer(in, d, std::sqrt(1.0 / std::max<int64_t>(in, 1)), rng));

  weights.tables.resize(schema.size());
  int64_t embedded = 0;
  for (size_t j = 0; j < schema.size(); ++j) {
    const FeatureKind& kind = schema.entry(j).kind;
    if (std::holds_alternative<NumericKind>(kind)) continue;
    ++embedded;
    const auto [rows, cols] = TableShape(kind, config);
    double stddev = 1.0;
    if (const auto* k = std::get_if<SparseIdListKind>(&kind)) {
      stddev = std::sqrt(2.0 / static_cast<double>(k->max_len));
    } else if (const auto* k = std::get_if<WeightedSparseIdListKind>(&kind)) {
      stddev = std::sqrt(2.0 / static_cast<double>(k->max_len));
    } else if (std::holds_alternative<EmbeddingKind>(kind) ||
               std::holds_alternative<EncodedEmbeddingKind>(kind)) {
      stddev = std::sqrt(1.0 / static_cast<double>(cols));
    }
    auto& table = weights.tables[j];
    table.resize(static_cast<size_t>(rows * cols));
    for (auto& w : table) w = rng.Normal(0.0, stddev);
    if (std::holds_alternative<CategoricalKind>(kind)) {
      std::fill(table.begin(), table.begin() + d, 0.0);
    }
  }

  in = static_cast<int64_t>(NumNumeric(schema)) + d + embedded * d + embedded;
  for (auto width : config.top_widths) {
    weights.head.push_back(RandomLayer(in, width, std::sqrt(2.0 / static_cast<double>(in)), rng));
    in = width;
  }
  weights.head.push_back(RandomLayer(in, 1, config.output_scale * std::sqrt(1.0 / static_cast<double>(in)), rng));
  weights.head.back().bias[0] = config.output_bias;
  return Model(std::move(config), std::move(weights));
}

Model::Model(ModelConfig config, ModelWeights weights)
    : config_(std::move(config)), weights_(std::move(weights)) {
  ValidateModelConfig(config_);
  const FeatureSchema& schema = config_.schema;
  const int64_t d = config_.embedding_dim;
  slot_of_.resize(schema.size());
  for (size_t j = 0; j < schema.size(); ++j) {
    if (std::holds_alternative<NumericKind>(schema.entry(j).kind)) {
      slot_of_[j] = numeric_columns_.size();
      numeric_columns_.push_back(j);
    } else {
      slot_of_[j] = embedded_columns_.size();
      embedded_columns_.push_back(j);
    }
  }

  auto check_stack = [](const std::vector<DenseLayer>& layers, int64_t in, std::span<const int64_t> widths,
                        int64_t out, const char* name) {
    if (layers.size() != widths.size() + 1) throw DataError(std::string(name) + ": wrong number of layers");
    for (size_t l = 0; l < layers.size(); ++l) {
      const int64_t expected_out = l < widths.size() ? widths[l] : out;
      const auto& layer = layers[l];
      if (layer.in != in || layer.out != expected_out ||
          layer.weights.size() != static_cast<size_t>(layer.in * layer.out) ||
          layer.bias.size() != static_cast<size_t>(layer.out)) {
        throw DataError(std::string(name) + ": layer " + std::to_string(l) + " has the wrong shape");
      }
      in = expected_out;
    }
  };
  check_stack(weights_.tower, static_cast<int64_t>(numeric_columns_.size()), config_.dense_widths, d,
              "tower");
  const auto embedded = static_cast<int64_t>(embedded_columns_.size());
  check_stack(weights_.head, static_cast<int64_t>(numeric_columns_.size()) + d + embedded * d + embedded,
              config_.top_widths, 1, "head");

  if (weights_.gains.size() != schema.size() || weights_.tables.size() != schema.size()) {
    throw DataError("model weights do not cover the schema");
  }
  for (size_t j = 0; j < schema.size(); ++j) {
    const auto [rows, cols] = TableShape(schema.entry(j).kind, config_);
    if (weights_.tables[j].size() != static_cast<size_t>(rows * cols)) {
      throw DataError("embedding table for " + schema.entry(j).id + " has the wrong shape");
    }
  }
}

void Model::EmbedColumn(size_t column, const FeatureValue& value, std::span<double> out) const {
  const auto d = static_cast<size_t>(config_.embedding_dim);
  const std::vector<double>& table = weights_.tables[column];
  std::fill(out.begin(), out.end(), 0.0);

  auto add_row = [&](size_t row, double scale) {
    const double* r = table.data() + row * d;
    for (size_t k = 0; k < d; ++k) out[k] += scale * r[k];
  };
  // out = P v with P stored as d x v.size().
  auto project = [&](auto&& component, size_t n) {
    for (size_t k = 0; k < d; ++k) {
      const double* row = table.data() + k * n;
      double acc = 0.0;
      for (size_t c = 0; c < n; ++c) acc += row[c] * component(c);
      out[k] = acc;
    }
  };

  std::visit(Overloaded{
                 [](const NumericValue&) {},
                 [&](const CategoricalValue& v) { add_row(static_cast<size_t>(v.id), 1.0); },
                 [&](const EmbeddingValue& v) {
                   project([&](size_t c) { return v.values[c]; }, v.values.size());
                 },
                 [&](const SparseIdListValue& v) {
                   for (auto id : v.ids) add_row(Bucket(id, config_.hash_buckets), 1.0);
                 },
                 [&](const WeightedSparseIdListValue& v) {
                   for (const auto& e : v.entries) add_row(Bucket(e.id, config_.hash_buckets), e.weight);
                 },
                 [&](const EncodedEmbeddingValue& v) {
                   const auto decoded = DecodeEncodedEmbedding(v.words);
                   project([&](size_t c) { return SanitizeDecodedLane(decoded[c]); }, decoded.size());
                 },
             },
             value);

  if (config_.layer_norm_enabled) {
    double mean = 0.0;
    for (double x : out) mean += x;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double x : out) var += (x - mean) * (x - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    for (double& x : out) x = (x - mean) * inv;
  }
}

void Model::CheckKinds(const Example& example) const {
  const FeatureSchema& schema = config_.schema;
  if (example.features.size() != schema.size()) {
    throw DataError("example " + example.example_id + " does not match the model schema");
  }
  for (size_t j = 0; j < schema.size(); ++j) {
    if (example.features[j].index() != schema.entry(j).kind.index()) {
      throw DataError("value of " + schema.entry(j).id + " does not match kind " +
                      KindName(schema.entry(j).kind));
    }
  }
}

void Model::RunTower(State& state) const {
  const auto d = static_cast<size_t>(config_.embedding_dim);
  const size_t n = numeric_columns_.size();
  const size_t e = embedded_columns_.size();
  // sqrt(d) gives a numeric input the same power as a d-wide embedded slot.
  const double wide = std::sqrt(static_cast<double>(d));
  for (size_t k = 0; k < n; ++k) state.z[k] = wide * state.x[k];

  std::vector<double> a = state.x;
  std::vector<double> b;
  for (size_t l = 0; l < weights_.tower.size(); ++l) {
    Apply(weights_.tower[l], a, b, l + 1 < weights_.tower.size());
    a.swap(b);
  }
  state.u = std::move(a);
  std::copy(state.u.begin(), state.u.end(), state.z.begin() + static_cast<std::ptrdiff_t>(n));
  for (size_t f = 0; f < e; ++f) {
    const double* slot = state.z.data() + n + d + f * d;
    double dot = 0.0;
    for (size_t k = 0; k < d; ++k) dot += slot[k] * state.u[k];
    state.z[n + d + e * d + f] = dot;
  }
}

void Model::FillSlot(size_t f, const FeatureValue& value, State& state) const {
  const auto d = static_cast<size_t>(config_.embedding_dim);
  const size_t n = numeric_columns_.size();
  const size_t e = embedded_columns_.size();
  const size_t j = embedded_columns_[f];
  std::span<double> slot(state.z.data() + n + d + f * d, d);
  EmbedColumn(j, value, slot);
  const double g = weights_.gains[j];
  double dot = 0.0;
  for (size_t k = 0; k < d; ++k) {
    slot[k] = std::tanh(g * slot[k]);
    dot += slot[k] * state.u[k];
  }
  state.z[n + d + e * d + f] = dot;
}

void Model::Build(const Example& example, State& state) const {
  const auto d = static_cast<size_t>(config_.embedding_dim);
  const size_t n = numeric_columns_.size();
  const size_t e = embedded_columns_.size();
  state.x.resize(n);
  for (size_t k = 0; k < n; ++k) {
    const size_t j = numeric_columns_[k];
    state.x[k] = weights_.gains[j] * std::get<NumericValue>(example.features[j]).value;
  }
  state.z.assign(n + d + e * d + e, 0.0);
  RunTower(state);
  for (size_t f = 0; f < e; ++f) FillSlot(f, example.features[embedded_columns_[f]], state);
}

double Model::Head(std::span<const double> z) const {
  std::vector<double> a(z.begin(), z.end());
  std::vector<double> b;
  for (size_t l = 0; l < weights_.head.size(); ++l) {
    Apply(weights_.head[l], a, b, l + 1 < weights_.head.size());
    a.swap(b);
  }
  const double logit = a[0];
  const double p = logit >= 0.0 ? 1.0 / (1.0 + std::exp(-logit))
                                 : std::exp(logit) / (1.0 + std::exp(logit));
  return std::clamp(p, kPredictionFloor, kPredictionCeiling);
}

double Model::Predict(const Example& example) const {
  CheckKinds(example);
  State state;
  Build(example, state);
  return Head(state.z);
}

double Model::PredictReplacing(const Example& example, size_t column,
                               const FeatureValue& replacement) const {
  if (column >= schema().size()) throw ConfigError("column out of range");
  CheckKinds(example);
  if (replacement.index() != schema().entry(column).kind.index()) {
    throw DataError("replacement for " + schema().entry(column).id + " does not match kind " +
                    KindName(schema().entry(column).kind));
  }
  State state;
  Build(example, state);
  const size_t slot = slot_of_[column];
  if (std::holds_alternative<NumericValue>(replacement)) {
    state.x[slot] = weights_.gains[column] * std::get<NumericValue>(replacement).value;
    RunTower(state);
  } else {
    FillSlot(slot, replacement, state);
  }
  return Head(state.z);
}

void Model::PredictAblations(const Example& example, std::span<const size_t> columns,
                             std::span<double> out) const {
  if (out.size() != columns.size()) throw ConfigError("one output per ablated column is required");
  for (size_t c : columns) {
    if (c >= schema().size()) throw ConfigError("column out of range");
  }
  CheckKinds(example);
  State base;
  Build(example, base);
  State work;
  for (size_t c = 0; c < columns.size(); ++c) {
    const size_t column = columns[c];
    const size_t slot = slot_of_[column];
    const FeatureValue& baseline = schema().baseline(column);
    work.x = base.x;
    work.u = base.u;
    work.z = base.z;
    if (std::holds_alternative<NumericValue>(baseline)) {
      work.x[slot] = weights_.gains[column] * std::get<NumericValue>(baseline).value;
      RunTower(work);
    } else {
      FillSlot(slot, baseline, work);
    }
    out[c] = Head(work.z);
  }
}

std::vector<double> Model::PredictBatch(std::span<const Example> examples) const {
  std::vector<double> out;
  out.reserve(examples.size());
  for (size_t i = 0; i < examples.size(); ++i) {
    try {
      out.push_back(Predict(examples[i]));
    } catch (const DataError& e) {
      throw DataError("example index " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

int PseudoLabel(double p, double threshold) { return p >= threshold ? 1 : 0; }

double SanitizeDecodedLane(double value) {
  if (std::isnan(value)) return 0.0;
  return std::clamp(value, -kMaxHalf, kMaxHalf);
}

}  // namespace driftscope
