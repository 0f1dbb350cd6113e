#include "driftscope/model.h"

#include <bit>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "driftscope/error.h"
#include "driftscope/half.h"

namespace driftscope {
namespace {

struct Fixture {
  Model model;
  Dataset data;
};

Fixture MakeFixture(bool layer_norm = false, size_t n = 50) {
  ModelConfig config;
  config.schema = StandardSchema(24, 5);
  config.layer_norm_enabled = layer_norm;
  config.weight_seed = 3;
  Model model = Model::Create(config);
  GeneratorConfig gen;
  gen.schema = config.schema;
  gen.num_examples = n;
  gen.seed = 4;
  Dataset data = GenerateDataset(gen, {0, 100}, [](const Example&) { return 0.0; });
  return {std::move(model), std::move(data)};
}

TEST(Model, CreateIsSeeded) {
  ModelConfig config;
  config.schema = StandardSchema(12, 1);
  config.weight_seed = 8;
  EXPECT_EQ(Model::Create(config).weights(), Model::Create(config).weights());
  ModelConfig other = config;
  other.weight_seed = 9;
  EXPECT_NE(Model::Create(config).weights(), Model::Create(other).weights());
}

TEST(Model, ConfigValidation) {
  ModelConfig config;
  config.schema = StandardSchema(6, 1);
  config.embedding_dim = 0;
  EXPECT_THROW(ValidateModelConfig(config), ConfigError);
  config.embedding_dim = 8;
  config.pseudo_label_threshold = 1.0;
  EXPECT_THROW(ValidateModelConfig(config), ConfigError);
  config.pseudo_label_threshold = 0.5;
  config.dense_widths = {0};
  EXPECT_THROW(ValidateModelConfig(config), ConfigError);
}

TEST(Model, PredictionsInClampRangeAndVaried) {
  for (bool ln : {false, true}) {
    const auto f = MakeFixture(ln, 200);
    const auto ps = f.model.PredictBatch(f.data.examples);
    double lo = 1.0, hi = 0.0;
    for (double p : ps) {
      EXPECT_GE(p, kPredictionFloor);
      EXPECT_LE(p, kPredictionCeiling);
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    EXPECT_GT(hi - lo, 0.1);
  }
}

TEST(Model, PredictReplacingMatchesModifiedCopy) {
  const auto f = MakeFixture();
  const auto& schema = f.model.schema();
  for (size_t i = 0; i < 5; ++i) {
    const Example& e = f.data.examples[i];
    for (size_t j = 0; j < schema.size(); ++j) {
      Example copy = e;
      copy.features[j] = schema.baseline(j);
      EXPECT_EQ(std::bit_cast<uint64_t>(f.model.PredictReplacing(e, j, schema.baseline(j))),
                std::bit_cast<uint64_t>(f.model.Predict(copy)));
    }
  }
}

TEST(Model, AblationBatchIsBitIdenticalToSingleCalls) {
  for (bool ln : {false, true}) {
    const auto f = MakeFixture(ln);
    const auto& schema = f.model.schema();
    std::vector<size_t> columns(schema.size());
    for (size_t j = 0; j < columns.size(); ++j) columns[j] = j;
    std::vector<double> batch(columns.size());
    for (const auto& e : f.data.examples) {
      f.model.PredictAblations(e, columns, batch);
      for (size_t j = 0; j < columns.size(); ++j) {
        EXPECT_EQ(std::bit_cast<uint64_t>(batch[j]),
                  std::bit_cast<uint64_t>(f.model.PredictReplacing(e, j, schema.baseline(j))));
      }
    }
  }
}

TEST(Model, RejectsMismatchedExamples) {
  const auto f = MakeFixture();
  Example e = f.data.examples[0];
  e.features.pop_back();
  EXPECT_THROW(f.model.Predict(e), DataError);
  EXPECT_THROW(f.model.PredictReplacing(f.data.examples[0], 0, CategoricalValue{1}), DataError);
  std::vector<Example> batch = {f.data.examples[0], e};
  try {
    f.model.PredictBatch(batch);
    FAIL();
  } catch (const DataError& err) {
    EXPECT_NE(std::string(err.what()).find("1"), std::string::npos);
  }
}

TEST(Model, WeightShapeValidation) {
  const auto f = MakeFixture();
  ModelWeights w = f.model.weights();
  w.gains.pop_back();
  EXPECT_ANY_THROW(Model(f.model.config(), w));
}

TEST(Model, SanitizesNonFiniteEncodedLanes) {
  EXPECT_EQ(SanitizeDecodedLane(std::numeric_limits<double>::quiet_NaN()), 0.0);
  EXPECT_EQ(SanitizeDecodedLane(std::numeric_limits<double>::infinity()), 65504.0);
  EXPECT_EQ(SanitizeDecodedLane(-std::numeric_limits<double>::infinity()), -65504.0);
  EXPECT_EQ(SanitizeDecodedLane(1.5), 1.5);

  const auto f = MakeFixture();
  const auto& schema = f.model.schema();
  for (size_t j = 0; j < schema.size(); ++j) {
    if (!std::holds_alternative<EncodedEmbeddingKind>(schema.entry(j).kind)) continue;
    Example e = f.data.examples[0];
    auto& words = std::get<EncodedEmbeddingValue>(e.features[j]).words;
    for (auto& w : words) w = 0x7c00'7e00'fc00'7c00ull;  // inf, nan, -inf, inf lanes
    EXPECT_TRUE(std::isfinite(f.model.Predict(e)));
  }
}

TEST(PseudoLabel, Threshold) {
  EXPECT_EQ(PseudoLabel(0.5, 0.5), 1);
  EXPECT_EQ(PseudoLabel(0.4999, 0.5), 0);
  EXPECT_EQ(PseudoLabel(0.2, 0.1), 1);
}

}  // namespace
}  // namespace driftscope
