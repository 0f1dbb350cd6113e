#include "driftscope/attribution.h"

#include <cmath>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "driftscope/error.h"
#include "driftscope/model.h"
#include "test_util.h"

namespace driftscope {
namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

double OraclePseudoLoss(double p, double q, int y) {
  const Big bp(p), bq(q);
  const Big r = y == 1 ? boost::multiprecision::log(bq / bp) : boost::multiprecision::log((1 - bq) / (1 - bp));
  return r.convert_to<double>();
}

double RelErr(double got, double want) {
  if (want == 0.0) return std::abs(got);
  return std::abs(got - want) / std::abs(want);
}

TEST(LfiFormulas, PseudoLossMatchesHighPrecision) {
  Rng rng(1);
  for (int t = 0; t < 2000; ++t) {
    const double p = rng.Uniform(1e-6, 1 - 1e-6);
    const double q = rng.Uniform(1e-6, 1 - 1e-6);
    const int y = static_cast<int>(rng.Below(2));
    EXPECT_LE(RelErr(LfiPseudoLoss(p, q, y), OraclePseudoLoss(p, q, y)), 1e-12) << p << " " << q << " " << y;
  }
}

TEST(LfiFormulas, PredictionRatioMatchesHighPrecision) {
  Rng rng(2);
  for (int t = 0; t < 2000; ++t) {
    const double p = rng.Uniform(1e-6, 1 - 1e-6);
    const double q = rng.Uniform(1e-6, 1 - 1e-6);
    const double want = (1 - Big(q) / Big(p)).convert_to<double>();
    EXPECT_LE(RelErr(LfiPredictionRatio(p, q), want), 1e-12);
  }
}

TEST(LfiFormulas, ZeroWhenUnchangedAndSigns) {
  EXPECT_EQ(LfiPseudoLoss(0.3, 0.3, 0), 0.0);
  EXPECT_EQ(LfiPseudoLoss(0.7, 0.7, 1), 0.0);
  EXPECT_EQ(LfiPredictionRatio(0.2, 0.2), 0.0);
  // Removing a feature that raised a positive prediction makes the loss larger
  // in magnitude and the log ratio negative.
  EXPECT_LT(LfiPseudoLoss(0.8, 0.6, 1), 0.0);
  EXPECT_GT(LfiPseudoLoss(0.2, 0.1, 0), 0.0);
  EXPECT_NEAR(LfiPredictionRatio(0.5, 0.25), 0.5, 1e-15);
}

TEST(LfiMethod, ParseAndName) {
  EXPECT_EQ(LfiMethod::Parse("pseudo-loss", 0.3), LfiMethod::PseudoLoss(0.3));
  EXPECT_EQ(LfiMethod::Parse("prediction-ratio").Name(), "prediction-ratio");
  EXPECT_THROW(LfiMethod::Parse("shap"), ConfigError);
  EXPECT_THROW(LfiMethod::PseudoLoss(0.0), ConfigError);
}

TEST(ComputeLfi, ZeroAtBaselineColumn) {
  const auto schema = testing::NumericSchema(4);
  testing::LinearScorer model(schema, {1.0, -2.0, 0.5, 3.0}, 0.1);
  auto examples = testing::NumericExamples(100, 4, 3);
  for (auto& e : examples) e.features[2] = NumericValue{0.0};
  for (const auto& method : {LfiMethod::PseudoLoss(), LfiMethod::PredictionRatio()}) {
    const LfiMatrix lfi = ComputeLfiMatrix(model, examples, method);
    for (size_t i = 0; i < lfi.rows(); ++i) {
      EXPECT_EQ(lfi.at(i, 2), 0.0);
      EXPECT_NE(lfi.at(i, 0), 0.0);
    }
  }
}

TEST(ComputeLfi, MatchesDirectAblation) {
  const auto schema = testing::NumericSchema(3);
  testing::LinearScorer model(schema, {1.0, -0.5, 2.0});
  const auto examples = testing::NumericExamples(20, 3, 4);
  const LfiMatrix lfi = ComputeLfiMatrix(model, examples, LfiMethod::PseudoLoss(0.5));
  for (size_t i = 0; i < examples.size(); ++i) {
    const double p = model.Predict(examples[i]);
    for (size_t j = 0; j < 3; ++j) {
      const double q = AblatePredict(model, examples[i], "f" + std::to_string(j));
      EXPECT_EQ(lfi.at(i, j), LfiPseudoLoss(p, q, PseudoLabel(p, 0.5)));
    }
  }
  EXPECT_EQ(lfi.row_ids[3], "e3");
  EXPECT_EQ(lfi.column_ids, schema.FeatureIds());
}

TEST(ComputeLfi, CountsForwardPassesAndUsesFastPath) {
  const auto schema = testing::NumericSchema(5);
  testing::LinearScorer model(schema, {1, 1, 1, 1, 1});
  const auto examples = testing::NumericExamples(40, 5, 5, 0.3);
  size_t non_baseline = 0;
  for (const auto& e : examples) {
    for (const auto& v : e.features) non_baseline += std::get<NumericValue>(v).value != 0.0;
  }
  AttributionStats stats;
  ComputeLfiMatrix(model, examples, LfiMethod::PseudoLoss(), {}, &stats);
  EXPECT_EQ(stats.forward_passes, 40 + non_baseline);
  EXPECT_EQ(model.calls(), 40 + non_baseline);

  testing::LinearScorer slow(schema, {1, 1, 1, 1, 1});
  AttributionOptions options;
  options.baseline_fast_path = false;
  ComputeLfiMatrix(slow, examples, LfiMethod::PseudoLoss(), options, &stats);
  EXPECT_EQ(stats.forward_passes, 40u * 6);
}

TEST(ComputeLfi, ParallelismDoesNotChangeOutput) {
  ModelConfig config;
  config.schema = StandardSchema(20, 6);
  const Model model = Model::Create(config);
  GeneratorConfig gen;
  gen.schema = config.schema;
  gen.num_examples = 64;
  const Dataset data = GenerateDataset(gen, {0, 10}, [](const Example&) { return 0.0; });
  const LfiMatrix serial = ComputeLfiMatrix(model, data, LfiMethod::PseudoLoss());
  for (size_t threads : {2u, 3u, 8u}) {
    AttributionOptions options;
    options.parallelism = threads;
    EXPECT_EQ(ComputeLfiMatrix(model, data, LfiMethod::PseudoLoss(), options), serial);
  }
}

// Throws for one specific cell.
class FaultyScorer : public testing::LinearScorer {
 public:
  using LinearScorer::LinearScorer;
  double PredictReplacing(const Example& e, size_t column, const FeatureValue& v) const override {
    if (e.example_id == "e7" && column == 2) throw std::runtime_error("boom");
    return LinearScorer::PredictReplacing(e, column, v);
  }
};

TEST(ComputeLfi, ErrorsCarryCellCoordinates) {
  const auto schema = testing::NumericSchema(3);
  FaultyScorer model(schema, {1, 1, 1});
  const auto examples = testing::NumericExamples(10, 3, 1);
  for (size_t threads : {1u, 4u}) {
    AttributionOptions options;
    options.parallelism = threads;
    try {
      ComputeLfiMatrix(model, examples, LfiMethod::PseudoLoss(), options);
      FAIL();
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find("(7, 2)"), std::string::npos) << e.what();
    }
  }
}

TEST(ComputeLfi, RejectsSchemaMismatch) {
  const auto schema = testing::NumericSchema(3);
  testing::LinearScorer model(schema, {1, 1, 1});
  auto examples = testing::NumericExamples(3, 2, 1);
  EXPECT_THROW(ComputeLfiMatrix(model, examples, LfiMethod::PseudoLoss()), DataError);
  EXPECT_THROW(AblatePredict(model, testing::NumericExamples(1, 3, 1)[0], "nope"), ConfigError);
}

}  // namespace
}  // namespace driftscope
