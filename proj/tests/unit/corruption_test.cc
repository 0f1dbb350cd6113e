#include "driftscope/corruption.h"

#include <cmath>

#include <gtest/gtest.h>

#include "driftscope/error.h"
#include "driftscope/half.h"
#include "test_util.h"

namespace driftscope {
namespace {

FeatureSchema MixedSchema() {
  return FeatureSchema({MakeFeature("num", NumericKind{}), MakeFeature("cat", CategoricalKind{4}),
                        MakeFeature("ids", SparseIdListKind{6}), MakeFeature("wids", WeightedSparseIdListKind{6}),
                        MakeFeature("emb", EmbeddingKind{2}), MakeFeature("enc", EncodedEmbeddingKind{4})});
}

Dataset MixedData(size_t n = 20) {
  Dataset d;
  d.schema = MixedSchema();
  for (size_t i = 0; i < n; ++i) {
    Example e;
    e.example_id = "x" + std::to_string(i);
    const double v = static_cast<double>(i) - 5.0;
    e.features = {NumericValue{v},
                  CategoricalValue{static_cast<int64_t>(i % 4) + 1},
                  SparseIdListValue{{1, 2, 3, 4}},
                  WeightedSparseIdListValue{{{1, 0.5}, {2, 1.0}, {3, 2.0}}},
                  EmbeddingValue{{v, 1.0}},
                  EncodedEmbeddingValue{EncodeEmbedding(std::vector<double>{1.0, -2.0, 0.5, 300.0})}};
    d.examples.push_back(e);
  }
  return d;
}

CorruptionSpec Spec(std::string feature, CorruptionTransform t, double fraction = 1.0) {
  CorruptionSpec s;
  s.case_id = 1;
  s.targets = ExplicitTargets{{std::move(feature)}};
  s.transform = t;
  s.example_fraction = fraction;
  s.seed = 3;
  return s;
}

TEST(Transforms, NumericScaleAndPower) {
  const Dataset d = MixedData();
  const Dataset scaled = ApplyCorruption(d, Spec("num", LinearScale{2.0}));
  const Dataset cubed = ApplyCorruption(d, Spec("num", PowerTransform{3.0}));
  for (size_t i = 0; i < d.examples.size(); ++i) {
    const double x = std::get<NumericValue>(d.examples[i].features[0]).value;
    EXPECT_EQ(std::get<NumericValue>(scaled.examples[i].features[0]).value, 2 * x);
    EXPECT_EQ(std::get<NumericValue>(cubed.examples[i].features[0]).value, std::pow(x, 3.0));
    for (size_t j = 1; j < 6; ++j) EXPECT_EQ(scaled.examples[i].features[j], d.examples[i].features[j]);
  }
  EXPECT_EQ(scaled.label, WindowLabel::kAnomaly);
}

TEST(Transforms, CategoricalAndBaseline) {
  const Dataset d = MixedData();
  const Dataset c = ApplyCorruption(d, Spec("cat", SetCategoricalConstant{2}));
  for (const auto& e : c.examples) EXPECT_EQ(e.features[1], FeatureValue(CategoricalValue{2}));
  const Dataset b = ApplyCorruption(d, Spec("emb", ReplaceWithBaseline{}));
  for (const auto& e : b.examples) EXPECT_EQ(e.features[4], d.schema.baseline(4));
  EXPECT_THROW(ApplyCorruption(d, Spec("cat", SetCategoricalConstant{9})), ConfigError);
}

TEST(Transforms, IdDrops) {
  const Dataset d = MixedData();
  const Dataset recent = ApplyCorruption(d, Spec("ids", DropRecentIds{0.5}));
  for (const auto& e : recent.examples) {
    EXPECT_EQ(std::get<SparseIdListValue>(e.features[2]).ids, (std::vector<int64_t>{1, 2}));
  }
  const Dataset random = ApplyCorruption(d, Spec("ids", DropRandomIds{0.5}));
  for (const auto& e : random.examples) {
    const auto& ids = std::get<SparseIdListValue>(e.features[2]).ids;
    EXPECT_EQ(ids.size(), 2u);
    EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
  }
  const Dataset wrecent = ApplyCorruption(d, Spec("wids", DropRecentIds{0.5}));
  EXPECT_EQ(std::get<WeightedSparseIdListValue>(wrecent.examples[0].features[3]).entries.size(), 1u);
}

TEST(Transforms, ZeroWeightsKeepIds) {
  const Dataset d = MixedData();
  const Dataset z = ApplyCorruption(d, Spec("wids", ZeroWeights{}));
  const auto& entries = std::get<WeightedSparseIdListValue>(z.examples[0].features[3]).entries;
  ASSERT_EQ(entries.size(), 3u);
  for (const auto& w : entries) EXPECT_EQ(w.weight, 0.0);
  EXPECT_EQ(entries[2].id, 3);
}

TEST(Transforms, EncodedIntegerDivision) {
  const Dataset d = MixedData();
  const Dataset q = ApplyCorruption(d, Spec("enc", EncodedIntDivide{10}));
  const auto& before = std::get<EncodedEmbeddingValue>(d.examples[0].features[5]).words;
  const auto& after = std::get<EncodedEmbeddingValue>(q.examples[0].features[5]).words;
  ASSERT_EQ(after.size(), before.size());
  EXPECT_EQ(after[0], before[0] / 10);
  EXPECT_NE(DecodeEncodedEmbedding(after), DecodeEncodedEmbedding(before));
}

TEST(Transforms, IncompatibleKindsRejected) {
  const Dataset d = MixedData();
  EXPECT_THROW(ApplyCorruption(d, Spec("cat", LinearScale{2})), ConfigError);
  EXPECT_THROW(ApplyCorruption(d, Spec("num", ZeroWeights{})), ConfigError);
  EXPECT_THROW(ApplyCorruption(d, Spec("num", EncodedIntDivide{10})), ConfigError);
  EXPECT_THROW(ApplyCorruption(d, Spec("enc", DropRecentIds{0.5})), ConfigError);
  EXPECT_THROW(ApplyCorruption(d, Spec("missing", LinearScale{2})), ConfigError);
  EXPECT_THROW(ApplyCorruption(d, Spec("num", LinearScale{2}, 0.0)), ConfigError);
}

TEST(Transforms, IdentityAndPartialFraction) {
  const Dataset d = MixedData(40);
  const Dataset same = ApplyCorruption(d, Spec("num", IdentityTransform{}));
  EXPECT_EQ(same.examples, d.examples);
  const Dataset part = ApplyCorruption(d, Spec("num", LinearScale{3.0}, 0.25));
  size_t changed = 0;
  for (size_t i = 0; i < 40; ++i) changed += part.examples[i].features[0] != d.examples[i].features[0];
  // Ten examples are picked; the one with value 0 is unchanged by scaling.
  EXPECT_GE(changed, 9u);
  EXPECT_LE(changed, 10u);
  EXPECT_EQ(part, ApplyCorruption(d, Spec("num", LinearScale{3.0}, 0.25)));
}

TEST(Targets, RandomIsSeededAndKindFiltered) {
  const FeatureSchema schema = StandardSchema(60, 2024);
  CorruptionSpec s;
  s.targets = RandomTargets{3, "numeric"};
  s.seed = 5;
  const auto a = ResolveTargets(s, schema);
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(a, ResolveTargets(s, schema));
  for (const auto& id : a) EXPECT_TRUE(std::holds_alternative<NumericKind>(schema.entry(schema.ColumnOf(id)).kind));
  s.targets = RandomTargets{100, ""};
  EXPECT_THROW(ResolveTargets(s, schema), ConfigError);
}

TEST(Targets, PriorGfiTopAndBottom) {
  LfiMatrix lfi(1, 5, {5, 1, 4, 2, 3});
  lfi.column_ids = {"a", "b", "c", "d", "e"};
  const GfiVector g = ComputeGfi(lfi);
  EXPECT_EQ(SelectTargetsByPriorGfi(g, 2, 2), (std::vector<std::string>{"a", "c", "b", "d"}));
  EXPECT_THROW(SelectTargetsByPriorGfi(g, 3, 3), ConfigError);
  CorruptionSpec s;
  s.targets = PriorGfiTargets{1, 1};
  EXPECT_THROW(ResolveTargets(s, testing::NumericSchema(5)), ConfigError);
}

TEST(StandardCases, ElevenSeededCases) {
  const auto cases = StandardCases();
  ASSERT_EQ(cases.size(), 11u);
  for (size_t i = 0; i < cases.size(); ++i) {
    EXPECT_EQ(cases[i].case_id, static_cast<int>(i + 1));
    EXPECT_FALSE(cases[i].description.empty());
  }
  EXPECT_EQ(cases, StandardCases());
  EXPECT_TRUE(std::holds_alternative<EncodedIntDivide>(cases[10].transform));
  const FeatureSchema schema = StandardSchema(60, 2024);
  for (const auto& c : cases) {
    if (std::holds_alternative<PriorGfiTargets>(c.targets)) continue;
    for (const auto& id : ResolveTargets(c, schema)) {
      EXPECT_NO_THROW(CheckTransformCompatible(c.transform, schema.entry(schema.ColumnOf(id)).kind, id));
    }
  }
}

TEST(Metrics, AveragePredictionChange) {
  const std::vector<double> c = {0.2, 0.4};
  const std::vector<double> a = {0.3, 0.3};
  EXPECT_EQ(AveragePredictionChange(c, c), 0.0);
  EXPECT_NEAR(AveragePredictionChange(c, a), 0.0, 1e-12);
  const std::vector<double> up = {0.3, 0.6};
  EXPECT_NEAR(AveragePredictionChange(c, up), 50.0, 1e-12);
}

CaseResult Result(int id, size_t corrupted, size_t gfi, std::optional<size_t> mfc) {
  CaseResult r;
  r.case_id = id;
  for (size_t k = 0; k < corrupted; ++k) r.corrupted_features.push_back("f" + std::to_string(k));
  r.gfi_hits = gfi;
  r.mfc_hits = mfc;
  return r;
}

TEST(Metrics, RecallSummary) {
  const std::vector<CaseResult> results = {Result(1, 1, 1, 0), Result(2, 4, 2, 1), Result(3, 2, 0, std::nullopt)};
  const RecallSummary s = ComputeRecall(results);
  EXPECT_EQ(s.gfi.hits, 3u);
  EXPECT_EQ(s.gfi.corrupted, 7u);
  EXPECT_NEAR(s.gfi.overall, 100.0 * 3 / 7, 1e-12);
  EXPECT_NEAR(s.gfi.at_least_one, 200.0 / 3, 1e-12);
  ASSERT_TRUE(s.mfc.has_value());
  EXPECT_EQ(s.mfc->cases, 2u);
  EXPECT_NEAR(s.mfc->overall, 20.0, 1e-12);
  EXPECT_NEAR(s.mfc->at_least_one, 50.0, 1e-12);
  const std::vector<CaseResult> only_na = {Result(1, 1, 1, std::nullopt)};
  EXPECT_FALSE(ComputeRecall(only_na).mfc.has_value());
  EXPECT_THROW(ComputeRecall(std::vector<CaseResult>{}), ConfigError);
}

TEST(Metrics, CountHitsUsesTopK) {
  RankedReport r;
  r.k = 2;
  for (const char* id : {"a", "b", "c"}) r.entries.push_back(RankedEntry{id, 0.0, 0.0, 0.0, 0.0, 0});
  const std::vector<std::string> corrupted = {"b", "c"};
  EXPECT_EQ(CountHits(r, corrupted), 1u);
}

TEST(Harness, SmallCaseIsDeterministic) {
  BenchConfig config;
  config.num_features = 20;
  config.pool_size = 600;
  config.sample_size = 200;
  config.k = 5;
  CorruptionSpec spec;
  spec.case_id = 1;
  spec.targets = RandomTargets{1, "numeric"};
  spec.transform = LinearScale{2.0};
  spec.seed = 1;
  const BenchContext ctx(config);
  const CaseResult a = ctx.RunCase(spec);
  EXPECT_EQ(a, ctx.RunCase(spec));
  EXPECT_EQ(a.corrupted_features.size(), 1u);
  EXPECT_EQ(a.gfi_report.entries.size(), 20u);
  EXPECT_EQ(a.gfi_report.meta.checkpoint_id, ctx.checkpoint_id());
  config.parallelism = 3;
  EXPECT_EQ(RunCase(spec, config), a);
}

}  // namespace
}  // namespace driftscope
