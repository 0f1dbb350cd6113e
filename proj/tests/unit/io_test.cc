#include "driftscope/io.h"

#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "driftscope/error.h"
#include "test_util.h"

namespace driftscope {
namespace {

Dataset GeneratedDataset(size_t n = 30) {
  GeneratorConfig gen;
  gen.schema = StandardSchema(30, 9);
  gen.num_examples = n;
  gen.seed = 2;
  Dataset d = GenerateDataset(gen, {10, 20}, [](const Example& e) { return static_cast<double>(e.timestamp); });
  d.label = WindowLabel::kAnomaly;
  return d;
}

TEST(FormatDouble, RoundTripsExactly) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.Normal() * std::pow(10.0, static_cast<double>(rng.Below(40)) - 20);
    EXPECT_EQ(std::stod(FormatDouble(v)), v);
  }
  EXPECT_EQ(FormatDouble(0.5), "0.5");
}

TEST(ContentHash, Fnv1a) {
  EXPECT_EQ(ContentHash(""), "cbf29ce484222325");
  EXPECT_EQ(ContentHash("a"), "af63dc4c8601ec8c");
}

TEST(SchemaIo, RoundTrip) {
  const FeatureSchema s = StandardSchema(40, 1);
  std::stringstream ss;
  WriteSchema(ss, s);
  EXPECT_EQ(ReadSchema(ss), s);
  EXPECT_EQ(SchemaFromJson(SchemaToJson(s)), s);
}

TEST(SchemaIo, RejectsWrongHeader) {
  std::stringstream ss("driftscope-schema v2\n{}");
  EXPECT_THROW(ReadSchema(ss), DataError);
}

TEST(ValueIo, AllKindsRoundTrip) {
  const std::vector<FeatureValue> values = {
      NumericValue{-1.25}, CategoricalValue{3}, EmbeddingValue{{0.1, 0.2}}, SparseIdListValue{{4, 5}},
      WeightedSparseIdListValue{{{1, 0.5}}}, EncodedEmbeddingValue{{0xffffffffffffffffull, 0}}};
  for (const auto& v : values) EXPECT_EQ(FeatureValueFromJson(FeatureValueToJson(v)), v);
  EXPECT_THROW(FeatureValueFromJson("{\"bogus\":1}"), DataError);
  EXPECT_THROW(FeatureValueFromJson("not json"), DataError);
}

TEST(DatasetIo, GeneratedDatasetParsesBackEqual) {
  const Dataset d = GeneratedDataset();
  std::stringstream ss;
  WriteDataset(ss, d);
  const std::string text = ss.str();
  EXPECT_EQ(ReadDataset(ss), d);
  std::stringstream again;
  WriteDataset(again, d);
  EXPECT_EQ(again.str(), text);
}

TEST(DatasetIo, RejectsSchemaViolations) {
  const Dataset d = GeneratedDataset(3);
  const std::string line = ExampleToLine(d.examples[0], d.schema);
  EXPECT_EQ(ExampleFromLine(line, d.schema), d.examples[0]);
  EXPECT_THROW(ExampleFromLine("{\"example_id\":\"x\"}", d.schema), DataError);
  const FeatureSchema other = testing::NumericSchema(2);
  EXPECT_THROW(ExampleFromLine(line, other), DataError);
}

TEST(DatasetIo, StreamReaderSkipsMalformedLines) {
  const Dataset d = GeneratedDataset(5);
  std::stringstream full;
  WriteDataset(full, d);
  std::string text = full.str();
  text += "garbage\n\n";
  text += ExampleToLine(d.examples[0], d.schema) + "\n";
  std::stringstream in(text);
  DatasetStreamReader reader(in);
  size_t n = 0;
  while (reader.Next()) ++n;
  EXPECT_EQ(n, 6u);
  EXPECT_EQ(reader.malformed_lines(), 1u);
  EXPECT_FALSE(reader.last_error().empty());
}

TEST(DatasetIo, StreamReaderWithoutMetadataNeedsSchema) {
  const Dataset d = GeneratedDataset(2);
  std::string text = std::string(kDatasetHeader) + "\n" + ExampleToLine(d.examples[0], d.schema) + "\n";
  std::stringstream in(text);
  DatasetStreamReader reader(in, &d.schema);
  ASSERT_TRUE(reader.Next().has_value());
  EXPECT_FALSE(reader.Next().has_value());
  std::stringstream bare(text);
  EXPECT_THROW(DatasetStreamReader{bare}, DataError);
}

TEST(DatasetIo, EmptyStream) {
  std::stringstream in;
  const FeatureSchema s = testing::NumericSchema(1);
  DatasetStreamReader reader(in, &s);
  EXPECT_FALSE(reader.Next().has_value());
}

TEST(ModelIo, RoundTripPreservesPredictions) {
  ModelConfig config;
  config.schema = StandardSchema(20, 4);
  config.layer_norm_enabled = true;
  const Model m = Model::Create(config);
  std::stringstream ss;
  WriteModel(ss, m);
  const Model back = ReadModel(ss);
  EXPECT_EQ(back.config(), m.config());
  EXPECT_EQ(back.weights(), m.weights());
  EXPECT_EQ(CheckpointId(back), CheckpointId(m));
  const Dataset d = GeneratedDataset(5);
  GeneratorConfig gen;
  gen.schema = config.schema;
  gen.num_examples = 10;
  const Dataset data = GenerateDataset(gen, {0, 1}, [](const Example&) { return 0.0; });
  EXPECT_EQ(back.PredictBatch(data.examples), m.PredictBatch(data.examples));
}

TEST(ModelIo, CorruptCheckpointIsDataError) {
  std::stringstream ss("driftscope-model v1\n{\"config\":{}}");
  EXPECT_THROW(ReadModel(ss), DataError);
}

TEST(LfiIo, RoundTripBitExact) {
  LfiMatrix lfi(3, 2, {0.1, -0.0, 1e-300, std::numeric_limits<double>::denorm_min(), -7.5, 0.0});
  lfi.row_ids = {"a", "b", "c"};
  lfi.column_ids = {"x", "y"};
  lfi.method = LfiMethod::PseudoLoss(0.3);
  lfi.checkpoint_id = "abc";
  std::stringstream data, ids;
  WriteLfiMatrix(data, ids, lfi);
  const LfiMatrix back = ReadLfiMatrix(data, ids);
  EXPECT_EQ(back, lfi);
  EXPECT_TRUE(std::signbit(back.at(0, 1)));
}

TEST(LfiIo, ShapeMismatchRejected) {
  std::stringstream data("driftscope-lfi v1 N=1 M=2 method=pseudo-loss tau=0.5 checkpoint=-\n1\t2\t3\n");
  std::stringstream ids("driftscope-lfi-ids v1\nrows 1\nr\ncolumns 2\nx\ny\n");
  EXPECT_THROW(ReadLfiMatrix(data, ids), DataError);
}

TEST(PredictionsIo, RoundTrip) {
  const Dataset d = GeneratedDataset(4);
  const std::vector<double> ps = {0.1, 0.25, 1e-6, 0.999999};
  std::stringstream ss;
  WritePredictions(ss, d.examples, ps);
  const auto back = ReadPredictions(ss);
  ASSERT_EQ(back.size(), 4u);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(back[i].first, d.examples[i].example_id);
    EXPECT_EQ(back[i].second, ps[i]);
  }
}

}  // namespace
}  // namespace driftscope
