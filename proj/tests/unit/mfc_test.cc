#include "driftscope/mfc.h"

#include <cmath>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "driftscope/error.h"
#include "driftscope/rng.h"
#include "test_util.h"

namespace driftscope {
namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

double OraclePearson(const std::vector<double>& xs, const std::vector<double>& ps) {
  Big mx = 0, mp = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    mp += ps[i];
  }
  mx /= xs.size();
  mp /= ps.size();
  Big sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ps[i] - mp);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ps[i] - mp) * (ps[i] - mp);
  }
  return boost::multiprecision::abs(sxy / boost::multiprecision::sqrt(sxx * syy)).convert_to<double>();
}

TEST(MfcScore, MatchesTwoPassOracle) {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const size_t n = 2 + rng.Below(200);
    std::vector<double> xs(n), ps(n);
    const double slope = rng.Normal();
    for (size_t i = 0; i < n; ++i) {
      xs[i] = rng.Normal(rng.Uniform(-100, 100), 1.0);
      ps[i] = std::clamp(0.5 + 0.1 * slope * xs[i] / 100 + 0.05 * rng.Normal(), 1e-6, 1 - 1e-6);
    }
    const auto got = MfcScore(xs, ps);
    ASSERT_TRUE(got.has_value());
    const double want = OraclePearson(xs, ps);
    EXPECT_LE(std::abs(*got - want), 1e-12 * std::max(want, 1e-300)) << n;
  }
}

TEST(MfcScore, AffineInvariance) {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> xs(50), ps(50);
    for (size_t i = 0; i < 50; ++i) {
      xs[i] = rng.Normal();
      ps[i] = rng.Uniform();
    }
    const double a = rng.Uniform(0.1, 10) * (rng.Bernoulli(0.5) ? -1 : 1);
    const double b = rng.Uniform(-50, 50);
    std::vector<double> ys(50);
    for (size_t i = 0; i < 50; ++i) ys[i] = a * xs[i] + b;
    const double base = *MfcScore(xs, ps);
    EXPECT_NEAR(*MfcScore(ys, ps), base, 1e-12 * std::max(1.0, base));
  }
}

TEST(MfcScore, EdgeCases) {
  const std::vector<double> constant = {1, 1, 1};
  const std::vector<double> ps = {0.1, 0.2, 0.3};
  EXPECT_FALSE(MfcScore(constant, ps).has_value());
  EXPECT_FALSE(MfcScore(ps, constant).has_value());
  const std::vector<double> one = {1};
  EXPECT_THROW(MfcScore(one, one), ConfigError);
  const std::vector<double> two = {1, 2};
  EXPECT_THROW(MfcScore(two, ps), ConfigError);
  const std::vector<double> rising = {1, 2, 3};
  EXPECT_NEAR(*MfcScore(rising, ps), 1.0, 1e-15);
}

TEST(Proxy, PerKind) {
  EXPECT_EQ(*ProxyValue(NumericValue{2.5}), 2.5);
  EXPECT_EQ(*ProxyValue(SparseIdListValue{{1, 2, 3}}), 3.0);
  EXPECT_EQ(*ProxyValue(WeightedSparseIdListValue{{{1, 0.5}, {2, 1.5}}}), 2.0);
  EXPECT_EQ(*ProxyValue(EmbeddingValue{{3.0, 4.0}}), 5.0);
  EXPECT_FALSE(ProxyValue(CategoricalValue{2}).has_value());
  EXPECT_FALSE(ProxyValue(EncodedEmbeddingValue{{1}}).has_value());
}

TEST(MfcRank, IdenticalWindowsGiveZeroShiftAndEncodedIsNa) {
  FeatureSchema schema({MakeFeature("x", NumericKind{}), MakeFeature("enc", EncodedEmbeddingKind{4}),
                        MakeFeature("cat", CategoricalKind{3})});
  Dataset d;
  d.schema = schema;
  std::vector<double> ps;
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    Example e;
    e.example_id = std::to_string(i);
    e.features = {NumericValue{rng.Normal()}, EncodedEmbeddingValue{{rng.Next()}}, CategoricalValue{1}};
    ps.push_back(rng.Uniform());
    d.examples.push_back(e);
  }
  const RankedReport r = MfcRank(d, ps, d, ps, 1);
  ASSERT_EQ(r.entries.size(), 3u);
  EXPECT_EQ(r.entries[0].feature_id, "x");
  EXPECT_EQ(*r.entries[0].shift, 0.0);
  for (size_t k = 1; k < 3; ++k) {
    EXPECT_FALSE(r.entries[k].shift.has_value());
    EXPECT_FALSE(r.entries[k].control.has_value());
  }
  EXPECT_EQ(r.meta.method, "mfc");
}

TEST(MfcRank, DetectsFeatureThatBecomesCorrelated) {
  // f1 is unused by the model; in the anomaly window it is overwritten with
  // a copy of f0, so only its correlation with the prediction moves.
  const auto schema = testing::NumericSchema(3);
  testing::LinearScorer model(schema, {1.0, 0.0, 1.0});
  Dataset control = testing::MakeDataset(schema, testing::NumericExamples(500, 3, 4));
  Dataset anomaly = control;
  for (auto& e : anomaly.examples) e.features[1] = e.features[0];
  std::vector<double> pc, pa;
  for (const auto& e : control.examples) pc.push_back(model.Predict(e));
  for (const auto& e : anomaly.examples) pa.push_back(model.Predict(e));
  const RankedReport r = MfcRank(control, pc, anomaly, pa, 1);
  EXPECT_EQ(r.TopK(), (std::vector<std::string>{"f1"}));
  EXPECT_EQ(*r.entries[1].shift, 0.0);
}

TEST(MfcRank, PredictionCountMismatchThrows) {
  const auto schema = testing::NumericSchema(1);
  Dataset d = testing::MakeDataset(schema, testing::NumericExamples(5, 1, 1));
  const std::vector<double> short_ps = {0.1, 0.2};
  EXPECT_ANY_THROW(ComputeMfc(d, short_ps));
}

}  // namespace
}  // namespace driftscope
