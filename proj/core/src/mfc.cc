#include "driftscope/mfc.h"

#include <algorithm>
#include <cmath>

#include "driftscope/error.h"
#include "overloaded.h"

namespace driftscope {

std::optional<double> ProxyValue(const FeatureValue& value) {
  return std::visit(
      Overloaded{
          [](const NumericValue& v) -> std::optional<double> { return v.value; },
          [](const CategoricalValue&) -> std::optional<double> { return std::nullopt; },
          [](const EmbeddingValue& v) -> std::optional<double> {
            double ss = 0.0;
            for (double x : v.values) ss += x * x;
            return std::sqrt(ss);
          },
          [](const SparseIdListValue& v) -> std::optional<double> {
            return static_cast<double>(v.ids.size());
          },
          [](const WeightedSparseIdListValue& v) -> std::optional<double> {
            double sum = 0.0;
            for (const auto& e : v.entries) sum += e.weight;
            return sum;
          },
          [](const EncodedEmbeddingValue&) -> std::optional<double> { return std::nullopt; },
      },
      value);
}

namespace {

bool IsConstant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double Mean(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  double mean = sum / static_cast<double>(v.size());
  // One refinement pass removes most of the rounding left in the first sum.
  double residual = 0.0;
  for (double x : v) residual += x - mean;
  return mean + residual / static_cast<double>(v.size());
}

}  // namespace

std::optional<double> MfcScore(std::span<const double> xs, std::span<const double> ps) {
  if (xs.size() != ps.size()) throw ConfigError("MFC needs one prediction per feature value");
  if (xs.size() < 2) throw ConfigError("MFC needs at least 2 examples");
  if (IsConstant(xs) || IsConstant(ps)) return std::nullopt;
  const double mx = Mean(xs);
  const double mp = Mean(ps);
  double sxy = 0.0;
  double sxx = 0.0;
  double spp = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dp = ps[i] - mp;
    sxy += dx * dp;
    sxx += dx * dx;
    spp += dp * dp;
  }
  if (sxx == 0.0 || spp == 0.0) return std::nullopt;
  return std::min(1.0, std::fabs(sxy) / (std::sqrt(sxx) * std::sqrt(spp)));
}

MfcVector ComputeMfc(const Dataset& dataset, std::span<const double> predictions) {
  if (predictions.size() != dataset.examples.size()) {
    throw DataError("MFC needs one logged prediction per example");
  }
  const FeatureSchema& schema = dataset.schema;
  MfcVector out;
  out.window_label = std::string(WindowLabelName(dataset.label));
  out.num_examples = dataset.examples.size();
  std::vector<double> xs(dataset.examples.size());
  for (size_t j = 0; j < schema.size(); ++j) {
    FeatureMfc f{schema.entry(j).id, std::nullopt};
    bool proxyable = true;
    for (size_t i = 0; i < dataset.examples.size() && proxyable; ++i) {
      const auto& features = dataset.examples[i].features;
      if (features.size() != schema.size()) {
        throw DataError("example " + dataset.examples[i].example_id + " does not match the schema");
      }
      const auto proxy = ProxyValue(features[j]);
      if (proxy) {
        xs[i] = *proxy;
      } else {
        proxyable = false;
      }
    }
    if (proxyable && xs.size() >= 2) f.score = MfcScore(xs, predictions);
    out.features.push_back(std::move(f));
  }
  return out;
}

RankedReport MfcRank(const Dataset& control, std::span<const double> control_predictions,
                     const Dataset& anomaly, std::span<const double> anomaly_predictions, size_t k) {
  if (control.schema.FeatureIds() != anomaly.schema.FeatureIds()) {
    throw DataError("control and anomaly datasets cover different feature sets");
  }
  const MfcVector c = ComputeMfc(control, control_predictions);
  const MfcVector a = ComputeMfc(anomaly, anomaly_predictions);
  RankedReport report;
  report.k = k;
  report.meta.method = "mfc";
  report.meta.control_examples = c.num_examples;
  report.meta.anomaly_examples = a.num_examples;
  for (size_t j = 0; j < c.features.size(); ++j) {
    RankedEntry entry;
    entry.feature_id = c.features[j].feature_id;
    entry.control = c.features[j].score;
    entry.anomaly = a.features[j].score;
    if (entry.control && entry.anomaly) entry.shift = std::fabs(*entry.anomaly - *entry.control);
    report.entries.push_back(std::move(entry));
  }
  SortReportEntries(report.entries);
  return report;
}

}  // namespace driftscope
