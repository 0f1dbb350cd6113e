#pragma once

// Model-feature correlation baseline: absolute Pearson correlation between a
// feature's scalar proxy and the logged prediction, ranked by its shift
// between control and anomaly windows. Consumes logged predictions only and
// never invokes a model.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftscope/aggregation.h"
#include "driftscope/feature_space.h"

namespace driftscope {

// Numeric: the value; id list: its length; weighted id list: sum of weights;
// embedding: l2 norm. Categorical and encoded embedding values have no proxy.
std::optional<double> ProxyValue(const FeatureValue& value);

// |r| between xs and ps; nullopt when either side is constant. Throws
// ConfigError when lengths differ or fewer than 2 points are given.
std::optional<double> MfcScore(std::span<const double> xs, std::span<const double> ps);

struct FeatureMfc {
  std::string feature_id;
  std::optional<double> score;

  bool operator==(const FeatureMfc&) const = default;
};

struct MfcVector {
  std::vector<FeatureMfc> features;
  std::string window_label;
  size_t num_examples = 0;

  bool operator==(const MfcVector&) const = default;
};

// One score per schema column; `predictions` align with dataset.examples.
MfcVector ComputeMfc(const Dataset& dataset, std::span<const double> predictions);

// Shift ranking of MFC scores. Features undefined in either window are
// listed after all defined ones with an unset shift.
RankedReport MfcRank(const Dataset& control, std::span<const double> control_predictions,
                     const Dataset& anomaly, std::span<const double> anomaly_predictions,
                     size_t k = kDefaultTopK);

}  // namespace driftscope
