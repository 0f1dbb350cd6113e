#pragma once

#include <span>

#include "driftscope/feature_space.h"

namespace driftscope {

// A model as seen by the attribution engine: a deterministic map from an
// example to a probability. Implementations must be safe to call from many
// threads at once.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual const FeatureSchema& schema() const = 0;
  virtual double Predict(const Example& example) const = 0;
  // Prediction for `example` with one column replaced by `replacement`.
  // Equal to Predict on a modified copy; `example` itself is untouched.
  virtual double PredictReplacing(const Example& example, size_t column,
                                  const FeatureValue& replacement) const = 0;

  // out[c] = PredictReplacing(example, columns[c], schema().baseline(columns[c])).
  // Overrides may share work across columns but must return the same values.
  virtual void PredictAblations(const Example& example, std::span<const size_t> columns,
                                std::span<double> out) const {
    for (size_t c = 0; c < columns.size(); ++c) {
      out[c] = PredictReplacing(example, columns[c], schema().baseline(columns[c]));
    }
  }
};

}  // namespace driftscope
