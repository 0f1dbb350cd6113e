#pragma once

// Sliding-window GFI monitor. Fixed-size batches enter and leave a window of
// examples; the window's GFI is compared against the GFI the window had
// `lag` steps earlier and features whose importance moved past both
// thresholds raise an alert.

#include <cstdint>
#include <deque>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "driftscope/aggregation.h"
#include "driftscope/attribution.h"
#include "driftscope/feature_space.h"
#include "driftscope/scorer.h"

namespace driftscope {

struct WindowConfig {
  size_t window_size = 10000;
  size_t step_size = 1000;
  // Steps between the control window and the current window.
  size_t lag = 10;
  // An alert needs |gfi_current - gfi_control| >= min_abs_shift and
  // |gfi_current - gfi_control| >= min_rel_shift * gfi_control.
  double min_abs_shift = 0.05;
  double min_rel_shift = 0.5;
  LfiMethod method;
  size_t parallelism = 1;

  bool operator==(const WindowConfig&) const = default;
};

// Throws ConfigError unless 1 <= step_size <= window_size, lag >= 1 and the
// thresholds are finite and non-negative.
void ValidateWindowConfig(const WindowConfig& config);

struct Alert {
  // 1-based index of the step that raised the alert.
  uint64_t step = 0;
  std::string feature_id;
  double gfi_control = 0.0;
  double gfi_current = 0.0;
  double shift = 0.0;

  bool operator==(const Alert&) const = default;
};

// Thread safety: Step() is exclusive; the const accessors may run
// concurrently with each other and block while a step is in progress.
class Monitor {
 public:
  // `model` must outlive the monitor.
  Monitor(const Scorer& model, WindowConfig config);

  const WindowConfig& config() const { return config_; }

  // Admits exactly step_size examples, evicting the oldest ones once the
  // window is full. LFIs are computed for the admitted examples only.
  // Throws ConfigError on a batch size mismatch and DataError on examples
  // that do not fit the schema; the state is unchanged on error.
  std::vector<Alert> Step(std::span<const Example> batch);

  uint64_t steps() const;
  bool window_full() const;

  // GFI of the current window. Throws DataError until the window is full.
  GfiVector SnapshotGfi() const;

  // The window's examples, oldest first, as an anomaly-labelled dataset.
  Dataset ExportWindow() const;

  // Cached GFI of the full window as it stood after `step`, if retained.
  std::optional<GfiVector> GfiAtStep(uint64_t step) const;

 private:
  GfiVector WindowGfiLocked() const;

  const Scorer* model_;
  WindowConfig config_;
  mutable std::shared_mutex mutex_;
  uint64_t step_ = 0;
  std::deque<Example> window_;
  // One cached LFI row per example in window_.
  std::deque<std::vector<double>> lfi_rows_;
  // (step, GFI) for the last lag + 1 steps with a full window.
  std::deque<std::pair<uint64_t, GfiVector>> history_;
  // Features alerted at the previous step.
  std::unordered_set<std::string> active_;
};

}  // namespace driftscope
