#include "driftscope/monitor.h"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "driftscope/error.h"

namespace driftscope {

void ValidateWindowConfig(const WindowConfig& config) {
  if (config.step_size < 1) throw ConfigError("step_size must be >= 1");
  if (config.step_size > config.window_size) throw ConfigError("step_size must not exceed window_size");
  if (config.lag < 1) throw ConfigError("lag must be >= 1");
  if (!(config.min_abs_shift >= 0.0) || !std::isfinite(config.min_abs_shift)) {
    throw ConfigError("min_abs_shift must be finite and >= 0");
  }
  if (!(config.min_rel_shift >= 0.0) || !std::isfinite(config.min_rel_shift)) {
    throw ConfigError("min_rel_shift must be finite and >= 0");
  }
  if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
}

Monitor::Monitor(const Scorer& model, WindowConfig config) : model_(&model), config_(std::move(config)) {
  ValidateWindowConfig(config_);
}

uint64_t Monitor::steps() const {
  std::shared_lock lock(mutex_);
  return step_;
}

bool Monitor::window_full() const {
  std::shared_lock lock(mutex_);
  return window_.size() == config_.window_size;
}

GfiVector Monitor::WindowGfiLocked() const {
  const FeatureSchema& schema = model_->schema();
  LfiMatrix lfi(window_.size(), schema.size());
  for (size_t i = 0; i < lfi_rows_.size(); ++i) {
    std::copy(lfi_rows_[i].begin(), lfi_rows_[i].end(), lfi.row(i).begin());
  }
  lfi.column_ids = schema.FeatureIds();
  lfi.method = config_.method;
  return ComputeGfi(lfi, "current");
}

std::vector<Alert> Monitor::Step(std::span<const Example> batch) {
  if (batch.size() != config_.step_size) {
    throw ConfigError("monitor batch has " + std::to_string(batch.size()) + " examples, step_size is " +
                      std::to_string(config_.step_size));
  }
  AttributionOptions options;
  options.parallelism = config_.parallelism;
  // Attribution runs before taking the lock; it only reads the model.
  const LfiMatrix admitted = ComputeLfiMatrix(*model_, batch, config_.method, options);

  std::unique_lock lock(mutex_);
  ++step_;
  for (size_t i = 0; i < batch.size(); ++i) {
    if (window_.size() == config_.window_size) {
      window_.pop_front();
      lfi_rows_.pop_front();
    }
    window_.push_back(batch[i]);
    const auto row = admitted.row(i);
    lfi_rows_.emplace_back(row.begin(), row.end());
  }
  if (window_.size() < config_.window_size) return {};

  GfiVector current = WindowGfiLocked();
  while (!history_.empty() && history_.front().first + config_.lag < step_) history_.pop_front();

  std::vector<Alert> alerts;
  std::unordered_set<std::string> exceeding;
  if (!history_.empty() && history_.front().first + config_.lag == step_) {
    const GfiVector& control = history_.front().second;
    for (size_t j = 0; j < current.features.size(); ++j) {
      const double before = control.features[j].gfi;
      const double now = current.features[j].gfi;
      const double shift = std::fabs(now - before);
      if (shift >= config_.min_abs_shift && shift >= config_.min_rel_shift * before) {
        const std::string& id = current.features[j].feature_id;
        exceeding.insert(id);
        if (!active_.contains(id)) alerts.push_back(Alert{step_, id, before, now, shift});
      }
    }
  }
  active_ = std::move(exceeding);
  history_.emplace_back(step_, std::move(current));
  std::sort(alerts.begin(), alerts.end(), [](const Alert& a, const Alert& b) {
    if (a.shift != b.shift) return a.shift > b.shift;
    return a.feature_id < b.feature_id;
  });
  return alerts;
}

GfiVector Monitor::SnapshotGfi() const {
  std::shared_lock lock(mutex_);
  if (window_.size() < config_.window_size) {
    throw DataError("monitor window holds " + std::to_string(window_.size()) + " of " +
                    std::to_string(config_.window_size) + " examples");
  }
  return history_.back().second;
}

Dataset Monitor::ExportWindow() const {
  std::shared_lock lock(mutex_);
  Dataset out;
  out.schema = model_->schema();
  out.label = WindowLabel::kAnomaly;
  out.examples.assign(window_.begin(), window_.end());
  if (!out.examples.empty()) {
    const auto [lo, hi] = std::minmax_element(out.examples.begin(), out.examples.end(),
                                              [](const Example& a, const Example& b) {
                                                return a.timestamp < b.timestamp;
                                              });
    out.window = TimeWindow{lo->timestamp, hi->timestamp};
  }
  return out;
}

std::optional<GfiVector> Monitor::GfiAtStep(uint64_t step) const {
  std::shared_lock lock(mutex_);
  for (const auto& [s, gfi] : history_) {
    if (s == step) return gfi;
  }
  return std::nullopt;
}

}  // namespace driftscope
