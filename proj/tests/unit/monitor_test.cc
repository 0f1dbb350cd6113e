#include "driftscope/monitor.h"

#include <thread>

#include <gtest/gtest.h>

#include "driftscope/error.h"
#include "test_util.h"

namespace driftscope {
namespace {

WindowConfig SmallWindow() {
  WindowConfig c;
  c.window_size = 40;
  c.step_size = 10;
  c.lag = 2;
  c.min_abs_shift = 0.05;
  c.min_rel_shift = 0.5;
  return c;
}

std::vector<Example> Batch(size_t step, size_t n, size_t m, double scale_f1 = 1.0) {
  auto examples = testing::NumericExamples(n, m, 1000 + step);
  for (size_t i = 0; i < n; ++i) {
    examples[i].example_id = "s" + std::to_string(step) + "_" + std::to_string(i);
    std::get<NumericValue>(examples[i].features[1]).value *= scale_f1;
  }
  return examples;
}

TEST(Monitor, SnapshotBeforeFullThrows) {
  const auto schema = testing::NumericSchema(3);
  testing::LinearScorer model(schema, {1, 1, 1});
  Monitor monitor(model, SmallWindow());
  monitor.Step(Batch(0, 10, 3));
  EXPECT_FALSE(monitor.window_full());
  EXPECT_THROW(monitor.SnapshotGfi(), DataError);
  EXPECT_EQ(monitor.steps(), 1u);
}

TEST(Monitor, SnapshotMatchesOfflineGfiEveryStep) {
  const auto schema = testing::NumericSchema(3);
  testing::LinearScorer model(schema, {1, 0.5, 2});
  Monitor monitor(model, SmallWindow());
  for (size_t s = 0; s < 12; ++s) {
    monitor.Step(Batch(s, 10, 3));
    if (!monitor.window_full()) continue;
    const Dataset window = monitor.ExportWindow();
    EXPECT_EQ(window.examples.size(), 40u);
    EXPECT_NO_THROW(ValidateDataset(window));
    GfiVector offline = ComputeGfi(ComputeLfiMatrix(model, window, LfiMethod::PseudoLoss()), "current");
    EXPECT_EQ(monitor.SnapshotGfi(), offline);
    EXPECT_EQ(*monitor.GfiAtStep(monitor.steps()), offline);
  }
  EXPECT_FALSE(monitor.GfiAtStep(1).has_value());
}

TEST(Monitor, IdenticalBatchesNeverAlert) {
  const auto schema = testing::NumericSchema(3);
  testing::LinearScorer model(schema, {1, 1, 1});
  Monitor monitor(model, SmallWindow());
  const auto batch = Batch(0, 10, 3);
  for (int s = 0; s < 15; ++s) EXPECT_TRUE(monitor.Step(batch).empty());
}

TEST(Monitor, AlertsOnceForShiftedFeature) {
  const auto schema = testing::NumericSchema(3);
  testing::LinearScorer model(schema, {0.3, 0.3, 0.3});
  Monitor monitor(model, SmallWindow());
  std::vector<Alert> alerts;
  for (size_t s = 0; s < 20; ++s) {
    for (auto& a : monitor.Step(Batch(s, 10, 3, s >= 8 ? 6.0 : 1.0))) alerts.push_back(a);
  }
  ASSERT_FALSE(alerts.empty());
  EXPECT_EQ(alerts[0].feature_id, "f1");
  EXPECT_GT(alerts[0].gfi_current, alerts[0].gfi_control);
  EXPECT_EQ(alerts[0].shift, alerts[0].gfi_current - alerts[0].gfi_control);
  EXPECT_LE(alerts[0].step, 8u + 2 + 4);
  // Consecutive steps on the same feature are deduplicated.
  for (size_t k = 1; k < alerts.size(); ++k) {
    if (alerts[k].feature_id == alerts[k - 1].feature_id) EXPECT_GT(alerts[k].step, alerts[k - 1].step + 1);
  }
}

TEST(Monitor, BadBatchLeavesStateUnchanged) {
  const auto schema = testing::NumericSchema(3);
  testing::LinearScorer model(schema, {1, 1, 1});
  Monitor monitor(model, SmallWindow());
  EXPECT_THROW(monitor.Step(Batch(0, 9, 3)), ConfigError);
  auto bad = Batch(0, 10, 3);
  bad[4].features.pop_back();
  EXPECT_THROW(monitor.Step(bad), DataError);
  EXPECT_EQ(monitor.steps(), 0u);
  EXPECT_TRUE(monitor.ExportWindow().examples.empty());
}

TEST(Monitor, ConcurrentSnapshotsDuringSteps) {
  const auto schema = testing::NumericSchema(3);
  testing::LinearScorer model(schema, {1, 1, 1});
  Monitor monitor(model, SmallWindow());
  for (size_t s = 0; s < 4; ++s) monitor.Step(Batch(s, 10, 3));
  std::thread reader([&] {
    for (int k = 0; k < 200; ++k) {
      const GfiVector g = monitor.SnapshotGfi();
      EXPECT_EQ(g.num_examples, 40u);
    }
  });
  for (size_t s = 4; s < 20; ++s) monitor.Step(Batch(s, 10, 3));
  reader.join();
}

TEST(WindowConfig, Validation) {
  WindowConfig c;
  EXPECT_NO_THROW(ValidateWindowConfig(c));
  c.step_size = 0;
  EXPECT_THROW(ValidateWindowConfig(c), ConfigError);
  c = {};
  c.min_abs_shift = -1;
  EXPECT_THROW(ValidateWindowConfig(c), ConfigError);
}

}  // namespace
}  // namespace driftscope
