#pragma once

// Global feature importance: coverage-weighted median of the non-zero
// absolute local importances of each column, plus the bootstrap machinery
// used to size the aggregation sample and the control/anomaly shift ranking.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftscope/attribution.h"
#include "driftscope/feature_space.h"
#include "driftscope/scorer.h"

namespace driftscope {

inline constexpr size_t kDefaultBootstrapResamples = 1000;
inline constexpr size_t kDefaultSampleSizeCeiling = 10000;
inline constexpr size_t kDefaultTopK = 30;

struct FeatureGfi {
  std::string feature_id;
  double coverage = 0.0;
  double gfi = 0.0;
  // 0 for the largest gfi; ties ordered by feature id.
  size_t rank = 0;

  bool operator==(const FeatureGfi&) const = default;
};

struct GfiVector {
  std::vector<FeatureGfi> features;
  std::string window_label;
  size_t num_examples = 0;

  bool operator==(const GfiVector&) const = default;
};

// Fraction of rows whose entry in `column` is non-zero (exact test).
double Coverage(const LfiMatrix& lfi, size_t column);

// Requires at least one row.
GfiVector ComputeGfi(const LfiMatrix& lfi, std::string window_label = {});

// GFI of a multiset of rows of `lfi` (row indices may repeat).
std::vector<double> GfiOfRows(const LfiMatrix& lfi, std::span<const size_t> rows);

// Per-feature sample standard deviation of the GFI over `resamples`
// bootstrap resamples of the rows. Resample b uses DeriveSeed(seed, b), so
// the result does not depend on `parallelism`.
std::vector<double> BootstrapStandardErrors(const LfiMatrix& lfi,
                                            size_t resamples = kDefaultBootstrapResamples,
                                            uint64_t seed = 0, size_t parallelism = 1);

// Acceptable standard error per feature: `absolute` when set, otherwise
// max(relative * gfi_j, floor).
struct SeTolerance {
  std::optional<double> absolute;
  double relative = 0.05;
  double floor = 1e-4;

  double For(double gfi) const;
};

struct SampleSizeChoice {
  size_t num_examples = 0;
  // False when no candidate met the tolerance and the largest was returned.
  bool within_tolerance = false;
  // Largest standard error over features, per candidate in input order.
  std::vector<double> max_standard_error;
  std::string warning;
};

struct SampleSizeOptions {
  LfiMethod method;
  size_t resamples = kDefaultBootstrapResamples;
  size_t parallelism = 1;
};

// Smallest candidate whose bootstrap standard errors are all within
// tolerance; the largest candidate (with a warning) when none is.
// Candidates must be non-empty and ascending.
SampleSizeChoice SelectSampleSize(const Scorer& model, const Dataset& pool,
                                  std::span<const size_t> candidates, const SeTolerance& tolerance,
                                  uint64_t seed, const SampleSizeOptions& options = {});

// Half of the sample (rounded up) is drawn from all examples, the other half
// from displayed examples only. Each stratum is drawn without replacement
// when it is large enough and with replacement otherwise.
Dataset SampleForAggregation(const Dataset& pool, size_t num_examples, uint64_t seed);

// ---------------------------------------------------------------------------
// Control window selection
// ---------------------------------------------------------------------------

enum class ControlWindowPolicy {
  kPreviousHour,
  // Same clock interval one day earlier; less exposed to daily seasonality.
  kSameHourPreviousDay,
};

// "previous-hour" / "same-hour-previous-day".
std::string_view ControlWindowPolicyName(ControlWindowPolicy policy);
ControlWindowPolicy ParseControlWindowPolicy(std::string_view name);

// The anomaly window shifted back by 3600 s or 86400 s.
TimeWindow SelectControlWindow(const TimeWindow& anomaly,
                               ControlWindowPolicy policy = ControlWindowPolicy::kSameHourPreviousDay);

// Examples whose timestamp lies in [window.start, window.end], relabelled.
Dataset SliceWindow(const Dataset& data, const TimeWindow& window, WindowLabel label);

// ---------------------------------------------------------------------------
// Shift ranking
// ---------------------------------------------------------------------------

struct RankedEntry {
  std::string feature_id;
  // Unset when the score is undefined for that window (MFC only).
  std::optional<double> control;
  std::optional<double> anomaly;
  // |anomaly - control|; unset when either side is undefined.
  std::optional<double> shift;
  // anomaly coverage - control coverage (GFI only).
  std::optional<double> coverage_delta;
  // control rank - anomaly rank; positive means the feature moved up.
  std::optional<int64_t> rank_shift;

  bool operator==(const RankedEntry&) const = default;
};

struct ReportMeta {
  std::string method;
  std::string checkpoint_id;
  std::string control_label = "control";
  std::string anomaly_label = "anomaly";
  size_t control_examples = 0;
  size_t anomaly_examples = 0;

  bool operator==(const ReportMeta&) const = default;
};

// Entries sorted by shift descending, ties (and undefined shifts, which come
// last) ordered by feature id. Every feature is listed; `k` marks the cutoff
// surfaced for triage.
struct RankedReport {
  ReportMeta meta;
  size_t k = kDefaultTopK;
  std::vector<RankedEntry> entries;

  std::vector<std::string> TopK() const;
  bool operator==(const RankedReport&) const = default;
};

// Throws DataError when the two vectors do not cover the same features.
RankedReport RankFeatures(const GfiVector& control, const GfiVector& anomaly, size_t k = kDefaultTopK);

// Sorts entries into report order. Shared with the MFC ranking.
void SortReportEntries(std::vector<RankedEntry>& entries);

}  // namespace driftscope
