#include "driftscope/aggregation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "driftscope/error.h"
#include "driftscope/parallel.h"
#include "driftscope/rng.h"

namespace driftscope {
namespace {

// Median of a non-empty buffer; reorders it. Even sizes average the two
// middle elements.
double MedianInPlace(std::vector<double>& values) {
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2;
}

// Column-major copy so per-feature scans touch contiguous memory.
std::vector<double> Transpose(const LfiMatrix& lfi) {
  std::vector<double> t(lfi.rows() * lfi.cols());
  for (size_t i = 0; i < lfi.rows(); ++i) {
    for (size_t j = 0; j < lfi.cols(); ++j) t[j * lfi.rows() + i] = lfi.at(i, j);
  }
  return t;
}

double ColumnGfi(std::span<const double> column, std::span<const size_t> rows, std::vector<double>& scratch) {
  scratch.clear();
  for (size_t r : rows) {
    const double w = column[r];
    if (w != 0.0) scratch.push_back(std::fabs(w));
  }
  if (scratch.empty()) return 0.0;
  const double coverage = static_cast<double>(scratch.size()) / static_cast<double>(rows.size());
  return coverage * MedianInPlace(scratch);
}

std::vector<size_t> AllRows(size_t n) {
  std::vector<size_t> rows(n);
  std::iota(rows.begin(), rows.end(), size_t{0});
  return rows;
}

}  // namespace

double Coverage(const LfiMatrix& lfi, size_t column) {
  if (column >= lfi.cols()) throw ConfigError("column out of range");
  if (lfi.rows() == 0) return 0.0;
  size_t nonzero = 0;
  for (size_t i = 0; i < lfi.rows(); ++i) nonzero += lfi.at(i, column) != 0.0 ? 1 : 0;
  return static_cast<double>(nonzero) / static_cast<double>(lfi.rows());
}

std::vector<double> GfiOfRows(const LfiMatrix& lfi, std::span<const size_t> rows) {
  if (rows.empty()) throw DataError("GFI needs at least one row");
  std::vector<double> gfi(lfi.cols(), 0.0);
  std::vector<double> column(lfi.rows());
  std::vector<double> scratch;
  for (size_t j = 0; j < lfi.cols(); ++j) {
    for (size_t i = 0; i < lfi.rows(); ++i) column[i] = lfi.at(i, j);
    gfi[j] = ColumnGfi(column, rows, scratch);
  }
  return gfi;
}

GfiVector ComputeGfi(const LfiMatrix& lfi, std::string window_label) {
  if (lfi.rows() == 0) throw DataError("GFI needs at least one row");
  const auto rows = AllRows(lfi.rows());
  const auto gfi = GfiOfRows(lfi, rows);

  GfiVector out;
  out.window_label = std::move(window_label);
  out.num_examples = lfi.rows();
  out.features.resize(lfi.cols());
  for (size_t j = 0; j < lfi.cols(); ++j) {
    auto& f = out.features[j];
    f.feature_id = j < lfi.column_ids.size() ? lfi.column_ids[j] : std::to_string(j);
    f.coverage = Coverage(lfi, j);
    f.gfi = gfi[j];
  }
  std::vector<size_t> order = AllRows(lfi.cols());
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const auto& fa = out.features[a];
    const auto& fb = out.features[b];
    if (fa.gfi != fb.gfi) return fa.gfi > fb.gfi;
    return fa.feature_id < fb.feature_id;
  });
  for (size_t r = 0; r < order.size(); ++r) out.features[order[r]].rank = r;
  return out;
}

std::vector<double> BootstrapStandardErrors(const LfiMatrix& lfi, size_t resamples, uint64_t seed,
                                            size_t parallelism) {
  if (lfi.rows() == 0) throw DataError("bootstrap needs at least one row");
  if (resamples < 2) throw ConfigError("bootstrap needs at least 2 resamples");
  const size_t n = lfi.rows();
  const size_t m = lfi.cols();
  const std::vector<double> columns = Transpose(lfi);

  std::vector<double> estimates(resamples * m);
  ParallelFor(resamples, parallelism, [&](size_t b) {
    Rng rng(DeriveSeed(seed, b));
    std::vector<size_t> rows(n);
    for (auto& r : rows) r = static_cast<size_t>(rng.Below(n));
    std::vector<double> scratch;
    for (size_t j = 0; j < m; ++j) {
      estimates[b * m + j] = ColumnGfi(std::span<const double>(columns.data() + j * n, n), rows, scratch);
    }
  });

  std::vector<double> se(m, 0.0);
  for (size_t j = 0; j < m; ++j) {
    double mean = 0.0;
    for (size_t b = 0; b < resamples; ++b) mean += estimates[b * m + j];
    mean /= static_cast<double>(resamples);
    double ss = 0.0;
    for (size_t b = 0; b < resamples; ++b) {
      const double d = estimates[b * m + j] - mean;
      ss += d * d;
    }
    se[j] = std::sqrt(ss / static_cast<double>(resamples - 1));
  }
  return se;
}

double SeTolerance::For(double gfi) const {
  if (absolute) return *absolute;
  return std::max(relative * gfi, floor);
}

SampleSizeChoice SelectSampleSize(const Scorer& model, const Dataset& pool,
                                  std::span<const size_t> candidates, const SeTolerance& tolerance,
                                  uint64_t seed, const SampleSizeOptions& options) {
  if (candidates.empty()) throw ConfigError("sample size selection needs at least one candidate");
  if (!std::is_sorted(candidates.begin(), candidates.end())) {
    throw ConfigError("sample size candidates must be ascending");
  }
  SampleSizeChoice choice;
  for (size_t c = 0; c < candidates.size(); ++c) {
    const size_t n = candidates[c];
    const Dataset sample = SampleForAggregation(pool, n, DeriveSeed(seed, n));
    AttributionOptions attribution;
    attribution.parallelism = options.parallelism;
    const LfiMatrix lfi = ComputeLfiMatrix(model, sample, options.method, attribution);
    const GfiVector gfi = ComputeGfi(lfi);
    const auto se = BootstrapStandardErrors(lfi, options.resamples, DeriveSeed(seed, n + 1),
                                            options.parallelism);
    bool ok = true;
    double worst = 0.0;
    for (size_t j = 0; j < se.size(); ++j) {
      worst = std::max(worst, se[j]);
      if (!(se[j] <= tolerance.For(gfi.features[j].gfi))) ok = false;
    }
    choice.max_standard_error.push_back(worst);
    if (ok) {
      choice.num_examples = n;
      choice.within_tolerance = true;
      return choice;
    }
  }
  choice.num_examples = candidates.back();
  choice.within_tolerance = false;
  choice.warning = "no candidate sample size met the standard error tolerance; using the largest (" +
                   std::to_string(candidates.back()) + ")";
  return choice;
}

Dataset SampleForAggregation(const Dataset& pool, size_t num_examples, uint64_t seed) {
  if (pool.examples.empty()) throw DataError("aggregation pool is empty");
  if (num_examples == 0) throw ConfigError("aggregation sample size must be >= 1");
  std::vector<size_t> all = AllRows(pool.examples.size());
  std::vector<size_t> displayed;
  for (size_t i = 0; i < pool.examples.size(); ++i) {
    if (pool.examples[i].displayed) displayed.push_back(i);
  }
  if (displayed.empty()) throw DataError("aggregation pool has no displayed examples");

  Rng rng(DeriveSeed(seed, 0xA66));
  auto draw = [&](std::vector<size_t>& stratum, size_t count, std::vector<size_t>& out) {
    if (count <= stratum.size()) {
      // Partial Fisher-Yates.
      for (size_t k = 0; k < count; ++k) {
        const size_t pick = k + static_cast<size_t>(rng.Below(stratum.size() - k));
        std::swap(stratum[k], stratum[pick]);
        out.push_back(stratum[k]);
      }
    } else {
      for (size_t k = 0; k < count; ++k) out.push_back(stratum[rng.Below(stratum.size())]);
    }
  };
  std::vector<size_t> picks;
  picks.reserve(num_examples);
  draw(all, num_examples - num_examples / 2, picks);
  draw(displayed, num_examples / 2, picks);

  Dataset sample;
  sample.schema = pool.schema;
  sample.label = pool.label;
  sample.window = pool.window;
  sample.examples.reserve(picks.size());
  for (size_t i : picks) sample.examples.push_back(pool.examples[i]);
  return sample;
}

std::string_view ControlWindowPolicyName(ControlWindowPolicy policy) {
  return policy == ControlWindowPolicy::kPreviousHour ? "previous-hour" : "same-hour-previous-day";
}

ControlWindowPolicy ParseControlWindowPolicy(std::string_view name) {
  if (name == "previous-hour") return ControlWindowPolicy::kPreviousHour;
  if (name == "same-hour-previous-day") return ControlWindowPolicy::kSameHourPreviousDay;
  throw ConfigError("unknown control window policy: " + std::string(name));
}

TimeWindow SelectControlWindow(const TimeWindow& anomaly, ControlWindowPolicy policy) {
  if (anomaly.end < anomaly.start) throw ConfigError("anomaly window ends before it starts");
  const int64_t offset = policy == ControlWindowPolicy::kPreviousHour ? 3600 : 86400;
  return TimeWindow{anomaly.start - offset, anomaly.end - offset};
}

Dataset SliceWindow(const Dataset& data, const TimeWindow& window, WindowLabel label) {
  if (window.end < window.start) throw ConfigError("window ends before it starts");
  Dataset out;
  out.schema = data.schema;
  out.label = label;
  out.window = window;
  for (const auto& e : data.examples) {
    if (e.timestamp >= window.start && e.timestamp <= window.end) out.examples.push_back(e);
  }
  return out;
}

std::vector<std::string> RankedReport::TopK() const {
  std::vector<std::string> top;
  for (size_t r = 0; r < entries.size() && r < k; ++r) top.push_back(entries[r].feature_id);
  return top;
}

void SortReportEntries(std::vector<RankedEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.shift.has_value() != b.shift.has_value()) return a.shift.has_value();
    if (a.shift && *a.shift != *b.shift) return *a.shift > *b.shift;
    return a.feature_id < b.feature_id;
  });
}

RankedReport RankFeatures(const GfiVector& control, const GfiVector& anomaly, size_t k) {
  if (control.features.size() != anomaly.features.size()) {
    throw DataError("control and anomaly GFIs cover different feature sets");
  }
  std::unordered_map<std::string, const FeatureGfi*> by_id;
  for (const auto& f : anomaly.features) by_id.emplace(f.feature_id, &f);

  RankedReport report;
  report.k = k;
  report.meta.control_label = control.window_label.empty() ? "control" : control.window_label;
  report.meta.anomaly_label = anomaly.window_label.empty() ? "anomaly" : anomaly.window_label;
  report.meta.control_examples = control.num_examples;
  report.meta.anomaly_examples = anomaly.num_examples;
  for (const auto& c : control.features) {
    const auto it = by_id.find(c.feature_id);
    if (it == by_id.end()) {
      throw DataError("feature " + c.feature_id + " is missing from the anomaly GFIs");
    }
    const FeatureGfi& a = *it->second;
    RankedEntry entry;
    entry.feature_id = c.feature_id;
    entry.control = c.gfi;
    entry.anomaly = a.gfi;
    entry.shift = std::fabs(a.gfi - c.gfi);
    entry.coverage_delta = a.coverage - c.coverage;
    entry.rank_shift = static_cast<int64_t>(c.rank) - static_cast<int64_t>(a.rank);
    report.entries.push_back(std::move(entry));
  }
  SortReportEntries(report.entries);
  return report;
}

}  // namespace driftscope
