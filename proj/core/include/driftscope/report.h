#pragma once

// Renderers and parsers for ranked shift reports and benchmark reports.
//
// Ranked report, text form:
//   # driftscope-report v1
//   # method=<m> checkpoint=<id|-> k=<K>
//   # control=<label> n=<N>
//   # anomaly=<label> n=<N>
//   rank  feature_id  control  anomaly  shift  coverage_delta  rank_shift
//   1     f           ...
//   ---- top 10 ----
//   11    ...
// Reals are printed as the shortest text that parses back exactly; unset
// values print as NA.
//
// Ranked report, line-delimited form: one {"record":"meta",...} line, then
// one {"record":"entry","rank":r,...} line per feature with null for unset
// values.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftscope/aggregation.h"
#include "driftscope/corruption.h"

namespace driftscope {

std::string RankedReportToText(const RankedReport& report);
std::string RankedReportToJsonl(const RankedReport& report);

// Both parsers throw DataError on malformed input.
RankedReport RankedReportFromText(std::string_view text);
RankedReport RankedReportFromJsonl(std::string_view text);

// One row per case plus the recall summary. An empty `results` renders only
// the header.
std::string BenchmarkReportToText(std::span<const CaseResult> results);

// {"results":[...],"summary":{...}|null}; results carry both full reports.
std::string BenchmarkReportToJson(std::span<const CaseResult> results);

struct BenchmarkReport {
  std::vector<CaseResult> results;
  std::optional<RecallSummary> summary;

  bool operator==(const BenchmarkReport&) const = default;
};

BenchmarkReport BenchmarkReportFromJson(std::string_view json);

}  // namespace driftscope
