#include "driftscope/report.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "driftscope/error.h"
#include "driftscope/io.h"
#include "json.hpp"

namespace driftscope {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kReportHeader = "# driftscope-report v1";
constexpr std::string_view kBenchHeader = "# driftscope-benchmark v1";
constexpr std::string_view kNa = "NA";

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

template <class T>
T ParseNumber(std::string_view text, std::string_view what) {
  T value{};
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw DataError("report: bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::string OptionalText(const std::optional<double>& v) { return v ? FormatDouble(*v) : std::string(kNa); }
std::string OptionalText(const std::optional<int64_t>& v) { return v ? std::to_string(*v) : std::string(kNa); }

std::optional<double> OptionalDouble(std::string_view text) {
  if (text == kNa) return std::nullopt;
  return ParseNumber<double>(text, "real");
}

std::optional<int64_t> OptionalInt(std::string_view text) {
  if (text == kNa) return std::nullopt;
  return ParseNumber<int64_t>(text, "integer");
}

// Value of `key=` within a whitespace-split meta line.
std::string_view MetaField(const std::vector<std::string_view>& tokens, std::string_view key) {
  for (auto t : tokens) {
    if (t.size() > key.size() && t.substr(0, key.size()) == key && t[key.size()] == '=') {
      return t.substr(key.size() + 1);
    }
  }
  throw DataError("report: missing meta field '" + std::string(key) + "'");
}

std::string RenderTable(const std::vector<std::vector<std::string>>& rows, size_t cutoff_after,
                        const std::string& cutoff_line) {
  std::vector<size_t> widths;
  for (const auto& row : rows) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  for (size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    std::string line;
    for (size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size()) line.append(widths[c] - row[c].size() + 2, ' ');
    }
    out += line;
    out += '\n';
    if (r == cutoff_after && r + 1 < rows.size()) out += cutoff_line + '\n';
  }
  return out;
}

Json OptionalJson(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }
Json OptionalJson(const std::optional<int64_t>& v) { return v ? Json(*v) : Json(nullptr); }

template <class T>
std::optional<T> OptionalFromJson(const Json& j, const char* key) {
  if (!j.contains(key)) throw DataError(std::string("report: missing field '") + key + "'");
  const Json& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<T>();
}

Json MetaJson(const RankedReport& report) {
  const ReportMeta& m = report.meta;
  return Json{{"method", m.method},
              {"checkpoint_id", m.checkpoint_id},
              {"control_label", m.control_label},
              {"anomaly_label", m.anomaly_label},
              {"control_examples", m.control_examples},
              {"anomaly_examples", m.anomaly_examples},
              {"k", report.k}};
}

void MetaFromJson(const Json& j, RankedReport& report) {
  report.meta.method = j.at("method").get<std::string>();
  report.meta.checkpoint_id = j.at("checkpoint_id").get<std::string>();
  report.meta.control_label = j.at("control_label").get<std::string>();
  report.meta.anomaly_label = j.at("anomaly_label").get<std::string>();
  report.meta.control_examples = j.at("control_examples").get<size_t>();
  report.meta.anomaly_examples = j.at("anomaly_examples").get<size_t>();
  report.k = j.at("k").get<size_t>();
}

Json EntryJson(const RankedEntry& e) {
  return Json{{"feature_id", e.feature_id},
              {"control", OptionalJson(e.control)},
              {"anomaly", OptionalJson(e.anomaly)},
              {"shift", OptionalJson(e.shift)},
              {"coverage_delta", OptionalJson(e.coverage_delta)},
              {"rank_shift", OptionalJson(e.rank_shift)}};
}

RankedEntry EntryFromJson(const Json& j) {
  RankedEntry e;
  e.feature_id = j.at("feature_id").get<std::string>();
  e.control = OptionalFromJson<double>(j, "control");
  e.anomaly = OptionalFromJson<double>(j, "anomaly");
  e.shift = OptionalFromJson<double>(j, "shift");
  e.coverage_delta = OptionalFromJson<double>(j, "coverage_delta");
  e.rank_shift = OptionalFromJson<int64_t>(j, "rank_shift");
  return e;
}

Json ReportJson(const RankedReport& report) {
  Json entries = Json::array();
  for (const auto& e : report.entries) entries.push_back(EntryJson(e));
  Json j = MetaJson(report);
  j["entries"] = std::move(entries);
  return j;
}

RankedReport ReportFromJson(const Json& j) {
  RankedReport report;
  MetaFromJson(j, report);
  for (const auto& e : j.at("entries")) report.entries.push_back(EntryFromJson(e));
  return report;
}

Json RecallJson(const MethodRecall& r) {
  return Json{{"overall", r.overall},
              {"at_least_one", r.at_least_one},
              {"cases", r.cases},
              {"corrupted", r.corrupted},
              {"hits", r.hits}};
}

MethodRecall RecallFromJson(const Json& j) {
  MethodRecall r;
  r.overall = j.at("overall").get<double>();
  r.at_least_one = j.at("at_least_one").get<double>();
  r.cases = j.at("cases").get<size_t>();
  r.corrupted = j.at("corrupted").get<size_t>();
  r.hits = j.at("hits").get<size_t>();
  return r;
}

std::string Fixed(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, value);
  return buffer;
}

}  // namespace

// ---------------------------------------------------------------------------
// Ranked reports
// ---------------------------------------------------------------------------

std::string RankedReportToText(const RankedReport& report) {
  const ReportMeta& m = report.meta;
  std::string out;
  out += std::string(kReportHeader) + '\n';
  out += "# method=" + (m.method.empty() ? std::string("-") : m.method) +
         " checkpoint=" + (m.checkpoint_id.empty() ? std::string("-") : m.checkpoint_id) +
         " k=" + std::to_string(report.k) + '\n';
  out += "# control=" + m.control_label + " n=" + std::to_string(m.control_examples) + '\n';
  out += "# anomaly=" + m.anomaly_label + " n=" + std::to_string(m.anomaly_examples) + '\n';

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"rank", "feature_id", "control", "anomaly", "shift", "coverage_delta", "rank_shift"});
  for (size_t r = 0; r < report.entries.size(); ++r) {
    const auto& e = report.entries[r];
    rows.push_back({std::to_string(r + 1), e.feature_id, OptionalText(e.control), OptionalText(e.anomaly),
                    OptionalText(e.shift), OptionalText(e.coverage_delta), OptionalText(e.rank_shift)});
  }
  // Row 0 is the header, so the cutoff follows table row k.
  out += RenderTable(rows, report.k, "---- top " + std::to_string(report.k) + " ----");
  return out;
}

RankedReport RankedReportFromText(std::string_view text) {
  const auto lines = SplitLines(text);
  if (lines.empty() || lines[0] != kReportHeader) throw DataError("report: missing text header");
  if (lines.size() < 5) throw DataError("report: truncated text report");

  RankedReport report;
  const auto meta = SplitWhitespace(lines[1]);
  const auto method = MetaField(meta, "method");
  const auto checkpoint = MetaField(meta, "checkpoint");
  report.meta.method = method == "-" ? "" : std::string(method);
  report.meta.checkpoint_id = checkpoint == "-" ? "" : std::string(checkpoint);
  report.k = ParseNumber<size_t>(MetaField(meta, "k"), "k");
  const auto control = SplitWhitespace(lines[2]);
  report.meta.control_label = std::string(MetaField(control, "control"));
  report.meta.control_examples = ParseNumber<size_t>(MetaField(control, "n"), "example count");
  const auto anomaly = SplitWhitespace(lines[3]);
  report.meta.anomaly_label = std::string(MetaField(anomaly, "anomaly"));
  report.meta.anomaly_examples = ParseNumber<size_t>(MetaField(anomaly, "n"), "example count");

  if (SplitWhitespace(lines[4]).empty() || SplitWhitespace(lines[4])[0] != "rank") {
    throw DataError("report: missing column header");
  }
  for (size_t i = 5; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (line.empty() || line.substr(0, 4) == "----") continue;
    const auto cells = SplitWhitespace(line);
    if (cells.size() != 7) throw DataError("report: row " + std::to_string(i + 1) + " has " +
                                           std::to_string(cells.size()) + " cells");
    if (ParseNumber<size_t>(cells[0], "rank") != report.entries.size() + 1) {
      throw DataError("report: ranks are not consecutive at line " + std::to_string(i + 1));
    }
    RankedEntry e;
    e.feature_id = std::string(cells[1]);
    e.control = OptionalDouble(cells[2]);
    e.anomaly = OptionalDouble(cells[3]);
    e.shift = OptionalDouble(cells[4]);
    e.coverage_delta = OptionalDouble(cells[5]);
    e.rank_shift = OptionalInt(cells[6]);
    report.entries.push_back(std::move(e));
  }
  return report;
}

std::string RankedReportToJsonl(const RankedReport& report) {
  Json meta{{"record", "meta"}};
  meta.update(MetaJson(report));
  std::string out = meta.dump() + '\n';
  for (size_t r = 0; r < report.entries.size(); ++r) {
    Json entry{{"record", "entry"}, {"rank", r + 1}};
    entry.update(EntryJson(report.entries[r]));
    out += entry.dump() + '\n';
  }
  return out;
}

RankedReport RankedReportFromJsonl(std::string_view text) {
  RankedReport report;
  bool have_meta = false;
  size_t line_no = 0;
  for (const auto line : SplitLines(text)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line.begin(), line.end());
      const auto kind = j.at("record").get<std::string>();
      if (kind == "meta") {
        if (have_meta) throw DataError("duplicate meta record");
        MetaFromJson(j, report);
        have_meta = true;
      } else if (kind == "entry") {
        if (!have_meta) throw DataError("entry before meta record");
        if (j.at("rank").get<size_t>() != report.entries.size() + 1) throw DataError("ranks are not consecutive");
        report.entries.push_back(EntryFromJson(j));
      } else {
        throw DataError("unknown record type " + kind);
      }
    } catch (const Json::exception& e) {
      throw DataError("report line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("report line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_meta) throw DataError("report: no meta record");
  return report;
}

// ---------------------------------------------------------------------------
// Benchmark reports
// ---------------------------------------------------------------------------

std::string BenchmarkReportToText(std::span<const CaseResult> results) {
  std::string out = std::string(kBenchHeader) + '\n';
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"case", "corrupted", "avg_prediction_change_pct", "gfi_hits", "mfc_hits", "description"});
  for (const auto& r : results) {
    const std::string n = std::to_string(r.corrupted_features.size());
    rows.push_back({std::to_string(r.case_id), n, Fixed(r.avg_prediction_change, 2),
                    std::to_string(r.gfi_hits) + "/" + n,
                    r.mfc_hits ? std::to_string(*r.mfc_hits) + "/" + n : std::string("N/A"), r.description});
  }
  out += RenderTable(rows, rows.size(), "");
  if (results.empty()) return out;

  const RecallSummary summary = ComputeRecall(results);
  auto line = [](const char* name, const MethodRecall& m) {
    return std::string("# recall ") + name + " overall=" + Fixed(m.overall, 1) +
           "% at_least_one=" + Fixed(m.at_least_one, 1) + "% hits=" + std::to_string(m.hits) + "/" +
           std::to_string(m.corrupted) + " cases=" + std::to_string(m.cases) + '\n';
  };
  out += line("gfi", summary.gfi);
  out += summary.mfc ? line("mfc", *summary.mfc) : std::string("# recall mfc N/A\n");
  return out;
}

std::string BenchmarkReportToJson(std::span<const CaseResult> results) {
  Json rows = Json::array();
  for (const auto& r : results) {
    rows.push_back(Json{{"case_id", r.case_id},
                        {"description", r.description},
                        {"corrupted_features", r.corrupted_features},
                        {"avg_prediction_change", r.avg_prediction_change},
                        {"gfi_hits", r.gfi_hits},
                        {"mfc_hits", r.mfc_hits ? Json(*r.mfc_hits) : Json(nullptr)},
                        {"gfi_report", ReportJson(r.gfi_report)},
                        {"mfc_report", ReportJson(r.mfc_report)}});
  }
  Json summary = nullptr;
  if (!results.empty()) {
    const RecallSummary s = ComputeRecall(results);
    summary = Json{{"gfi", RecallJson(s.gfi)}, {"mfc", s.mfc ? RecallJson(*s.mfc) : Json(nullptr)}};
  }
  return Json{{"format", "driftscope-benchmark v1"}, {"results", std::move(rows)}, {"summary", summary}}.dump(2) +
         '\n';
}

BenchmarkReport BenchmarkReportFromJson(std::string_view json) {
  try {
    const Json j = Json::parse(json.begin(), json.end());
    if (j.value("format", std::string()) != "driftscope-benchmark v1") {
      throw DataError("benchmark report: unknown format");
    }
    BenchmarkReport out;
    for (const auto& r : j.at("results")) {
      CaseResult c;
      c.case_id = r.at("case_id").get<int>();
      c.description = r.at("description").get<std::string>();
      c.corrupted_features = r.at("corrupted_features").get<std::vector<std::string>>();
      c.avg_prediction_change = r.at("avg_prediction_change").get<double>();
      c.gfi_hits = r.at("gfi_hits").get<size_t>();
      c.mfc_hits = OptionalFromJson<size_t>(r, "mfc_hits");
      c.gfi_report = ReportFromJson(r.at("gfi_report"));
      c.mfc_report = ReportFromJson(r.at("mfc_report"));
      out.results.push_back(std::move(c));
    }
    const Json& s = j.at("summary");
    if (!s.is_null()) {
      RecallSummary summary;
      summary.gfi = RecallFromJson(s.at("gfi"));
      if (!s.at("mfc").is_null()) summary.mfc = RecallFromJson(s.at("mfc"));
      out.summary = summary;
    }
    return out;
  } catch (const Json::exception& e) {
    throw DataError(std::string("benchmark report: ") + e.what());
  }
}

}  // namespace driftscope
