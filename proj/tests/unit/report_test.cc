#include "driftscope/report.h"

#include <gtest/gtest.h>

#include "driftscope/error.h"

namespace driftscope {
namespace {

RankedReport SampleReport() {
  RankedReport r;
  r.meta.method = "gfi:pseudo-loss";
  r.meta.checkpoint_id = "00ff";
  r.meta.control_examples = 100;
  r.meta.anomaly_examples = 90;
  r.k = 2;
  r.entries = {RankedEntry{"a", 0.1, 0.4, 0.30000000000000004, 0.25, 3},
               RankedEntry{"b", 0.2, 0.1, 0.1, -0.5, -1},
               RankedEntry{"c", std::nullopt, 0.3, std::nullopt, std::nullopt, std::nullopt}};
  return r;
}

TEST(RankedReport, TextRoundTrip) {
  const RankedReport r = SampleReport();
  const std::string text = RankedReportToText(r);
  EXPECT_NE(text.find("---- top 2 ----"), std::string::npos);
  EXPECT_NE(text.find("NA"), std::string::npos);
  EXPECT_EQ(RankedReportFromText(text), r);
}

TEST(RankedReport, JsonlRoundTripAgreesWithText) {
  const RankedReport r = SampleReport();
  const std::string jsonl = RankedReportToJsonl(r);
  EXPECT_EQ(RankedReportFromJsonl(jsonl), r);
  EXPECT_EQ(RankedReportFromJsonl(jsonl), RankedReportFromText(RankedReportToText(r)));
}

TEST(RankedReport, EmptyCheckpointPrintsDash) {
  RankedReport r = SampleReport();
  r.meta.checkpoint_id.clear();
  const std::string text = RankedReportToText(r);
  EXPECT_NE(text.find("checkpoint=-"), std::string::npos);
  EXPECT_EQ(RankedReportFromText(text), r);
}

TEST(RankedReport, MalformedInputs) {
  EXPECT_THROW(RankedReportFromText("# something else\n"), DataError);
  EXPECT_THROW(RankedReportFromJsonl("{\"record\":\"entry\"}\n"), DataError);
  std::string text = RankedReportToText(SampleReport());
  text += "9 zz notanumber 1 1 1 1\n";
  EXPECT_THROW(RankedReportFromText(text), DataError);
}

CaseResult SampleCase(int id, std::optional<size_t> mfc) {
  CaseResult c;
  c.case_id = id;
  c.description = "x -> 2x (linear change)";
  c.corrupted_features = {"num_00", "num_01"};
  c.avg_prediction_change = -1.234;
  c.gfi_hits = 2;
  c.mfc_hits = mfc;
  c.gfi_report = SampleReport();
  c.mfc_report = SampleReport();
  c.mfc_report.meta.method = "mfc";
  return c;
}

TEST(BenchmarkReport, TextTable) {
  const std::vector<CaseResult> results = {SampleCase(1, 1), SampleCase(11, std::nullopt)};
  const std::string text = BenchmarkReportToText(results);
  EXPECT_EQ(text.rfind("# driftscope-benchmark v1", 0), 0u);
  EXPECT_NE(text.find("N/A"), std::string::npos);
  EXPECT_NE(text.find("2/2"), std::string::npos);
  EXPECT_NE(text.find("# recall gfi"), std::string::npos);
  EXPECT_NE(text.find("# recall mfc"), std::string::npos);
}

TEST(BenchmarkReport, EmptyHasHeaderOnly) {
  const std::string text = BenchmarkReportToText({});
  EXPECT_EQ(text.rfind("# driftscope-benchmark v1", 0), 0u);
  EXPECT_EQ(text.find("# recall"), std::string::npos);
}

TEST(BenchmarkReport, JsonRoundTrip) {
  const std::vector<CaseResult> results = {SampleCase(1, 1), SampleCase(11, std::nullopt)};
  const BenchmarkReport back = BenchmarkReportFromJson(BenchmarkReportToJson(results));
  EXPECT_EQ(back.results, results);
  ASSERT_TRUE(back.summary.has_value());
  EXPECT_EQ(*back.summary, ComputeRecall(results));
  EXPECT_FALSE(BenchmarkReportFromJson(BenchmarkReportToJson({})).summary.has_value());
  EXPECT_THROW(BenchmarkReportFromJson("[]"), DataError);
}

}  // namespace
}  // namespace driftscope
