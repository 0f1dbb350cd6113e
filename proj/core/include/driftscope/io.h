#pragma once

// Versioned text file formats.
//
//   schema       "driftscope-schema v1" header line, then one JSON document
//                listing the entries in column order.
//   dataset      "driftscope-dataset v1" header line, one JSON metadata line
//                (label, window, schema), then one JSON record per example:
//                {"example_id","timestamp","displayed","features":{id: value}}
//                where value is one of {"numeric":x}, {"categorical":id},
//                {"embedding":[..]}, {"ids":[..]}, {"weighted":[[id,w],..]},
//                {"encoded":[..]}.
//   model        "driftscope-model v1" header line, then one JSON document
//                holding the config (with schema) and every weight tensor.
//   lfi          "driftscope-lfi v1 N=<n> M=<m> method=<name> tau=<t>
//                checkpoint=<id>" header line, then N lines of M
//                tab-separated reals; a sidecar lists row and column ids.
//   predictions  "driftscope-predictions v1" header line, then
//                "<example_id>\t<probability>" lines.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "driftscope/attribution.h"
#include "driftscope/feature_space.h"
#include "driftscope/model.h"

namespace driftscope {

inline constexpr std::string_view kSchemaHeader = "driftscope-schema v1";
inline constexpr std::string_view kDatasetHeader = "driftscope-dataset v1";
inline constexpr std::string_view kModelHeader = "driftscope-model v1";
inline constexpr std::string_view kLfiHeader = "driftscope-lfi v1";
inline constexpr std::string_view kPredictionsHeader = "driftscope-predictions v1";

// Whole-file helpers; throw DataError on I/O failure.
std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, std::string_view content);

// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string ContentHash(std::string_view bytes);

// Every reader throws DataError on malformed input or a wrong header.

std::string SchemaToJson(const FeatureSchema& schema);
FeatureSchema SchemaFromJson(std::string_view json);
void WriteSchema(std::ostream& out, const FeatureSchema& schema);
FeatureSchema ReadSchema(std::istream& in);

std::string FeatureValueToJson(const FeatureValue& value);
FeatureValue FeatureValueFromJson(std::string_view json);

// One record line (no newline). Parsing validates against the schema.
std::string ExampleToLine(const Example& example, const FeatureSchema& schema);
Example ExampleFromLine(std::string_view line, const FeatureSchema& schema);

void WriteDataset(std::ostream& out, const Dataset& dataset);
Dataset ReadDataset(std::istream& in);

// Incremental reader for the dataset format. Malformed record lines are
// skipped and counted instead of aborting the stream.
class DatasetStreamReader {
 public:
  // Reads the header; the metadata line is optional so a bare stream of
  // records can follow the header. Without metadata, `schema` must be given.
  explicit DatasetStreamReader(std::istream& in, const FeatureSchema* schema = nullptr);

  const FeatureSchema& schema() const { return schema_; }
  std::optional<Example> Next();
  size_t malformed_lines() const { return malformed_; }
  const std::string& last_error() const { return last_error_; }

 private:
  std::istream* in_;
  FeatureSchema schema_;
  std::optional<std::string> pending_;
  size_t malformed_ = 0;
  std::string last_error_;
};

void WriteModel(std::ostream& out, const Model& model);
Model ReadModel(std::istream& in);
// ContentHash of the serialized checkpoint.
std::string CheckpointId(const Model& model);

void WriteLfiMatrix(std::ostream& data, std::ostream& ids, const LfiMatrix& matrix);
LfiMatrix ReadLfiMatrix(std::istream& data, std::istream& ids);

void WritePredictions(std::ostream& out, std::span<const Example> examples,
                      std::span<const double> predictions);
std::vector<std::pair<std::string, double>> ReadPredictions(std::istream& in);

// Shortest decimal text that parses back to the same double.
std::string FormatDouble(double value);

}  // namespace driftscope
