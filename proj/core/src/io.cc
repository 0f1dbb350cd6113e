#include "driftscope/io.h"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "driftscope/error.h"
#include "json.hpp"
#include "overloaded.h"

namespace driftscope {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kLfiIdsHeader = "driftscope-lfi-ids v1";

std::string ReadLine(std::istream& in, std::string_view what) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("unexpected end of " + std::string(what));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

void ExpectHeader(std::istream& in, std::string_view header, std::string_view what) {
  const std::string line = ReadLine(in, what);
  if (line != header) {
    throw DataError(std::string(what) + ": expected header '" + std::string(header) + "', got '" + line + "'");
  }
}

Json ParseJson(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {
    throw DataError(std::string(what) + ": " + e.what());
  }
}

template <class T>
T Get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw DataError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("field '") + key + "': " + e.what());
  }
}

// ---- kinds and values -----------------------------------------------------

Json KindToJson(const FeatureKind& kind) {
  Json j;
  j["type"] = KindName(kind);
  std::visit(Overloaded{
                 [](const NumericKind&) {},
                 [&](const CategoricalKind& k) { j["cardinality"] = k.cardinality; },
                 [&](const EmbeddingKind& k) { j["dim"] = k.dim; },
                 [&](const SparseIdListKind& k) { j["max_len"] = k.max_len; },
                 [&](const WeightedSparseIdListKind& k) { j["max_len"] = k.max_len; },
                 [&](const EncodedEmbeddingKind& k) { j["decoded_dim"] = k.decoded_dim; },
             },
             kind);
  return j;
}

FeatureKind KindFromJson(const Json& j) {
  const auto type = Get<std::string>(j, "type");
  if (type == "numeric") return NumericKind{};
  if (type == "categorical") return CategoricalKind{Get<int64_t>(j, "cardinality")};
  if (type == "embedding") return EmbeddingKind{Get<int64_t>(j, "dim")};
  if (type == "sparse_id_list") return SparseIdListKind{Get<int64_t>(j, "max_len")};
  if (type == "weighted_sparse_id_list") return WeightedSparseIdListKind{Get<int64_t>(j, "max_len")};
  if (type == "encoded_embedding") return EncodedEmbeddingKind{Get<int64_t>(j, "decoded_dim")};
  throw DataError("unknown feature kind: " + type);
}

Json ValueToJson(const FeatureValue& value) {
  Json j;
  std::visit(Overloaded{
                 [&](const NumericValue& v) { j["numeric"] = v.value; },
                 [&](const CategoricalValue& v) { j["categorical"] = v.id; },
                 [&](const EmbeddingValue& v) { j["embedding"] = v.values; },
                 [&](const SparseIdListValue& v) { j["ids"] = v.ids; },
                 [&](const WeightedSparseIdListValue& v) {
                   Json entries = Json::array();
                   for (const auto& e : v.entries) entries.push_back(Json::array({e.id, e.weight}));
                   j["weighted"] = std::move(entries);
                 },
                 [&](const EncodedEmbeddingValue& v) { j["encoded"] = v.words; },
             },
             value);
  return j;
}

FeatureValue ValueFromJson(const Json& j) {
  if (!j.is_object() || j.size() != 1) throw DataError("feature value must be a one-key object");
  const auto& [tag, body] = *j.items().begin();
  try {
    if (tag == "numeric") return NumericValue{body.get<double>()};
    if (tag == "categorical") return CategoricalValue{body.get<int64_t>()};
    if (tag == "embedding") return EmbeddingValue{body.get<std::vector<double>>()};
    if (tag == "ids") return SparseIdListValue{body.get<std::vector<int64_t>>()};
    if (tag == "weighted") {
      WeightedSparseIdListValue v;
      for (const auto& e : body) {
        if (!e.is_array() || e.size() != 2) throw DataError("weighted id entry must be [id, weight]");
        v.entries.push_back(WeightedId{e[0].get<int64_t>(), e[1].get<double>()});
      }
      return v;
    }
    if (tag == "encoded") return EncodedEmbeddingValue{body.get<std::vector<uint64_t>>()};
  } catch (const Json::exception& e) {
    throw DataError("feature value '" + tag + "': " + e.what());
  }
  throw DataError("unknown feature value tag: " + tag);
}

Json GeneratorToJson(const GeneratorParams& g) {
  return Json{{"missing_rate", g.missing_rate}, {"mean", g.mean},
              {"stddev", g.stddev},             {"drift_amplitude", g.drift_amplitude},
              {"drift_period", g.drift_period}, {"zipf_exponent", g.zipf_exponent},
              {"vocab", g.vocab},               {"min_len", g.min_len},
              {"weight_min", g.weight_min},     {"weight_max", g.weight_max}};
}

GeneratorParams GeneratorFromJson(const Json& j) {
  GeneratorParams g;
  if (!j.is_object()) return g;
  auto opt = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  opt("missing_rate", g.missing_rate);
  opt("mean", g.mean);
  opt("stddev", g.stddev);
  opt("drift_amplitude", g.drift_amplitude);
  opt("drift_period", g.drift_period);
  opt("zipf_exponent", g.zipf_exponent);
  opt("vocab", g.vocab);
  opt("min_len", g.min_len);
  opt("weight_min", g.weight_min);
  opt("weight_max", g.weight_max);
  return g;
}

Json SchemaJson(const FeatureSchema& schema) {
  Json entries = Json::array();
  for (const auto& e : schema.entries()) {
    entries.push_back(Json{{"id", e.id},
                           {"kind", KindToJson(e.kind)},
                           {"baseline", ValueToJson(e.baseline)},
                           {"generator", GeneratorToJson(e.generator)}});
  }
  return Json{{"entries", std::move(entries)}};
}

FeatureSchema SchemaFromJsonValue(const Json& j) {
  if (!j.is_object() || !j.contains("entries") || !j.at("entries").is_array()) {
    throw DataError("schema document must have an 'entries' array");
  }
  std::vector<FeatureSpec> entries;
  for (const auto& e : j.at("entries")) {
    FeatureSpec spec;
    spec.id = Get<std::string>(e, "id");
    spec.kind = KindFromJson(e.at("kind"));
    spec.baseline = e.contains("baseline") ? ValueFromJson(e.at("baseline")) : BaselineValue(spec.kind);
    spec.generator = e.contains("generator") ? GeneratorFromJson(e.at("generator")) : GeneratorParams{};
    entries.push_back(std::move(spec));
  }
  try {
    return FeatureSchema(std::move(entries));
  } catch (const ConfigError& e) {
    throw DataError(std::string("invalid schema: ") + e.what());
  }
}

Json ExampleJson(const Example& example, const FeatureSchema& schema) {
  if (example.features.size() != schema.size()) {
    throw DataError("example " + example.example_id + " does not match the schema");
  }
  Json features = Json::object();
  for (size_t j = 0; j < schema.size(); ++j) features[schema.entry(j).id] = ValueToJson(example.features[j]);
  return Json{{"example_id", example.example_id},
              {"timestamp", example.timestamp},
              {"displayed", example.displayed},
              {"features", std::move(features)}};
}

Example ExampleFromJsonValue(const Json& j, const FeatureSchema& schema) {
  Example e;
  e.example_id = Get<std::string>(j, "example_id");
  e.timestamp = Get<int64_t>(j, "timestamp");
  e.displayed = Get<bool>(j, "displayed");
  if (!j.contains("features") || !j.at("features").is_object()) {
    throw DataError("example " + e.example_id + " has no features object");
  }
  const Json& features = j.at("features");
  if (features.size() != schema.size()) {
    throw DataError("example " + e.example_id + " has " + std::to_string(features.size()) +
                    " features, schema has " + std::to_string(schema.size()));
  }
  e.features.reserve(schema.size());
  for (const auto& spec : schema.entries()) {
    const auto it = features.find(spec.id);
    if (it == features.end()) throw DataError("example " + e.example_id + " is missing feature " + spec.id);
    e.features.push_back(ValueFromJson(*it));
  }
  ValidateExample(schema, e);
  return e;
}

Json LayerJson(const DenseLayer& layer) {
  return Json{{"in", layer.in}, {"out", layer.out}, {"weights", layer.weights}, {"bias", layer.bias}};
}

DenseLayer LayerFromJson(const Json& j) {
  return DenseLayer{Get<int64_t>(j, "in"), Get<int64_t>(j, "out"), Get<std::vector<double>>(j, "weights"),
                    Get<std::vector<double>>(j, "bias")};
}

Json ModelJson(const Model& model) {
  const ModelConfig& c = model.config();
  const ModelWeights& w = model.weights();
  Json config{{"embedding_dim", c.embedding_dim},
              {"dense_widths", c.dense_widths},
              {"top_widths", c.top_widths},
              {"hash_buckets", c.hash_buckets},
              {"layer_norm_enabled", c.layer_norm_enabled},
              {"weight_seed", c.weight_seed},
              {"pseudo_label_threshold", c.pseudo_label_threshold},
              {"importance_spread", c.importance_spread},
              {"output_bias", c.output_bias},
              {"output_scale", c.output_scale},
              {"schema", SchemaJson(c.schema)}};
  Json tower = Json::array();
  for (const auto& l : w.tower) tower.push_back(LayerJson(l));
  Json head = Json::array();
  for (const auto& l : w.head) head.push_back(LayerJson(l));
  Json weights{{"gains", w.gains}, {"tower", std::move(tower)}, {"tables", w.tables}, {"head", std::move(head)}};
  return Json{{"config", std::move(config)}, {"weights", std::move(weights)}};
}

}  // namespace

std::string FormatDouble(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteTextFile(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

std::string ContentHash(std::string_view bytes) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::string SchemaToJson(const FeatureSchema& schema) { return SchemaJson(schema).dump(); }

FeatureSchema SchemaFromJson(std::string_view json) { return SchemaFromJsonValue(ParseJson(json, "schema")); }

void WriteSchema(std::ostream& out, const FeatureSchema& schema) {
  out << kSchemaHeader << '\n' << SchemaJson(schema).dump(2) << '\n';
}

FeatureSchema ReadSchema(std::istream& in) {
  ExpectHeader(in, kSchemaHeader, "schema file");
  std::ostringstream rest;
  rest << in.rdbuf();
  return SchemaFromJson(rest.str());
}

std::string FeatureValueToJson(const FeatureValue& value) { return ValueToJson(value).dump(); }

FeatureValue FeatureValueFromJson(std::string_view json) {
  return ValueFromJson(ParseJson(json, "feature value"));
}

std::string ExampleToLine(const Example& example, const FeatureSchema& schema) {
  return ExampleJson(example, schema).dump();
}

Example ExampleFromLine(std::string_view line, const FeatureSchema& schema) {
  return ExampleFromJsonValue(ParseJson(line, "example record"), schema);
}

void WriteDataset(std::ostream& out, const Dataset& dataset) {
  const Json meta{{"label", std::string(WindowLabelName(dataset.label))},
                  {"window", Json::array({dataset.window.start, dataset.window.end})},
                  {"schema", SchemaJson(dataset.schema)}};
  out << kDatasetHeader << '\n' << meta.dump() << '\n';
  for (const auto& e : dataset.examples) out << ExampleToLine(e, dataset.schema) << '\n';
}

namespace {

struct DatasetMeta {
  FeatureSchema schema;
  WindowLabel label = WindowLabel::kControl;
  TimeWindow window;
};

// Metadata lines are JSON objects carrying a "schema" key; record lines never do.
std::optional<DatasetMeta> ParseMeta(const std::string& line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::exception&) {
    return std::nullopt;
  }
  if (!j.is_object() || !j.contains("schema")) return std::nullopt;
  DatasetMeta meta;
  meta.schema = SchemaFromJsonValue(j.at("schema"));
  if (j.contains("label")) meta.label = ParseWindowLabel(j.at("label").get<std::string>());
  if (j.contains("window")) {
    const auto& w = j.at("window");
    if (!w.is_array() || w.size() != 2) throw DataError("dataset window must be [start, end]");
    meta.window = TimeWindow{w[0].get<int64_t>(), w[1].get<int64_t>()};
  }
  return meta;
}

}  // namespace

Dataset ReadDataset(std::istream& in) {
  ExpectHeader(in, kDatasetHeader, "dataset file");
  const auto meta = ParseMeta(ReadLine(in, "dataset file"));
  if (!meta) throw DataError("dataset file: second line must be the metadata record");
  Dataset dataset;
  dataset.schema = meta->schema;
  dataset.label = meta->label;
  dataset.window = meta->window;
  std::string line;
  size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      dataset.examples.push_back(ExampleFromLine(line, dataset.schema));
    } catch (const DataError& e) {
      throw DataError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  ValidateDataset(dataset);
  return dataset;
}

DatasetStreamReader::DatasetStreamReader(std::istream& in, const FeatureSchema* schema) : in_(&in) {
  std::string line;
  if (!std::getline(*in_, line)) {
    if (schema == nullptr) throw DataError("empty input stream and no schema given");
    schema_ = *schema;
    return;
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetHeader) throw DataError("input stream: expected header '" + std::string(kDatasetHeader) + "'");
  std::string next;
  if (std::getline(*in_, next)) {
    if (!next.empty() && next.back() == '\r') next.pop_back();
    if (auto meta = ParseMeta(next)) {
      schema_ = meta->schema;
      if (schema != nullptr && !(*schema == schema_)) {
        throw DataError("input stream schema does not match the model schema");
      }
      return;
    }
    pending_ = std::move(next);
  }
  if (schema == nullptr) throw DataError("input stream has no metadata line and no schema was given");
  schema_ = *schema;
}

std::optional<Example> DatasetStreamReader::Next() {
  std::string line;
  while (true) {
    if (pending_) {
      line = std::move(*pending_);
      pending_.reset();
    } else if (!std::getline(*in_, line)) {
      return std::nullopt;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      return ExampleFromLine(line, schema_);
    } catch (const DataError& e) {
      ++malformed_;
      last_error_ = e.what();
    }
  }
}

void WriteModel(std::ostream& out, const Model& model) {
  out << kModelHeader << '\n' << ModelJson(model).dump() << '\n';
}

Model ReadModel(std::istream& in) {
  ExpectHeader(in, kModelHeader, "model checkpoint");
  std::ostringstream rest;
  rest << in.rdbuf();
  const Json j = ParseJson(rest.str(), "model checkpoint");
  try {
    const Json& c = j.at("config");
    ModelConfig config;
    config.schema = SchemaFromJsonValue(c.at("schema"));
    config.embedding_dim = Get<int64_t>(c, "embedding_dim");
    config.dense_widths = Get<std::vector<int64_t>>(c, "dense_widths");
    config.top_widths = Get<std::vector<int64_t>>(c, "top_widths");
    config.hash_buckets = Get<int64_t>(c, "hash_buckets");
    config.layer_norm_enabled = Get<bool>(c, "layer_norm_enabled");
    config.weight_seed = Get<uint64_t>(c, "weight_seed");
    config.pseudo_label_threshold = Get<double>(c, "pseudo_label_threshold");
    config.importance_spread = Get<double>(c, "importance_spread");
    config.output_bias = Get<double>(c, "output_bias");
    config.output_scale = Get<double>(c, "output_scale");

    const Json& w = j.at("weights");
    ModelWeights weights;
    weights.gains = Get<std::vector<double>>(w, "gains");
    weights.tables = Get<std::vector<std::vector<double>>>(w, "tables");
    for (const auto& l : w.at("tower")) weights.tower.push_back(LayerFromJson(l));
    for (const auto& l : w.at("head")) weights.head.push_back(LayerFromJson(l));
    return Model(std::move(config), std::move(weights));
  } catch (const Json::exception& e) {
    throw DataError(std::string("model checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("model checkpoint: ") + e.what());
  }
}

std::string CheckpointId(const Model& model) {
  std::ostringstream out;
  WriteModel(out, model);
  return ContentHash(out.str());
}

void WriteLfiMatrix(std::ostream& data, std::ostream& ids, const LfiMatrix& matrix) {
  data << kLfiHeader << " N=" << matrix.rows() << " M=" << matrix.cols() << " method=" << matrix.method.Name()
       << " tau=" << FormatDouble(matrix.method.threshold)
       << " checkpoint=" << (matrix.checkpoint_id.empty() ? "-" : matrix.checkpoint_id) << '\n';
  for (size_t i = 0; i < matrix.rows(); ++i) {
    const auto row = matrix.row(i);
    for (size_t j = 0; j < row.size(); ++j) {
      if (j > 0) data << '\t';
      data << FormatDouble(row[j]);
    }
    data << '\n';
  }
  ids << kLfiIdsHeader << '\n' << "rows " << matrix.row_ids.size() << '\n';
  for (const auto& id : matrix.row_ids) ids << id << '\n';
  ids << "columns " << matrix.column_ids.size() << '\n';
  for (const auto& id : matrix.column_ids) ids << id << '\n';
}

namespace {

double ParseDouble(std::string_view text) {
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw DataError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

size_t ParseCount(std::string_view text) {
  size_t value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw DataError("not a count: '" + std::string(text) + "'");
  }
  return value;
}

size_t ReadCountLine(std::istream& in, std::string_view key) {
  const std::string line = ReadLine(in, "LFI id sidecar");
  const std::string prefix = std::string(key) + " ";
  if (line.rfind(prefix, 0) != 0) throw DataError("LFI id sidecar: expected '" + prefix + "<count>'");
  return ParseCount(std::string_view(line).substr(prefix.size()));
}

}  // namespace

LfiMatrix ReadLfiMatrix(std::istream& data, std::istream& ids) {
  const std::string header = ReadLine(data, "LFI matrix");
  if (header.rfind(kLfiHeader, 0) != 0) throw DataError("LFI matrix: wrong header");
  std::istringstream fields(header.substr(kLfiHeader.size()));
  size_t n = 0;
  size_t m = 0;
  std::string method = "pseudo-loss";
  double tau = 0.5;
  std::string checkpoint;
  bool have_n = false;
  bool have_m = false;
  for (std::string field; fields >> field;) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw DataError("LFI matrix header field without '=': " + field);
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "N") {
      n = ParseCount(value);
      have_n = true;
    } else if (key == "M") {
      m = ParseCount(value);
      have_m = true;
    } else if (key == "method") {
      method = value;
    } else if (key == "tau") {
      tau = ParseDouble(value);
    } else if (key == "checkpoint") {
      checkpoint = value == "-" ? "" : value;
    }
  }
  if (!have_n || !have_m) throw DataError("LFI matrix header lacks N or M");

  std::vector<double> values;
  values.reserve(n * m);
  for (size_t i = 0; i < n; ++i) {
    const std::string line = ReadLine(data, "LFI matrix");
    size_t start = 0;
    size_t count = 0;
    while (true) {
      const size_t tab = line.find('\t', start);
      const std::string_view cell(line.data() + start, (tab == std::string::npos ? line.size() : tab) - start);
      values.push_back(ParseDouble(cell));
      ++count;
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (count != m) throw DataError("LFI matrix row " + std::to_string(i) + " has " + std::to_string(count) + " cells");
  }
  LfiMatrix matrix(n, m, std::move(values));
  try {
    matrix.method = LfiMethod::Parse(method, tau);
  } catch (const ConfigError& e) {
    throw DataError(std::string("LFI matrix: ") + e.what());
  }
  matrix.checkpoint_id = checkpoint;

  ExpectHeader(ids, kLfiIdsHeader, "LFI id sidecar");
  const size_t rows = ReadCountLine(ids, "rows");
  if (rows != n) throw DataError("LFI id sidecar row count does not match the matrix");
  for (size_t i = 0; i < rows; ++i) matrix.row_ids.push_back(ReadLine(ids, "LFI id sidecar"));
  const size_t cols = ReadCountLine(ids, "columns");
  if (cols != m) throw DataError("LFI id sidecar column count does not match the matrix");
  for (size_t j = 0; j < cols; ++j) matrix.column_ids.push_back(ReadLine(ids, "LFI id sidecar"));
  return matrix;
}

void WritePredictions(std::ostream& out, std::span<const Example> examples, std::span<const double> predictions) {
  if (examples.size() != predictions.size()) throw DataError("one prediction per example is required");
  out << kPredictionsHeader << '\n';
  for (size_t i = 0; i < examples.size(); ++i) {
    out << examples[i].example_id << '\t' << FormatDouble(predictions[i]) << '\n';
  }
}

std::vector<std::pair<std::string, double>> ReadPredictions(std::istream& in) {
  ExpectHeader(in, kPredictionsHeader, "predictions file");
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("predictions line without a tab: " + line);
    out.emplace_back(line.substr(0, tab), ParseDouble(std::string_view(line).substr(tab + 1)));
  }
  return out;
}

}  // namespace driftscope
