// driftscope: root-cause prediction anomalies from feature importance shifts.
//
// Exit codes: 0 success, 1 usage or config error, 2 data error, 3 the
// benchmark ordering property failed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "driftscope/aggregation.h"
#include "driftscope/attribution.h"
#include "driftscope/config.h"
#include "driftscope/corruption.h"
#include "driftscope/error.h"
#include "driftscope/feature_space.h"
#include "driftscope/io.h"
#include "driftscope/mfc.h"
#include "driftscope/model.h"
#include "driftscope/monitor.h"
#include "driftscope/report.h"
#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace driftscope {
namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kPropertyFailure = 3;

// Written next to every output so a run can be repeated from it alone.
struct RunManifest {
  std::string subcommand;
  std::string config_path;
  Json seeds = Json::object();
  Json inputs = Json::object();
  Json outputs = Json::object();
  Json parameters = Json::object();

  void AddInput(const std::string& name, const std::string& path) {
    if (path == "-") {
      inputs[name] = Json{{"path", "-"}};
      return;
    }
    inputs[name] = Json{{"path", path}, {"fnv1a64", ContentHash(ReadTextFile(path))}};
  }

  void Write(const fs::path& path) const {
    const Json j{{"tool", "driftscope"},   {"version", kVersion}, {"subcommand", subcommand},
                 {"config", config_path},  {"seeds", seeds},      {"inputs", inputs},
                 {"outputs", outputs},     {"parameters", parameters}};
    WriteTextFile(path, j.dump(2) + "\n");
  }
};

std::ifstream OpenIn(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream OpenOut(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void CloseOut(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw DataError("failed writing " + path.string());
}

Model LoadModel(const std::string& path) {
  auto in = OpenIn(path);
  return ReadModel(in);
}

Dataset LoadDataset(const std::string& path) {
  auto in = OpenIn(path);
  return ReadDataset(in);
}

LfiMatrix LoadLfi(const std::string& path) {
  auto data = OpenIn(path);
  auto ids = OpenIn(path + ".ids");
  return ReadLfiMatrix(data, ids);
}

std::string ReadConfigFile(const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw ConfigError("config file not found: " + path);
  return ReadTextFile(path);
}

// Predictions in dataset order, matched by example id.
std::vector<double> AlignPredictions(const Dataset& data, const std::string& path) {
  auto in = OpenIn(path);
  std::map<std::string, double> by_id;
  for (auto& [id, p] : ReadPredictions(in)) by_id[id] = p;
  std::vector<double> out;
  out.reserve(data.examples.size());
  for (const auto& e : data.examples) {
    const auto it = by_id.find(e.example_id);
    if (it == by_id.end()) throw DataError("no logged prediction for example " + e.example_id + " in " + path);
    out.push_back(it->second);
  }
  return out;
}

void EmitReport(const RankedReport& report, const std::string& out, const std::string& jsonl_out,
                RunManifest& manifest) {
  const std::string text = RankedReportToText(report);
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    WriteTextFile(out, text);
    manifest.outputs["report"] = out;
  }
  if (!jsonl_out.empty()) {
    WriteTextFile(jsonl_out, RankedReportToJsonl(report));
    manifest.outputs["report_jsonl"] = jsonl_out;
  }
  const std::string anchor = !out.empty() && out != "-" ? out : jsonl_out;
  if (!anchor.empty()) manifest.Write(anchor + ".manifest.json");
}

// "1,3,5-7" -> {1,3,5,6,7}.
std::vector<int> ParseCaseList(const std::string& text) {
  std::vector<int> ids;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    try {
      const auto dash = part.find('-');
      if (dash == std::string::npos) {
        ids.push_back(std::stoi(part));
      } else {
        const int lo = std::stoi(part.substr(0, dash));
        const int hi = std::stoi(part.substr(dash + 1));
        if (hi < lo) throw ConfigError("empty case range " + part);
        for (int c = lo; c <= hi; ++c) ids.push_back(c);
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad case list entry '" + part + "'");
    }
  }
  if (ids.empty()) throw ConfigError("empty case list");
  return ids;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<size_t> num_examples;
  std::string label;
  std::string out;
};

int RunGenerate(const GenerateArgs& args) {
  GenerateConfig config;
  if (!args.config.empty()) config = GenerateConfigFromJson(ReadConfigFile(args.config));
  if (args.seed) config.seed = *args.seed;
  if (args.num_examples) config.num_examples = *args.num_examples;
  if (!args.label.empty()) config.label = ParseWindowLabel(args.label);

  FeatureSchema schema;
  if (config.schema_path) {
    auto in = OpenIn(*config.schema_path);
    schema = ReadSchema(in);
  } else {
    schema = StandardSchema(config.num_features, config.schema_seed);
  }
  ModelConfig model_config = config.model;
  model_config.schema = schema;
  const Model model = Model::Create(model_config);

  GeneratorConfig gen;
  gen.schema = schema;
  gen.num_examples = config.num_examples;
  gen.seed = config.seed;
  gen.display_fraction = config.display_fraction;
  gen.id_prefix = config.id_prefix;
  Dataset data = GenerateDataset(gen, config.window, [&](const Example& e) { return model.Predict(e); });
  data.label = config.label;

  const fs::path dir(args.out);
  fs::create_directories(dir);
  {
    auto out = OpenOut(dir / "schema.txt");
    WriteSchema(out, schema);
    CloseOut(out, dir / "schema.txt");
  }
  {
    auto out = OpenOut(dir / "dataset.jsonl");
    WriteDataset(out, data);
    CloseOut(out, dir / "dataset.jsonl");
  }
  {
    auto out = OpenOut(dir / "model.txt");
    WriteModel(out, model);
    CloseOut(out, dir / "model.txt");
  }

  RunManifest manifest;
  manifest.subcommand = "generate";
  manifest.config_path = args.config;
  if (config.schema_path) manifest.AddInput("schema", *config.schema_path);
  manifest.seeds = Json{{"data", config.seed}, {"schema", config.schema_seed}, {"weights", config.model.weight_seed}};
  manifest.outputs = Json{{"schema", (dir / "schema.txt").string()},
                          {"dataset", (dir / "dataset.jsonl").string()},
                          {"model", (dir / "model.txt").string()}};
  manifest.parameters = Json::parse(GenerateConfigToJson(config));
  manifest.parameters["checkpoint_id"] = CheckpointId(model);
  manifest.Write(dir / "manifest.json");
  std::cerr << "generated " << data.examples.size() << " examples (" << schema.size() << " features) in "
            << dir.string() << "\n";
  return 0;
}

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out;
};

int RunPredict(const PredictArgs& args) {
  const Model model = LoadModel(args.model);
  const Dataset data = LoadDataset(args.data);
  if (!(data.schema == model.schema())) throw DataError("dataset schema does not match the model");
  const auto predictions = model.PredictBatch(data.examples);
  auto out = OpenOut(args.out);
  WritePredictions(out, data.examples, predictions);
  CloseOut(out, args.out);

  RunManifest manifest;
  manifest.subcommand = "predict";
  manifest.AddInput("model", args.model);
  manifest.AddInput("data", args.data);
  manifest.outputs["predictions"] = args.out;
  manifest.Write(args.out + ".manifest.json");
  return 0;
}

struct AttributeArgs {
  std::string model;
  std::string data;
  std::string method = "pseudo-loss";
  double tau = 0.5;
  size_t parallelism = 1;
  std::string out;
};

int RunAttribute(const AttributeArgs& args) {
  const LfiMethod method = LfiMethod::Parse(args.method, args.tau);
  if (args.parallelism < 1) throw ConfigError("--parallelism must be >= 1");
  const Model model = LoadModel(args.model);
  const Dataset data = LoadDataset(args.data);

  AttributionOptions options;
  options.parallelism = args.parallelism;
  AttributionStats stats;
  LfiMatrix lfi = ComputeLfiMatrix(model, data, method, options, &stats);
  lfi.checkpoint_id = CheckpointId(model);

  const std::string ids_path = args.out + ".ids";
  auto out = OpenOut(args.out);
  auto ids = OpenOut(ids_path);
  WriteLfiMatrix(out, ids, lfi);
  CloseOut(out, args.out);
  CloseOut(ids, ids_path);

  RunManifest manifest;
  manifest.subcommand = "attribute";
  manifest.AddInput("model", args.model);
  manifest.AddInput("data", args.data);
  manifest.outputs = Json{{"lfi", args.out}, {"ids", ids_path}};
  // Parallelism is left out on purpose: outputs do not depend on it.
  manifest.parameters = Json{{"method", method.Name()},
                             {"tau", method.threshold},
                             {"checkpoint_id", lfi.checkpoint_id},
                             {"rows", lfi.rows()},
                             {"cols", lfi.cols()},
                             {"forward_passes", stats.forward_passes}};
  manifest.Write(args.out + ".manifest.json");
  std::cerr << "attributed " << lfi.rows() << " x " << lfi.cols() << " cells with " << stats.forward_passes
            << " forward passes\n";
  return 0;
}

struct RankArgs {
  std::string control_lfi;
  std::string anomaly_lfi;
  size_t k = kDefaultTopK;
  std::string out;
  std::string jsonl_out;
};

int RunRank(const RankArgs& args) {
  const LfiMatrix control = LoadLfi(args.control_lfi);
  const LfiMatrix anomaly = LoadLfi(args.anomaly_lfi);
  if (control.column_ids != anomaly.column_ids) {
    throw DataError("control and anomaly matrices cover different features");
  }
  if (!(control.method == anomaly.method)) throw DataError("control and anomaly matrices use different methods");
  if (control.checkpoint_id != anomaly.checkpoint_id) {
    throw DataError("control and anomaly matrices come from different checkpoints");
  }
  RankedReport report = RankFeatures(ComputeGfi(control, "control"), ComputeGfi(anomaly, "anomaly"), args.k);
  report.meta.method = "gfi:" + control.method.Name();
  report.meta.checkpoint_id = control.checkpoint_id;

  RunManifest manifest;
  manifest.subcommand = "rank";
  manifest.AddInput("control_lfi", args.control_lfi);
  manifest.AddInput("anomaly_lfi", args.anomaly_lfi);
  manifest.parameters = Json{{"k", args.k}, {"method", report.meta.method}};
  EmitReport(report, args.out, args.jsonl_out, manifest);
  return 0;
}

struct MfcArgs {
  std::string control_data;
  std::string anomaly_data;
  std::string control_preds;
  std::string anomaly_preds;
  size_t k = kDefaultTopK;
  std::string out;
  std::string jsonl_out;
};

int RunMfc(const MfcArgs& args) {
  const Dataset control = LoadDataset(args.control_data);
  const Dataset anomaly = LoadDataset(args.anomaly_data);
  const auto control_preds = AlignPredictions(control, args.control_preds);
  const auto anomaly_preds = AlignPredictions(anomaly, args.anomaly_preds);
  const RankedReport report = MfcRank(control, control_preds, anomaly, anomaly_preds, args.k);

  RunManifest manifest;
  manifest.subcommand = "mfc";
  manifest.AddInput("control_data", args.control_data);
  manifest.AddInput("anomaly_data", args.anomaly_data);
  manifest.AddInput("control_preds", args.control_preds);
  manifest.AddInput("anomaly_preds", args.anomaly_preds);
  manifest.parameters = Json{{"k", args.k}, {"method", "mfc"}};
  EmitReport(report, args.out, args.jsonl_out, manifest);
  return 0;
}

struct BenchArgs {
  std::string config;
  std::string cases;
  std::string out_dir;
  std::optional<size_t> parallelism;
};

int RunBench(const BenchArgs& args) {
  BenchConfig config;
  if (!args.config.empty()) config = BenchConfigFromJson(ReadConfigFile(args.config));
  if (args.parallelism) config.parallelism = *args.parallelism;
  if (config.parallelism < 1) throw ConfigError("--parallelism must be >= 1");

  std::vector<CorruptionSpec> selected;
  if (args.cases.empty()) {
    selected = config.cases;
  } else {
    for (int id : ParseCaseList(args.cases)) {
      const auto it = std::find_if(config.cases.begin(), config.cases.end(),
                                   [&](const CorruptionSpec& s) { return s.case_id == id; });
      if (it == config.cases.end()) throw ConfigError("no case " + std::to_string(id) + " in the configuration");
      selected.push_back(*it);
    }
  }

  const BenchContext context(config);
  std::vector<CaseResult> results;
  std::vector<std::string> failures;
  for (const auto& spec : selected) {
    try {
      results.push_back(context.RunCase(spec));
      const auto& r = results.back();
      std::cerr << "case " << r.case_id << ": gfi " << r.gfi_hits << "/" << r.corrupted_features.size()
                << ", mfc " << (r.mfc_hits ? std::to_string(*r.mfc_hits) : std::string("N/A")) << "\n";
    } catch (const std::exception& e) {
      failures.push_back(e.what());
      std::cerr << "error: " << e.what() << "\n";
    }
  }

  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  const std::string text = BenchmarkReportToText(results);
  WriteTextFile(dir / "report.txt", text);
  WriteTextFile(dir / "report.json", BenchmarkReportToJson(results));
  std::cout << text;

  RunManifest manifest;
  manifest.subcommand = "bench";
  manifest.config_path = args.config;
  manifest.seeds = Json{{"schema", config.schema_seed},
                        {"weights", config.model.weight_seed},
                        {"data", config.data_seed},
                        {"sample", config.sample_seed}};
  manifest.outputs = Json{{"report_text", (dir / "report.txt").string()}, {"report_json", (dir / "report.json").string()}};
  manifest.parameters = Json::parse(BenchConfigToJson(config));
  manifest.parameters.erase("parallelism");
  manifest.parameters["selected_cases"] = Json::array();
  for (const auto& s : selected) manifest.parameters["selected_cases"].push_back(s.case_id);
  manifest.parameters["checkpoint_id"] = context.checkpoint_id();
  manifest.Write(dir / "manifest.json");

  if (!failures.empty()) return 2;
  if (results.empty()) return 0;
  const RecallSummary summary = ComputeRecall(results);
  if (summary.mfc && (summary.gfi.overall < summary.mfc->overall || summary.gfi.at_least_one < summary.mfc->at_least_one)) {
    std::cerr << "ordering property failed: GFI recall is below MFC recall\n";
    return kPropertyFailure;
  }
  return 0;
}

struct MonitorArgs {
  std::string model;
  std::string input = "-";
  std::string window_config;
  std::string out = "-";
  std::optional<size_t> parallelism;
};

int RunMonitor(const MonitorArgs& args) {
  WindowConfig config;
  if (!args.window_config.empty()) config = WindowConfigFromJson(ReadConfigFile(args.window_config));
  if (args.parallelism) config.parallelism = *args.parallelism;
  ValidateWindowConfig(config);
  const Model model = LoadModel(args.model);

  std::ifstream file;
  std::istream* in = &std::cin;
  if (args.input != "-") {
    file = OpenIn(args.input);
    in = &file;
  }
  std::ofstream out_file;
  std::ostream* out = &std::cout;
  if (args.out != "-") {
    out_file = OpenOut(args.out);
    out = &out_file;
  }

  DatasetStreamReader reader(*in, &model.schema());
  Monitor monitor(model, config);
  std::vector<Example> batch;
  batch.reserve(config.step_size);
  size_t examples = 0;
  size_t alerts = 0;
  while (auto example = reader.Next()) {
    ++examples;
    batch.push_back(std::move(*example));
    if (batch.size() < config.step_size) continue;
    for (const auto& a : monitor.Step(batch)) {
      ++alerts;
      *out << Json{{"step", a.step},
                   {"feature_id", a.feature_id},
                   {"gfi_control", a.gfi_control},
                   {"gfi_current", a.gfi_current},
                   {"shift", a.shift}}
                  .dump()
           << std::endl;
    }
    batch.clear();
  }
  if (out_file.is_open()) CloseOut(out_file, args.out);

  std::cerr << "steps=" << monitor.steps() << " examples=" << examples << " alerts=" << alerts
            << " malformed_lines=" << reader.malformed_lines() << " unprocessed_tail=" << batch.size() << "\n";
  if (reader.malformed_lines() > 0) std::cerr << "last malformed line: " << reader.last_error() << "\n";

  if (args.out != "-") {
    RunManifest manifest;
    manifest.subcommand = "monitor";
    manifest.config_path = args.window_config;
    manifest.AddInput("model", args.model);
    manifest.AddInput("input", args.input);
    manifest.outputs["alerts"] = args.out;
    manifest.parameters = Json::parse(WindowConfigToJson(config));
    manifest.parameters.erase("parallelism");
    manifest.parameters["steps"] = monitor.steps();
    manifest.parameters["malformed_lines"] = reader.malformed_lines();
    manifest.Write(args.out + ".manifest.json");
  }
  return 0;
}

struct CorruptArgs {
  std::string data;
  std::string spec;
  std::optional<int> standard_case;
  uint64_t case_seed = 11;
  std::string control_lfi;
  std::string out;
};

int RunCorrupt(const CorruptArgs& args) {
  if (args.spec.empty() == !args.standard_case) throw ConfigError("give exactly one of --spec and --case");
  CorruptionSpec spec;
  if (args.standard_case) {
    const auto cases = StandardCases(args.case_seed);
    const auto it = std::find_if(cases.begin(), cases.end(),
                                 [&](const CorruptionSpec& s) { return s.case_id == *args.standard_case; });
    if (it == cases.end()) throw ConfigError("no standard case " + std::to_string(*args.standard_case));
    spec = *it;
  } else {
    spec = CorruptionSpecFromJson(ReadConfigFile(args.spec));
  }
  const Dataset data = LoadDataset(args.data);
  std::optional<GfiVector> prior;
  if (!args.control_lfi.empty()) prior = ComputeGfi(LoadLfi(args.control_lfi), "control");
  const auto targets = ResolveTargets(spec, data.schema, prior ? &*prior : nullptr);
  const Dataset corrupted = ApplyCorruption(data, spec, targets);
  auto out = OpenOut(args.out);
  WriteDataset(out, corrupted);
  CloseOut(out, args.out);

  RunManifest manifest;
  manifest.subcommand = "corrupt";
  manifest.config_path = args.spec;
  manifest.AddInput("data", args.data);
  if (!args.control_lfi.empty()) manifest.AddInput("control_lfi", args.control_lfi);
  manifest.seeds = Json{{"case", spec.seed}};
  manifest.outputs["dataset"] = args.out;
  manifest.parameters = Json::parse(CorruptionSpecToJson(spec));
  manifest.parameters["resolved_targets"] = targets;
  manifest.Write(args.out + ".manifest.json");
  std::cerr << "case " << spec.case_id << " corrupted:";
  for (const auto& t : targets) std::cerr << " " << t;
  std::cerr << "\n";
  return 0;
}

struct SliceArgs {
  std::string data;
  int64_t anomaly_start = 0;
  int64_t anomaly_end = 0;
  std::string policy = "same-hour-previous-day";
  std::string out_dir;
};

int RunSlice(const SliceArgs& args) {
  const ControlWindowPolicy policy = ParseControlWindowPolicy(args.policy);
  const TimeWindow anomaly_window{args.anomaly_start, args.anomaly_end};
  const TimeWindow control_window = SelectControlWindow(anomaly_window, policy);
  const Dataset data = LoadDataset(args.data);
  const Dataset control = SliceWindow(data, control_window, WindowLabel::kControl);
  const Dataset anomaly = SliceWindow(data, anomaly_window, WindowLabel::kAnomaly);
  if (control.examples.empty()) throw DataError("no examples in the control window");
  if (anomaly.examples.empty()) throw DataError("no examples in the anomaly window");

  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  for (const auto* d : {&control, &anomaly}) {
    const fs::path path = dir / (std::string(WindowLabelName(d->label)) + ".jsonl");
    auto out = OpenOut(path);
    WriteDataset(out, *d);
    CloseOut(out, path);
  }
  RunManifest manifest;
  manifest.subcommand = "slice";
  manifest.AddInput("data", args.data);
  manifest.outputs = Json{{"control", (dir / "control.jsonl").string()}, {"anomaly", (dir / "anomaly.jsonl").string()}};
  manifest.parameters = Json{{"policy", std::string(ControlWindowPolicyName(policy))},
                             {"control_window", Json::array({control_window.start, control_window.end})},
                             {"anomaly_window", Json::array({anomaly_window.start, anomaly_window.end})}};
  manifest.Write(dir / "manifest.json");
  std::cerr << "control " << control.examples.size() << " examples, anomaly " << anomaly.examples.size()
            << " examples\n";
  return 0;
}

template <class Fn>
int Guard(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace
}  // namespace driftscope

int main(int argc, char** argv) {
  using namespace driftscope;
  CLI::App app{"Root-cause prediction anomalies by ranking features on the shift of their global importance."};
  app.set_version_flag("--version", kVersion);
  app.set_config("--options", "", "INI/TOML file with flag values; command-line flags win");
  app.require_subcommand(1);

  const char* parallelism_env = "DRIFTSCOPE_PARALLELISM";
  int code = 0;

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate a seeded schema, dataset and model checkpoint");
  generate->add_option("--config", gen.config, "Generator config (JSON)");
  generate->add_option("--seed", gen.seed, "Data seed (overrides config)");
  generate->add_option("--num-examples", gen.num_examples, "Number of examples (overrides config)");
  generate->add_option("--label", gen.label, "control or anomaly (overrides config)");
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->callback([&] { code = Guard([&] { return RunGenerate(gen); }); });

  PredictArgs pred;
  auto* predict = app.add_subcommand("predict", "Log model predictions for a dataset");
  predict->add_option("--model", pred.model, "Model checkpoint")->required();
  predict->add_option("--data", pred.data, "Dataset")->required();
  predict->add_option("--out", pred.out, "Predictions file")->required();
  predict->callback([&] { code = Guard([&] { return RunPredict(pred); }); });

  AttributeArgs attr;
  auto* attribute = app.add_subcommand("attribute", "Compute the local feature importance matrix");
  attribute->add_option("--model", attr.model, "Model checkpoint")->required();
  attribute->add_option("--data", attr.data, "Dataset")->required();
  attribute->add_option("--method", attr.method, "pseudo-loss or prediction-ratio")
      ->check(CLI::IsMember({"pseudo-loss", "prediction-ratio"}))
      ->capture_default_str();
  attribute->add_option("--tau", attr.tau, "Pseudo-label threshold")->capture_default_str();
  attribute->add_option("--parallelism", attr.parallelism, "Worker threads")
      ->envname(parallelism_env)
      ->capture_default_str();
  attribute->add_option("--out", attr.out, "LFI matrix file; ids go to <out>.ids")->required();
  attribute->callback([&] { code = Guard([&] { return RunAttribute(attr); }); });

  RankArgs rank_args;
  auto* rank = app.add_subcommand("rank", "Rank features by the shift of their global importance");
  rank->add_option("--control-lfi", rank_args.control_lfi, "Control LFI matrix")->required();
  rank->add_option("--anomaly-lfi", rank_args.anomaly_lfi, "Anomaly LFI matrix")->required();
  rank->add_option("--k", rank_args.k, "Top-K cutoff")->capture_default_str();
  rank->add_option("--out", rank_args.out, "Text report (default: stdout)");
  rank->add_option("--jsonl-out", rank_args.jsonl_out, "Line-delimited report");
  rank->callback([&] { code = Guard([&] { return RunRank(rank_args); }); });

  MfcArgs mfc_args;
  auto* mfc = app.add_subcommand("mfc", "Rank features by model-feature correlation shift (no model needed)");
  mfc->add_option("--control-data", mfc_args.control_data, "Control dataset")->required();
  mfc->add_option("--anomaly-data", mfc_args.anomaly_data, "Anomaly dataset")->required();
  mfc->add_option("--control-preds", mfc_args.control_preds, "Logged control predictions")->required();
  mfc->add_option("--anomaly-preds", mfc_args.anomaly_preds, "Logged anomaly predictions")->required();
  mfc->add_option("--k", mfc_args.k, "Top-K cutoff")->capture_default_str();
  mfc->add_option("--out", mfc_args.out, "Text report (default: stdout)");
  mfc->add_option("--jsonl-out", mfc_args.jsonl_out, "Line-delimited report");
  mfc->callback([&] { code = Guard([&] { return RunMfc(mfc_args); }); });

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Run the corruption benchmark");
  bench->add_option("--config", bench_args.config, "Benchmark config (JSON)");
  bench->add_option("--cases", bench_args.cases, "Case ids, e.g. 1,3,5-7 (default: all)");
  bench->add_option("--out-dir", bench_args.out_dir, "Report directory")->required();
  bench->add_option("--parallelism", bench_args.parallelism, "Worker threads")->envname(parallelism_env);
  bench->callback([&] { code = Guard([&] { return RunBench(bench_args); }); });

  MonitorArgs mon;
  auto* monitor = app.add_subcommand("monitor", "Sliding-window GFI shift alerts over a dataset stream");
  monitor->add_option("--model", mon.model, "Model checkpoint")->required();
  monitor->add_option("--input", mon.input, "Dataset stream file, or - for stdin")->capture_default_str();
  monitor->add_option("--window-config", mon.window_config, "Window config (JSON)");
  monitor->add_option("--out", mon.out, "Alert file, or - for stdout")->capture_default_str();
  monitor->add_option("--parallelism", mon.parallelism, "Worker threads")->envname(parallelism_env);
  monitor->callback([&] { code = Guard([&] { return RunMonitor(mon); }); });

  CorruptArgs cor;
  auto* corrupt = app.add_subcommand("corrupt", "Apply a corruption case to a dataset");
  corrupt->add_option("--data", cor.data, "Dataset")->required();
  corrupt->add_option("--spec", cor.spec, "Corruption spec (JSON)");
  corrupt->add_option("--case", cor.standard_case, "Standard case id 1..11");
  corrupt->add_option("--case-seed", cor.case_seed, "Seed of the standard cases")->capture_default_str();
  corrupt->add_option("--control-lfi", cor.control_lfi, "Control LFI matrix, for prior-GFI targets");
  corrupt->add_option("--out", cor.out, "Corrupted dataset")->required();
  corrupt->callback([&] { code = Guard([&] { return RunCorrupt(cor); }); });

  SliceArgs sl;
  auto* slice = app.add_subcommand("slice", "Split a timestamped dataset into control and anomaly windows");
  slice->add_option("--data", sl.data, "Dataset")->required();
  slice->add_option("--anomaly-start", sl.anomaly_start, "Anomaly window start (unix seconds)")->required();
  slice->add_option("--anomaly-end", sl.anomaly_end, "Anomaly window end (inclusive)")->required();
  slice->add_option("--policy", sl.policy, "previous-hour or same-hour-previous-day")
      ->check(CLI::IsMember({"previous-hour", "same-hour-previous-day"}))
      ->capture_default_str();
  slice->add_option("--out-dir", sl.out_dir, "Output directory")->required();
  slice->callback([&] { code = Guard([&] { return RunSlice(sl); }); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : 1;
  }
  return code;
}
