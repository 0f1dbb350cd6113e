#include "driftscope/config.h"

#include <set>

#include "driftscope/error.h"
#include "json.hpp"
#include "overloaded.h"

namespace driftscope {

using Json = nlohmann::ordered_json;

namespace {

// Reads fields out of one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw ConfigError(context_ + ": expected a JSON object");
  }

  template <class T>
  void Read(const char* key, T& field) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      field = j_.at(key).get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError(context_ + "." + key + ": " + e.what());
    }
  }

  const Json* Child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void Finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(context_ + ": unknown key '" + key + "'");
    }
  }

  const std::string& context() const { return context_; }

 private:
  const Json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

Json ParseConfig(std::string_view text, const char* what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

TimeWindow WindowFromJson(const Json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw ConfigError(context + ".window: expected [start, end]");
  }
  return TimeWindow{j[0].get<int64_t>(), j[1].get<int64_t>()};
}

void ReadModel(const Json& j, ModelConfig& m, const std::string& context) {
  ObjectReader r(j, context + ".model");
  r.Read("embedding_dim", m.embedding_dim);
  r.Read("dense_widths", m.dense_widths);
  r.Read("top_widths", m.top_widths);
  r.Read("hash_buckets", m.hash_buckets);
  r.Read("layer_norm_enabled", m.layer_norm_enabled);
  r.Read("weight_seed", m.weight_seed);
  r.Read("pseudo_label_threshold", m.pseudo_label_threshold);
  r.Read("importance_spread", m.importance_spread);
  r.Read("output_bias", m.output_bias);
  r.Read("output_scale", m.output_scale);
  r.Finish();
}

Json ModelJson(const ModelConfig& m) {
  return Json{{"embedding_dim", m.embedding_dim},
              {"dense_widths", m.dense_widths},
              {"top_widths", m.top_widths},
              {"hash_buckets", m.hash_buckets},
              {"layer_norm_enabled", m.layer_norm_enabled},
              {"weight_seed", m.weight_seed},
              {"pseudo_label_threshold", m.pseudo_label_threshold},
              {"importance_spread", m.importance_spread},
              {"output_bias", m.output_bias},
              {"output_scale", m.output_scale}};
}

LfiMethod ReadMethod(ObjectReader& r) {
  std::string name = "pseudo-loss";
  double tau = 0.5;
  r.Read("method", name);
  r.Read("tau", tau);
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError(r.context() + ".tau must be in (0, 1)");
  return LfiMethod::Parse(name, tau);
}

Json TransformJson(const CorruptionTransform& t) {
  return std::visit(Overloaded{
                        [](const IdentityTransform&) { return Json{{"type", "identity"}}; },
                        [](const LinearScale& x) { return Json{{"type", "linear_scale"}, {"factor", x.factor}}; },
                        [](const PowerTransform& x) { return Json{{"type", "power"}, {"exponent", x.exponent}}; },
                        [](const SetCategoricalConstant& x) {
                          return Json{{"type", "categorical_constant"}, {"category", x.category}};
                        },
                        [](const ReplaceWithBaseline&) { return Json{{"type", "baseline"}}; },
                        [](const DropRandomIds& x) {
                          return Json{{"type", "drop_random_ids"}, {"fraction", x.fraction}};
                        },
                        [](const DropRecentIds& x) {
                          return Json{{"type", "drop_recent_ids"}, {"fraction", x.fraction}};
                        },
                        [](const ZeroWeights&) { return Json{{"type", "zero_weights"}}; },
                        [](const EncodedIntDivide& x) {
                          return Json{{"type", "encoded_int_divide"}, {"divisor", x.divisor}};
                        },
                    },
                    t);
}

CorruptionTransform TransformFromJson(const Json& j, const std::string& context) {
  ObjectReader r(j, context + ".transform");
  std::string type;
  r.Read("type", type);
  CorruptionTransform out;
  if (type == "identity") {
    out = IdentityTransform{};
  } else if (type == "linear_scale") {
    LinearScale x;
    r.Read("factor", x.factor);
    out = x;
  } else if (type == "power") {
    PowerTransform x;
    r.Read("exponent", x.exponent);
    out = x;
  } else if (type == "categorical_constant") {
    SetCategoricalConstant x;
    r.Read("category", x.category);
    out = x;
  } else if (type == "baseline") {
    out = ReplaceWithBaseline{};
  } else if (type == "drop_random_ids") {
    DropRandomIds x;
    r.Read("fraction", x.fraction);
    out = x;
  } else if (type == "drop_recent_ids") {
    DropRecentIds x;
    r.Read("fraction", x.fraction);
    out = x;
  } else if (type == "zero_weights") {
    out = ZeroWeights{};
  } else if (type == "encoded_int_divide") {
    EncodedIntDivide x;
    r.Read("divisor", x.divisor);
    out = x;
  } else {
    throw ConfigError(context + ".transform: unknown type '" + type + "'");
  }
  r.Finish();
  return out;
}

Json TargetsJson(const TargetSelector& t) {
  return std::visit(Overloaded{
                        [](const ExplicitTargets& x) { return Json{{"explicit", x.features}}; },
                        [](const RandomTargets& x) {
                          return Json{{"random", Json{{"count", x.count}, {"kind", x.kind}}}};
                        },
                        [](const PriorGfiTargets& x) {
                          return Json{{"prior_gfi", Json{{"important", x.important}, {"unimportant", x.unimportant}}}};
                        },
                    },
                    t);
}

TargetSelector TargetsFromJson(const Json& j, const std::string& context) {
  if (!j.is_object() || j.size() != 1) throw ConfigError(context + ".targets: expected a one-key object");
  const auto first = j.begin();
  const std::string& key = first.key();
  const Json& body = first.value();
  if (key == "explicit") {
    try {
      return ExplicitTargets{body.get<std::vector<std::string>>()};
    } catch (const Json::exception& e) {
      throw ConfigError(context + ".targets.explicit: " + e.what());
    }
  }
  if (key == "random") {
    RandomTargets x;
    ObjectReader r(body, context + ".targets.random");
    r.Read("count", x.count);
    r.Read("kind", x.kind);
    r.Finish();
    return x;
  }
  if (key == "prior_gfi") {
    PriorGfiTargets x;
    ObjectReader r(body, context + ".targets.prior_gfi");
    r.Read("important", x.important);
    r.Read("unimportant", x.unimportant);
    r.Finish();
    return x;
  }
  throw ConfigError(context + ".targets: unknown selector '" + key + "'");
}

Json SpecJson(const CorruptionSpec& s) {
  return Json{{"case_id", s.case_id},
              {"description", s.description},
              {"targets", TargetsJson(s.targets)},
              {"transform", TransformJson(s.transform)},
              {"example_fraction", s.example_fraction},
              {"seed", s.seed}};
}

CorruptionSpec SpecFromJson(const Json& j, const std::string& context) {
  CorruptionSpec s;
  ObjectReader r(j, context);
  r.Read("case_id", s.case_id);
  r.Read("description", s.description);
  r.Read("example_fraction", s.example_fraction);
  r.Read("seed", s.seed);
  const Json* targets = r.Child("targets");
  if (targets == nullptr) throw ConfigError(context + ": missing 'targets'");
  s.targets = TargetsFromJson(*targets, context);
  const Json* transform = r.Child("transform");
  if (transform == nullptr) throw ConfigError(context + ": missing 'transform'");
  s.transform = TransformFromJson(*transform, context);
  r.Finish();
  if (!(s.example_fraction > 0.0 && s.example_fraction <= 1.0)) {
    throw ConfigError(context + ".example_fraction must be in (0, 1]");
  }
  return s;
}

}  // namespace

GenerateConfig GenerateConfigFromJson(std::string_view json) {
  const Json j = ParseConfig(json, "generate config");
  GenerateConfig c;
  ObjectReader r(j, "generate");
  r.Read("num_features", c.num_features);
  r.Read("schema_seed", c.schema_seed);
  std::string schema_path;
  r.Read("schema_path", schema_path);
  if (!schema_path.empty()) c.schema_path = schema_path;
  r.Read("num_examples", c.num_examples);
  r.Read("seed", c.seed);
  r.Read("display_fraction", c.display_fraction);
  r.Read("id_prefix", c.id_prefix);
  if (const Json* w = r.Child("window")) c.window = WindowFromJson(*w, "generate");
  std::string label = std::string(WindowLabelName(c.label));
  r.Read("label", label);
  try {
    c.label = ParseWindowLabel(label);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("generate.label: ") + e.what());
  }
  if (const Json* m = r.Child("model")) ReadModel(*m, c.model, "generate");
  r.Finish();
  if (c.num_examples == 0) throw ConfigError("generate.num_examples must be >= 1");
  if (!(c.display_fraction > 0.0 && c.display_fraction <= 1.0)) {
    throw ConfigError("generate.display_fraction must be in (0, 1]");
  }
  if (c.window.end < c.window.start) throw ConfigError("generate.window ends before it starts");
  return c;
}

std::string GenerateConfigToJson(const GenerateConfig& c) {
  Json j{{"num_features", c.num_features},
         {"schema_seed", c.schema_seed},
         {"schema_path", c.schema_path.value_or("")},
         {"num_examples", c.num_examples},
         {"seed", c.seed},
         {"display_fraction", c.display_fraction},
         {"id_prefix", c.id_prefix},
         {"window", Json::array({c.window.start, c.window.end})},
         {"label", std::string(WindowLabelName(c.label))},
         {"model", ModelJson(c.model)}};
  return j.dump(2);
}

BenchConfig BenchConfigFromJson(std::string_view json) {
  const Json j = ParseConfig(json, "bench config");
  BenchConfig c;
  ObjectReader r(j, "bench");
  r.Read("num_features", c.num_features);
  r.Read("schema_seed", c.schema_seed);
  r.Read("data_seed", c.data_seed);
  r.Read("pool_size", c.pool_size);
  r.Read("display_fraction", c.display_fraction);
  r.Read("sample_size", c.sample_size);
  r.Read("sample_seed", c.sample_seed);
  r.Read("k", c.k);
  r.Read("parallelism", c.parallelism);
  c.method = ReadMethod(r);
  if (const Json* w = r.Child("window")) c.window = WindowFromJson(*w, "bench");
  if (const Json* m = r.Child("model")) ReadModel(*m, c.model, "bench");
  uint64_t case_seed = 11;
  r.Read("case_seed", case_seed);
  c.cases = StandardCases(case_seed);
  if (const Json* cases = r.Child("cases")) {
    if (!cases->is_array()) throw ConfigError("bench.cases: expected an array");
    c.cases.clear();
    for (size_t i = 0; i < cases->size(); ++i) {
      c.cases.push_back(SpecFromJson((*cases)[i], "bench.cases[" + std::to_string(i) + "]"));
    }
  }
  r.Finish();
  if (c.k == 0) throw ConfigError("bench.k must be >= 1");
  if (c.sample_size == 0 || c.pool_size == 0) throw ConfigError("bench sizes must be >= 1");
  if (c.parallelism == 0) throw ConfigError("bench.parallelism must be >= 1");
  return c;
}

std::string BenchConfigToJson(const BenchConfig& c) {
  Json cases = Json::array();
  for (const auto& s : c.cases) cases.push_back(SpecJson(s));
  Json j{{"num_features", c.num_features},
         {"schema_seed", c.schema_seed},
         {"data_seed", c.data_seed},
         {"pool_size", c.pool_size},
         {"display_fraction", c.display_fraction},
         {"window", Json::array({c.window.start, c.window.end})},
         {"sample_size", c.sample_size},
         {"sample_seed", c.sample_seed},
         {"k", c.k},
         {"method", c.method.Name()},
         {"tau", c.method.threshold},
         {"parallelism", c.parallelism},
         {"model", ModelJson(c.model)},
         {"cases", std::move(cases)}};
  return j.dump(2);
}

CorruptionSpec CorruptionSpecFromJson(std::string_view json) {
  return SpecFromJson(ParseConfig(json, "corruption spec"), "case");
}

std::string CorruptionSpecToJson(const CorruptionSpec& spec) { return SpecJson(spec).dump(2); }

WindowConfig WindowConfigFromJson(std::string_view json) {
  const Json j = ParseConfig(json, "window config");
  WindowConfig c;
  ObjectReader r(j, "window");
  r.Read("window_size", c.window_size);
  r.Read("step_size", c.step_size);
  r.Read("lag", c.lag);
  r.Read("min_abs_shift", c.min_abs_shift);
  r.Read("min_rel_shift", c.min_rel_shift);
  r.Read("parallelism", c.parallelism);
  c.method = ReadMethod(r);
  r.Finish();
  ValidateWindowConfig(c);
  return c;
}

std::string WindowConfigToJson(const WindowConfig& c) {
  Json j{{"window_size", c.window_size},
         {"step_size", c.step_size},
         {"lag", c.lag},
         {"min_abs_shift", c.min_abs_shift},
         {"min_rel_shift", c.min_rel_shift},
         {"method", c.method.Name()},
         {"tau", c.method.threshold},
         {"parallelism", c.parallelism}};
  return j.dump(2);
}

}  // namespace driftscope
