#pragma once

// JSON configuration documents for the generator, benchmark, corruption
// cases and monitor. Every key is optional and falls back to the struct
// default; unknown keys and wrongly typed values throw ConfigError.
//
// Model settings appear as a nested "model" object:
//   {"embedding_dim", "dense_widths", "top_widths", "hash_buckets",
//    "layer_norm_enabled", "weight_seed", "pseudo_label_threshold",
//    "importance_spread", "output_bias", "output_scale"}
//
// A corruption case:
//   {"case_id": 1, "description": "...", "example_fraction": 1.0, "seed": 5,
//    "targets": {"explicit": ["num_00"]} | {"random": {"count": 1, "kind": "numeric"}}
//             | {"prior_gfi": {"important": 2, "unimportant": 2}},
//    "transform": {"type": "linear_scale", "factor": 2.0}}
// Transform types: identity, linear_scale{factor}, power{exponent},
// categorical_constant{category}, baseline, drop_random_ids{fraction},
// drop_recent_ids{fraction}, zero_weights, encoded_int_divide{divisor}.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "driftscope/corruption.h"
#include "driftscope/feature_space.h"
#include "driftscope/model.h"
#include "driftscope/monitor.h"

namespace driftscope {

// Inputs of `driftscope generate`.
struct GenerateConfig {
  size_t num_features = 60;
  uint64_t schema_seed = 2024;
  // Replaces the standard schema when set.
  std::optional<std::string> schema_path;
  size_t num_examples = 10000;
  uint64_t seed = 7;
  double display_fraction = 0.2;
  TimeWindow window{1'700'000'000, 1'700'003'600};
  WindowLabel label = WindowLabel::kControl;
  std::string id_prefix = "ex";
  // The schema field is ignored; the generated schema is used.
  ModelConfig model;

  bool operator==(const GenerateConfig&) const = default;
};

GenerateConfig GenerateConfigFromJson(std::string_view json);
std::string GenerateConfigToJson(const GenerateConfig& config);

// "cases" replaces the standard suite when present.
BenchConfig BenchConfigFromJson(std::string_view json);
std::string BenchConfigToJson(const BenchConfig& config);

CorruptionSpec CorruptionSpecFromJson(std::string_view json);
std::string CorruptionSpecToJson(const CorruptionSpec& spec);

// Accepts "method" and "tau" for the attribution settings.
WindowConfig WindowConfigFromJson(std::string_view json);
std::string WindowConfigToJson(const WindowConfig& config);

}  // namespace driftscope
