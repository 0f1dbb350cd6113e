#include <benchmark/benchmark.h>

#include <numeric>

#include "driftscope/aggregation.h"
#include "driftscope/attribution.h"
#include "driftscope/mfc.h"
#include "driftscope/model.h"

namespace driftscope {
namespace {

struct Setup {
  Model model;
  Dataset data;
};

const Setup& Standard(bool layer_norm = false) {
  static auto make = [](bool ln) {
    ModelConfig config;
    config.schema = StandardSchema(60, 2024);
    config.layer_norm_enabled = ln;
    Model model = Model::Create(config);
    GeneratorConfig gen;
    gen.schema = config.schema;
    gen.num_examples = 2000;
    gen.seed = 7;
    Dataset data = GenerateDataset(gen, {0, 3600}, [&](const Example& e) { return model.Predict(e); });
    return Setup{std::move(model), std::move(data)};
  };
  static const Setup plain = make(false);
  static const Setup normed = make(true);
  return layer_norm ? normed : plain;
}

void BM_Predict(benchmark::State& state) {
  const Setup& s = Standard(state.range(0) != 0);
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.model.Predict(s.data.examples[i++ % s.data.examples.size()]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Predict)->Arg(0)->Arg(1);

// All ablations of one example, one PredictReplacing call per column.
void BM_AblationsOneByOne(benchmark::State& state) {
  const Setup& s = Standard();
  const auto& schema = s.model.schema();
  size_t i = 0;
  for (auto _ : state) {
    const Example& e = s.data.examples[i++ % s.data.examples.size()];
    for (size_t j = 0; j < schema.size(); ++j) {
      benchmark::DoNotOptimize(s.model.PredictReplacing(e, j, schema.baseline(j)));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(schema.size()));
}
BENCHMARK(BM_AblationsOneByOne);

// The same ablations through the batched call.
void BM_AblationsBatched(benchmark::State& state) {
  const Setup& s = Standard();
  std::vector<size_t> columns(s.model.schema().size());
  std::iota(columns.begin(), columns.end(), size_t{0});
  std::vector<double> out(columns.size());
  size_t i = 0;
  for (auto _ : state) {
    s.model.PredictAblations(s.data.examples[i++ % s.data.examples.size()], columns, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(columns.size()));
}
BENCHMARK(BM_AblationsBatched);

void BM_LfiMatrix(benchmark::State& state) {
  const Setup& s = Standard();
  const std::span<const Example> rows(s.data.examples.data(), static_cast<size_t>(state.range(0)));
  AttributionOptions options;
  options.parallelism = static_cast<size_t>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ComputeLfiMatrix(s.model, rows, LfiMethod::PseudoLoss(), options));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LfiMatrix)->Args({500, 1})->Args({500, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

const LfiMatrix& StandardLfi() {
  static const LfiMatrix lfi = ComputeLfiMatrix(Standard().model, Standard().data, LfiMethod::PseudoLoss());
  return lfi;
}

void BM_Gfi(benchmark::State& state) {
  const LfiMatrix& lfi = StandardLfi();
  for (auto _ : state) benchmark::DoNotOptimize(ComputeGfi(lfi));
}
BENCHMARK(BM_Gfi)->Unit(benchmark::kMicrosecond);

void BM_Bootstrap(benchmark::State& state) {
  const LfiMatrix& lfi = StandardLfi();
  for (auto _ : state) {
    benchmark::DoNotOptimize(BootstrapStandardErrors(lfi, static_cast<size_t>(state.range(0)), 1));
  }
}
BENCHMARK(BM_Bootstrap)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Mfc(benchmark::State& state) {
  const Setup& s = Standard();
  const auto predictions = s.model.PredictBatch(s.data.examples);
  for (auto _ : state) benchmark::DoNotOptimize(ComputeMfc(s.data, predictions));
}
BENCHMARK(BM_Mfc)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace driftscope

BENCHMARK_MAIN();
