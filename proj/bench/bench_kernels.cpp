#include <benchmark/benchmark.h>

#include "genens/decomposition.hpp"
#include "genens/generators.hpp"
#include "genens/parallel.hpp"
#include "genens/predictors.hpp"
#include "genens/truth_process.hpp"

using namespace genens;

namespace {

// Arg 0 selects the serial reference path, 1 the OpenMP path.
Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Exec::serial : Exec::parallel;
}

const TruthProcess& linear_toy() {
  static const auto p = make_truth_process("linear_toy");
  return *p;
}

void BM_Oracle(benchmark::State& state) {
  const PredictorSpec predictor = parse_predictor("ridge:1", Task::regression);
  OracleConfig cfg;
  cfg.m = 2;
  cfg.mc = McCounts{20, 2, 8, 4, 400};
  cfg.test_points = 8;
  cfg.bootstrap = 50;
  cfg.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(oracle_decompose(linear_toy(), predictor, cfg, 11));
}

void BM_Nested(benchmark::State& state) {
  const Dataset train = linear_toy().sample_real(200, 1);
  const Dataset test = linear_toy().sample_real(50, 2);
  GeneratorSpec gen;
  gen.kind = GeneratorKind::bootstrap;
  const PredictorSpec predictor = parse_predictor("cart", Task::regression);
  NestedConfig cfg;
  cfg.r_theta = 16;
  cfg.s_per_theta = 4;
  cfg.bootstrap = 50;
  cfg.exec = exec_of(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_mv_sdv_nested(gen, train, predictor, test, cfg, 3));
}

void BM_ForestCurve(benchmark::State& state) {
  const Dataset train = linear_toy().sample_real(400, 4);
  const Dataset test = linear_toy().sample_real(100, 5);
  const Encoder enc = Encoder::fit(train, false);
  const FeatureMatrix a = enc.transform(train);
  const FeatureMatrix b = enc.transform(test);
  for (auto _ : state)
    benchmark::DoNotOptimize(train_forest_curve(a, b, 32, MetricSpec{}, 6, exec_of(state)));
}

void BM_KnnPredictAll(benchmark::State& state) {
  const Dataset train = linear_toy().sample_real(2000, 7);
  const Dataset test = linear_toy().sample_real(1000, 8);
  const FittedModel model = fit_model(parse_predictor("knn:5", Task::regression), train, 9);
  const FeatureMatrix x = model.encoder().transform(test);
  for (auto _ : state) benchmark::DoNotOptimize(model.model().predict_all(x, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_Oracle)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Nested)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ForestCurve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_KnnPredictAll)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
