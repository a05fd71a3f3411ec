// OpenMP kernels against their serial reference loops.

#include <benchmark/benchmark.h>

#include "myopic/models.hpp"
#include "myopic/perturbation.hpp"
#include "myopic/scenarios.hpp"

using namespace myopic;

namespace {

Exec mode(const benchmark::State& s) { return s.range(0) ? Exec::parallel : Exec::serial; }

const scenarios::CqiDataset& cqi() {
  static const auto d = scenarios::generate_cqi_features(4000, 1);
  return d;
}

models::ModelSpec spec() {
  models::ModelSpec s;
  s.kind = models::Kind::forest;
  s.task = models::TaskKind::regress;
  s.forest.trees = 32;
  return s;
}

void BM_ForestFit(benchmark::State& state) {
  const auto& d = cqi();
  const auto y = models::values_to_targets(d.cqi);
  for (auto _ : state) benchmark::DoNotOptimize(models::Model::train(spec(), d.table.values, y, {}, mode(state)));
}

void BM_ForestPredict(benchmark::State& state) {
  const auto& d = cqi();
  const auto m = models::Model::train(spec(), d.table.values, models::values_to_targets(d.cqi));
  for (auto _ : state) benchmark::DoNotOptimize(m.predict(d.table.values, mode(state)));
}

void BM_ApplyRsp(benchmark::State& state) {
  const auto big = scenarios::generate_cqi_features(100000, 2);
  rsp::PerturbationSpec s;
  s.target_fields = {"pktRx"};
  s.intensity_levels = {1.0};
  s.derived.edges = {{"pktRx", "pktRxAiat", rsp::Recompute::inverse_proportional}};
  s.constraints = {{"pktRx", rsp::Interval{0.0, 1e12}, rsp::ViolationAction::clamp}};
  for (auto _ : state) benchmark::DoNotOptimize(rsp::apply_rsp(big.table, s, 0, 3, mode(state)));
}

}  // namespace

BENCHMARK(BM_ForestFit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForestPredict)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyRsp)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
