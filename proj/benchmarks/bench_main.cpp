#include <benchmark/benchmark.h>

#include "mflab/example_s3.hpp"

using namespace mflab;

namespace {

std::shared_ptr<const CascadeMeasure> shared(CascadeMeasure m) {
  return std::make_shared<const CascadeMeasure>(std::move(m));
}

const ExperimentConfig& example_config() {
  static const ExperimentConfig cfg = load_config(std::string(MFLAB_CONFIG_DIR) + "/example.toml");
  return cfg;
}

const Experiment& example() {
  static const Experiment ex = build_experiment(example_config());
  return ex;
}

}  // namespace

// antichain DP on a fully branching measure; cost grows with 2^depth
void BM_SupPackingBernoulli(benchmark::State& st) {
  const Kernel K(KernelVariant::Olsen, shared(CascadeMeasure::bernoulli(0.3)));
  const TargetSet X = TargetSet::whole_space();
  const int D = static_cast<int>(st.range(0));
  for (auto _ : st)
    benchmark::DoNotOptimize(sup_packing_value(X, K, PackingQuery{ParamVector{2.0}, -0.5, 1, D}).value);
}
BENCHMARK(BM_SupPackingBernoulli)->DenseRange(8, 16, 4);

void BM_SupPackingExact(benchmark::State& st) {
  const Kernel K(KernelVariant::Olsen, shared(CascadeMeasure::bernoulli(0.3)));
  const TargetSet X = TargetSet::whole_space();
  for (auto _ : st) benchmark::DoNotOptimize(sup_packing_value_exact(X, K, ParamVector{2.0}, -1, 1, 10).value);
}
BENCHMARK(BM_SupPackingExact);

void BM_SpectrumExample(benchmark::State& st) {
  const auto& ex = example();
  for (auto _ : st)
    benchmark::DoNotOptimize(lq_spectrum(TargetSet::whole_space(), *ex.kernel, ParamVector{4.0}, 8, 48).value);
}
BENCHMARK(BM_SpectrumExample);

void BM_LStructured(benchmark::State& st) {
  const auto& ex = example();
  LevelSetSpec s;
  s.q = ParamVector{1.0};
  s.alpha = AlphaForm{example_config().resolved_a()};
  s.p = 2048;
  s.working_depth = 48;
  const TargetSet A = level_set(*ex.kernel, s);
  LQuery q;
  q.q = s.q;
  q.k = static_cast<int>(st.range(0));
  q.m = 48;
  q.depth_max = 48;
  q.strategy = LStrategy::Structured;
  for (auto _ : st) benchmark::DoNotOptimize(L_value(A, *ex.kernel, q).value);
}
BENCHMARK(BM_LStructured)->DenseRange(1, 3);

void BM_LExact(benchmark::State& st) {
  const Kernel K(KernelVariant::Olsen,
                 shared(CascadeMeasure::with_selected(0.3, {Word::from_string("0110"), Word::from_string("10")})));
  LQuery q;
  q.q = ParamVector{2.0};
  q.k = 2;
  q.m = 2;
  q.depth_max = 4;
  q.strategy = LStrategy::Exact;
  const TargetSet A({Word::from_string("01"), Word::from_string("10")});
  for (auto _ : st) benchmark::DoNotOptimize(L_value(A, K, q).value);
}
BENCHMARK(BM_LExact);

void BM_Generations(benchmark::State& st) {
  const CascadeParams p;
  const auto sched = Schedule::compressed({6, 12, 24, 48}, 6);
  for (auto _ : st) benchmark::DoNotOptimize(Generations::build(p, sched, 48)->horizon());
}
BENCHMARK(BM_Generations);
BENCHMARK_MAIN();
