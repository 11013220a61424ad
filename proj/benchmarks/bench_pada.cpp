#include <random>

#include <benchmark/benchmark.h>

#include "pada/dataset.hpp"
#include "pada/mask_metrics.hpp"
#include "pada/pruner.hpp"
#include "pada/trainer.hpp"

namespace {

pada::ParameterSet random_set(std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  pada::ParameterSet ps;
  for (int t = 0; t < 4; ++t) {
    std::vector<float> v(rows * cols);
    for (auto& x : v) x = normal(rng);
    ps.add(pada::make_tensor("w" + std::to_string(t), {rows, cols}, std::move(v)));
  }
  return ps;
}

void BM_UmpMask(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ps = random_set(n, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pada::compute_ump_mask(ps, pada::PruneRate(40)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ps.prunable_count()));
}
BENCHMARK(BM_UmpMask)->Arg(32)->Arg(128)->Arg(512);

void BM_MaskMetrics(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ps = random_set(n, n);
  const auto a = pada::compute_ump_mask(ps, pada::PruneRate(40));
  auto shifted = ps;
  for (std::size_t t = 0; t < shifted.size(); ++t) {
    for (auto& v : shifted[t].data) v += 0.3f;
  }
  const auto b = pada::compute_ump_mask(shifted, pada::PruneRate(40));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pada::layerwise_report(a, b));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(a.size()));
}
BENCHMARK(BM_MaskMetrics)->Arg(128)->Arg(512);

void BM_TrainStep(benchmark::State& state) {
  pada::DomainShiftSpec spec;
  const auto data = pada::sample_labeled(1, spec, 256, pada::Domain::source, 2);
  const auto arch = pada::ModelArch{spec.input_dim, {32, 32}, 0, pada::Activation::tanh,
                                    pada::HeadKind::classification}
                        .with_classification_head(spec.classes);
  auto ps = pada::init_model(arch, 3);
  pada::TrainConfig cfg;
  cfg.batch_size = static_cast<std::size_t>(state.range(0));
  pada::SupervisedTrainer trainer(arch, cfg, data);
  for (auto _ : state) {
    benchmark::DoNotOptimize(trainer.run(ps, 1));
  }
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
