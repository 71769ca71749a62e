#include "matn/evaluation.hpp"
#include "matn/synthetic.hpp"
#include "matn/training.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace matn;

struct Setup {
  SplitResult split;
  TrainConfig config;
  ModelParams params;

  explicit Setup(std::size_t users) {
    SynthSpec spec;
    spec.num_users = users;
    split = leave_one_out_split(generate(spec), 0);
    Rng rng(1);
    params = ModelParams::init(make_shape(config, 4, split.train.num_items()), rng);
  }
};

const Setup& setup() {
  static const Setup s(500);
  return s;
}

void BM_Forward(benchmark::State& state) {
  const auto& s = setup();
  Index u = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(s.split.train, u, s.params, s.config));
    u = (u + 1) % s.split.train.num_users();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Forward);

void BM_BatchLoss(benchmark::State& state) {
  const auto& s = setup();
  const auto users = trainable_users(s.split.train);
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::size_t start = 0;
  for (auto _ : state) {
    if (start + batch > users.size()) start = 0;
    std::span<const Index> slice(users.data() + start, batch);
    benchmark::DoNotOptimize(batch_loss(s.split.train, slice, s.params, s.config, rng));
    start += batch;
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_BatchLoss)->Arg(32)->Arg(128);

void BM_Evaluate(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(s.split.train, s.split.split, s.params, s.config));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(s.split.train.num_users()));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const auto& s = setup();
  auto config = s.config;
  config.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(s.split.train, config));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
