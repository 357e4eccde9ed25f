#include <benchmark/benchmark.h>

#include <vector>

#include "abx/action_balance.hpp"
#include "abx/agent.hpp"
#include "abx/approximator.hpp"
#include "abx/gridworld.hpp"
#include "abx/random.hpp"

using namespace abx;

static void BM_MlpForward(benchmark::State& state) {
  ApproximatorSpec spec;
  spec.input_dim = 2;
  spec.hidden_dim = static_cast<int>(state.range(0));
  spec.output_dim = 5;
  spec.hidden_layers = 2;
  std::vector<double> params(static_cast<std::size_t>(spec.parameter_count()));
  mlp_init(spec, 1, params);
  MlpWorkspace ws;
  const std::vector<double> x{0.3, 0.7};
  std::vector<double> y(5);
  for (auto _ : state) {
    mlp_forward(spec, params, x, y, ws);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_MlpForward)->Arg(32)->Arg(64)->Arg(128);

static void BM_PredictionError(benchmark::State& state) {
  ApproximatorSpec spec;
  spec.input_dim = 6;
  spec.hidden_dim = 64;
  spec.output_dim = 32;
  spec.hidden_layers = 2;
  DistillationPair pair(spec, 3);
  const std::vector<double> x{0.1, 0.9, 0.0, 1.0, 0.0, 0.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(pair.prediction_error(x));
  }
}
BENCHMARK(BM_PredictionError);

static void BM_BonusVector(benchmark::State& state) {
  ActionBalancer bal(2, ActionEmbeddingScheme{}, std::nullopt, 64, 2, 32, 5);
  const std::vector<double> s{0.4, 0.6};
  for (auto _ : state) {
    const BonusVector v = bal.bonus_vector(s);
    benchmark::DoNotOptimize(v.values.data());
  }
}
BENCHMARK(BM_BonusVector);

static void BM_DistillTrainStep(benchmark::State& state) {
  ApproximatorSpec spec;
  spec.input_dim = 6;
  spec.hidden_dim = 64;
  spec.output_dim = 32;
  spec.hidden_layers = 2;
  DistillationPair pair(spec, 3);
  Rng rng(11);
  std::vector<std::vector<double>> batch;
  for (int i = 0; i < static_cast<int>(state.range(0)); ++i) {
    std::vector<double> x(6);
    for (double& v : x) v = rng.uniform();
    batch.push_back(std::move(x));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(pair.train_step(batch, 1e-3).gradient_norm);
  }
}
BENCHMARK(BM_DistillTrainStep)->Arg(200);

static void BM_RolloutAndUpdate(benchmark::State& state) {
  const EnvConfig env;
  AgentConfig cfg;
  cfg.method = static_cast<Method>(state.range(0));
  cfg.seed = 9;
  GridWorld world(env);
  Agent agent(cfg, env);
  for (auto _ : state) {
    const auto rollout = agent.collect_rollout(world);
    const UpdateReport report = agent.update(rollout);
    benchmark::DoNotOptimize(report.total_loss);
  }
  state.SetItemsProcessed(state.iterations() * cfg.rollout_len);
}
BENCHMARK(BM_RolloutAndUpdate)
    ->Arg(static_cast<int>(Method::random))
    ->Arg(static_cast<int>(Method::rnd))
    ->Arg(static_cast<int>(Method::action_balance_rnd));

BENCHMARK_MAIN();
