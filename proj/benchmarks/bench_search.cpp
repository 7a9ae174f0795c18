#include <benchmark/benchmark.h>

#include "imitree/mcts.hpp"
#include "imitree/planning_stub.hpp"
#include "imitree/rng.hpp"
#include "support/fd.hpp"

using namespace imitree;

namespace {

ModelConfig desk_config() {
  ModelConfig c;
  c.obs_dim = 6;
  c.act_dim = 2;
  return c;
}

// One decision with the default desk-size bundle: K children, N simulations.
void BM_RunSearchBundle(benchmark::State& state) {
  ModelBundle m(desk_config(), 3);
  test_support::randomize(m, 4, 0.2);
  const mcts::BundleSearchModel sm(m);
  mcts::SearchConfig cfg;
  cfg.k_samples = static_cast<int>(state.range(0));
  cfg.n_simulations = static_cast<int>(state.range(1));
  const Eigen::VectorXd obs = Eigen::VectorXd::Constant(6, 0.3);
  RandomStream stream(5);
  for (auto _ : state) benchmark::DoNotOptimize(mcts::run_search(obs, sm, cfg, stream));
}
BENCHMARK(BM_RunSearchBundle)->Args({16, 50})->Args({4, 50})->Args({16, 10})->Unit(benchmark::kMicrosecond);

void BM_RunSearchStub(benchmark::State& state) {
  const mcts::PlanningStub stub;
  mcts::SearchConfig cfg;
  cfg.k_samples = 4;
  cfg.n_simulations = static_cast<int>(state.range(0));
  RandomStream stream(6);
  for (auto _ : state) benchmark::DoNotOptimize(mcts::run_search(Eigen::VectorXd::Zero(1), stub, cfg, stream));
}
BENCHMARK(BM_RunSearchStub)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

}  // namespace
