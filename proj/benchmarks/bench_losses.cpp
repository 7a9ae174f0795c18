#include <benchmark/benchmark.h>

#include "imitree/losses.hpp"
#include "imitree/reanalyze.hpp"
#include "support/fd.hpp"
#include "support/fixtures.hpp"

using namespace imitree;
using namespace imitree::test_support;

namespace {

ModelConfig desk_config() {
  ModelConfig c;
  c.obs_dim = 6;
  c.act_dim = 2;
  return c;
}

// Forward and backward through the full joint objective at the default batch.
void BM_TotalLoss(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  ModelBundle m(desk_config(), 7);
  randomize(m, 8, 0.2);
  const auto agent_buf = random_buffer(Origin::kAgent, 6, 2, {100, 100}, 9);
  const auto expert_buf = random_buffer(Origin::kExpert, 6, 2, {100, 100}, 10);
  RandomStream s(11);
  const auto agent = agent_buf.sample_unroll(batch, 5, s);
  const auto expert = expert_buf.sample_unroll(batch, 5, s);
  const auto ta = random_targets(agent, 2, 16, 12);
  const auto te = random_targets(expert, 2, 16, 13);
  const LossWeights w;
  for (auto _ : state) benchmark::DoNotOptimize(total_loss(m, agent, ta, expert, te, w, s));
}
BENCHMARK(BM_TotalLoss)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

// Reanalyze of one agent batch with a cold cache (K 16, N 50).
void BM_ReanalyzeCold(benchmark::State& state) {
  ModelBundle m(desk_config(), 14);
  randomize(m, 15, 0.2);
  const auto buf = random_buffer(Origin::kAgent, 6, 2, {100, 100}, 16);
  RandomStream s(17);
  const auto batch = buf.sample_unroll(static_cast<int>(state.range(0)), 5, s);
  ReanalyzeConfig cfg;
  for (auto _ : state) {
    Reanalyzer r(cfg, 18);
    r.set_target(snapshot_target(m));
    benchmark::DoNotOptimize(r.run(batch, m));
  }
}
BENCHMARK(BM_ReanalyzeCold)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
