#include <benchmark/benchmark.h>

#include "imitree/mlp.hpp"
#include "imitree/rng.hpp"

using namespace imitree;

namespace {

nn::Mlp make_net(int width) {
  nn::MlpSpec spec;
  spec.layer_widths = {32, width, width, 32};
  return nn::Mlp(spec, 1);
}

Eigen::MatrixXd random_input(int rows, int cols) {
  RandomStream s(2);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = s.uniform(-1, 1);
  return x;
}

void BM_MlpInfer(benchmark::State& state) {
  const auto net = make_net(static_cast<int>(state.range(0)));
  const Eigen::VectorXd x = random_input(32, 1).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(net.infer(x));
}
BENCHMARK(BM_MlpInfer)->Arg(64)->Arg(256);

void BM_MlpForwardBatch(benchmark::State& state) {
  const auto net = make_net(64);
  const auto x = random_input(32, static_cast<int>(state.range(0)));
  nn::MlpTape tape;
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, &tape));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForwardBatch)->Arg(64)->Arg(384);

void BM_MlpForwardBackward(benchmark::State& state) {
  const auto net = make_net(64);
  const auto x = random_input(32, static_cast<int>(state.range(0)));
  const Eigen::MatrixXd dy = random_input(32, static_cast<int>(state.range(0)));
  auto grads = nn::GradientSet::zeros_like(net);
  nn::MlpTape tape;
  for (auto _ : state) {
    net.forward(x, &tape);
    benchmark::DoNotOptimize(net.backward(tape, dy, grads));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForwardBackward)->Arg(64)->Arg(384);

void BM_MlpDoubleBackward(benchmark::State& state) {
  const auto net = make_net(64);
  const auto x = random_input(32, 64);
  const Eigen::MatrixXd dy = Eigen::MatrixXd::Ones(32, 64);
  auto grads = nn::GradientSet::zeros_like(net);
  nn::MlpTape tape;
  for (auto _ : state) {
    net.forward(x, &tape);
    const Eigen::MatrixXd gx = net.input_gradient(tape, dy);
    benchmark::DoNotOptimize(net.input_gradient_backward(tape, dy, gx, grads));
  }
}
BENCHMARK(BM_MlpDoubleBackward);

}  // namespace
