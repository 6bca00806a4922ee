#include <benchmark/benchmark.h>

#include "dwsnn/device.hpp"
#include "dwsnn/encoding.hpp"
#include "dwsnn/graph.hpp"
#include "dwsnn/train.hpp"

using namespace dwsnn;

namespace {

void BM_Matmul(benchmark::State& state) {
  const std::size_t rows = static_cast<std::size_t>(state.range(0));
  Tensor a({rows, 784}, 0.5);
  Tensor b({784, 128}, 0.01);
  for (auto _ : state) {
    Tensor c = matmul(a, b);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * rows * 784 * 128);
}
BENCHMARK(BM_Matmul)->Arg(100)->Arg(4000);

void BM_PoissonEncode(benchmark::State& state) {
  ImageSet set;
  set.rows = set.cols = 28;
  RngStream rng(5);
  set.pixels.resize(100 * 784);
  for (auto& p : set.pixels) p = static_cast<float>(rng.next_double());
  set.labels.assign(100, 0);
  for (auto _ : state) {
    SpikeBatch batch = poisson_encode(set, 40, 7);
    benchmark::DoNotOptimize(batch.spikes.data());
  }
  state.SetItemsProcessed(state.iterations() * 100 * 784 * 40);
}
BENCHMARK(BM_PoissonEncode);

void BM_CyclingSim(benchmark::State& state) {
  const SwitchingSigmoid model = default_binary_model();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    CyclingRecord rec = simulate_cycling(model, 1.75, 1000, 64, ++seed);
    benchmark::DoNotOptimize(rec.first_switch_pulse.data());
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_CyclingSim);

MLPConfig bench_config(const NeuronSpec& spec) {
  MLPConfig config;
  config.input = 784;
  config.hidden = {128, 128};
  config.output = 10;
  config.neurons = {spec, spec};
  config.timesteps = 40;
  return config;
}

void forward_backward(const MLPConfig& config, benchmark::State& state) {
  ModelParams params = ModelParams::init(config, 1);
  ImageSet set;
  set.rows = set.cols = 28;
  RngStream rng(5);
  set.pixels.resize(100 * 784);
  for (auto& p : set.pixels) p = static_cast<float>(rng.next_double());
  set.labels.assign(100, 0);
  SpikeBatch spikes = poisson_encode(set, config.timesteps, 7);
  std::vector<int> labels(100, 3);

  for (auto _ : state) {
    Graph g;
    RngStream neuron_rng(11);
    ForwardNodes nodes =
        forward(g, params, config, spikes, Mode::Sampled, neuron_rng, true);
    NodeId loss = g.softmax_cross_entropy(nodes.logits, labels);
    g.backward(loss);
    benchmark::DoNotOptimize(g.grad(nodes.trainable_nodes[0]).data());
  }
  state.SetItemsProcessed(state.iterations() * 100);
}

void BM_TrainStepBinary(benchmark::State& state) {
  forward_backward(bench_config(default_binary_neuron()), state);
}
BENCHMARK(BM_TrainStepBinary)->Unit(benchmark::kMillisecond);

void BM_TrainStepMW(benchmark::State& state) {
  forward_backward(bench_config(default_mw_neuron()), state);
}
BENCHMARK(BM_TrainStepMW)->Unit(benchmark::kMillisecond);

void BM_TrainStepLif(benchmark::State& state) {
  forward_backward(bench_config(LIFParams{}), state);
}
BENCHMARK(BM_TrainStepLif)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
