#include <benchmark/benchmark.h>

#include "sensor/env.hpp"
#include "sensor/nn.hpp"
#include "sensor/rssm.hpp"

namespace {

using namespace sensor;

void BM_MatmulBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  std::vector<double> av(static_cast<std::size_t>(n) * n), bv = av;
  for (auto& v : av) v = rng.uniform(-1, 1);
  for (auto& v : bv) v = rng.uniform(-1, 1);
  Tensor a = Tensor::leaf({n, n}, av, true);
  Tensor b = Tensor::leaf({n, n}, bv, true);
  for (auto _ : state) {
    a.clear_grad();
    b.clear_grad();
    Tape t;
    Tensor loss = sum(t, matmul(t, a, b));
    t.backward(loss);
    benchmark::DoNotOptimize(a.grad());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_MatmulBackward)->RangeMultiplier(2)->Range(32, 256)->Complexity();

void BM_Render(benchmark::State& state) {
  const int res = static_cast<int>(state.range(0));
  const SensorState c{3.0, 90.0, -45.0};
  double theta = 0.3;
  for (auto _ : state) {
    theta += 0.01;
    Image img = render(pendulum_scene(theta), c, res);
    benchmark::DoNotOptimize(img.pixels.data());
  }
}
BENCHMARK(BM_Render)->Arg(16)->Arg(32)->Arg(64);

void BM_ModelLoss(benchmark::State& state) {
  Rng rng(2);
  WorldModelConfig cfg;
  cfg.obs_dim = 1024;
  auto model = make_world_model(cfg, rng);
  SequenceBatch batch;
  batch.batch = 8;
  batch.seq_len = 8;
  batch.obs_dim = cfg.obs_dim;
  batch.obs.resize(static_cast<std::size_t>(batch.batch) * batch.seq_len * batch.obs_dim);
  batch.actions.resize(static_cast<std::size_t>(batch.batch) * (batch.seq_len - 1) * 4);
  for (auto& v : batch.obs) v = rng.uniform();
  for (auto& v : batch.actions) v = rng.uniform(-1, 1);
  NamedParams params;
  model->collect(params);
  AdamW opt(params.tensors(), {6e-4});
  for (auto _ : state) {
    Tape t;
    auto res = model->observe_sequence(t, batch, rng);
    opt.zero_grad();
    t.backward(res.loss);
    opt.step();
    benchmark::DoNotOptimize(res.recon_mse_per_pixel);
  }
}
BENCHMARK(BM_ModelLoss);

}  // namespace

BENCHMARK_MAIN();
