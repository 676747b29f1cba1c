// Serial reference kernels versus the OpenMP versions, plus one training
// epoch on a preset for scale.

#include <benchmark/benchmark.h>

#include "pdmp/datagen.hpp"
#include "pdmp/kernels.hpp"
#include "pdmp/rng.hpp"
#include "pdmp/trainer.hpp"

namespace {

using namespace pdmp;

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

struct AffineInputs {
  Matrix x, w, b, g;
  explicit AffineInputs(std::size_t batch)
      : x(random_matrix(batch, 64, 1)), w(random_matrix(64, 64, 2)), b(random_matrix(64, 1, 3)),
        g(random_matrix(batch, 64, 4)) {}
};

void BM_AffineSerial(benchmark::State& state) {
  AffineInputs in(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(serial::affine(in.x, in.w, in.b));
}
void BM_AffineParallel(benchmark::State& state) {
  AffineInputs in(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(affine(in.x, in.w, in.b));
}
void BM_AffineBackwardSerial(benchmark::State& state) {
  AffineInputs in(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(serial::affine_backward(in.x, in.w, in.g));
}
void BM_AffineBackwardParallel(benchmark::State& state) {
  AffineInputs in(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(affine_backward(in.x, in.w, in.g));
}

void BM_TrainEpoch(benchmark::State& state) {
  const Dataset data = generate(preset("cremad-like"));
  TrainConfig config;
  config.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(config, data).log.test_acc);
}

BENCHMARK(BM_AffineSerial)->Arg(32)->Arg(1200);
BENCHMARK(BM_AffineParallel)->Arg(32)->Arg(1200);
BENCHMARK(BM_AffineBackwardSerial)->Arg(32)->Arg(1200);
BENCHMARK(BM_AffineBackwardParallel)->Arg(32)->Arg(1200);
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
