// Microbenchmarks for the hot paths: the DP losses, encoder backward
// and one full training step.

#include <benchmark/benchmark.h>

#include "clasr/continual.hpp"
#include "clasr/logmath.hpp"
#include "clasr/losses.hpp"
#include "clasr/model.hpp"
#include "clasr/rng.hpp"
#include "clasr/synth.hpp"

namespace {

using namespace clasr;

Tensor random_log_probs(std::vector<std::size_t> shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor logits(std::move(shape));
  for (double& v : logits.data()) v = rng.uniform(-2.0, 2.0);
  return log_softmax(logits, logits.ndim() - 1);
}

std::vector<int> random_targets(std::size_t u, int vocab, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> t(u);
  for (int& v : t) v = rng.uniform_int(1, vocab - 1);
  return t;
}

void BM_CtcLoss(benchmark::State& state) {
  const std::size_t T = 40, V = 13;
  const Tensor lp = random_log_probs({T, V}, 1);
  const std::vector<int> targets = random_targets(8, static_cast<int>(V), 2);
  for (auto _ : state) {
    LossResult r = ctc_loss(lp, targets, 0);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(BM_CtcLoss);

void BM_RnntLoss(benchmark::State& state) {
  const std::size_t T = 40, U = 8, V = 13;
  const std::vector<int> targets = random_targets(U, static_cast<int>(V), 3);
  const Tensor lp = random_log_probs({T, U + 1, V}, 4);
  for (auto _ : state) {
    LossResult r = rnnt_loss(lp, targets, 0);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(BM_RnntLoss);

Utterance sample_one(std::uint64_t seed) {
  SynthConfig cfg;
  LanguageSpec spec = make_language(1, seed, cfg);
  Rng rng = Rng::stream(seed, "bench");
  return sample_utterance(spec, false, rng);
}

void BM_BaseLossBackward(benchmark::State& state) {
  HybridModel model = init_model(ModelConfig{}, 7);
  const Utterance utt = sample_one(7);
  for (auto _ : state) {
    BaseLossResult r = base_loss(model, utt);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(BM_BaseLossBackward);

void BM_TrainStepBatch8(benchmark::State& state) {
  HybridModel model = init_model(ModelConfig{}, 9);
  SynthConfig cfg;
  LanguageSpec spec = make_language(1, 9, cfg);
  Rng rng = Rng::stream(9, "bench");
  std::vector<Utterance> batch;
  for (int i = 0; i < 8; ++i) batch.push_back(sample_utterance(spec, i % 3 == 2, rng));
  CLState cl;
  for (auto _ : state) {
    TotalLossResult r = total_loss(CLMethod::naive, model, batch, cl, {});
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(BM_TrainStepBatch8);

}  // namespace

BENCHMARK_MAIN();
