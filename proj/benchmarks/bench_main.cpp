#include <benchmark/benchmark.h>

#include <vector>

#include "frofa/augmentations.hpp"
#include "frofa/frofa_core.hpp"
#include "frofa/linear_probe.hpp"
#include "frofa/map_head.hpp"
#include "frofa/rng.hpp"

using namespace frofa;

namespace {

FeatureTensor random_features(std::size_t n, std::size_t c, std::uint64_t seed) {
  Rng rng{RngKey(seed)};
  FeatureTensor f(n, c);
  for (auto& x : f.values()) x = static_cast<float>(rng.normal());
  return f;
}

void BM_ApplyFrofa(benchmark::State& state) {
  const auto kind = static_cast<AugKind>(state.range(0));
  const auto f = random_features(196, 64, 1);
  const auto spec = make_spec(kind, sweep_values(kind).back(), std::nullopt, Variant::channel2);
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(apply_frofa(f, spec, RngKey(i++)));
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_ApplyFrofa)
    ->Arg(static_cast<int>(AugKind::brightness))
    ->Arg(static_cast<int>(AugKind::contrast))
    ->Arg(static_cast<int>(AugKind::rotate))
    ->Arg(static_cast<int>(AugKind::equalize));

void BM_MapHeadForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t C = 64, S = 10, B = 32;
  const auto params = init_map_head(C, S, default_head_count(C), 0);
  std::vector<FeatureTensor> feats;
  std::vector<std::vector<float>> labels;
  std::vector<WeightedExample> batch;
  for (std::size_t b = 0; b < B; ++b) {
    feats.push_back(random_features(n, C, b));
    labels.emplace_back(S, 0.0f)[b % S] = 1.0f;
  }
  for (std::size_t b = 0; b < B; ++b) batch.push_back({&feats[b], labels[b].data(), 1.0f});
  auto grad = params.zeros_like();
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(params, batch, &grad));
}
BENCHMARK(BM_MapHeadForwardBackward)->Arg(49)->Arg(196);

void BM_FitRidge(benchmark::State& state) {
  const auto C = static_cast<std::size_t>(state.range(0));
  const std::size_t E = 250, S = 10;
  Rng rng{RngKey(2)};
  Matrix X(E, C), Y(E, S);
  for (auto& x : X.values) x = rng.normal();
  for (std::size_t e = 0; e < E; ++e) Y(e, e % S) = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(fit_ridge(X, Y, 1.0));
}
BENCHMARK(BM_FitRidge)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
