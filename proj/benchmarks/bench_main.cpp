#include <benchmark/benchmark.h>

#include <cmath>

#include "veritas/classifiers.hpp"
#include "veritas/fisher.hpp"
#include "veritas/gmm.hpp"
#include "veritas/metrics.hpp"
#include "veritas/mfcc.hpp"
#include "veritas/random.hpp"

namespace {

using namespace veritas;

DescriptorBag gaussian_bag(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(rows * dim);
  for (auto& x : v) x = rng.normal();
  return DescriptorBag(dim, std::move(v));
}

// MBH-sized descriptors (D = 192) against a K-component dictionary.
void BM_EncodeFisher(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto train_bag = gaussian_bag(4000, 192, 1);
  EmConfig cfg;
  cfg.max_iterations = 5;
  const auto gmm = fit_gmm(train_bag, k, cfg);
  const auto bag = gaussian_bag(2000, 192, 2);
  for (auto _ : state) benchmark::DoNotOptimize(encode_fisher(gmm, bag));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(bag.size()));
}
BENCHMARK(BM_EncodeFisher)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_FitGmm(benchmark::State& state) {
  const auto bag = gaussian_bag(static_cast<std::size_t>(state.range(0)), 39, 3);
  EmConfig cfg;
  cfg.max_iterations = 20;
  for (auto _ : state) benchmark::DoNotOptimize(fit_gmm(bag, 16, cfg));
}
BENCHMARK(BM_FitGmm)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ExtractMfcc(benchmark::State& state) {
  Rng rng(4);
  PcmSignal s{16000, std::vector<double>(static_cast<std::size_t>(16000 * state.range(0)))};
  for (auto& v : s.samples) v = 0.1 * rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(extract_mfcc(s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExtractMfcc)->Arg(1)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_AucPr(benchmark::State& state) {
  Rng rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = rng.normal();
    y[i] = static_cast<int>(i % 3 == 0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(auc_pr(s, y));
}
BENCHMARK(BM_AucPr)->Arg(104)->Arg(100000);

void BM_TrainClassifier(benchmark::State& state) {
  const auto kind = kAllClassifierKinds[static_cast<std::size_t>(state.range(0))];
  Rng rng(6);
  Matrix x(100, 256);
  std::vector<int> y(100);
  for (std::size_t i = 0; i < 100; ++i) {
    y[i] = static_cast<int>(i % 2);
    for (std::size_t j = 0; j < 256; ++j) x(i, j) = rng.normal() + (y[i] && j < 8 ? 0.8 : 0.0);
  }
  state.SetLabel(std::string(to_string(kind)));
  for (auto _ : state) benchmark::DoNotOptimize(train({kind, {}}, x, y));
}
BENCHMARK(BM_TrainClassifier)->DenseRange(0, 6)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
