#include <benchmark/benchmark.h>

#include <random>

#include "qunit/search.hpp"

using namespace qunit;

namespace {

// 64 squarefree d near 10^k, fixed seed.
std::vector<QField> fields_near(int k) {
  u64 base = 1;
  for (int i = 0; i < k; ++i) base *= 10;
  std::mt19937_64 rng(k);
  std::vector<QField> out;
  while (out.size() < 64) {
    const u64 d = base + rng() % base;
    if (is_squarefree(d)) out.push_back(QField::make(d));
  }
  return out;
}

void unit_residue_bench(benchmark::State& state, Engine e) {
  const auto fields = fields_near(static_cast<int>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    const QField& K = fields[i++ % fields.size()];
    benchmark::DoNotOptimize(unit_residue_with(e, K, K.d()));
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_UnitResidueSmall(benchmark::State& s) { unit_residue_bench(s, Engine::Small); }
void BM_UnitResidueLarge(benchmark::State& s) { unit_residue_bench(s, Engine::Large); }
BENCHMARK(BM_UnitResidueSmall)->DenseRange(6, 12, 3)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_UnitResidueLarge)->DenseRange(6, 12, 3)->Unit(benchmark::kMicrosecond);

void BM_Sieve(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(sieve_squarefree(1'000'000'000, 1'001'000'000));
  state.SetItemsProcessed(state.iterations() * 1'000'000);
}
BENCHMARK(BM_Sieve)->Unit(benchmark::kMillisecond);

constexpr u64 kLo = 1'000'000, kHi = 1'100'000;

void BM_ScanSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(scan_interval_serial(kLo, kHi, Engine::Small));
}
BENCHMARK(BM_ScanSerial)->Unit(benchmark::kMillisecond);

void BM_ScanOpenMP(benchmark::State& state) {
  ScanOptions opt;
  opt.workers = static_cast<int>(state.range(0));
  opt.shard_width = 10'000;
  for (auto _ : state) benchmark::DoNotOptimize(scan_interval(kLo, kHi, opt));
}
BENCHMARK(BM_ScanOpenMP)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
