#include <random>
#include <span>
#include <vector>

#include <benchmark/benchmark.h>

#include "mlow/spectral.hpp"

namespace {

std::vector<double> noise(std::size_t n) {
    std::mt19937_64 rng(0);
    std::normal_distribution<double> normal;
    std::vector<double> x(n);
    for (auto& v : x) v = normal(rng);
    return x;
}

void BM_ComputeSpectrum(benchmark::State& state) {
    const auto x = noise(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(mlow::compute_spectrum(x));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ComputeSpectrum)->Arg(48)->Arg(336)->Arg(1440);

void BM_ReconstructBases(benchmark::State& state) {
    const auto s = mlow::compute_spectrum(noise(336));
    for (auto _ : state) benchmark::DoNotOptimize(mlow::reconstruct_bases(s, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_ReconstructBases)->Arg(96)->Arg(336);

void BM_ComputeSpectraBatch(benchmark::State& state) {
    const auto x = noise(20000);
    std::vector<std::span<const double>> windows;
    for (std::size_t start = 0; start + 336 <= x.size(); start += 4) windows.emplace_back(x.data() + start, 336);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mlow::compute_spectra(windows, static_cast<unsigned>(state.range(0))));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(windows.size()));
}
BENCHMARK(BM_ComputeSpectraBatch)->Arg(1)->Arg(4)->UseRealTime();

}  // namespace
