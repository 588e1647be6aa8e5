#include <benchmark/benchmark.h>

#include <vector>

#include "nvicore/nvi_score.hpp"
#include "nvicore/rng.hpp"

using namespace nvi;

namespace {

std::vector<ModalityInputs> make_inputs(std::size_t n, bool full) {
    std::vector<ModalityInputs> inputs(n);
    Rng rng(99);
    for (auto& in : inputs) {
        const std::uint64_t mask = full ? 15 : 1 + rng.index(15);
        if (mask & 1) in.spo2_pct = rng.uniform(0.0, 100.0);
        if (mask & 2) in.rmssd_ms = rng.uniform(0.0, 250.0);
        if (mask & 4) in.pi = rng.uniform(0.0, 0.8);
        if (mask & 8) {
            in.phase_left_deg = rng.uniform(0.0, 360.0);
            in.phase_right_deg = rng.uniform(0.0, 360.0);
        }
    }
    return inputs;
}

} // namespace

static void BM_CompositeAllModalities(benchmark::State& state) {
    const auto inputs = make_inputs(1024, true);
    std::size_t i = 0;
    for (auto _ : state) {
        const NviResult r = composite(inputs[i++ & 1023]);
        benchmark::DoNotOptimize(r.score);
    }
}
BENCHMARK(BM_CompositeAllModalities);

static void BM_CompositeDegradedMix(benchmark::State& state) {
    const auto inputs = make_inputs(1024, false);
    std::size_t i = 0;
    for (auto _ : state) {
        const NviResult r = composite(inputs[i++ & 1023]);
        benchmark::DoNotOptimize(r.score);
    }
}
BENCHMARK(BM_CompositeDegradedMix);

static void BM_ScoreHrv(benchmark::State& state) {
    double x = 0.0;
    for (auto _ : state) {
        x += score_hrv(42.0 + (x - std::floor(x)));
        benchmark::DoNotOptimize(x);
    }
}
BENCHMARK(BM_ScoreHrv);
