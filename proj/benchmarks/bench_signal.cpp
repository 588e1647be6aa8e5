#include <benchmark/benchmark.h>

#include <cmath>

#include "nvicore/hrv.hpp"
#include "nvicore/signal_ops.hpp"
#include "nvicore/welch.hpp"

using namespace nvi;

namespace {

TimeSeries pulse_train(double duration_s, double fs) {
    TimeSeries ts;
    ts.fs = fs;
    const auto n = static_cast<std::size_t>(duration_s * fs);
    ts.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        ts.samples[i] = 100.0 + 10.0 * std::pow(0.5 - 0.5 * std::cos(2.0 * 3.14159265 * t), 3.0);
    }
    return ts;
}

} // namespace

static void BM_Bandpass60s(benchmark::State& state) {
    const TimeSeries ppg = pulse_train(60.0, 125.0);
    for (auto _ : state) {
        const TimeSeries out = bandpass(ppg, 0.5, 12.0);
        benchmark::DoNotOptimize(out.samples.data());
    }
}
BENCHMARK(BM_Bandpass60s);

static void BM_DetectPeaks60s(benchmark::State& state) {
    const TimeSeries ppg = bandpass(pulse_train(60.0, 125.0), 0.5, 12.0);
    for (auto _ : state) {
        const PeakList peaks = detect_peaks(ppg, 0.3, 1.0);
        benchmark::DoNotOptimize(peaks.indices.data());
    }
}
BENCHMARK(BM_DetectPeaks60s);

static void BM_WelchPsd(benchmark::State& state) {
    std::vector<double> x(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::sin(0.37 * static_cast<double>(i)) + std::sin(0.011 * static_cast<double>(i));
    }
    for (auto _ : state) {
        const PsdEstimate psd = welch_psd(x, 4.0, 480);
        benchmark::DoNotOptimize(psd.power.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_WelchPsd)->RangeMultiplier(2)->Range(512, 8192)->Complexity();

static void BM_PrvFromPpg(benchmark::State& state) {
    const TimeSeries ppg = pulse_train(90.0, 125.0);
    for (auto _ : state) {
        const HrvMetrics m = prv_from_ppg(ppg);
        benchmark::DoNotOptimize(m.rmssd_ms);
    }
}
BENCHMARK(BM_PrvFromPpg);
