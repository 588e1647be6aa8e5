#pragma once

// Test-only signal generators with known ground truth. These stay on the
// test side so the oracles remain independent of the library pipeline they
// check.

#include <algorithm>
#include <cmath>
#include <vector>

#include "nvicore/rng.hpp"
#include "nvicore/time_series.hpp"

namespace nvi::testsupport {

struct BeatTrain {
    std::vector<double> beat_times_s;
    double rmssd_truth_ms = 0.0;
    double sdnn_truth_ms = 0.0;
};

// Beat times at mean_ibi with iid Gaussian timing jitter. Ground-truth
// metrics are computed from the actual emitted times.
inline BeatTrain make_beat_train(double duration_s, double mean_ibi_s, double jitter_sd_ms,
                                 Rng& rng) {
    BeatTrain train;
    // 0.6 start keeps jitter-free peaks on the 125 Hz grid (0.6 + 0.2 s pulse
    // delay = sample 100), so a noise-free uniform train measures RMSSD 0.
    double t = 0.6;
    while (t < duration_s - 0.5) {
        train.beat_times_s.push_back(t + rng.gaussian(0.0, jitter_sd_ms / 1000.0));
        t += mean_ibi_s;
    }
    std::sort(train.beat_times_s.begin(), train.beat_times_s.end());

    std::vector<double> ibis;
    for (std::size_t i = 0; i + 1 < train.beat_times_s.size(); ++i) {
        ibis.push_back((train.beat_times_s[i + 1] - train.beat_times_s[i]) * 1000.0);
    }
    if (ibis.size() >= 2) {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < ibis.size(); ++i) {
            const double d = ibis[i + 1] - ibis[i];
            acc += d * d;
        }
        train.rmssd_truth_ms = std::sqrt(acc / static_cast<double>(ibis.size() - 1));
        double mean = 0.0;
        for (double v : ibis) mean += v;
        mean /= static_cast<double>(ibis.size());
        double var = 0.0;
        for (double v : ibis) var += (v - mean) * (v - mean);
        train.sdnn_truth_ms = std::sqrt(var / static_cast<double>(ibis.size() - 1));
    }
    return train;
}

// Gaussian systolic bump per beat on a positive baseline. The bump peaks a
// fixed 0.2 s after the beat time, so inter-peak intervals reproduce the
// inter-beat intervals exactly.
inline TimeSeries make_ppg(const BeatTrain& train, double duration_s, double fs,
                           double baseline = 100.0, double amplitude = 10.0,
                           double noise_sd = 0.0, Rng* rng = nullptr) {
    TimeSeries ts;
    ts.fs = fs;
    ts.t0 = 0.0;
    ts.label = "ppg";
    const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
    ts.samples.assign(n, baseline);
    constexpr double kDelay_s = 0.2, kWidth_s = 0.08;
    for (double beat : train.beat_times_s) {
        const double center = beat + kDelay_s;
        const auto lo = static_cast<std::ptrdiff_t>((center - 4.0 * kWidth_s) * fs);
        const auto hi = static_cast<std::ptrdiff_t>((center + 4.0 * kWidth_s) * fs) + 1;
        for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, lo);
             i < std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n), hi); ++i) {
            const double dt = static_cast<double>(i) / fs - center;
            ts.samples[static_cast<std::size_t>(i)] +=
                amplitude * std::exp(-0.5 * (dt / kWidth_s) * (dt / kWidth_s));
        }
    }
    if (noise_sd > 0.0 && rng != nullptr) {
        for (double& v : ts.samples) v += rng->gaussian(0.0, noise_sd);
    }
    return ts;
}

// Narrow spikes at the beat times, zero baseline.
inline TimeSeries make_ecg(const BeatTrain& train, double duration_s, double fs) {
    TimeSeries ts;
    ts.fs = fs;
    ts.t0 = 0.0;
    ts.label = "ecg";
    const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
    ts.samples.assign(n, 0.0);
    constexpr double kWidth_s = 0.012;
    for (double beat : train.beat_times_s) {
        const auto lo = static_cast<std::ptrdiff_t>((beat - 4.0 * kWidth_s) * fs);
        const auto hi = static_cast<std::ptrdiff_t>((beat + 4.0 * kWidth_s) * fs) + 1;
        for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, lo);
             i < std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n), hi); ++i) {
            const double dt = static_cast<double>(i) / fs - beat;
            ts.samples[static_cast<std::size_t>(i)] +=
                std::exp(-0.5 * (dt / kWidth_s) * (dt / kWidth_s));
        }
    }
    return ts;
}

// Two-sample Kolmogorov-Smirnov p-value (asymptotic Q function). Tied
// values advance both CDFs together; the clamped channels put large atoms
// at the clip boundaries, which would otherwise inflate the statistic.
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            const double v = a[i];
            while (i < a.size() && a[i] == v) ++i;
            while (j < b.size() && b[j] == v) ++j;
        }
        const double fa = static_cast<double>(i) / na;
        const double fb = static_cast<double>(j) / nb;
        d = std::max(d, std::fabs(fa - fb));
    }
    const double en = std::sqrt(na * nb / (na + nb));
    const double lambda = (en + 0.12 + 0.11 / en) * d;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        sum += (k % 2 == 1 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lambda * lambda);
    }
    return std::clamp(sum, 0.0, 1.0);
}

} // namespace nvi::testsupport
