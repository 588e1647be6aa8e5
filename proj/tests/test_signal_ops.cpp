#include <doctest.h>

#include <cmath>

#include "nvicore/errors.hpp"
#include "nvicore/rng.hpp"
#include "nvicore/signal_ops.hpp"
#include "support/sim_signals.hpp"

using namespace nvi;

namespace {

constexpr double kPi = 3.14159265358979323846;

TimeSeries make_series(double fs, std::vector<double> samples) {
    TimeSeries ts;
    ts.fs = fs;
    ts.samples = std::move(samples);
    return ts;
}

TimeSeries sinusoid(double fs, double duration_s, double freq_hz, double amp = 1.0,
                    double offset = 0.0) {
    TimeSeries ts;
    ts.fs = fs;
    const auto n = static_cast<std::size_t>(duration_s * fs);
    ts.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ts.samples[i] = offset + amp * std::sin(2.0 * kPi * freq_hz * i / fs);
    }
    return ts;
}

} // namespace

TEST_CASE("resample at the same rate is the identity") {
    Rng rng(7);
    std::vector<double> v(100);
    for (double& x : v) x = rng.gaussian();
    const TimeSeries ts = make_series(125.0, v);
    const TimeSeries out = resample(ts, 125.0);
    CHECK(out.samples == ts.samples);
    // Idempotence at equal rates, bit-exact.
    const TimeSeries once = resample(ts, 50.0);
    const TimeSeries twice = resample(once, 50.0);
    CHECK(once.samples == twice.samples);
}

TEST_CASE("resample of a constant stays constant") {
    const TimeSeries ts = make_series(10.0, std::vector<double>(20, 5.0));
    const TimeSeries out = resample(ts, 37.0);
    for (double v : out.samples) CHECK(v == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("resample doubles a ramp with midpoints between neighbours") {
    // 0..1 over 1 s at 10 Hz -> 11 samples; at 20 Hz odd indices sit halfway.
    std::vector<double> ramp(11);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i) / 10.0;
    const TimeSeries out = resample(make_series(10.0, ramp), 20.0);
    REQUIRE(out.samples.size() == 21);
    for (std::size_t k = 1; k + 1 < out.samples.size(); k += 2) {
        const double expect = 0.5 * (out.samples[k - 1] + out.samples[k + 1]);
        CHECK(out.samples[k] == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(out.duration_s() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("resample rejects non-finite samples naming the index") {
    std::vector<double> v(10, 1.0);
    v[4] = std::nan("");
    try {
        resample(make_series(10.0, v), 5.0);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("index 4") != std::string::npos);
    }
    CHECK_THROWS_AS(resample(make_series(10.0, {1.0, 2.0}), 0.0), ParamError);
}

TEST_CASE("bandpass kills DC") {
    const TimeSeries dc = make_series(125.0, std::vector<double>(125 * 20, 3.7));
    const TimeSeries out = bandpass(dc, 0.5, 12.0);
    REQUIRE(out.samples.size() == dc.samples.size());
    const auto skip = static_cast<std::size_t>(2.0 * 125.0);
    for (std::size_t i = skip; i + skip < out.samples.size(); ++i) {
        CHECK(std::fabs(out.samples[i]) < 1e-6);
    }
}

TEST_CASE("bandpass preserves an in-band tone and rejects an out-of-band one") {
    const double fs = 125.0;
    const TimeSeries in_band = sinusoid(fs, 30.0, 1.0);
    const TimeSeries out1 = bandpass(in_band, 0.5, 12.0);
    double peak1 = 0.0;
    const auto skip = static_cast<std::size_t>(3.0 * fs);
    for (std::size_t i = skip; i + skip < out1.samples.size(); ++i) {
        peak1 = std::max(peak1, std::fabs(out1.samples[i]));
    }
    CHECK(peak1 == doctest::Approx(1.0).epsilon(0.02));

    const TimeSeries out_band = sinusoid(fs, 30.0, 30.0);
    const TimeSeries out2 = bandpass(out_band, 0.5, 12.0);
    double peak2 = 0.0;
    for (std::size_t i = skip; i + skip < out2.samples.size(); ++i) {
        peak2 = std::max(peak2, std::fabs(out2.samples[i]));
    }
    CHECK(peak2 < 0.05);
}

TEST_CASE("bandpass parameter and length errors") {
    const TimeSeries ts = sinusoid(100.0, 10.0, 1.0);
    CHECK_THROWS_AS(bandpass(ts, 0.5, 50.0), ParamError);   // at Nyquist
    CHECK_THROWS_AS(bandpass(ts, 12.0, 0.5), ParamError);   // inverted band
    const TimeSeries tiny = make_series(100.0, std::vector<double>(20, 1.0));
    CHECK_THROWS_AS(bandpass(tiny, 0.5, 12.0), DataError);
}

TEST_CASE("detect_peaks finds nothing on a flat series") {
    const TimeSeries flat = make_series(125.0, std::vector<double>(1000, 0.0));
    CHECK(detect_peaks(flat, 0.3, 0.1).size() == 0);
}

TEST_CASE("detect_peaks recovers a 60 bpm pulse train") {
    Rng rng(11);
    const auto train = testsupport::make_beat_train(10.0, 1.0, 0.0, rng);
    const TimeSeries ppg = testsupport::make_ppg(train, 10.0, 125.0);
    const PeakList peaks = detect_peaks(ppg, 0.5, 2.0);
    CHECK(peaks.size() >= 9);
    CHECK(peaks.size() <= 11);
    double gap_sum = 0.0;
    for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
        gap_sum += peaks.times[i + 1] - peaks.times[i];
    }
    const double mean_gap_ms = gap_sum / static_cast<double>(peaks.size() - 1) * 1000.0;
    CHECK(mean_gap_ms == doctest::Approx(1000.0).epsilon(0.008));
}

TEST_CASE("detect_peaks min-distance keeps the taller of two close peaks") {
    const double fs = 100.0;
    std::vector<double> v(200, 0.0);
    // Two bumps 0.3 s apart, second one taller.
    for (int i = -5; i <= 5; ++i) {
        v[static_cast<std::size_t>(50 + i)] += 1.0 * std::exp(-0.5 * (i / 2.0) * (i / 2.0));
        v[static_cast<std::size_t>(80 + i)] += 1.5 * std::exp(-0.5 * (i / 2.0) * (i / 2.0));
    }
    const PeakList peaks = detect_peaks(make_series(fs, v), 0.5, 0.2);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks.indices[0] == 80);
}

TEST_CASE("detect_peaks respects min distance and ordering on random signals") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(500);
        for (double& x : v) x = rng.gaussian();
        const double min_dist = 0.05 + 0.2 * rng.uniform();
        const TimeSeries ts = make_series(100.0, v);
        const PeakList peaks = detect_peaks(ts, min_dist, 0.1);
        for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
            CHECK(peaks.indices[i] < peaks.indices[i + 1]);
            CHECK(peaks.times[i + 1] - peaks.times[i] >= min_dist - 1e-9);
        }
        for (std::size_t idx : peaks.indices) CHECK(idx < ts.samples.size());
    }
}

TEST_CASE("peaks_to_ibi on a uniform train") {
    PeakList peaks;
    peaks.times = {0.0, 1.0, 2.0, 3.0};
    peaks.indices = {0, 100, 200, 300};
    const IbiSeries ibi = peaks_to_ibi(peaks);
    REQUIRE(ibi.size() == 3);
    for (double v : ibi.intervals_ms) CHECK(v == doctest::Approx(1000.0));
    CHECK(ibi.rejected_count == 0);
}

TEST_CASE("peaks_to_ibi rejects a 100 ms artifact interval") {
    PeakList peaks;
    peaks.times = {0.0, 1.0, 1.1, 2.1};
    peaks.indices = {0, 100, 110, 210};
    const IbiSeries ibi = peaks_to_ibi(peaks);
    CHECK(ibi.size() == 2);
    CHECK(ibi.rejected_count == 1);
    for (double v : ibi.intervals_ms) CHECK(v == doctest::Approx(1000.0));
}

TEST_CASE("peaks_to_ibi boundary cases") {
    PeakList one;
    one.times = {1.0};
    one.indices = {100};
    const IbiSeries empty = peaks_to_ibi(one);
    CHECK(empty.empty());
    CHECK(empty.rejected_count == 0);

    // Gate invariant on random jittered trains.
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        PeakList peaks;
        double t = 0.0;
        for (int i = 0; i < 50; ++i) {
            t += 0.2 + 1.9 * rng.uniform();
            peaks.times.push_back(t);
            peaks.indices.push_back(static_cast<std::size_t>(t * 1000));
        }
        const IbiSeries ibi = peaks_to_ibi(peaks);
        for (double v : ibi.intervals_ms) {
            CHECK(v >= 300.0);
            CHECK(v <= 2000.0);
        }
        CHECK(ibi.size() + ibi.rejected_count == peaks.size() - 1);
    }
}

TEST_CASE("perfusion_index of a sinusoid on a 100 baseline") {
    const TimeSeries ppg = sinusoid(125.0, 10.0, 1.0, 10.0, 100.0);
    const PeakList peaks = detect_peaks(ppg, 0.5, 5.0);
    REQUIRE(peaks.size() >= 2);
    const double pi_value = perfusion_index(ppg, peaks);
    CHECK(pi_value == doctest::Approx(0.200).epsilon(0.025));
}

TEST_CASE("perfusion_index preconditions") {
    const TimeSeries flat = make_series(125.0, std::vector<double>(1000, 100.0));
    const PeakList none = detect_peaks(flat, 0.5, 1.0);
    CHECK(none.size() == 0);
    CHECK_THROWS_AS(perfusion_index(flat, none), DataError);

    // Negative baseline is a domain error.
    TimeSeries neg = sinusoid(125.0, 10.0, 1.0, 1.0, -5.0);
    const PeakList peaks = detect_peaks(neg, 0.5, 0.5);
    REQUIRE(peaks.size() >= 2);
    CHECK_THROWS_AS(perfusion_index(neg, peaks), DomainError);
}

TEST_CASE("perfusion_index is scale invariant") {
    Rng rng(17);
    const auto train = testsupport::make_beat_train(20.0, 0.9, 15.0, rng);
    const TimeSeries ppg = testsupport::make_ppg(train, 20.0, 125.0);
    const PeakList peaks = detect_peaks(ppg, 0.3, 2.0);
    REQUIRE(peaks.size() > 2);
    const double base = perfusion_index(ppg, peaks);
    for (double k : {0.5, 2.0, 17.0}) {
        TimeSeries scaled = ppg;
        for (double& v : scaled.samples) v *= k;
        CHECK(perfusion_index(scaled, peaks) == doctest::Approx(base).epsilon(1e-12));
    }
}
