#pragma once

#include "nvicore/time_series.hpp"

namespace nvi {

// Time- and frequency-domain variability metrics from an interval series.
// `valid` is set when the intervals cover >= 30 s; `spectral_warning` when
// the LF/HF estimate is degenerate (no HF power or not enough data).
struct HrvMetrics {
    double rmssd_ms = 0.0;
    double sdnn_ms = 0.0;
    double lf_power_ms2 = 0.0;
    double hf_power_ms2 = 0.0;
    double lf_hf = 0.0;
    std::size_t n_intervals = 0;
    double duration_s = 0.0;
    bool valid = false;
    bool spectral_warning = false;
};

struct LfHfResult {
    double lf_power_ms2 = 0.0;
    double hf_power_ms2 = 0.0;
    double ratio = 0.0;      // +infinity when hf_power is zero
    bool warning = false;
};

// sqrt(mean of squared successive differences), ms. Needs >= 2 intervals.
double rmssd(const IbiSeries& ibi);

// Sample standard deviation (n-1 divisor) of the intervals, ms.
double sdnn(const IbiSeries& ibi);

// Tachogram linearly interpolated to a uniform 4 Hz grid, mean removed;
// Welch PSD with 120 s segments (or the full record if shorter) and 50 %
// overlap; LF = 0.04-0.15 Hz, HF = 0.15-0.40 Hz. Requires >= 120 s of
// covered duration.
LfHfResult lf_hf(const IbiSeries& ibi);

// All metrics from an interval series. rmssd/sdnn need >= 2 intervals;
// the spectral part is computed only when >= 120 s are covered, otherwise
// it is zeroed and spectral_warning is set.
HrvMetrics metrics_from_ibi(const IbiSeries& ibi);

// PPG pulse-rate variability: bandpass(0.5, 12) -> detect_peaks ->
// peaks_to_ibi -> metrics_from_ibi, with the detector defaults below.
// Requires >= 60 s of signal.
HrvMetrics prv_from_ppg(const TimeSeries& ppg);

// Pulse-peak detector defaults used by the PPG path: refractory distance in
// seconds and prominence as a fraction of the filtered signal's SD.
inline constexpr double kPpgPeakMinDistance_s = 0.3;
inline constexpr double kPpgPeakProminenceSdFraction = 0.5;

inline constexpr double kLfLo_hz = 0.04;
inline constexpr double kLfHi_hz = 0.15;
inline constexpr double kHfLo_hz = 0.15;
inline constexpr double kHfHi_hz = 0.40;
inline constexpr double kTachogramFs_hz = 4.0;

} // namespace nvi
