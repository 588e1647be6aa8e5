#pragma once

#include <string>
#include <vector>

namespace nvi {

// Uniformly sampled single-channel waveform. fs must be positive, samples
// non-empty and finite; validate() enforces both.
struct TimeSeries {
    double fs = 0.0;                // sampling rate, Hz
    double t0 = 0.0;                // start time, seconds
    std::vector<double> samples;
    std::string label;              // channel name
    std::string units;

    std::size_t size() const { return samples.size(); }
    double duration_s() const {
        return samples.empty() ? 0.0 : static_cast<double>(samples.size() - 1) / fs;
    }
    double time_at(std::size_t idx) const { return t0 + static_cast<double>(idx) / fs; }

    // Throws ParamError / DataError; DataError names the first bad index.
    void validate() const;
};

// Detected pulse/R peaks. Indices strictly increasing, all inside the series.
struct PeakList {
    std::vector<std::size_t> indices;
    std::vector<double> times;      // seconds, t0 + idx/fs

    std::size_t size() const { return indices.size(); }
};

// Inter-beat intervals in ms plus the onset time of each retained interval.
// Retained intervals have already passed the artifact gate.
struct IbiSeries {
    std::vector<double> intervals_ms;
    std::vector<double> onset_times_s;  // one per interval
    std::size_t rejected_count = 0;

    std::size_t size() const { return intervals_ms.size(); }
    bool empty() const { return intervals_ms.empty(); }
    // Span between first and last beat covered by retained intervals.
    double covered_duration_s() const;
};

} // namespace nvi
