#include "nvicore/hrv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nvicore/errors.hpp"
#include "nvicore/signal_ops.hpp"
#include "nvicore/welch.hpp"

namespace nvi {

namespace {

void require_intervals(const IbiSeries& ibi, std::size_t min_count, const char* op) {
    if (ibi.size() < min_count) {
        throw DataError(std::string(op) + ": need >= " + std::to_string(min_count) +
                        " intervals, got " + std::to_string(ibi.size()));
    }
}

// Linear interpolation of (onset_time, interval) samples onto a 4 Hz grid.
std::vector<double> tachogram_4hz(const IbiSeries& ibi) {
    const auto& t = ibi.onset_times_s;
    const auto& v = ibi.intervals_ms;
    const double span = t.back() - t.front();
    const auto count = static_cast<std::size_t>(std::floor(span * kTachogramFs_hz)) + 1;
    std::vector<double> grid(count);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const double tk = t.front() + static_cast<double>(k) / kTachogramFs_hz;
        while (seg + 2 < t.size() && t[seg + 1] < tk) ++seg;
        const double t0 = t[seg], t1 = t[seg + 1];
        const double frac = (t1 > t0) ? std::clamp((tk - t0) / (t1 - t0), 0.0, 1.0) : 0.0;
        grid[k] = v[seg] + frac * (v[seg + 1] - v[seg]);
    }
    return grid;
}

} // namespace

double rmssd(const IbiSeries& ibi) {
    require_intervals(ibi, 2, "rmssd");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < ibi.size(); ++i) {
        const double d = ibi.intervals_ms[i + 1] - ibi.intervals_ms[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(ibi.size() - 1));
}

double sdnn(const IbiSeries& ibi) {
    require_intervals(ibi, 2, "sdnn");
    const auto n = static_cast<double>(ibi.size());
    double mean = 0.0;
    for (double v : ibi.intervals_ms) mean += v;
    mean /= n;
    double acc = 0.0;
    for (double v : ibi.intervals_ms) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / (n - 1.0));
}

LfHfResult lf_hf(const IbiSeries& ibi) {
    require_intervals(ibi, 2, "lf_hf");
    if (ibi.covered_duration_s() < 120.0) {
        throw DataError("lf_hf: need >= 120 s of intervals, have " +
                        std::to_string(ibi.covered_duration_s()) + " s");
    }
    const auto tacho = tachogram_4hz(ibi);
    const auto nperseg = std::min<std::size_t>(
        tacho.size(), static_cast<std::size_t>(120.0 * kTachogramFs_hz));
    const auto psd = welch_psd(tacho, kTachogramFs_hz, nperseg);

    LfHfResult out;
    out.lf_power_ms2 = band_power(psd, kLfLo_hz, kLfHi_hz);
    out.hf_power_ms2 = band_power(psd, kHfLo_hz, kHfHi_hz);
    if (out.hf_power_ms2 <= 0.0) {
        out.ratio = std::numeric_limits<double>::infinity();
        out.warning = true;
    } else {
        out.ratio = out.lf_power_ms2 / out.hf_power_ms2;
        // A spectrum this empty means the tachogram was essentially constant.
        if (out.lf_power_ms2 + out.hf_power_ms2 < 1e-9) out.warning = true;
    }
    return out;
}

HrvMetrics metrics_from_ibi(const IbiSeries& ibi) {
    HrvMetrics m;
    m.rmssd_ms = rmssd(ibi);
    m.sdnn_ms = sdnn(ibi);
    m.n_intervals = ibi.size();
    m.duration_s = ibi.covered_duration_s();
    m.valid = m.duration_s >= 30.0;
    if (m.duration_s >= 120.0) {
        const LfHfResult s = lf_hf(ibi);
        m.lf_power_ms2 = s.lf_power_ms2;
        m.hf_power_ms2 = s.hf_power_ms2;
        m.lf_hf = s.ratio;
        m.spectral_warning = s.warning;
    } else {
        m.spectral_warning = true;
    }
    return m;
}

HrvMetrics prv_from_ppg(const TimeSeries& ppg) {
    ppg.validate();
    if (ppg.duration_s() < 60.0) {
        throw DataError("prv_from_ppg: need >= 60 s of PPG, have " +
                        std::to_string(ppg.duration_s()) + " s");
    }
    const TimeSeries filtered = bandpass(ppg, 0.5, 12.0);
    double mean = 0.0;
    for (double v : filtered.samples) mean += v;
    mean /= static_cast<double>(filtered.samples.size());
    double var = 0.0;
    for (double v : filtered.samples) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(filtered.samples.size()));

    const PeakList peaks = detect_peaks(filtered, kPpgPeakMinDistance_s,
                                        kPpgPeakProminenceSdFraction * sd);
    const IbiSeries ibi = peaks_to_ibi(peaks);
    return metrics_from_ibi(ibi);
}

} // namespace nvi
