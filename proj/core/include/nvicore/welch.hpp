#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nvi {

// One-sided Welch power spectral density (units^2/Hz).
struct PsdEstimate {
    std::vector<double> freqs_hz;
    std::vector<double> power;
    double df_hz = 0.0;

    std::size_t size() const { return freqs_hz.size(); }
};

// Hann-windowed, 50 %-overlap Welch estimate. Each segment is detrended by
// its own mean; the FFT length is the segment length rounded up to the next
// power of two (zero-padded). nperseg == 0 uses the whole signal as one
// segment. Requires at least 8 samples.
PsdEstimate welch_psd(std::span<const double> x, double fs, std::size_t nperseg = 0);

// Rectangle-rule integral of the PSD over [lo_hz, hi_hz). Adjacent bands
// share no bins.
double band_power(const PsdEstimate& psd, double lo_hz, double hi_hz);

} // namespace nvi
