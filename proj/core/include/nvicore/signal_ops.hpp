#pragma once

#include "nvicore/time_series.hpp"

namespace nvi {

// Linear-interpolation resampling. Equal rates return an exact copy, so the
// operation is idempotent bit-for-bit.
TimeSeries resample(const TimeSeries& ts, double target_fs);

// Zero-phase (forward-backward) Butterworth band-pass, 4th-order prototype
// (8 poles). Output length equals input length. Requires
// 0 < lo < hi < fs/2 and at least 24 samples.
TimeSeries bandpass(const TimeSeries& ts, double lo_hz, double hi_hz);

// Local maxima with topographic prominence >= min_prominence, greedily
// thinned so surviving peaks are >= min_distance_s apart (taller peak wins).
// A flat or empty signal yields an empty PeakList.
PeakList detect_peaks(const TimeSeries& ts, double min_distance_s,
                      double min_prominence);

// Successive peak-time differences in ms, gated to [300, 2000] ms; an
// interval that jumps > 20 % AND > 200 ms from the previous retained one is
// also rejected. Fewer than 2 peaks give an empty series, rejected_count 0.
IbiSeries peaks_to_ibi(const PeakList& peaks);

// Perfusion index AC/DC: AC is the mean per-beat peak-to-trough amplitude
// (trough = minimum between consecutive peaks), DC the mean of the raw
// series. Needs >= 2 peaks and a positive DC baseline.
double perfusion_index(const TimeSeries& ts, const PeakList& peaks);

} // namespace nvi
