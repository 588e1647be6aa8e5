#include "nvicore/time_series.hpp"

#include <cmath>
#include <string>

#include "nvicore/errors.hpp"

namespace nvi {

void TimeSeries::validate() const {
    if (fs <= 0.0) throw ParamError("TimeSeries: fs must be > 0, got " + std::to_string(fs));
    if (samples.empty()) throw DataError("TimeSeries: no samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i])) {
            throw DataError("TimeSeries: non-finite sample at index " + std::to_string(i));
        }
    }
}

double IbiSeries::covered_duration_s() const {
    if (intervals_ms.empty()) return 0.0;
    const double first = onset_times_s.front();
    const double last = onset_times_s.back() + intervals_ms.back() / 1000.0;
    return last - first;
}

} // namespace nvi
