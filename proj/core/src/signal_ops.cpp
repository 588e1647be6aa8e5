#include "nvicore/signal_ops.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

#include "nvicore/errors.hpp"

namespace nvi {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Biquad {
    double b0, b1, b2, a1, a2;  // a0 normalized to 1
};

// Direct form II transposed over one section, zero initial state.
void run_biquad(const Biquad& s, std::vector<double>& x) {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : x) {
        const double out = s.b0 * v + z1;
        z1 = s.b1 * v - s.a1 * out + z2;
        z2 = s.b2 * v - s.a2 * out;
        v = out;
    }
}

// Butterworth band-pass as second-order sections via the analog prototype,
// lowpass->bandpass transform and bilinear mapping with pre-warped edges.
// Prototype order 4 gives an 8-pole filter.
std::vector<Biquad> design_butter_bandpass(double lo_hz, double hi_hz, double fs) {
    using cplx = std::complex<double>;
    constexpr int order = 4;

    const double fs2 = 2.0 * fs;
    const double wl = fs2 * std::tan(kPi * lo_hz / fs);
    const double wh = fs2 * std::tan(kPi * hi_hz / fs);
    const double w0 = std::sqrt(wl * wh);
    const double bw = wh - wl;

    // Analog band-pass poles: each prototype pole expands into a pair.
    std::vector<cplx> apoles;
    apoles.reserve(2 * order);
    for (int k = 0; k < order; ++k) {
        const double theta = kPi * (2.0 * k + order + 1.0) / (2.0 * order);
        const cplx p = std::polar(1.0, theta);  // unit-circle LHP prototype pole
        const cplx pb = p * (bw / 2.0);
        const cplx disc = std::sqrt(pb * pb - w0 * w0);
        apoles.push_back(pb + disc);
        apoles.push_back(pb - disc);
    }

    // Bilinear transform. Analog zeros sit at s=0 (order of them); the
    // remaining zeros come from s=infinity and land at z=-1.
    std::vector<cplx> zpoles, zzeros;
    zpoles.reserve(apoles.size());
    for (const cplx& s : apoles) zpoles.push_back((fs2 + s) / (fs2 - s));
    for (int k = 0; k < order; ++k) {
        zzeros.push_back(cplx(1.0, 0.0));
        zzeros.push_back(cplx(-1.0, 0.0));
    }

    // Unity gain at the (warped) geometric center frequency.
    const double theta_c = 2.0 * std::atan(w0 / fs2);
    const cplx zc = std::polar(1.0, theta_c);
    cplx h(1.0, 0.0);
    for (const cplx& z : zzeros) h *= (zc - z);
    for (const cplx& p : zpoles) h /= (zc - p);
    const double gain = 1.0 / std::abs(h);

    // Pair conjugate poles into sections; each section takes one zero at
    // z=+1 and one at z=-1 plus an even share of the gain.
    std::vector<cplx> upper;
    for (const cplx& p : zpoles) {
        if (p.imag() > 1e-14) upper.push_back(p);
    }
    std::vector<Biquad> sos;
    if (upper.size() == static_cast<std::size_t>(order)) {
        const double g = std::pow(gain, 1.0 / order);
        for (const cplx& p : upper) {
            Biquad s{};
            s.b0 = g;
            s.b1 = 0.0;
            s.b2 = -g;
            s.a1 = -2.0 * p.real();
            s.a2 = std::norm(p);
            sos.push_back(s);
        }
    } else {
        // Real poles appear for extreme band placements: pair them in order.
        std::vector<cplx> reals;
        for (const cplx& p : zpoles) {
            if (std::abs(p.imag()) <= 1e-14) reals.push_back(p);
        }
        std::sort(reals.begin(), reals.end(),
                  [](const cplx& a, const cplx& b) { return a.real() < b.real(); });
        std::vector<std::pair<cplx, cplx>> pairs;
        for (const cplx& p : upper) pairs.emplace_back(p, std::conj(p));
        for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
            pairs.emplace_back(reals[i], reals[i + 1]);
        }
        const double g = std::pow(gain, 1.0 / static_cast<double>(pairs.size()));
        for (const auto& [p1, p2] : pairs) {
            Biquad s{};
            s.b0 = g;
            s.b1 = 0.0;
            s.b2 = -g;
            s.a1 = -(p1 + p2).real();
            s.a2 = (p1 * p2).real();
            sos.push_back(s);
        }
    }
    return sos;
}

void run_cascade(const std::vector<Biquad>& sos, std::vector<double>& x) {
    for (const Biquad& s : sos) run_biquad(s, x);
}

} // namespace

TimeSeries resample(const TimeSeries& ts, double target_fs) {
    ts.validate();
    if (target_fs <= 0.0) {
        throw ParamError("resample: target_fs must be > 0, got " + std::to_string(target_fs));
    }
    TimeSeries out;
    out.fs = target_fs;
    out.t0 = ts.t0;
    out.label = ts.label;
    out.units = ts.units;
    if (target_fs == ts.fs) {
        out.samples = ts.samples;  // bit-exact identity keeps the op idempotent
        return out;
    }

    const std::size_t n = ts.samples.size();
    const double duration = static_cast<double>(n - 1) / ts.fs;
    const std::size_t out_len =
        static_cast<std::size_t>(std::floor(duration * target_fs + 1e-9)) + 1;
    out.samples.resize(out_len);
    for (std::size_t k = 0; k < out_len; ++k) {
        const double pos = (static_cast<double>(k) / target_fs) * ts.fs;
        const auto i0 = static_cast<std::size_t>(pos);
        if (i0 + 1 >= n) {
            out.samples[k] = ts.samples[n - 1];
            continue;
        }
        const double frac = pos - static_cast<double>(i0);
        out.samples[k] = ts.samples[i0] + frac * (ts.samples[i0 + 1] - ts.samples[i0]);
    }
    return out;
}

TimeSeries bandpass(const TimeSeries& ts, double lo_hz, double hi_hz) {
    ts.validate();
    const double nyquist = ts.fs / 2.0;
    if (!(lo_hz > 0.0) || !(lo_hz < hi_hz)) {
        throw ParamError("bandpass: need 0 < lo < hi, got [" + std::to_string(lo_hz) +
                         ", " + std::to_string(hi_hz) + "]");
    }
    if (hi_hz >= nyquist) {
        throw ParamError("bandpass: hi " + std::to_string(hi_hz) +
                         " Hz must be below Nyquist " + std::to_string(nyquist) + " Hz");
    }
    constexpr std::size_t kMinLen = 24;  // 3x the 8-pole filter order
    if (ts.samples.size() < kMinLen) {
        throw DataError("bandpass: series of " + std::to_string(ts.samples.size()) +
                        " samples is shorter than " + std::to_string(kMinLen));
    }

    const auto sos = design_butter_bandpass(lo_hz, hi_hz, ts.fs);

    // Mean removal plus odd-extension padding keep start/end transients small;
    // the pass band is unaffected since DC is outside it anyway.
    const std::size_t n = ts.samples.size();
    const double mean = std::accumulate(ts.samples.begin(), ts.samples.end(), 0.0) /
                        static_cast<double>(n);
    const std::size_t pad = std::min<std::size_t>(kMinLen, n - 1);

    std::vector<double> work(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) {
        work[i] = -(ts.samples[pad - i] - mean);
        work[pad + n + i] = -(ts.samples[n - 2 - i] - mean);
    }
    for (std::size_t i = 0; i < n; ++i) work[pad + i] = ts.samples[i] - mean;

    run_cascade(sos, work);
    std::reverse(work.begin(), work.end());
    run_cascade(sos, work);
    std::reverse(work.begin(), work.end());

    TimeSeries out;
    out.fs = ts.fs;
    out.t0 = ts.t0;
    out.label = ts.label;
    out.units = ts.units;
    out.samples.assign(work.begin() + static_cast<std::ptrdiff_t>(pad),
                       work.begin() + static_cast<std::ptrdiff_t>(pad + n));
    return out;
}

PeakList detect_peaks(const TimeSeries& ts, double min_distance_s, double min_prominence) {
    ts.validate();
    if (min_distance_s <= 0.0) {
        throw ParamError("detect_peaks: min_distance_s must be > 0");
    }
    const auto& x = ts.samples;
    const std::size_t n = x.size();
    PeakList out;
    if (n < 3) return out;

    // Local maxima; a plateau counts once, at its left edge.
    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (x[i] > x[i - 1] && x[i] >= x[i + 1]) candidates.push_back(i);
    }

    // Topographic prominence: drop to the highest of the two base minima,
    // where each base extends to the nearest strictly higher sample or edge.
    std::vector<std::size_t> prominent;
    for (std::size_t i : candidates) {
        double left_min = x[i];
        for (std::size_t j = i; j-- > 0;) {
            if (x[j] > x[i]) break;
            left_min = std::min(left_min, x[j]);
        }
        double right_min = x[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            if (x[j] > x[i]) break;
            right_min = std::min(right_min, x[j]);
        }
        if (x[i] - std::max(left_min, right_min) >= min_prominence) {
            prominent.push_back(i);
        }
    }

    // Greedy thinning, tallest first; on equal height the earlier peak wins.
    std::vector<std::size_t> order(prominent.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[prominent[a]] != x[prominent[b]]) return x[prominent[a]] > x[prominent[b]];
        return prominent[a] < prominent[b];
    });
    const auto min_gap = static_cast<std::size_t>(
        std::ceil(min_distance_s * ts.fs - 1e-9));
    std::vector<std::size_t> kept;
    for (std::size_t oi : order) {
        const std::size_t idx = prominent[oi];
        bool ok = true;
        for (std::size_t k : kept) {
            const std::size_t gap = (idx > k) ? idx - k : k - idx;
            if (gap < min_gap) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(idx);
    }
    std::sort(kept.begin(), kept.end());

    out.indices = std::move(kept);
    out.times.reserve(out.indices.size());
    for (std::size_t idx : out.indices) out.times.push_back(ts.time_at(idx));
    return out;
}

IbiSeries peaks_to_ibi(const PeakList& peaks) {
    IbiSeries out;
    if (peaks.size() < 2) return out;

    double prev_retained = -1.0;
    for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
        const double dt_ms = (peaks.times[i + 1] - peaks.times[i]) * 1000.0;
        bool keep = dt_ms >= 300.0 && dt_ms <= 2000.0;
        if (keep && prev_retained > 0.0) {
            const double jump = std::abs(dt_ms - prev_retained);
            if (jump > 0.2 * prev_retained && jump > 200.0) keep = false;
        }
        if (keep) {
            out.intervals_ms.push_back(dt_ms);
            out.onset_times_s.push_back(peaks.times[i]);
            prev_retained = dt_ms;
        } else {
            ++out.rejected_count;
        }
    }
    return out;
}

double perfusion_index(const TimeSeries& ts, const PeakList& peaks) {
    ts.validate();
    if (peaks.size() < 2) {
        throw DataError("perfusion_index: need >= 2 peaks, got " +
                        std::to_string(peaks.size()));
    }
    const auto& x = ts.samples;
    const double dc = std::accumulate(x.begin(), x.end(), 0.0) /
                      static_cast<double>(x.size());
    if (dc <= 0.0) {
        throw DomainError("perfusion_index: DC baseline must be positive, got " +
                          std::to_string(dc));
    }
    double ac_sum = 0.0;
    std::size_t beats = 0;
    for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
        const std::size_t a = peaks.indices[i];
        const std::size_t b = peaks.indices[i + 1];
        double trough = x[a];
        for (std::size_t j = a; j <= b; ++j) trough = std::min(trough, x[j]);
        ac_sum += x[a] - trough;
        ++beats;
    }
    return (ac_sum / static_cast<double>(beats)) / dc;
}

} // namespace nvi
