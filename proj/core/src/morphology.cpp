#include "nvicore/morphology.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nvicore/errors.hpp"
#include "nvicore/welch.hpp"

namespace nvi {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> v) {
    if (v.empty()) return kNan;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_sd(const std::vector<double>& v) {
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

// Per-beat scalars; the aggregate across beats is the median of each.
struct BeatScalars {
    double rise_time_s, fall_time_s, rise_fall_ratio;
    double pulse_width_s, width50_s, peak_position;
    double pulse_area, area_ratio, amplitude;
    double augmentation_index, notch_ratio;
    double skewness, kurtosis;
};

BeatScalars beat_scalars(const BeatSegment& beat) {
    const auto& y = beat.samples;
    const std::size_t n = y.size();
    const std::size_t pk = beat.peak_index;
    const double fs = beat.fs;

    BeatScalars s{};
    s.rise_time_s = static_cast<double>(pk) / fs;
    s.fall_time_s = static_cast<double>(n - 1 - pk) / fs;
    s.rise_fall_ratio = (s.fall_time_s > 0.0) ? s.rise_time_s / s.fall_time_s : 0.0;
    s.pulse_width_s = static_cast<double>(n - 1) / fs;
    s.peak_position = static_cast<double>(pk) / static_cast<double>(n - 1);

    // Baseline: straight line between the bounding troughs.
    auto baseline_at = [&](std::size_t i) {
        const double frac = static_cast<double>(i) / static_cast<double>(n - 1);
        return y.front() + frac * (y.back() - y.front());
    };
    std::vector<double> rel(n);
    for (std::size_t i = 0; i < n; ++i) rel[i] = y[i] - baseline_at(i);
    const double amp = rel[pk];
    s.amplitude = amp;

    double area = 0.0, area_systolic = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double trap = 0.5 * (rel[i] + rel[i + 1]) / fs;
        area += trap;
        if (i < pk) area_systolic += trap;
    }
    s.pulse_area = area;
    s.area_ratio = (area != 0.0) ? area_systolic / area : 0.0;

    // Width at half the peak amplitude, linearly interpolated crossings.
    s.width50_s = 0.0;
    if (amp > 0.0) {
        const double level = 0.5 * amp;
        double t_up = 0.0, t_down = static_cast<double>(n - 1);
        for (std::size_t i = 0; i < pk; ++i) {
            if (rel[i] <= level && rel[i + 1] > level) {
                t_up = static_cast<double>(i) + (level - rel[i]) / (rel[i + 1] - rel[i]);
            }
        }
        for (std::size_t i = pk; i + 1 < n; ++i) {
            if (rel[i] >= level && rel[i + 1] < level) {
                t_down = static_cast<double>(i) + (rel[i] - level) / (rel[i] - rel[i + 1]);
                break;
            }
        }
        s.width50_s = std::max(0.0, (t_down - t_up) / fs);
    }

    // Reflection wave: tallest local maximum on the falling limb. The notch
    // is the minimum between the primary and secondary peak. Both are 0 when
    // no secondary peak exists.
    s.augmentation_index = 0.0;
    s.notch_ratio = 0.0;
    std::size_t sec = 0;
    double sec_amp = 0.0;
    for (std::size_t i = pk + 1; i + 1 < n; ++i) {
        if (y[i] > y[i - 1] && y[i] >= y[i + 1] && rel[i] > sec_amp) {
            sec = i;
            sec_amp = rel[i];
        }
    }
    if (sec != 0 && amp > 0.0) {
        s.augmentation_index = sec_amp / amp;
        double notch = rel[pk];
        for (std::size_t i = pk; i <= sec; ++i) notch = std::min(notch, rel[i]);
        s.notch_ratio = std::max(0.0, notch) / amp;
    }

    // Temporal moments of the beat treated as a density over time: mass
    // early with a long tail to the right gives positive skewness.
    double mass = 0.0;
    for (double v : rel) mass += std::max(0.0, v);
    if (mass > 0.0) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += std::max(0.0, rel[i]) / mass * static_cast<double>(i);
        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::max(0.0, rel[i]) / mass;
            const double d = static_cast<double>(i) - mu;
            m2 += p * d * d;
            m3 += p * d * d * d;
            m4 += p * d * d * d * d;
        }
        const double sd = std::sqrt(m2);
        s.skewness = (sd > 0.0) ? m3 / (sd * sd * sd) : 0.0;
        s.kurtosis = (m2 > 0.0) ? m4 / (m2 * m2) - 3.0 : 0.0;
    } else {
        s.skewness = 0.0;
        s.kurtosis = 0.0;
    }
    return s;
}

} // namespace

void FeatureVector::set(const std::string& name, double value) {
    for (auto& [n, v] : items_) {
        if (n == name) {
            v = value;
            return;
        }
    }
    items_.emplace_back(name, value);
}

void FeatureVector::set_missing(const std::string& name) { set(name, kNan); }

bool FeatureVector::has(const std::string& name) const {
    for (const auto& [n, v] : items_) {
        if (n == name) return std::isfinite(v);
    }
    return false;
}

double FeatureVector::get(const std::string& name) const {
    for (const auto& [n, v] : items_) {
        if (n == name) return v;
    }
    throw DataError("FeatureVector: no feature named '" + name + "'");
}

void FeatureVector::merge(const FeatureVector& other) {
    for (const auto& [n, v] : other.items_) set(n, v);
}

const std::vector<std::string>& FeatureVector::morph_registry() {
    static const std::vector<std::string> reg = {
        "morph_rise_time_s",    "morph_fall_time_s",   "morph_rise_fall_ratio",
        "morph_pulse_width_s",  "morph_width50_s",     "morph_peak_position",
        "morph_pulse_area",     "morph_area_ratio",    "morph_amplitude",
        "morph_augmentation_index", "morph_notch_ratio",
        "morph_skewness",       "morph_kurtosis",      "morph_ibi_cv",
    };
    return reg;
}

const std::vector<std::string>& FeatureVector::freq_registry() {
    static const std::vector<std::string> reg = {
        "freq_dominant_hz",      "freq_spectral_entropy", "freq_spectral_centroid_hz",
        "freq_spectral_spread_hz", "freq_rolloff85_hz",
        "freq_band_low_ratio",   "freq_band_cardiac_ratio",
    };
    return reg;
}

const std::vector<std::string>& FeatureVector::nonlinear_registry() {
    static const std::vector<std::string> reg = {
        "nl_sample_entropy", "nl_dfa_alpha", "nl_permutation_entropy",
    };
    return reg;
}

std::vector<BeatSegment> segment_beats(const TimeSeries& ppg, const PeakList& peaks) {
    ppg.validate();
    if (peaks.size() < 3) {
        throw DataError("segment_beats: need >= 3 peaks, got " + std::to_string(peaks.size()));
    }
    const auto& x = ppg.samples;

    // Trough between each consecutive peak pair (first index of the minimum).
    std::vector<std::size_t> troughs;
    troughs.reserve(peaks.size() - 1);
    for (std::size_t i = 0; i + 1 < peaks.size(); ++i) {
        std::size_t best = peaks.indices[i];
        for (std::size_t j = peaks.indices[i]; j <= peaks.indices[i + 1]; ++j) {
            if (x[j] < x[best]) best = j;
        }
        troughs.push_back(best);
    }

    std::vector<BeatSegment> beats;
    beats.reserve(troughs.size() - 1);
    for (std::size_t i = 0; i + 1 < troughs.size(); ++i) {
        BeatSegment beat;
        beat.fs = ppg.fs;
        beat.samples.assign(x.begin() + static_cast<std::ptrdiff_t>(troughs[i]),
                            x.begin() + static_cast<std::ptrdiff_t>(troughs[i + 1]) + 1);
        beat.peak_index = static_cast<std::size_t>(
            std::max_element(beat.samples.begin(), beat.samples.end()) - beat.samples.begin());
        beats.push_back(std::move(beat));
    }
    return beats;
}

FeatureVector morph_features(const std::vector<BeatSegment>& beats) {
    if (beats.empty()) throw DataError("morph_features: need >= 1 beat");

    std::vector<BeatScalars> per_beat;
    per_beat.reserve(beats.size());
    std::vector<double> durations;
    for (const auto& b : beats) {
        if (b.samples.size() < 3) continue;
        per_beat.push_back(beat_scalars(b));
        durations.push_back(static_cast<double>(b.samples.size() - 1) / b.fs);
    }
    if (per_beat.empty()) throw DataError("morph_features: no usable beats");

    auto med = [&](auto member) {
        std::vector<double> v;
        v.reserve(per_beat.size());
        for (const auto& s : per_beat) v.push_back(s.*member);
        return median(std::move(v));
    };

    FeatureVector fv;
    fv.set("morph_rise_time_s", med(&BeatScalars::rise_time_s));
    fv.set("morph_fall_time_s", med(&BeatScalars::fall_time_s));
    fv.set("morph_rise_fall_ratio", med(&BeatScalars::rise_fall_ratio));
    fv.set("morph_pulse_width_s", med(&BeatScalars::pulse_width_s));
    fv.set("morph_width50_s", med(&BeatScalars::width50_s));
    fv.set("morph_peak_position", med(&BeatScalars::peak_position));
    fv.set("morph_pulse_area", med(&BeatScalars::pulse_area));
    fv.set("morph_area_ratio", med(&BeatScalars::area_ratio));
    fv.set("morph_amplitude", med(&BeatScalars::amplitude));
    fv.set("morph_augmentation_index", med(&BeatScalars::augmentation_index));
    fv.set("morph_notch_ratio", med(&BeatScalars::notch_ratio));
    fv.set("morph_skewness", med(&BeatScalars::skewness));
    fv.set("morph_kurtosis", med(&BeatScalars::kurtosis));
    if (durations.size() >= 2) {
        const double m = mean_of(durations);
        double acc = 0.0;
        for (double d : durations) acc += (d - m) * (d - m);
        const double sd = std::sqrt(acc / static_cast<double>(durations.size() - 1));
        fv.set("morph_ibi_cv", (m > 0.0) ? sd / m : 0.0);
    } else {
        fv.set("morph_ibi_cv", 0.0);
    }
    return fv;
}

FeatureVector freq_features(const TimeSeries& ppg) {
    ppg.validate();
    if (ppg.duration_s() < 2.0) {
        throw DataError("freq_features: need >= 2 s of signal, have " +
                        std::to_string(ppg.duration_s()) + " s");
    }
    const auto nperseg = std::min<std::size_t>(ppg.samples.size(), 2048);
    const PsdEstimate psd = welch_psd(ppg.samples, ppg.fs, nperseg);

    // DC bin excluded everywhere: the segments are mean-detrended anyway.
    double total = 0.0;
    for (std::size_t k = 1; k < psd.size(); ++k) total += psd.power[k];

    FeatureVector fv;
    if (total <= 1e-20) {
        for (const auto& name : FeatureVector::freq_registry()) fv.set_missing(name);
        return fv;
    }

    std::size_t argmax = 1;
    double entropy = 0.0, centroid = 0.0;
    for (std::size_t k = 1; k < psd.size(); ++k) {
        const double p = psd.power[k] / total;
        if (psd.power[k] > psd.power[argmax]) argmax = k;
        if (p > 0.0) entropy -= p * std::log(p);
        centroid += p * psd.freqs_hz[k];
    }
    entropy /= std::log(static_cast<double>(psd.size() - 1));

    double spread = 0.0;
    for (std::size_t k = 1; k < psd.size(); ++k) {
        const double p = psd.power[k] / total;
        const double d = psd.freqs_hz[k] - centroid;
        spread += p * d * d;
    }

    double rolloff = psd.freqs_hz.back();
    double cum = 0.0;
    for (std::size_t k = 1; k < psd.size(); ++k) {
        cum += psd.power[k];
        if (cum >= 0.85 * total) {
            rolloff = psd.freqs_hz[k];
            break;
        }
    }

    double low = 0.0, cardiac = 0.0;
    for (std::size_t k = 1; k < psd.size(); ++k) {
        const double f = psd.freqs_hz[k];
        if (f < 0.5) low += psd.power[k];
        else if (f < 4.0) cardiac += psd.power[k];
    }

    fv.set("freq_dominant_hz", psd.freqs_hz[argmax]);
    fv.set("freq_spectral_entropy", entropy);
    fv.set("freq_spectral_centroid_hz", centroid);
    fv.set("freq_spectral_spread_hz", std::sqrt(spread));
    fv.set("freq_rolloff85_hz", rolloff);
    fv.set("freq_band_low_ratio", low / total);
    fv.set("freq_band_cardiac_ratio", cardiac / total);
    return fv;
}

namespace {

double sample_entropy(const std::vector<double>& x, double r) {
    const std::size_t n = x.size();
    constexpr std::size_t m = 2;
    std::size_t count_m = 0, count_m1 = 0;
    for (std::size_t i = 0; i + m < n; ++i) {
        for (std::size_t j = i + 1; j + m < n; ++j) {
            double d = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                d = std::max(d, std::abs(x[i + k] - x[j + k]));
            }
            if (d <= r) {
                ++count_m;
                if (std::abs(x[i + m] - x[j + m]) <= r) ++count_m1;
            }
        }
    }
    if (count_m == 0 || count_m1 == 0) return kNan;
    return -std::log(static_cast<double>(count_m1) / static_cast<double>(count_m));
}

double dfa_alpha(const std::vector<double>& x) {
    const std::size_t n = x.size();
    const double mean = mean_of(x);
    std::vector<double> profile(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i] - mean;
        profile[i] = acc;
    }

    // Log-spaced box sizes in [4, n/4].
    std::vector<std::size_t> sizes;
    const double lo = std::log(4.0), hi = std::log(static_cast<double>(n) / 4.0);
    constexpr int kSteps = 12;
    for (int i = 0; i <= kSteps; ++i) {
        const auto s = static_cast<std::size_t>(
            std::round(std::exp(lo + (hi - lo) * i / kSteps)));
        if (sizes.empty() || sizes.back() != s) sizes.push_back(s);
    }

    std::vector<double> log_s, log_f;
    for (std::size_t s : sizes) {
        const std::size_t boxes = n / s;
        if (boxes < 2) continue;
        double rss = 0.0;
        for (std::size_t b = 0; b < boxes; ++b) {
            // Least-squares line over the box, accumulate squared residuals.
            const std::size_t off = b * s;
            double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
            for (std::size_t i = 0; i < s; ++i) {
                const double xi = static_cast<double>(i);
                sx += xi;
                sy += profile[off + i];
                sxx += xi * xi;
                sxy += xi * profile[off + i];
            }
            const double ns = static_cast<double>(s);
            const double denom = ns * sxx - sx * sx;
            const double slope = (denom != 0.0) ? (ns * sxy - sx * sy) / denom : 0.0;
            const double icept = (sy - slope * sx) / ns;
            for (std::size_t i = 0; i < s; ++i) {
                const double resid = profile[off + i] - (icept + slope * static_cast<double>(i));
                rss += resid * resid;
            }
        }
        const double f = std::sqrt(rss / (static_cast<double>(boxes) * static_cast<double>(s)));
        if (f > 0.0) {
            log_s.push_back(std::log(static_cast<double>(s)));
            log_f.push_back(std::log(f));
        }
    }
    if (log_s.size() < 3) return kNan;

    const double mx = mean_of(log_s), my = mean_of(log_f);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < log_s.size(); ++i) {
        num += (log_s[i] - mx) * (log_f[i] - my);
        den += (log_s[i] - mx) * (log_s[i] - mx);
    }
    return num / den;
}

double permutation_entropy(const std::vector<double>& x) {
    const std::size_t n = x.size();
    // Order 3, lag 1: rank pattern of each consecutive triple, ties broken
    // by position (stable sort), 6 possible patterns.
    std::array<std::size_t, 6> counts{};
    std::size_t total = 0;
    for (std::size_t i = 0; i + 2 < n; ++i) {
        std::array<std::pair<double, int>, 3> v{{{x[i], 0}, {x[i + 1], 1}, {x[i + 2], 2}}};
        std::stable_sort(v.begin(), v.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        const int id = v[0].second * 2 + (v[1].second > v[2].second ? 1 : 0);
        counts[static_cast<std::size_t>(id)]++;
        ++total;
    }
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log(p);
    }
    return h / std::log(6.0);
}

} // namespace

FeatureVector nonlinear_features(const TimeSeries& ppg) {
    ppg.validate();
    if (ppg.samples.size() < 200) {
        throw DataError("nonlinear_features: need >= 200 samples, got " +
                        std::to_string(ppg.samples.size()));
    }
    FeatureVector fv;
    const double sd = population_sd(ppg.samples);
    if (sd == 0.0) {
        fv.set("nl_sample_entropy", 0.0);  // every template matches
        fv.set_missing("nl_dfa_alpha");
        fv.set_missing("nl_permutation_entropy");
        return fv;
    }
    const double se = sample_entropy(ppg.samples, 0.2 * sd);
    if (std::isfinite(se)) fv.set("nl_sample_entropy", se);
    else fv.set_missing("nl_sample_entropy");
    const double alpha = dfa_alpha(ppg.samples);
    if (std::isfinite(alpha)) fv.set("nl_dfa_alpha", alpha);
    else fv.set_missing("nl_dfa_alpha");
    fv.set("nl_permutation_entropy", permutation_entropy(ppg.samples));
    return fv;
}

std::vector<std::pair<std::string, double>> mutual_info_scores(
    const std::vector<FeatureColumn>& features, const std::vector<int>& labels) {
    const std::size_t n = labels.size();
    std::size_t n_pos = 0;
    for (int y : labels) {
        if (y != 0) ++n_pos;
    }
    if (n_pos < 2 || n - n_pos < 2) {
        throw DataError("mutual_info: need >= 2 samples per class (got " +
                        std::to_string(n_pos) + " positive of " + std::to_string(n) + ")");
    }
    for (const auto& col : features) {
        if (col.values.size() != n) {
            throw DataError("mutual_info: column '" + col.name + "' has " +
                            std::to_string(col.values.size()) + " rows, labels have " +
                            std::to_string(n));
        }
    }

    const auto n_bins = std::min<std::size_t>(
        10, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))));

    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(features.size());
    for (const auto& col : features) {
        // Equal-frequency edges from the sorted values, deduplicated.
        std::vector<double> sorted = col.values;
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> edges;
        for (std::size_t b = 1; b < n_bins; ++b) {
            const double e = sorted[b * n / n_bins];
            if (edges.empty() || e > edges.back()) edges.push_back(e);
        }
        auto bin_of = [&](double v) {
            std::size_t b = 0;
            for (double e : edges) {
                if (e < v) ++b;
                else break;
            }
            return b;
        };

        const std::size_t bins = edges.size() + 1;
        std::vector<double> joint(bins * 2, 0.0), px(bins, 0.0);
        double py[2] = {0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t b = bin_of(col.values[i]);
            const int y = labels[i] != 0 ? 1 : 0;
            joint[b * 2 + y] += 1.0;
            px[b] += 1.0;
            py[y] += 1.0;
        }
        double mi = 0.0;
        for (std::size_t b = 0; b < bins; ++b) {
            for (int y = 0; y < 2; ++y) {
                const double pxy = joint[b * 2 + y] / static_cast<double>(n);
                if (pxy <= 0.0) continue;
                mi += pxy * std::log(pxy * static_cast<double>(n) * static_cast<double>(n) /
                                     (px[b] * py[y]));
            }
        }
        scored.emplace_back(col.name, std::max(0.0, mi));
    }

    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return scored;
}

std::vector<std::string> mutual_info_rank(const std::vector<FeatureColumn>& features,
                                          const std::vector<int>& labels, std::size_t k) {
    if (k > features.size()) {
        throw ParamError("mutual_info_rank: k " + std::to_string(k) + " exceeds feature count " +
                         std::to_string(features.size()));
    }
    const auto scored = mutual_info_scores(features, labels);
    std::vector<std::string> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(scored[i].first);
    return out;
}

} // namespace nvi
