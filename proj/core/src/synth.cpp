#include "nvicore/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nvicore/errors.hpp"
#include "nvicore/rng.hpp"

namespace nvi {

namespace {

double clamp_channel(std::size_t ch, double v) {
    switch (ch) {
        case 0: return std::clamp(v, 0.0, 100.0);   // spo2 %
        case 1: return std::max(0.0, v);            // rmssd ms
        case 2: return std::max(0.0, v);            // perfusion index
        default: return std::clamp(v, 0.0, 180.0);  // phase difference deg
    }
}

ModalityInputs means_to_modalities(const std::array<double, kChannels>& means) {
    ModalityInputs in;
    in.spo2_pct = means[0];
    in.rmssd_ms = means[1];
    in.pi = means[2];
    in.phase_left_deg = means[3];
    in.phase_right_deg = 0.0;
    return in;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + index * 0xbf58476d1ce4e5b9ULL);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

void TrajectoryConfig::validate() const {
    if (duration_s <= 0.0 || fs <= 0.0) {
        throw ParamError("TrajectoryConfig: duration_s and fs must be > 0");
    }
    if (perturb_onset_s < 0.0 || perturb_onset_s > duration_s) {
        throw ParamError("TrajectoryConfig: perturb_onset_s must be in [0, duration_s]");
    }
    if (intensity < 0.0 || intensity > 1.0) {
        throw ParamError("TrajectoryConfig: intensity must be in [0, 1]");
    }
    for (double sd : noise_sd) {
        if (sd < 0.0) throw ParamError("TrajectoryConfig: noise_sd must be >= 0");
    }
}

TrajectoryBundle gen_trajectory(const TrajectoryConfig& cfg, TrajectoryClass cls) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.fs));

    TrajectoryBundle bundle;
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
        Rng rng = Rng::stream(cfg.seed, 0, ch);
        const double base = kStableSetpoints[ch];
        const double target =
            base + (kPerturbedSetpoints[ch] - base) * cfg.intensity;

        TimeSeries& ts = bundle.channels[ch];
        ts.fs = cfg.fs;
        ts.t0 = 0.0;
        ts.label = kChannelNames[ch];
        ts.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / cfg.fs;
            double level = base;
            if (cls == TrajectoryClass::instability && t >= cfg.perturb_onset_s) {
                const double lag = 1.0 - std::exp(-(t - cfg.perturb_onset_s) / kOnsetLag_s);
                level = base + (target - base) * lag;
            }
            ts.samples[i] = clamp_channel(ch, level + rng.gaussian(0.0, cfg.noise_sd[ch]));
        }
    }
    return bundle;
}

ModalityInputs window_modalities(const TrajectoryBundle& bundle, double from_t_s) {
    std::array<double, kChannels> means{};
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
        const TimeSeries& ts = bundle.channels[ch];
        const auto start = std::min<std::size_t>(
            ts.samples.size(), static_cast<std::size_t>(std::max(0.0, from_t_s * ts.fs)));
        if (start >= ts.samples.size()) {
            throw ParamError("window_modalities: from_t_s beyond the trajectory");
        }
        double acc = 0.0;
        for (std::size_t i = start; i < ts.samples.size(); ++i) acc += ts.samples[i];
        means[ch] = acc / static_cast<double>(ts.samples.size() - start);
    }
    return means_to_modalities(means);
}

std::vector<double> windowed_scores(const TrajectoryBundle& bundle, double from_t_s,
                                    double window_s) {
    const double fs = bundle.channels[0].fs;
    const std::size_t n = bundle.samples();
    const auto win = static_cast<std::size_t>(std::llround(window_s * fs));
    auto start = static_cast<std::size_t>(std::max(0.0, from_t_s * fs));

    std::vector<double> scores;
    while (start + win <= n) {
        std::array<double, kChannels> means{};
        for (std::size_t ch = 0; ch < kChannels; ++ch) {
            double acc = 0.0;
            for (std::size_t i = start; i < start + win; ++i) {
                acc += bundle.channels[ch].samples[i];
            }
            means[ch] = acc / static_cast<double>(win);
        }
        scores.push_back(composite(means_to_modalities(means)).score);
        start += win;
    }
    return scores;
}

ModalityInputs window_modalities(const LabeledWindow& win, double fs, double from_t_s) {
    const auto start = std::min<std::size_t>(
        win.t, static_cast<std::size_t>(std::max(0.0, from_t_s * fs)));
    if (start >= win.t) throw ParamError("window_modalities: from_t_s beyond the window");
    std::array<double, kChannels> means{};
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
        double acc = 0.0;
        for (std::size_t i = start; i < win.t; ++i) acc += win.channels[ch * win.t + i];
        means[ch] = acc / static_cast<double>(win.t - start);
    }
    return means_to_modalities(means);
}

Dataset gen_dataset(std::size_t n, double class_balance, const TrajectoryConfig& cfg,
                    std::uint64_t seed, double noise_scale) {
    cfg.validate();
    if (n < 10) throw ParamError("gen_dataset: need n >= 10");
    if (class_balance <= 0.0 || class_balance >= 1.0) {
        throw ParamError("gen_dataset: class_balance must be in (0, 1)");
    }
    if (noise_scale <= 0.0) throw ParamError("gen_dataset: noise_scale must be > 0");

    const auto n_pos = static_cast<std::size_t>(std::llround(class_balance * static_cast<double>(n)));

    // Proportional interleave of the two classes: at each slot emit the class
    // with the most items still owed. This keeps every contiguous span of
    // the sequence close to the global balance, so the floored 70/15/15 cut
    // is stratified within one item per class.
    std::vector<int> label_seq;
    label_seq.reserve(n);
    {
        std::size_t owed_pos = n_pos, owed_neg = n - n_pos;
        while (owed_pos + owed_neg > 0) {
            if (owed_pos * (n - n_pos) >= owed_neg * n_pos) {
                label_seq.push_back(1);
                --owed_pos;
            } else {
                label_seq.push_back(0);
                --owed_neg;
            }
        }
    }

    Dataset ds;
    ds.fs = cfg.fs;
    ds.duration_s = cfg.duration_s;
    ds.perturb_onset_s = cfg.perturb_onset_s;
    ds.class_balance = class_balance;
    ds.noise_sd = cfg.noise_sd;
    ds.noise_scale = noise_scale;
    ds.seed = seed;
    ds.windows.resize(n);

    const auto t_len = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.fs));
    for (std::size_t w = 0; w < n; ++w) {
        TrajectoryConfig wcfg = cfg;
        wcfg.seed = derive_seed(seed, w);
        for (double& sd : wcfg.noise_sd) sd *= noise_scale;

        // Stream (wseed, 1, 0): baseline offsets then the intensity draw.
        Rng rng = Rng::stream(wcfg.seed, 1, 0);
        std::array<double, kChannels> offsets{};
        for (std::size_t ch = 0; ch < kChannels; ++ch) {
            offsets[ch] = rng.gaussian(0.0, kSubjectSdFactor * wcfg.noise_sd[ch]);
        }
        const int label = label_seq[w];
        if (label == 1) {
            wcfg.intensity = cfg.intensity * (1.0 - rng.uniform());  // (0, intensity]
        }

        const TrajectoryBundle bundle = gen_trajectory(
            wcfg, label == 1 ? TrajectoryClass::instability : TrajectoryClass::stable);

        LabeledWindow& win = ds.windows[w];
        win.t = t_len;
        win.label = label;
        win.channels.resize(kChannels * t_len);
        for (std::size_t ch = 0; ch < kChannels; ++ch) {
            for (std::size_t i = 0; i < t_len; ++i) {
                win.channels[ch * t_len + i] =
                    clamp_channel(ch, bundle.channels[ch].samples[i] + offsets[ch]);
            }
        }
        win.nvi_target = composite(window_modalities(win, cfg.fs, cfg.perturb_onset_s)).score;
    }

    const auto n_train = static_cast<std::size_t>(std::floor(0.70 * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::floor(0.15 * static_cast<double>(n)));
    for (std::size_t w = 0; w < n; ++w) {
        if (w < n_train) ds.train_idx.push_back(w);
        else if (w < n_train + n_val) ds.val_idx.push_back(w);
        else ds.test_idx.push_back(w);
    }
    return ds;
}

std::vector<McPoint> mc_perturbation(const std::vector<double>& intensities, std::size_t runs,
                                     const TrajectoryConfig& cfg, std::uint64_t seed) {
    if (runs == 0) throw ParamError("mc_perturbation: runs must be >= 1");
    for (double v : intensities) {
        if (v < 0.0 || v > 1.0) {
            throw ParamError("mc_perturbation: intensities must be in [0, 1]");
        }
    }
    constexpr double kWindow_s = 10.0;

    std::vector<McPoint> out;
    out.reserve(intensities.size());
    for (std::size_t gi = 0; gi < intensities.size(); ++gi) {
        std::vector<double> mins;
        mins.reserve(runs);
        for (std::size_t r = 0; r < runs; ++r) {
            TrajectoryConfig run_cfg = cfg;
            run_cfg.intensity = intensities[gi];
            run_cfg.seed = derive_seed(seed, gi * runs + r);
            const TrajectoryBundle bundle =
                gen_trajectory(run_cfg, TrajectoryClass::instability);
            const auto scores = windowed_scores(bundle, cfg.perturb_onset_s, kWindow_s);
            if (scores.empty()) {
                throw DataError("mc_perturbation: trajectory too short for a 10 s window");
            }
            mins.push_back(*std::min_element(scores.begin(), scores.end()));
        }
        McPoint p;
        p.intensity = intensities[gi];
        double acc = 0.0;
        for (double v : mins) acc += v;
        p.mean_min_nvi = acc / static_cast<double>(mins.size());
        double var = 0.0;
        for (double v : mins) var += (v - p.mean_min_nvi) * (v - p.mean_min_nvi);
        p.sd_min_nvi = mins.size() > 1
                           ? std::sqrt(var / static_cast<double>(mins.size() - 1))
                           : 0.0;
        out.push_back(p);
    }
    return out;
}

TimeSeries recovery_curve(double nvi_floor, double nvi_base, double tau_s, double duration_s,
                          double fs) {
    if (tau_s <= 0.0) throw DomainError("recovery_curve: tau must be > 0 s");
    if (!(nvi_floor < nvi_base)) {
        throw ParamError("recovery_curve: floor must be below base");
    }
    if (duration_s <= 0.0 || fs <= 0.0) {
        throw ParamError("recovery_curve: duration_s and fs must be > 0");
    }
    TimeSeries ts;
    ts.fs = fs;
    ts.t0 = 0.0;
    ts.label = "nvi";
    const auto n = static_cast<std::size_t>(std::llround(duration_s * fs)) + 1;
    ts.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        ts.samples[i] = nvi_base - (nvi_base - nvi_floor) * std::exp(-t / tau_s);
    }
    return ts;
}

} // namespace nvi
