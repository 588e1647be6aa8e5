#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "nvicore/nvi_score.hpp"
#include "nvicore/time_series.hpp"

namespace nvi {

enum class TrajectoryClass { stable, instability };

// Channel order everywhere: spo2 %, rmssd-proxy ms, perfusion index,
// bilateral phase difference in degrees.
inline constexpr std::size_t kChannels = 4;
inline constexpr std::array<const char*, kChannels> kChannelNames{
    "spo2_pct", "rmssd_ms", "pi", "dphase_deg"};

// Setpoints are a calibration, not measured physiology: stable values put
// the composite just above the Normal boundary, fully perturbed values put
// it deep in the Alert2 band.
inline constexpr std::array<double, kChannels> kStableSetpoints{98.0, 50.0, 0.15, 5.0};
inline constexpr std::array<double, kChannels> kPerturbedSetpoints{90.0, 20.0, 0.05, 60.0};
inline constexpr double kOnsetLag_s = 5.0;  // first-order lag toward the perturbed state

struct TrajectoryConfig {
    double duration_s = 60.0;
    double fs = 100.0;
    double perturb_onset_s = 30.0;
    double intensity = 1.0;  // scales the setpoint shift, in [0, 1]
    std::array<double, kChannels> noise_sd{0.6, 5.0, 0.02, 6.0};
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrajectoryBundle {
    std::array<TimeSeries, kChannels> channels;

    std::size_t samples() const { return channels[0].samples.size(); }
};

// Gaussian-noise channels around the stable setpoints; the instability class
// relaxes toward the perturbed setpoints after perturb_onset_s. Channel c
// draws from stream (seed, 0, c), so runs are bit-reproducible.
TrajectoryBundle gen_trajectory(const TrajectoryConfig& cfg, TrajectoryClass cls);

// Per-channel means over t >= from_t_s mapped onto the four modalities
// (the phase channel becomes phase_left with phase_right = 0).
ModalityInputs window_modalities(const TrajectoryBundle& bundle, double from_t_s);

// Composite score of one trajectory evaluated on consecutive disjoint
// windows of window_s seconds starting at from_t_s.
std::vector<double> windowed_scores(const TrajectoryBundle& bundle, double from_t_s,
                                    double window_s);

struct LabeledWindow {
    std::vector<double> channels;  // kChannels x t, row-major
    std::size_t t = 0;             // samples per channel
    int label = 0;                 // 1 = instability
    double nvi_target = 0.0;       // composite of the post-onset window means
};

struct Dataset {
    std::vector<LabeledWindow> windows;
    std::vector<std::size_t> train_idx, val_idx, test_idx;
    double fs = 0.0;
    double duration_s = 0.0;
    double perturb_onset_s = 0.0;
    double class_balance = 0.5;
    std::array<double, kChannels> noise_sd{};
    double noise_scale = 1.0;
    std::uint64_t seed = 0;
};

// Between-window physiological variability: each window draws baseline
// offsets with SD = kSubjectSdFactor * noise_sd * noise_scale, and
// instability windows draw their perturbation intensity uniformly from
// (0, cfg.intensity]. Both are calibrated so the composite-score classifier
// lands near the middle of its accepted AUC band at default noise.
inline constexpr double kSubjectSdFactor = 2.2;

// Stratified 70/15/15 split (floored sizes, remainder to test) over windows
// whose label sequence interleaves the classes proportionally. Window w
// derives every draw from (seed, w, ...), so generation order does not
// matter.
Dataset gen_dataset(std::size_t n, double class_balance, const TrajectoryConfig& cfg,
                    std::uint64_t seed, double noise_scale = 1.0);

// Post-onset window means of one labeled window as modality inputs.
ModalityInputs window_modalities(const LabeledWindow& win, double fs, double from_t_s);

struct McPoint {
    double intensity = 0.0;
    double mean_min_nvi = 0.0;
    double sd_min_nvi = 0.0;
};

// Monte-Carlo perturbation sweep: per intensity, run `runs` trajectories and
// record the minimum composite score over disjoint 10 s windows after onset.
std::vector<McPoint> mc_perturbation(const std::vector<double>& intensities, std::size_t runs,
                                     const TrajectoryConfig& cfg, std::uint64_t seed);

// NVI(t) = base - (base - floor) * exp(-t / tau).
TimeSeries recovery_curve(double nvi_floor, double nvi_base, double tau_s, double duration_s,
                          double fs = 10.0);

// Window seeds for data-parallel generation; documented so fixtures can be
// reproduced outside this library.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

} // namespace nvi
