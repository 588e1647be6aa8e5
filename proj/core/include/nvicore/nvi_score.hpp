#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace nvi {

enum class Tier { Normal, Alert1, Alert2 };

std::string_view to_string(Tier tier);

// The four modality measurements. Absent optionals trigger degraded-mode
// weight redistribution; the two phase angles must be present or absent
// together.
struct ModalityInputs {
    std::optional<double> spo2_pct;
    std::optional<double> rmssd_ms;
    std::optional<double> pi;
    std::optional<double> phase_left_deg;
    std::optional<double> phase_right_deg;
};

// Composite score with the per-modality sub-scores and the weights that were
// actually applied (0 for absent modalities; the rest sum to 1).
// Modality order everywhere: spo2, hrv, perfusion, phase.
struct NviResult {
    double score = 0.0;            // [0, 100]
    Tier tier = Tier::Alert2;
    std::array<std::optional<double>, 4> modality_scores;
    std::array<double, 4> effective_weights{};
};

inline constexpr std::array<double, 4> kBaseWeights{0.30, 0.25, 0.20, 0.25};
inline constexpr double kTierNormalMin = 80.0;
inline constexpr double kTierAlert1Min = 60.0;

// clip((spo2 - 85) / 15, 0, 1); spo2 must lie in [0, 100].
double score_spo2(double spo2_pct);

// sigmoid((rmssd - 40) / 25); rmssd must be >= 0.
double score_hrv(double rmssd_ms);

// clip(pi / 0.20, 0, 1); pi must be >= 0.
double score_perf(double pi);

// 1 - |dPhi| / 180 with the angular difference wrapped into [0, 180] first,
// so the result stays in [0, 1] for any pair of angles.
double score_phase(double phase_left_deg, double phase_right_deg);

// Weighted sum of the present modality scores times 100. Base weights
// 0.30/0.25/0.20/0.25; weights of absent modalities are redistributed
// proportionally over the present ones. At least one modality must be
// present. Allocation-free and bit-reproducible.
NviResult composite(const ModalityInputs& inputs);

// >= 80 Normal, >= 60 Alert1, below that Alert2. Score must be in [0, 100].
Tier tier_for(double score);

} // namespace nvi
