#include "nvicore/nvi_score.hpp"

#include <cmath>
#include <string>

#include "nvicore/errors.hpp"

namespace nvi {

std::string_view to_string(Tier tier) {
    switch (tier) {
        case Tier::Normal: return "Normal";
        case Tier::Alert1: return "Alert1";
        case Tier::Alert2: return "Alert2";
    }
    return "?";
}

// The negated comparisons also reject NaN, which would otherwise slip
// through and leak out of the [0, 1] contract.
double score_spo2(double spo2_pct) {
    if (!(spo2_pct >= 0.0 && spo2_pct <= 100.0)) {
        throw DomainError("score_spo2: SpO2 must be in [0, 100] %, got " +
                          std::to_string(spo2_pct));
    }
    const double v = (spo2_pct - 85.0) / 15.0;
    return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

double score_hrv(double rmssd_ms) {
    if (!(rmssd_ms >= 0.0)) {
        throw DomainError("score_hrv: RMSSD must be >= 0 ms, got " + std::to_string(rmssd_ms));
    }
    return 1.0 / (1.0 + std::exp(-(rmssd_ms - 40.0) / 25.0));
}

double score_perf(double pi) {
    if (!(pi >= 0.0)) {
        throw DomainError("score_perf: perfusion index must be >= 0, got " + std::to_string(pi));
    }
    const double v = pi / 0.20;
    return v > 1.0 ? 1.0 : v;
}

double score_phase(double phase_left_deg, double phase_right_deg) {
    if (!std::isfinite(phase_left_deg) || !std::isfinite(phase_right_deg)) {
        throw DomainError("score_phase: phase angles must be finite");
    }
    double d = std::fabs(phase_left_deg - phase_right_deg);
    d = std::fmod(d, 360.0);
    if (d > 180.0) d = 360.0 - d;
    return 1.0 - d / 180.0;
}

NviResult composite(const ModalityInputs& inputs) {
    if (inputs.phase_left_deg.has_value() != inputs.phase_right_deg.has_value()) {
        throw DomainError("composite: phase angles must be present as a pair");
    }

    NviResult r;
    if (inputs.spo2_pct) r.modality_scores[0] = score_spo2(*inputs.spo2_pct);
    if (inputs.rmssd_ms) r.modality_scores[1] = score_hrv(*inputs.rmssd_ms);
    if (inputs.pi) r.modality_scores[2] = score_perf(*inputs.pi);
    if (inputs.phase_left_deg) {
        r.modality_scores[3] = score_phase(*inputs.phase_left_deg, *inputs.phase_right_deg);
    }

    double present_weight = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        if (r.modality_scores[i]) present_weight += kBaseWeights[i];
    }
    if (present_weight == 0.0) {
        throw DataError("composite: no modalities present");
    }

    double acc = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        if (r.modality_scores[i]) {
            r.effective_weights[i] = kBaseWeights[i] / present_weight;
            acc += r.effective_weights[i] * (*r.modality_scores[i]);
        } else {
            r.effective_weights[i] = 0.0;
        }
    }
    double score = 100.0 * acc;
    if (score < 0.0) score = 0.0;
    if (score > 100.0) score = 100.0;
    r.score = score;
    r.tier = tier_for(score);
    return r;
}

Tier tier_for(double score) {
    if (score < 0.0 || score > 100.0) {
        throw DomainError("tier_for: score must be in [0, 100], got " + std::to_string(score));
    }
    if (score >= kTierNormalMin) return Tier::Normal;
    if (score >= kTierAlert1Min) return Tier::Alert1;
    return Tier::Alert2;
}

} // namespace nvi
