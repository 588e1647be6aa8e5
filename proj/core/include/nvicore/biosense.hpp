#pragma once

namespace nvi {

enum class CurveShape { log_linear, log_logistic };

// Hydration-activated conductivity curve between two anchor points,
// interpolated in log10 space. Outside the anchor humidities the curve is
// clamped flat, so both anchors are hit exactly.
struct ConductivityModel {
    double rh_dry_pct = 20.0;
    double rh_wet_pct = 80.0;
    double sigma_dry = 1e-8;   // S/m
    double sigma_wet = 1e-4;   // S/m
    CurveShape shape = CurveShape::log_linear;
    double logistic_steepness = 0.15;  // per % RH, log-logistic shape only
    double g_max = 3.0;                // theoretical AC amplification ceiling

    // Monotone non-decreasing over [0, 100] % RH.
    double conductivity(double rh_pct) const;

    // 1 at the dry anchor, g_max at the wet anchor, linear in log10(sigma).
    double gain(double rh_pct) const;

    double amplification(double rh_pct, double base_ac) const;

private:
    // Position of rh within the anchor span, in [0, 1].
    double normalized_position(double rh_pct) const;
};

} // namespace nvi
