#include "nvicore/biosense.hpp"

#include <cmath>
#include <string>

#include "nvicore/errors.hpp"

namespace nvi {

double ConductivityModel::normalized_position(double rh_pct) const {
    if (rh_pct < 0.0 || rh_pct > 100.0) {
        throw DomainError("conductivity: RH must be in [0, 100] %, got " +
                          std::to_string(rh_pct));
    }
    if (rh_pct <= rh_dry_pct) return 0.0;
    if (rh_pct >= rh_wet_pct) return 1.0;
    const double u = (rh_pct - rh_dry_pct) / (rh_wet_pct - rh_dry_pct);
    if (shape == CurveShape::log_linear) return u;
    // Logistic rescaled so the anchors map to exactly 0 and 1.
    const double mid = 0.5 * (rh_dry_pct + rh_wet_pct);
    auto logistic = [&](double rh) {
        return 1.0 / (1.0 + std::exp(-logistic_steepness * (rh - mid)));
    };
    const double f_dry = logistic(rh_dry_pct), f_wet = logistic(rh_wet_pct);
    return (logistic(rh_pct) - f_dry) / (f_wet - f_dry);
}

double ConductivityModel::conductivity(double rh_pct) const {
    const double u = normalized_position(rh_pct);
    if (u == 0.0) return sigma_dry;
    if (u == 1.0) return sigma_wet;
    const double log_dry = std::log10(sigma_dry);
    const double log_wet = std::log10(sigma_wet);
    return std::pow(10.0, log_dry + u * (log_wet - log_dry));
}

double ConductivityModel::gain(double rh_pct) const {
    return 1.0 + (g_max - 1.0) * normalized_position(rh_pct);
}

double ConductivityModel::amplification(double rh_pct, double base_ac) const {
    if (base_ac < 0.0) {
        throw ParamError("amplification: base_ac must be >= 0, got " + std::to_string(base_ac));
    }
    return gain(rh_pct) * base_ac;
}

} // namespace nvi
