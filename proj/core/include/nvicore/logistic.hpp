#pragma once

#include <cstddef>
#include <vector>

namespace nvi {

// Reference logistic-regression baseline on standardized features,
// full-batch gradient descent with a fixed iteration count (deterministic).
struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> feature_mean, feature_sd;

    double logit(const std::vector<double>& x) const;
};

LogisticModel fit_logistic(const std::vector<std::vector<double>>& x,
                           const std::vector<int>& y, std::size_t iters = 500,
                           double lr = 0.5);

std::vector<double> predict_logits(const LogisticModel& model,
                                   const std::vector<std::vector<double>>& x);

} // namespace nvi
