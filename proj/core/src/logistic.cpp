#include "nvicore/logistic.hpp"

#include <cmath>

#include "nvicore/errors.hpp"

namespace nvi {

namespace {

double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

} // namespace

double LogisticModel::logit(const std::vector<double>& x) const {
    if (x.size() != weights.size()) throw DataError("logistic: feature size mismatch");
    double acc = bias;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double sd = feature_sd[i] > 0.0 ? feature_sd[i] : 1.0;
        acc += weights[i] * (x[i] - feature_mean[i]) / sd;
    }
    return acc;
}

LogisticModel fit_logistic(const std::vector<std::vector<double>>& x,
                           const std::vector<int>& y, std::size_t iters, double lr) {
    if (x.empty() || x.size() != y.size()) throw DataError("fit_logistic: bad input sizes");
    const std::size_t n = x.size(), d = x.front().size();
    for (const auto& row : x) {
        if (row.size() != d) throw DataError("fit_logistic: ragged feature rows");
    }

    LogisticModel m;
    m.weights.assign(d, 0.0);
    m.feature_mean.assign(d, 0.0);
    m.feature_sd.assign(d, 0.0);
    for (const auto& row : x) {
        for (std::size_t j = 0; j < d; ++j) m.feature_mean[j] += row[j];
    }
    for (std::size_t j = 0; j < d; ++j) m.feature_mean[j] /= static_cast<double>(n);
    for (const auto& row : x) {
        for (std::size_t j = 0; j < d; ++j) {
            const double dv = row[j] - m.feature_mean[j];
            m.feature_sd[j] += dv * dv;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        m.feature_sd[j] = std::sqrt(m.feature_sd[j] / static_cast<double>(n));
    }

    std::vector<std::vector<double>> z(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double sd = m.feature_sd[j] > 0.0 ? m.feature_sd[j] : 1.0;
            z[i][j] = (x[i][j] - m.feature_mean[j]) / sd;
        }
    }

    std::vector<double> gw(d);
    for (std::size_t it = 0; it < iters; ++it) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = m.bias;
            for (std::size_t j = 0; j < d; ++j) acc += m.weights[j] * z[i][j];
            const double err = sigmoid(acc) - (y[i] != 0 ? 1.0 : 0.0);
            for (std::size_t j = 0; j < d; ++j) gw[j] += err * z[i][j];
            gb += err;
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < d; ++j) m.weights[j] -= lr * gw[j] * inv_n;
        m.bias -= lr * gb * inv_n;
    }
    return m;
}

std::vector<double> predict_logits(const LogisticModel& model,
                                   const std::vector<std::vector<double>>& x) {
    std::vector<double> out;
    out.reserve(x.size());
    for (const auto& row : x) out.push_back(model.logit(row));
    return out;
}

} // namespace nvi
