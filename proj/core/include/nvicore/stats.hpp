#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nvi {

struct GroupComparison {
    double u_statistic = 0.0;  // U of the first group
    double p_value = 1.0;      // two-sided
    enum class Method { exact, normal_approx } method = Method::exact;
    bool degenerate = false;   // every pooled value identical
    double cohens_d = 0.0;     // (mean_a - mean_b) / pooled sample SD
    std::size_t n1 = 0, n2 = 0;
    double mean1 = 0.0, mean2 = 0.0;
    double sd1 = 0.0, sd2 = 0.0;
};

struct PearsonResult {
    double r = 0.0;
    double p_value = 1.0;  // two-sided, t distribution with n-2 df
    std::size_t n = 0;
};

struct AgreementReport {
    double pearson_r = 0.0;  // NaN when undefined (n < 3 or zero variance)
    double bias = 0.0;       // mean(a - b)
    double sd_diff = 0.0;    // sample SD of the differences
    double loa_low = 0.0;    // bias - 1.96 * SD
    double loa_high = 0.0;   // bias + 1.96 * SD
    std::size_t n = 0;
};

struct YoudenResult {
    double threshold = 0.0;  // predicted positive when score >= threshold
    double j = 0.0;          // sens + spec - 1
    double sens = 0.0, spec = 0.0, ppv = 0.0, npv = 0.0;
};

struct EvalReport {
    double auc = 0.0;
    double auc_ci_low = 0.0, auc_ci_high = 0.0;
    double sens = 0.0, spec = 0.0, ppv = 0.0, npv = 0.0;
    double youden_threshold = 0.0;
    std::vector<double> fold_aucs;
};

// Midrank Mann-Whitney U, two-sided. Exact permutation p-value by full
// enumeration when n1 + n2 <= 12, otherwise normal approximation with tie
// and continuity corrections. Cohen's d uses the pooled sample SD.
GroupComparison mann_whitney(std::span<const double> a, std::span<const double> b);

// Product-moment correlation with a t-distribution p-value. Needs n >= 3
// and nonzero variance in both inputs.
PearsonResult pearson(std::span<const double> x, std::span<const double> y);

// Differences a - b: bias, sample SD and the 1.96-SD limits of agreement.
AgreementReport bland_altman(std::span<const double> a, std::span<const double> b);

// AUC = P(score_pos > score_neg) + 0.5 P(tie) via midranks; equal to the
// trapezoidal ROC area. Both classes must be present (labels 0/1).
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Percentile bootstrap CI of the AUC, resampling with replacement within
// each class so every resample keeps both classes. Deterministic from seed;
// iteration i draws from its own (seed, i) stream.
std::pair<double, double> bootstrap_auc_ci(std::span<const double> scores,
                                           std::span<const int> labels,
                                           std::size_t iters = 1000,
                                           std::uint64_t seed = 0);

// Threshold maximizing J = sens + spec - 1 over midpoints of adjacent
// distinct scores; ties go to the more sensitive threshold. Degenerate
// all-equal scores give J = 0 at the single value.
YoudenResult youden_threshold(std::span<const double> scores, std::span<const int> labels);

// Per-class round-robin fold assignment after a seeded shuffle; the fold
// cursor continues across classes so fold sizes stay within one item of
// each other. Every class needs >= k members. Returns a fold id per sample.
std::vector<int> stratified_kfold(std::span<const int> labels, int k = 5,
                                  std::uint64_t seed = 0);

// AUC + bootstrap CI + Youden confusion metrics, with per-fold AUCs from a
// stratified split of the same scores.
EvalReport evaluate_classifier(std::span<const double> scores, std::span<const int> labels,
                               std::size_t bootstrap_iters = 1000, std::uint64_t seed = 0,
                               int folds = 5);

} // namespace nvi
