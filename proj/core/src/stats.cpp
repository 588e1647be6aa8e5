#include "nvicore/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "nvicore/errors.hpp"
#include "nvicore/rng.hpp"

namespace nvi {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double mean_of(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

// Midranks of the pooled sample (1-based, ties get the average rank).
std::vector<double> midranks(const std::vector<double>& pooled) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double std_normal_sf(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// Regularized incomplete beta via Lentz's continued fraction.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 200;
    constexpr double kEps = 3e-14, kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// Two-sided p for a t statistic with nu degrees of freedom.
double t_sf_two_sided(double t, double nu) {
    return ibeta(nu / 2.0, 0.5, nu / (nu + t * t));
}

struct Confusion {
    double sens, spec, ppv, npv;
};

Confusion confusion_at(std::span<const double> scores, std::span<const int> labels,
                       double threshold) {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i] != 0) {
            predicted ? ++tp : ++fn;
        } else {
            predicted ? ++fp : ++tn;
        }
    }
    auto rate = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    return Confusion{rate(tp, tp + fn), rate(tn, tn + fp), rate(tp, tp + fp), rate(tn, tn + fn)};
}

double auc_of(const std::vector<double>& scores, const std::vector<int>& labels) {
    const auto ranks = midranks(scores);
    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0) {
            rank_sum_pos += ranks[i];
            ++n_pos;
        }
    }
    const std::size_t n_neg = labels.size() - n_pos;
    return (rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

} // namespace

GroupComparison mann_whitney(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DataError("mann_whitney: both groups need >= 1 value");

    GroupComparison g;
    g.n1 = a.size();
    g.n2 = b.size();
    g.mean1 = mean_of(a);
    g.mean2 = mean_of(b);
    g.sd1 = sample_sd(a);
    g.sd2 = sample_sd(b);

    const double n1 = static_cast<double>(g.n1), n2 = static_cast<double>(g.n2);
    if (g.n1 + g.n2 > 2) {
        const double pooled_var = ((n1 - 1.0) * g.sd1 * g.sd1 + (n2 - 1.0) * g.sd2 * g.sd2) /
                                  (n1 + n2 - 2.0);
        const double pooled_sd = std::sqrt(pooled_var);
        g.cohens_d = (pooled_sd > 0.0) ? (g.mean1 - g.mean2) / pooled_sd : 0.0;
    }

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < g.n1; ++i) rank_sum_a += ranks[i];
    const double u_obs = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    g.u_statistic = u_obs;

    g.degenerate = std::all_of(pooled.begin(), pooled.end(),
                               [&](double v) { return v == pooled.front(); });
    if (g.degenerate) {
        g.p_value = 1.0;
        g.method = GroupComparison::Method::exact;
        return g;
    }

    const double mu = n1 * n2 / 2.0;
    if (g.n1 + g.n2 <= 12) {
        // Full enumeration of all C(n1+n2, n1) group-1 assignments; the U
        // distribution is symmetric around n1*n2/2 even with ties, so the
        // two-sided p counts assignments at least as far from the center.
        g.method = GroupComparison::Method::exact;
        const std::size_t total_n = g.n1 + g.n2;
        std::vector<std::size_t> comb(g.n1);
        std::iota(comb.begin(), comb.end(), std::size_t{0});
        std::size_t hits = 0, total = 0;
        const double d_obs = std::fabs(u_obs - mu);
        while (true) {
            double rs = 0.0;
            for (std::size_t idx : comb) rs += ranks[idx];
            const double u = rs - n1 * (n1 + 1.0) / 2.0;
            if (std::fabs(u - mu) >= d_obs - 1e-9) ++hits;
            ++total;
            // next combination
            std::size_t i = g.n1;
            while (i-- > 0) {
                if (comb[i] + (g.n1 - i) < total_n) {
                    ++comb[i];
                    for (std::size_t j = i + 1; j < g.n1; ++j) comb[j] = comb[j - 1] + 1;
                    break;
                }
                if (i == 0) {
                    i = std::numeric_limits<std::size_t>::max();
                    break;
                }
            }
            if (i == std::numeric_limits<std::size_t>::max()) break;
        }
        g.p_value = static_cast<double>(hits) / static_cast<double>(total);
    } else {
        g.method = GroupComparison::Method::normal_approx;
        // Tie-corrected variance.
        std::map<double, std::size_t> tie_counts;
        for (double v : pooled) ++tie_counts[v];
        double tie_term = 0.0;
        for (const auto& [value, t] : tie_counts) {
            const double td = static_cast<double>(t);
            tie_term += td * td * td - td;
        }
        const double big_n = n1 + n2;
        const double var = n1 * n2 / 12.0 *
                           ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
        if (var <= 0.0) {
            g.p_value = 1.0;
            g.degenerate = true;
            return g;
        }
        const double z = (std::fabs(u_obs - mu) - 0.5) / std::sqrt(var);
        g.p_value = std::min(1.0, 2.0 * std_normal_sf(std::max(0.0, z)));
    }
    return g;
}

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("pearson: length mismatch");
    if (x.size() < 3) throw DataError("pearson: need n >= 3");
    const std::size_t n = x.size();
    const double mx = mean_of(x), my = mean_of(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw DataError("pearson: zero variance, correlation undefined");
    }
    PearsonResult res;
    res.n = n;
    res.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double nu = static_cast<double>(n - 2);
    const double one_minus_r2 = 1.0 - res.r * res.r;
    if (one_minus_r2 <= 0.0) {
        res.p_value = 0.0;
    } else {
        const double t = res.r * std::sqrt(nu / one_minus_r2);
        res.p_value = t_sf_two_sided(t, nu);
    }
    return res;
}

AgreementReport bland_altman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("bland_altman: length mismatch");
    if (a.size() < 2) throw DataError("bland_altman: need n >= 2");

    std::vector<double> diffs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];

    AgreementReport rep;
    rep.n = a.size();
    rep.bias = mean_of(diffs);
    rep.sd_diff = sample_sd(diffs);
    rep.loa_low = rep.bias - 1.96 * rep.sd_diff;
    rep.loa_high = rep.bias + 1.96 * rep.sd_diff;
    rep.pearson_r = kNan;
    if (a.size() >= 3) {
        try {
            rep.pearson_r = pearson(a, b).r;
        } catch (const DataError&) {
            // zero variance in either input: leave the correlation undefined
        }
    }
    return rep;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DataError("roc_auc: length mismatch");
    std::size_t n_pos = 0;
    for (int y : labels) {
        if (y != 0) ++n_pos;
    }
    if (n_pos == 0 || n_pos == labels.size()) {
        throw DataError("roc_auc: need both classes present");
    }
    return auc_of(std::vector<double>(scores.begin(), scores.end()),
                  std::vector<int>(labels.begin(), labels.end()));
}

std::pair<double, double> bootstrap_auc_ci(std::span<const double> scores,
                                           std::span<const int> labels, std::size_t iters,
                                           std::uint64_t seed) {
    if (iters == 0) throw ParamError("bootstrap_auc_ci: iters must be >= 1");
    std::vector<std::size_t> pos_idx, neg_idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] != 0 ? pos_idx : neg_idx).push_back(i);
    }
    if (pos_idx.empty() || neg_idx.empty()) {
        throw DataError("bootstrap_auc_ci: need both classes present");
    }

    std::vector<double> aucs(iters);
    std::vector<double> s(labels.size());
    std::vector<int> y(labels.size());
    for (std::size_t it = 0; it < iters; ++it) {
        Rng rng = Rng::stream(seed, it);
        std::size_t w = 0;
        for (std::size_t k = 0; k < pos_idx.size(); ++k, ++w) {
            const std::size_t i = pos_idx[rng.index(pos_idx.size())];
            s[w] = scores[i];
            y[w] = 1;
        }
        for (std::size_t k = 0; k < neg_idx.size(); ++k, ++w) {
            const std::size_t i = neg_idx[rng.index(neg_idx.size())];
            s[w] = scores[i];
            y[w] = 0;
        }
        aucs[it] = auc_of(s, y);
    }
    std::sort(aucs.begin(), aucs.end());
    auto percentile = [&](double q) {
        const double pos = q * static_cast<double>(iters - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, iters - 1);
        const double frac = pos - static_cast<double>(lo);
        return aucs[lo] + frac * (aucs[hi] - aucs[lo]);
    };
    return {percentile(0.025), percentile(0.975)};
}

YoudenResult youden_threshold(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DataError("youden_threshold: length mismatch");
    std::size_t n_pos = 0;
    for (int y : labels) {
        if (y != 0) ++n_pos;
    }
    if (n_pos == 0 || n_pos == labels.size()) {
        throw DataError("youden_threshold: need both classes present");
    }

    std::vector<double> distinct(scores.begin(), scores.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    YoudenResult best;
    if (distinct.size() == 1) {
        best.threshold = distinct.front();
        const Confusion c = confusion_at(scores, labels, best.threshold);
        best.j = c.sens + c.spec - 1.0;
        best.sens = c.sens;
        best.spec = c.spec;
        best.ppv = c.ppv;
        best.npv = c.npv;
        return best;
    }

    bool first = true;
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        const double thr = 0.5 * (distinct[i] + distinct[i + 1]);
        const Confusion c = confusion_at(scores, labels, thr);
        const double j = c.sens + c.spec - 1.0;
        const bool better = first || j > best.j + 1e-12 ||
                            (std::fabs(j - best.j) <= 1e-12 && c.sens > best.sens + 1e-12);
        if (better) {
            best = YoudenResult{thr, j, c.sens, c.spec, c.ppv, c.npv};
            first = false;
        }
    }
    return best;
}

std::vector<int> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
    if (k < 2) throw ParamError("stratified_kfold: k must be >= 2");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (const auto& [cls, idx] : by_class) {
        if (idx.size() < static_cast<std::size_t>(k)) {
            throw DataError("stratified_kfold: class " + std::to_string(cls) + " has " +
                            std::to_string(idx.size()) + " members, fewer than k=" +
                            std::to_string(k));
        }
    }

    std::vector<int> folds(labels.size(), -1);
    int cursor = 0;  // continues across classes so fold totals stay balanced
    for (auto& [cls, idx] : by_class) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(cls) + 0x5f0ull);
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::swap(idx[i - 1], idx[rng.index(i)]);
        }
        for (std::size_t i = 0; i < idx.size(); ++i) {
            folds[idx[i]] = cursor;
            cursor = (cursor + 1) % k;
        }
    }
    return folds;
}

EvalReport evaluate_classifier(std::span<const double> scores, std::span<const int> labels,
                               std::size_t bootstrap_iters, std::uint64_t seed, int folds) {
    EvalReport rep;
    rep.auc = roc_auc(scores, labels);
    std::tie(rep.auc_ci_low, rep.auc_ci_high) =
        bootstrap_auc_ci(scores, labels, bootstrap_iters, seed);
    const YoudenResult y = youden_threshold(scores, labels);
    rep.sens = y.sens;
    rep.spec = y.spec;
    rep.ppv = y.ppv;
    rep.npv = y.npv;
    rep.youden_threshold = y.threshold;

    if (folds >= 2) {
        std::size_t n_pos = 0;
        for (int v : labels) {
            if (v != 0) ++n_pos;
        }
        const std::size_t n_neg = labels.size() - n_pos;
        if (n_pos >= static_cast<std::size_t>(folds) && n_neg >= static_cast<std::size_t>(folds)) {
            const auto assign = stratified_kfold(labels, folds, seed);
            for (int f = 0; f < folds; ++f) {
                std::vector<double> fs;
                std::vector<int> fy;
                for (std::size_t i = 0; i < labels.size(); ++i) {
                    if (assign[i] == f) {
                        fs.push_back(scores[i]);
                        fy.push_back(labels[i]);
                    }
                }
                rep.fold_aucs.push_back(auc_of(fs, fy));
            }
        }
    }
    return rep;
}

} // namespace nvi
