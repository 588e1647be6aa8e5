#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nvicore/errors.hpp"
#include "nvicore/rng.hpp"
#include "nvicore/stats.hpp"

using namespace nvi;

TEST_CASE("mann_whitney exact: fully separated 3 vs 3") {
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    const GroupComparison g = mann_whitney(a, b);
    CHECK(g.u_statistic == doctest::Approx(0.0));
    CHECK(g.method == GroupComparison::Method::exact);
    CHECK(g.p_value == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("mann_whitney identical groups") {
    const std::vector<double> a{3, 1, 4, 1, 5}, b{1, 4, 5, 3, 1};
    const GroupComparison g = mann_whitney(a, b);
    CHECK(g.p_value == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("mann_whitney degenerate constant data") {
    const std::vector<double> a{2, 2, 2}, b{2, 2};
    const GroupComparison g = mann_whitney(a, b);
    CHECK(g.degenerate);
    CHECK(g.p_value == doctest::Approx(1.0));
}

TEST_CASE("mann_whitney cohen's d") {
    const std::vector<double> a{1, 2, 3}, b{3, 4, 5};
    const GroupComparison g = mann_whitney(a, b);
    CHECK(g.cohens_d == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(g.mean1 == doctest::Approx(2.0));
    CHECK(g.mean2 == doctest::Approx(4.0));
}

namespace {

// Tie-corrected, continuity-corrected normal approximation, written out
// independently of the implementation's large-sample branch.
double mw_normal_approx_p(const std::vector<double>& a, const std::vector<double>& b,
                          double u_obs) {
    const double n1d = static_cast<double>(a.size()), n2d = static_cast<double>(b.size());
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < pooled.size()) {
        std::size_t j = i;
        while (j + 1 < pooled.size() && pooled[j + 1] == pooled[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double big_n = n1d + n2d;
    const double var = n1d * n2d / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if (var <= 0.0) return 1.0;
    const double z = (std::fabs(u_obs - n1d * n2d / 2.0) - 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(std::max(0.0, z) / std::sqrt(2.0)));
}

} // namespace

TEST_CASE("mann_whitney exact agrees with the normal approximation for small n") {
    // The permutation distribution at these sizes is a coarse staircase, so
    // the corrected normal approximation misses individual outcomes by more
    // than 0.05 in the tails of every shape up to (5,6); the agreement is
    // distributional: most random trials land within 0.05, none far away.
    Rng rng(555);
    int within = 0, total = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto n1 = static_cast<std::size_t>(2 + rng.index(5));
        const auto n2 = static_cast<std::size_t>(2 + rng.index(5));
        std::vector<double> a(n1), b(n2);
        for (double& v : a) v = static_cast<double>(rng.index(100));
        for (double& v : b) v = static_cast<double>(rng.index(100));

        const GroupComparison exact = mann_whitney(a, b);
        if (exact.degenerate) continue;
        REQUIRE(exact.method == GroupComparison::Method::exact);

        const double dev = std::fabs(exact.p_value - mw_normal_approx_p(a, b, exact.u_statistic));
        CHECK(dev < 0.3);
        if (dev < 0.05) ++within;
        ++total;
    }
    CHECK(total >= 90);
    CHECK(within >= (total * 9) / 10);
}

TEST_CASE("mann_whitney worst-case small-shape deviation is the documented one") {
    // Tie-free (2,2), fully separated: exact two-sided p is 2/6 while the
    // corrected normal approximation gives ~0.245.
    const std::vector<double> a{1, 2}, b{3, 4};
    const GroupComparison g = mann_whitney(a, b);
    CHECK(g.p_value == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    const double p_approx = mw_normal_approx_p(a, b, g.u_statistic);
    CHECK(p_approx == doctest::Approx(0.2453).epsilon(1e-3));
    CHECK(std::fabs(g.p_value - p_approx) == doctest::Approx(0.088).epsilon(0.01));
}

TEST_CASE("pearson exact cases") {
    const std::vector<double> x{1, 2, 3, 4};
    std::vector<double> y{2, 4, 6, 8};
    CHECK(pearson(x, y).r == doctest::Approx(1.0).epsilon(1e-12));
    y = {-1, -2, -3, -4};
    CHECK(pearson(x, y).r == doctest::Approx(-1.0).epsilon(1e-12));
    y = {1, 3, 2, 4};
    const PearsonResult res = pearson(x, y);
    CHECK(res.r == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(res.p_value > 0.0);
    CHECK(res.p_value < 1.0);
}

TEST_CASE("pearson error paths") {
    CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), DataError);
    CHECK_THROWS_AS(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
                    DataError);
}

TEST_CASE("pearson p-value sanity against strong correlation") {
    Rng rng(99);
    std::vector<double> x(100), y(100);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.gaussian();
        y[i] = x[i] + 0.2 * rng.gaussian();
    }
    CHECK(pearson(x, y).p_value < 1e-6);

    for (std::size_t i = 0; i < x.size(); ++i) y[i] = rng.gaussian();
    CHECK(pearson(x, y).p_value > 0.001);
}

TEST_CASE("bland_altman worked example") {
    const std::vector<double> a{10, 20, 30}, b{12, 19, 33};
    const AgreementReport rep = bland_altman(a, b);
    CHECK(rep.bias == doctest::Approx(-4.0 / 3.0).epsilon(1e-9));
    CHECK(rep.sd_diff == doctest::Approx(std::sqrt(13.0 / 3.0)).epsilon(1e-9));
    CHECK(rep.loa_low == doctest::Approx(-4.0 / 3.0 - 1.96 * std::sqrt(13.0 / 3.0)).epsilon(1e-9));
    CHECK(rep.loa_high == doctest::Approx(-4.0 / 3.0 + 1.96 * std::sqrt(13.0 / 3.0)).epsilon(1e-9));
    CHECK(rep.loa_low == doctest::Approx(-5.413).epsilon(1e-3));
    CHECK(rep.loa_high == doctest::Approx(2.747).epsilon(1e-3));
}

TEST_CASE("bland_altman trivial cases") {
    const std::vector<double> a{5, 6, 7};
    const AgreementReport same = bland_altman(a, a);
    CHECK(same.bias == doctest::Approx(0.0));
    CHECK(same.loa_low == doctest::Approx(0.0));
    CHECK(same.loa_high == doctest::Approx(0.0));

    std::vector<double> b = a;
    for (double& v : b) v -= 5.0;
    const AgreementReport offset = bland_altman(a, b);
    CHECK(offset.bias == doctest::Approx(5.0));
    CHECK(offset.sd_diff == doctest::Approx(0.0));
}

TEST_CASE("bland_altman antisymmetry") {
    Rng rng(12);
    std::vector<double> a(25), b(25);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.gaussian(50, 5);
        b[i] = rng.gaussian(48, 5);
    }
    const AgreementReport ab = bland_altman(a, b);
    const AgreementReport ba = bland_altman(b, a);
    CHECK(ab.bias == doctest::Approx(-ba.bias).epsilon(1e-12));
    CHECK(ab.loa_high - ab.loa_low == doctest::Approx(ba.loa_high - ba.loa_low).epsilon(1e-12));
}

TEST_CASE("roc_auc basic cases") {
    CHECK(roc_auc(std::vector<double>{0.9, 0.8, 0.1, 0.2}, std::vector<int>{1, 1, 0, 0}) ==
          doctest::Approx(1.0));
    CHECK(roc_auc(std::vector<double>{0.8, 0.4, 0.6, 0.2}, std::vector<int>{1, 1, 0, 0}) ==
          doctest::Approx(0.75));
    CHECK(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{1, 0, 1, 0}) ==
          doctest::Approx(0.5));
    CHECK_THROWS_AS(roc_auc(std::vector<double>{0.5, 0.6}, std::vector<int>{1, 1}), DataError);
}

TEST_CASE("roc_auc equals brute-force pairwise counting") {
    Rng rng(321);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 4 + rng.index(27);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng.index(8));  // ties likely
            labels[i] = rng.uniform() < 0.5 ? 1 : 0;
            (labels[i] ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;

        double wins = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!labels[i]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (labels[j]) continue;
                if (scores[i] > scores[j]) wins += 1.0;
                else if (scores[i] == scores[j]) wins += 0.5;
                ++pairs;
            }
        }
        const double brute = wins / static_cast<double>(pairs);
        CHECK(roc_auc(scores, labels) == brute);  // bit-exact
    }
}

TEST_CASE("roc_auc complement and monotone-transform invariance") {
    Rng rng(11);
    std::vector<double> scores(40);
    std::vector<int> labels(40);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.gaussian() + (i % 2 ? 0.8 : 0.0);  // tie-free w.p. 1
        labels[i] = i % 2;
    }
    std::vector<double> negated = scores;
    for (double& v : negated) v = -v;
    CHECK(roc_auc(scores, labels) + roc_auc(negated, labels) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> transformed = scores;
    for (double& v : transformed) v = std::exp(2.0 * v) + 3.0;
    CHECK(roc_auc(transformed, labels) == doctest::Approx(roc_auc(scores, labels)).epsilon(1e-12));
}

TEST_CASE("bootstrap_auc_ci on perfect separation and determinism") {
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) {
        scores.push_back(i < 15 ? 0.9 + 0.001 * i : 0.1 + 0.001 * i);
        labels.push_back(i < 15 ? 1 : 0);
    }
    const auto ci = bootstrap_auc_ci(scores, labels, 500, 42);
    CHECK(ci.first == doctest::Approx(1.0));
    CHECK(ci.second == doctest::Approx(1.0));

    const auto ci2 = bootstrap_auc_ci(scores, labels, 500, 42);
    CHECK(ci.first == ci2.first);
    CHECK(ci.second == ci2.second);
}

TEST_CASE("bootstrap_auc_ci width envelope at moderate separation") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(9000 + seed);
        std::vector<double> scores;
        std::vector<int> labels;
        for (int i = 0; i < 20; ++i) {
            scores.push_back(rng.gaussian(0.95, 1.0));  // ~AUC 0.75 vs N(0,1)
            labels.push_back(1);
        }
        for (int i = 0; i < 20; ++i) {
            scores.push_back(rng.gaussian(0.0, 1.0));
            labels.push_back(0);
        }
        const auto ci = bootstrap_auc_ci(scores, labels, 1000, seed);
        const double width = ci.second - ci.first;
        CHECK(width >= 0.1);
        CHECK(width <= 0.4);
    }
}

TEST_CASE("youden_threshold perfect separation") {
    const std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
    const std::vector<int> labels{1, 1, 0, 0};
    const YoudenResult y = youden_threshold(scores, labels);
    CHECK(y.j == doctest::Approx(1.0));
    CHECK(y.sens == doctest::Approx(1.0));
    CHECK(y.spec == doctest::Approx(1.0));
    CHECK(y.ppv == doctest::Approx(1.0));
    CHECK(y.npv == doctest::Approx(1.0));
}

TEST_CASE("youden_threshold degenerate equal scores") {
    const std::vector<double> scores{0.4, 0.4, 0.4};
    const std::vector<int> labels{1, 0, 1};
    const YoudenResult y = youden_threshold(scores, labels);
    CHECK(y.threshold == doctest::Approx(0.4));
    CHECK(y.j == doctest::Approx(0.0));
}

TEST_CASE("youden_threshold tie-break picks the sensitivity-favoring threshold") {
    const std::vector<double> scores{0.8, 0.4, 0.6, 0.2};
    const std::vector<int> labels{1, 1, 0, 0};
    const YoudenResult y = youden_threshold(scores, labels);
    CHECK(y.j == doctest::Approx(0.5));
    CHECK(y.threshold == doctest::Approx(0.3));
    CHECK(y.sens == doctest::Approx(1.0));
    CHECK(y.spec == doctest::Approx(0.5));
}

TEST_CASE("stratified_kfold balanced 10+10") {
    std::vector<int> labels(20);
    for (std::size_t i = 0; i < 20; ++i) labels[i] = i < 10 ? 1 : 0;
    const auto folds = stratified_kfold(labels, 5, 7);
    std::vector<int> pos(5, 0), neg(5, 0);
    for (std::size_t i = 0; i < 20; ++i) {
        REQUIRE(folds[i] >= 0);
        REQUIRE(folds[i] < 5);
        (labels[i] ? pos : neg)[static_cast<std::size_t>(folds[i])]++;
    }
    for (int f = 0; f < 5; ++f) {
        CHECK(pos[static_cast<std::size_t>(f)] == 2);
        CHECK(neg[static_cast<std::size_t>(f)] == 2);
    }

    const auto folds2 = stratified_kfold(labels, 5, 7);
    CHECK(folds == folds2);
    const auto folds3 = stratified_kfold(labels, 5, 8);
    CHECK(folds != folds3);
}

TEST_CASE("stratified_kfold on the 84/88 cohort shape") {
    std::vector<int> labels;
    for (int i = 0; i < 84; ++i) labels.push_back(1);
    for (int i = 0; i < 88; ++i) labels.push_back(0);
    const auto folds = stratified_kfold(labels, 5, 3);

    std::vector<int> size(5, 0), pos(5, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        size[static_cast<std::size_t>(folds[i])]++;
        if (labels[i]) pos[static_cast<std::size_t>(folds[i])]++;
    }
    std::vector<int> sorted_sizes = size;
    std::sort(sorted_sizes.begin(), sorted_sizes.end(), std::greater<>());
    CHECK(sorted_sizes == std::vector<int>{35, 35, 34, 34, 34});
    for (int p : pos) {
        CHECK(p >= 16);
        CHECK(p <= 17);
    }
}

TEST_CASE("stratified_kfold errors and partition property") {
    std::vector<int> labels{1, 1, 1, 0, 0, 0};
    CHECK_THROWS_AS(stratified_kfold(labels, 5, 0), DataError);

    std::vector<int> big;
    for (int i = 0; i < 37; ++i) big.push_back(i % 3 == 0 ? 1 : 0);
    const auto folds = stratified_kfold(big, 4, 19);
    // every index assigned exactly once
    for (int f : folds) {
        CHECK(f >= 0);
        CHECK(f < 4);
    }
    CHECK(folds.size() == big.size());
}
