#include <doctest.h>

#include <cmath>

#include "nvicore/biosense.hpp"
#include "nvicore/errors.hpp"

using namespace nvi;

TEST_CASE("conductivity anchors are exact") {
    ConductivityModel model;
    CHECK(model.conductivity(20.0) == 1e-8);
    CHECK(model.conductivity(80.0) == 1e-4);
    // clamped flat outside the anchor range
    CHECK(model.conductivity(0.0) == 1e-8);
    CHECK(model.conductivity(100.0) == 1e-4);
}

TEST_CASE("conductivity log-linear interior point") {
    ConductivityModel model;
    const double sigma = model.conductivity(60.0);
    CHECK(sigma == doctest::Approx(std::pow(10.0, -8.0 + 4.0 * (40.0 / 60.0))).epsilon(1e-12));
    CHECK(sigma == doctest::Approx(4.64e-6).epsilon(0.01));
}

TEST_CASE("conductivity monotone over a 1000-point grid, both shapes") {
    for (CurveShape shape : {CurveShape::log_linear, CurveShape::log_logistic}) {
        ConductivityModel model;
        model.shape = shape;
        double prev = model.conductivity(0.0);
        for (int i = 1; i <= 1000; ++i) {
            const double rh = 100.0 * static_cast<double>(i) / 1000.0;
            const double sigma = model.conductivity(rh);
            CHECK(sigma >= prev);
            prev = sigma;
        }
        CHECK(model.conductivity(20.0) == 1e-8);
        CHECK(model.conductivity(80.0) == 1e-4);
    }
}

TEST_CASE("conductivity domain error") {
    ConductivityModel model;
    CHECK_THROWS_AS(model.conductivity(-0.1), DomainError);
    CHECK_THROWS_AS(model.conductivity(100.1), DomainError);
}

TEST_CASE("gain anchors and interior value") {
    ConductivityModel model;
    CHECK(model.gain(20.0) == 1.0);
    CHECK(model.gain(80.0) == 3.0);
    CHECK(model.gain(60.0) == doctest::Approx(1.0 + 2.0 * (8.0 / 3.0) / 4.0).epsilon(1e-12));
    CHECK(model.gain(60.0) == doctest::Approx(2.333).epsilon(1e-3));

    // monotone in rh
    double prev = model.gain(0.0);
    for (int i = 1; i <= 200; ++i) {
        const double g = model.gain(100.0 * i / 200.0);
        CHECK(g >= prev);
        prev = g;
    }
}

TEST_CASE("amplification applies the gain to the AC amplitude") {
    ConductivityModel model;
    CHECK(model.amplification(20.0, 5.0) == doctest::Approx(5.0));
    CHECK(model.amplification(80.0, 5.0) == doctest::Approx(15.0));
    CHECK(model.amplification(50.0, 0.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(model.amplification(50.0, -1.0), ParamError);

    ConductivityModel custom;
    custom.g_max = 5.0;
    CHECK(custom.amplification(80.0, 2.0) == doctest::Approx(10.0));
}
