#include "support.hpp"

#include <contagion/ajd.hpp>
#include <contagion/errors.hpp>

#include <doctest.h>

#include <cmath>

using namespace contagion;

TEST_CASE("transform at time zero") {
    const AJDParams p{};
    const auto v = transform(p, 0.35, 0.0);
    CHECK(v.a == 0.0);
    CHECK(v.b == 0.0);
    CHECK(expectation(p, 3.0, 0.0) == 1.0);
    const auto o = riccati_oracle(p, 0.35, 0.0);
    CHECK(o.a == 0.0);
    CHECK(o.b == 0.0);
}

TEST_CASE("closed form matches the Riccati integration") {
    AJDParams p{};
    for (double y0 : {0.5, 1.0, 2.0}) {
        p.y0 = y0;
        for (double g : {0.1, 0.35, 1.0, 10.0})
            for (double t : {1.0, 5.0, 10.0}) {
                const auto c = transform(p, g, t);
                const auto o = riccati_oracle(p, g, t);
                CHECK(std::abs(c.a - o.a) <= 1e-8);
                CHECK(std::abs(c.b - o.b) <= 1e-8);
            }
    }
    AJDParams cir = p;
    cir.l = 0.0;
    for (double g : {0.1, 1.0, 10.0})
        for (double t : {1.0, 5.0, 10.0}) {
            const auto c = transform(cir, g, t);
            const auto o = riccati_oracle(cir, g, t);
            CHECK(std::abs(c.a - o.a) <= 1e-10);
            CHECK(std::abs(c.b - o.b) <= 1e-10);
        }
}

TEST_CASE("vanishing volatility reduces to the mean-reverting ODE") {
    AJDParams p{};
    p.sigma = 1e-7;
    p.l = 0.0;
    p.y0 = 0.8;
    const double g = 0.7, t = 4.0;
    const double integral = p.theta * t + (p.y0 - p.theta) * (1 - std::exp(-p.kappa * t)) / p.kappa;
    CHECK(expectation(p, g, t) == doctest::Approx(std::exp(-g * integral)).epsilon(1e-9));
}

TEST_CASE("small times use the series branch continuously") {
    const AJDParams p{};
    const double g = 0.35;
    const auto tiny = transform(p, g, 1e-10);
    CHECK(tiny.b == doctest::Approx(-g * 1e-10).epsilon(1e-6));
    const auto o = riccati_oracle(p, g, 1e-3);
    const auto c = transform(p, g, 1e-3);
    CHECK(std::abs(c.b - o.b) <= 1e-12);
}

TEST_CASE("shape properties") {
    const AJDParams p{};
    for (double t : {0.5, 3.0, 9.0}) {
        double prev_b = 0.0;
        for (double g : {0.05, 0.2, 1.0, 5.0, 40.0}) {
            const double b = transform(p, g, t).b;
            CHECK(b <= 0.0);
            CHECK(b < prev_b);
            prev_b = b;
        }
    }
    double prev = 1.0;
    for (double t = 0.5; t <= 20.0; t += 0.5) {
        const double e = expectation(p, 0.35, t);
        CHECK(e < prev);
        prev = e;
    }
    CHECK(expectation(p, 0.35, 2000.0) < 1e-6);
}

TEST_CASE("extended precision evaluation agrees with double") {
    const AJDParams p{};
    PrecisionScope scope(256);
    const Real g(0.35), t(5.0);
    const auto hi = transform_t<Real>(p, g, t);
    const auto lo = transform(p, 0.35, 5.0);
    CHECK(hi.a.convert_to<double>() == doctest::Approx(lo.a).epsilon(1e-13));
    CHECK(hi.b.convert_to<double>() == doctest::Approx(lo.b).epsilon(1e-13));
}

TEST_CASE("domain checks") {
    const AJDParams p{};
    CHECK_THROWS_AS(transform(p, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(transform(p, 1.0, -1.0), DomainError);
    AJDParams bad = p;
    bad.kappa = -1.0;
    CHECK_THROWS(bad.validate());
}
