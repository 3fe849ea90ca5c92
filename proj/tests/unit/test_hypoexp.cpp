#include "support.hpp"

#include <contagion/errors.hpp>
#include <contagion/hypoexp.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace contagion;

namespace {

std::vector<double> to_doubles(const std::vector<Real>& v) {
    std::vector<double> out;
    for (const auto& x : v)
        out.push_back(x.convert_to<double>());
    return out;
}

} // namespace

TEST_CASE("alpha coefficient examples") {
    CHECK(to_doubles(alpha_coeffs(std::vector<double>{0.7}).coeffs) == std::vector<double>{1.0});

    const auto two = to_doubles(alpha_coeffs(std::vector<double>{0.25, 0.0}).coeffs);
    CHECK(two[0] == doctest::Approx(-4.0));
    CHECK(two[1] == doctest::Approx(4.0));

    const auto three = to_doubles(alpha_coeffs(std::vector<double>{1.0, 2.0, 3.0}).coeffs);
    CHECK(three[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(three[1] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(three[2] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("recursion agrees with the product form") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 20.0);
    const PrecisionPolicy policy{};
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> rates(2 + trial % 9);
        for (auto& r : rates)
            r = u(rng);
        const AlphaTable table = alpha_coeffs(rates, policy);
        PrecisionScope scope(policy);
        const auto product = alpha_product_form(table.rates, policy);
        for (std::size_t i = 0; i < product.size(); ++i) {
            const double a = table.coeffs[i].convert_to<double>();
            const double b = product[i].convert_to<double>();
            CHECK(testing::rel_diff(a, b) < 1e-12);
        }
        const auto ladder = alpha_ladder(table.rates, policy);
        REQUIRE(ladder.size() == rates.size());
        CHECK(ladder.back().size() == rates.size());
        for (std::size_t i = 0; i < rates.size(); ++i)
            CHECK(ladder.back()[i] == table.coeffs[i]);
    }
}

TEST_CASE("hypoexponential mixture values") {
    const auto single = alpha_coeffs(std::vector<double>{0.8});
    CHECK(hypoexp_mix(single, 2.0) == doctest::Approx(std::exp(-1.6)).epsilon(1e-15));

    const auto pair = alpha_coeffs(std::vector<double>{1.0, 2.0});
    CHECK(hypoexp_mix(pair, 0.0) == doctest::Approx(0.0));
    CHECK(hypoexp_mix(pair, 1.0) == doctest::Approx(std::exp(-1.0) - std::exp(-2.0)).epsilon(1e-14));
    CHECK(hypoexp_mix(pair, 1.0) == doctest::Approx(0.23254).epsilon(1e-4));
    CHECK(hypoexp_mix_integral({1.0, 2.0}, 1.0) == doctest::Approx(std::exp(-1.0) - std::exp(-2.0)).epsilon(1e-10));
    CHECK(hypoexp_mix_integral({0.8}, 2.0) == hypoexp_mix(single, 2.0));

    const auto triple = alpha_coeffs(std::vector<double>{1.0, 2.0, 3.0});
    CHECK(hypoexp_mix(triple, 0.7) == doctest::Approx(hypoexp_mix_integral({1.0, 2.0, 3.0}, 0.7)).epsilon(1e-10));
    CHECK_THROWS_AS(hypoexp_mix_integral({1, 2, 3, 4, 5, 6, 7, 8}, 1.0), SizeRefusal);
}

TEST_CASE("mixture matches nested quadrature and is positive") {
    // nested quadrature cost grows like (evaluations)^n, so keep it to short chains
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> logu(std::log(1e-2), std::log(1e2));
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 1 + trial % 2;
        std::vector<double> rates(static_cast<std::size_t>(n) + 1);
        for (auto& r : rates)
            r = std::exp(logu(rng));
        const auto table = alpha_coeffs(rates);
        for (double z : {0.05, 0.5, 2.0}) {
            const double closed = hypoexp_mix(table, z);
            CHECK(closed > 0.0);
            CHECK(testing::rel_diff(closed, hypoexp_mix_integral(rates, z)) < 1e-9);
        }
    }
}

TEST_CASE("mixture matches the convolution ODE up to n = 6") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> logu(std::log(1e-2), std::log(1e2));
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + trial % 6;
        std::vector<double> rates(static_cast<std::size_t>(n) + 1);
        for (auto& r : rates)
            r = std::exp(logu(rng));
        const auto table = alpha_coeffs(rates);
        for (double z : {0.05, 0.5, 2.0}) {
            const double closed = hypoexp_mix(table, z);
            CAPTURE(n);
            CAPTURE(z);
            CHECK(closed > 0.0);
            CHECK(testing::rel_diff(closed, hypoexp_mix_ode(rates, z)) < 1e-8);
        }
    }
}

TEST_CASE("mixture is invariant under permuting the earlier rates") {
    // H_n convolves the stages in any order; only the set of rates matters.
    std::vector<double> rates{0.3, 1.1, 2.9, 0.05, 4.0};
    const double ref = hypoexp_mix(alpha_coeffs(rates), 1.3);
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(rates.begin(), rates.end(), rng);
        CHECK(testing::rel_diff(hypoexp_mix(alpha_coeffs(rates), 1.3), ref) < 1e-13);
    }
}

TEST_CASE("collisions and cancellation") {
    CHECK_THROWS_AS(alpha_coeffs(std::vector<double>{1.0, 2.0, 1.0}), RateCollision);
    try {
        alpha_coeffs(std::vector<double>{1.0, 2.0, 1.0 + 1e-14});
        FAIL("expected a collision");
    } catch (const RateCollision& e) {
        CHECK(e.pair() == std::pair<std::size_t, std::size_t>{0, 2});
    }

    // A long ladder with alternating huge coefficients still leaves most of the mantissa.
    const PrecisionPolicy policy{};
    std::vector<double> ladder;
    for (int k = 0; k < 125; ++k)
        ladder.push_back(0.05 * k * (125 - k) * std::exp(0.008 * k) + (k == 0 ? 0.35 : 0.0));
    ladder.push_back(0.0);
    const AlphaTable table = alpha_coeffs(ladder, policy);
    CHECK(cancellation_residual(table) <= std::ldexp(1.0, -policy.mantissa_bits / 2));
}
