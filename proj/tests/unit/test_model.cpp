#include "support.hpp"

#include <contagion/errors.hpp>
#include <contagion/model.hpp>
#include <contagion/obligor_set.hpp>

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace contagion;

TEST_CASE("obligor set basics") {
    ObligorSet s(128);
    CHECK(s.empty());
    s = s.with(1).with(128).with(64).with(65);
    CHECK(s.size() == 4);
    CHECK(s.contains(64));
    CHECK_FALSE(s.contains(2));
    CHECK(s.members() == std::vector<int>{1, 64, 65, 128});
    CHECK(s.without(64).size() == 3);
    CHECK(s.complement().size() == 124);
    CHECK(ObligorSet::full(128).is_full());
    CHECK(ObligorSet::of(5, {2, 4}).is_subset_of(ObligorSet::of(5, {1, 2, 4})));
    CHECK(s.with(1) == s);
    CHECK_THROWS_AS(s.contains(0), IndexError);
    CHECK_THROWS_AS(ObligorSet(129), DomainError);

    std::vector<int> seen;
    ObligorSet::of(70, {3, 66, 9}).for_each([&](int i) { seen.push_back(i); });
    CHECK(seen == std::vector<int>{3, 9, 66});
    CHECK(ObligorSetHash{}(ObligorSet::of(70, {3})) != ObligorSetHash{}(ObligorSet::of(70, {4})));
}

TEST_CASE("contagion load examples") {
    std::vector<double> beta(10, 0.05);
    beta[6] = 0.1;
    const auto hcm = ContagionSpec::hcm(beta, 0.05, -0.008);
    CHECK(contagion_load(hcm, hcm.empty_set(), 7) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(contagion_load(hcm, ObligorSet::of(10, {3}), 7) == doctest::Approx(0.05 * std::exp(0.008)).epsilon(1e-14));
    CHECK(contagion_load(hcm, ObligorSet::of(10, {3}), 7) == doctest::Approx(0.0504008).epsilon(1e-6));
    CHECK_THROWS_AS(contagion_load(hcm, ObligorSet::of(10, {3}), 3), ContractViolation);

    const auto ncm = ContagionSpec::ncm_uniform(10, 0.35, 0.3, 0.2, -0.7);
    CHECK(contagion_load(ncm, ObligorSet::of(10, {5}), 9) == 0.0);
    CHECK(contagion_load(ncm, ObligorSet::of(10, {5}), 6) == doctest::Approx(0.3 * std::exp(0.7)));
    CHECK(contagion_load(ncm, ObligorSet::of(10, {5}), 4) == doctest::Approx(0.2 * std::exp(0.7)));
    // the ring wraps around
    CHECK(contagion_load(ncm, ObligorSet::of(10, {10}), 1) == doctest::Approx(0.3 * std::exp(0.7)));
}

TEST_CASE("aggregate load") {
    const int n = 12;
    const auto hcm = ContagionSpec::hcm_uniform(n, 0.35, 0.05, -0.008);
    CHECK(aggregate_load(hcm, hcm.empty_set()) == doctest::Approx(0.35).epsilon(1e-14));
    CHECK(aggregate_load(hcm, hcm.full_set()) == 0.0);
    for (int k = 1; k < n; ++k) {
        std::vector<int> members(static_cast<std::size_t>(k));
        std::iota(members.begin(), members.end(), 1);
        const ObligorSet e = ObligorSet::of(n, members);
        CHECK(aggregate_load(hcm, e) == doctest::Approx(0.05 * k * (n - k) * std::exp(0.008 * k)).epsilon(1e-13));
    }
}

TEST_CASE("hcm fast path matches the general sum bit for bit on the cardinality") {
    std::mt19937_64 rng(3);
    const auto spec = ContagionSpec::hcm_uniform(9, 0.7, 0.13, 0.21);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 50; ++trial) {
        ObligorSet e(9);
        for (int i = 1; i <= 9; ++i)
            if (coin(rng))
                e = e.with(i);
        ObligorSet same_size(9);
        for (int i = 1; i <= e.size(); ++i)
            same_size = same_size.with(i);
        CHECK(aggregate_load(spec, e) == aggregate_load(spec, same_size));
        if (!e.empty() && !e.is_full())
            CHECK(testing::rel_diff(aggregate_load(spec, e), aggregate_load_general(spec, e)) < 1e-14);
    }
}

TEST_CASE("path load") {
    const auto hcm = ContagionSpec::hcm_uniform(8, 0.4, 0.05, -0.008);
    const std::vector<int> none;
    CHECK(path_load(hcm, hcm.empty_set(), none) == 1.0);
    const std::vector<int> pi{3, 1, 7, 5};
    const int n = 4;
    const double expected = 0.05 * 6.0 * std::pow(0.05, n - 1) * std::exp(0.008 * n * (n - 1) / 2.0);
    CHECK(path_load(hcm, hcm.empty_set(), pi) == doctest::Approx(expected).epsilon(1e-13));

    const auto ncm = ContagionSpec::ncm_uniform(8, 0.4, 0.3, 0.3, -0.7);
    const std::vector<int> jump{1, 5};
    CHECK(path_load(ncm, ncm.empty_set(), jump) == 0.0);
}

TEST_CASE("intensity structure") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto spec = testing::random_general(rng, 6);
        ObligorSet e(6);
        for (int i = 1; i <= 6; ++i)
            if (rng() % 2 == 0)
                e = e.with(i);
        const double phi = 1.7;
        double row = intensity(spec, e, e, phi);
        for (int i = 1; i <= 6; ++i) {
            if (e.contains(i))
                continue;
            const double v = intensity(spec, e, e.with(i), phi);
            CHECK(v >= 0.0);
            row += v;
        }
        CHECK(std::abs(row) <= 1e-14 * (1.0 + std::abs(intensity(spec, e, e, phi))));
        CHECK(intensity(spec, e, e, phi) == doctest::Approx(-phi * aggregate_load(spec, e)));
        if (e.size() <= 4) {
            int a = 0, b = 0;
            for (int i = 1; i <= 6 && b == 0; ++i)
                if (!e.contains(i))
                    (a == 0 ? a : b) = i;
            CHECK(intensity(spec, e, e.with(a).with(b), phi) == 0.0);
        }
        if (!e.empty()) {
            const int member = e.members().front();
            CHECK(intensity(spec, e, e.without(member), phi) == 0.0);
        }
    }
}

TEST_CASE("spec construction") {
    const auto g = ContagionSpec::general({0.1, 0.2}, {0.5, 0.3, 0.4, 0.6}, 0.0);
    CHECK(g.rho(1, 1) == 0.0);
    CHECK(g.rho(1, 2) == 0.3);
    CHECK(g.rho(2, 1) == 0.4);
    CHECK(g.base_total() == doctest::Approx(0.3));
    CHECK_THROWS(ContagionSpec::hcm({0.1, -0.2}, 0.1, 0.0));
    CHECK_THROWS(ContagionSpec::ncm_uniform(2, 0.1, 0.1, 0.1, 0.0));
    CHECK_THROWS_AS(RecoveryVector({0.4, 1.0}), DomainError);
    CHECK(RecoveryVector::uniform(3, 0.4).common() == 0.4);
    CHECK_THROWS(RecoveryVector({0.4, 0.5}).common());
}
