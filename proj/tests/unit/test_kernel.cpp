#include "support.hpp"

#include <contagion/errors.hpp>
#include <contagion/kernel.hpp>

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

using namespace contagion;

namespace {

std::map<ObligorSet::Bits, double> as_map(const std::vector<RowEntry>& row) {
    std::map<ObligorSet::Bits, double> m;
    for (const auto& r : row)
        m[r.state.bits()] = r.probability;
    return m;
}

} // namespace

TEST_CASE("general kernel examples") {
    const auto one = ContagionSpec::hcm({0.5}, 0.0, 0.0);
    KernelQuery q{one.empty_set(), one.empty_set(), 0.0, 2.0, 2.0, factor_curves(one, [](double) { return 1.0; })};
    CHECK(kernel_general(q) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    // two symmetric names: a default loads the survivor by the same rate
    const double lam = 0.7;
    const auto two = ContagionSpec::hcm({lam, lam}, lam, 0.0);
    const double dt = 1.3;
    KernelQuery q2{two.empty_set(), ObligorSet::of(2, {1}), 0.4, 0.4 + dt, dt,
                   factor_curves(two, [](double) { return 1.0; })};
    CHECK(kernel_general(q2) == doctest::Approx(std::exp(-lam * dt) - std::exp(-2 * lam * dt)).epsilon(1e-10));
    q2.to = two.full_set();
    CHECK(kernel_general(q2) ==
          doctest::Approx(1 - 2 * std::exp(-lam * dt) + std::exp(-2 * lam * dt)).epsilon(1e-10));

    KernelQuery same{ObligorSet::of(2, {2}), ObligorSet::of(2, {2}), 0.0, 1.5, 1.5, q2.curves};
    CHECK(kernel_general(same) == doctest::Approx(std::exp(-lam * 1.5)).epsilon(1e-12));
}

TEST_CASE("factorized kernel examples") {
    const auto one = ContagionSpec::hcm({0.3}, 0.0, 0.0);
    CHECK(kernel_factorized(one, one.empty_set(), one.empty_set(), 2.5) == doctest::Approx(std::exp(-0.75)));
    CHECK(kernel_factorized(one, one.empty_set(), one.empty_set(), 0.0) == 1.0);

    const double lam = 0.4;
    const auto two = ContagionSpec::hcm({lam, lam}, lam, 0.0);
    for (double z : {0.1, 1.0, 4.0}) {
        auto row = as_map(kernel_row(two, two.empty_set(), z));
        CHECK(row[ObligorSet::of(2, {1}).bits()] == doctest::Approx(std::exp(-lam * z) - std::exp(-2 * lam * z)));
        CHECK(row[ObligorSet::of(2, {2}).bits()] == doctest::Approx(std::exp(-lam * z) - std::exp(-2 * lam * z)));
        CHECK(row[two.empty_set().bits()] == doctest::Approx(std::exp(-2 * lam * z)));
        CHECK(row[two.full_set().bits()] == doctest::Approx(1 - 2 * std::exp(-lam * z) + std::exp(-2 * lam * z)));
    }
    const auto at_zero = kernel_row(two, ObligorSet::of(2, {1}), 0.0);
    for (const auto& r : at_zero)
        CHECK(r.probability == (r.state == ObligorSet::of(2, {1}) ? 1.0 : 0.0));
}

TEST_CASE("rows sum to one and compose") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 3 + trial;
        const auto spec = trial % 2 == 0 ? testing::random_general(rng, n) : testing::random_hcm(rng, n);
        const ObligorSet e = trial > 2 ? ObligorSet::of(n, {1}) : spec.empty_set();
        for (double z : {0.0, 0.3, 2.0, 50.0}) {
            double total = 0.0;
            for (const auto& r : kernel_row(spec, e, z))
                total += r.probability;
            CHECK(std::abs(total - 1.0) <= 1e-12);
        }
        const double z1 = 0.4, z2 = 0.9;
        auto direct = as_map(kernel_row(spec, e, z1 + z2));
        std::map<ObligorSet::Bits, double> composed;
        for (const auto& h : kernel_row(spec, e, z1))
            for (const auto& f : kernel_row(spec, h.state, z2))
                composed[f.state.bits()] += h.probability * f.probability;
        for (const auto& [bits, p] : direct)
            CHECK(std::abs(composed[bits] - p) <= 1e-10);
    }
}

TEST_CASE("row entries agree with the permutation sum") {
    std::mt19937_64 rng(29);
    const auto spec = testing::random_general(rng, 5);
    for (const auto& r : kernel_row(spec, spec.empty_set(), 0.8))
        CHECK(std::abs(r.probability - kernel_factorized(spec, spec.empty_set(), r.state, 0.8)) <= 1e-12);
}

TEST_CASE("absorption is monotone") {
    const auto spec = ContagionSpec::ncm_uniform(5, 0.5, 0.4, 0.2, -0.3);
    double prev = 0.0;
    for (double z = 0.0; z <= 80.0; z += 2.0) {
        const double p = kernel_factorized(spec, spec.empty_set(), spec.full_set(), z);
        CHECK(p >= prev - 1e-15);
        prev = p;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("general kernel with deterministic factor equals the factorized kernel") {
    std::mt19937_64 rng(31);
    auto phi = [](double t) { return 0.6 + 0.5 * std::sin(t); };
    auto phi_int = [](double s, double t) { return 0.6 * (t - s) - 0.5 * (std::cos(t) - std::cos(s)); };
    for (int n = 2; n <= 3; ++n) {
        const auto spec = testing::random_general(rng, n);
        const auto curves = factor_curves(spec, phi);
        const double s = 0.2, t = 1.9;
        const double z = phi_int(s, t);
        for (const auto& r : kernel_row(spec, spec.empty_set(), z)) {
            // nested quadrature depth equals the number of new defaults
            if (r.state.size() > 2)
                continue;
            KernelQuery q{spec.empty_set(), r.state, s, t, z, curves};
            CHECK(std::abs(kernel_general(q) - r.probability) <= 1e-8);
        }
    }
}

TEST_CASE("two-name mode") {
    CHECK(two_obligor_mode(1.0) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(two_obligor_mode(2.0) == doctest::Approx(0.346574).epsilon(1e-6));
    const double lam = 0.9;
    const auto two = ContagionSpec::hcm({lam, lam}, lam, 0.0);
    const double step = 1e-3;
    double best_z = 0.0, best = -1.0;
    for (double z = 0.0; z <= 5.0; z += step) {
        const double p = kernel_factorized(two, two.empty_set(), ObligorSet::of(2, {1}), z);
        if (p > best) {
            best = p;
            best_z = z;
        }
    }
    CHECK(std::abs(best_z - two_obligor_mode(lam)) <= step);
}

TEST_CASE("size limits") {
    const auto big = ContagionSpec::hcm_uniform(30, 0.3, 0.1, 0.0);
    CHECK_THROWS_AS(kernel_row(big, big.empty_set(), 1.0), SizeRefusal);
    const auto mid = ContagionSpec::hcm_uniform(9, 0.3, 0.1, 0.0);
    KernelQuery q{mid.empty_set(), mid.full_set(), 0.0, 1.0, 1.0, factor_curves(mid, [](double) { return 1.0; })};
    CHECK_THROWS_AS(kernel_general(q), SizeRefusal);
    CHECK(kernel_factorized(mid, ObligorSet::of(9, {1}), mid.empty_set(), 1.0) == 0.0);
}
