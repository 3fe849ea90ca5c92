#pragma once

#include <contagion/ajd.hpp>
#include <contagion/model.hpp>
#include <contagion/pricing.hpp>

#include <cmath>
#include <random>
#include <vector>

namespace testing {

using namespace contagion;

inline double rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline std::vector<double> random_betas(std::mt19937_64& rng, int n, double lo = 0.02, double hi = 0.3) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> b(static_cast<std::size_t>(n));
    for (auto& v : b)
        v = u(rng);
    return b;
}

inline ContagionSpec random_general(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.0, 0.4);
    std::vector<double> rho(static_cast<std::size_t>(n * n));
    for (auto& v : rho)
        v = u(rng);
    return ContagionSpec::general(random_betas(rng, n), rho, std::uniform_real_distribution<double>(-0.5, 0.5)(rng));
}

inline ContagionSpec random_hcm(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.01, 0.5);
    return ContagionSpec::hcm(random_betas(rng, n), u(rng), std::uniform_real_distribution<double>(-0.5, 0.5)(rng));
}

inline ContagionSpec random_ncm(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.01, 0.6);
    return ContagionSpec::ncm(random_betas(rng, n), u(rng), u(rng), std::uniform_real_distribution<double>(-0.8, 0.5)(rng));
}

inline AJDParams base_factor() { return AJDParams{}; }

inline const std::vector<double>& itraxx_attach() {
    static const std::vector<double> a{0.0, 0.03, 0.06, 0.09, 0.12, 0.22, 0.60};
    return a;
}

inline TrancheDeck base_deck(int n = 125, std::vector<double> upfront = {0.05, 0.04, 0.03, 0.02, 0.01, 0.0}) {
    return TrancheDeck::regular(itraxx_attach(), std::move(upfront), 5.0, 0.25, 0.05, RecoveryVector::uniform(n, 0.4));
}

//! Small deck whose tranches split the loss range of a six-name pool.
inline TrancheDeck small_deck(int n) {
    return TrancheDeck::regular({0.0, 0.1, 0.25, 0.45, 1.0}, {0.0, 0.0, 0.0, 0.0}, 3.0, 0.5, 0.05,
                                RecoveryVector::uniform(n, 0.4));
}

} // namespace testing
