#pragma once

#include <contagion/ajd.hpp>
#include <contagion/model.hpp>
#include <contagion/pricing.hpp>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace contagion {

using PathRng = std::mt19937_64;

//! Independent stream for one path, keyed by (seed, path_index) so results do not depend on scheduling.
PathRng path_rng(std::uint64_t seed, std::uint64_t path_index);

/*! Sampled factor path. A jump at time tau appears as two grid points at tau carrying the pre- and
    post-jump values. phi_integral[k] = int_0^{grid[k]} Y, trapezoidal between grid points.
*/
struct FactorPath {
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<double> phi_integral;

    double horizon() const { return grid.back(); }
    //! int_0^t Y with Y linear between grid points.
    double integral_at(double t) const;
    //! Smallest t with integral_at(t) = level; requires level <= phi_integral.back().
    double invert(double level) const;
};

FactorPath simulate_y_path(const AJDParams& p, double horizon, double dt, PathRng& rng);
//! Deterministic path sampled from phi on a grid of step dt.
FactorPath deterministic_path(const std::function<double(double)>& phi, double horizon, double dt);

struct DefaultScenario {
    std::vector<int> order;
    std::vector<double> times;
    std::vector<ObligorSet> sets;
};

//! Sequential exponential race in the time scale int Phi, up to the path horizon.
DefaultScenario simulate_defaults(const ContagionSpec& spec, const FactorPath& path, PathRng& rng);

//! The factor path and default scenario that path `path_index` of the Monte Carlo estimators sees.
DefaultScenario simulate_path(const ContagionSpec& spec, const AJDParams& p, double horizon, double dt,
                              std::uint64_t seed, std::uint64_t path_index);

struct McOptions {
    double dt = 1.0 / 250.0;
    int threads = 1;
};

struct McSpread {
    std::vector<double> spread_bp; // per tranche, then the index last
    std::vector<double> se_bp;
    LossCurve mean_curve;          // Monte Carlo estimate of the loss curve
    std::vector<std::vector<double>> curve_se;
};

McSpread mc_tranche_spread(const ContagionSpec& spec, const TrancheDeck& deck, const AJDParams& p, long n_paths,
                           std::uint64_t seed, const McOptions& options = {});

struct MartingaleReport {
    double worst_abs_mean = 0.0;
    double se_at_worst = 0.0;
    //! max over the grid of |mean| / se, with se = 0 cells counted only if the mean is nonzero.
    double worst_z = 0.0;
};

//! Mean of 1{X_t = F} - 1{X_0 = F} - int_0^t sum_{E <= F} 1{X_s = E} lambda_EF(s) ds over the grid.
MartingaleReport martingale_check(const ContagionSpec& spec, const AJDParams& p, const ObligorSet& f,
                                  const std::vector<double>& grid, long n_paths, std::uint64_t seed,
                                  const McOptions& options = {});

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
};

//! Monte Carlo E[exp(-g int_0^t Y)].
McEstimate mc_laplace(const AJDParams& p, double g, double t, long n_paths, std::uint64_t seed,
                      const McOptions& options = {});

//! Runs `body(path_index)` over [0, n) on `threads` workers with a fixed block partition.
void parallel_paths(long n, int threads, const std::function<void(long)>& body);

} // namespace contagion
