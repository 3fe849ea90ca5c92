#pragma once

#include <contagion/ajd.hpp>
#include <contagion/model.hpp>
#include <contagion/precision.hpp>
#include <contagion/pricing.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace contagion {

enum class QuoteKind { upfront_pct, running_bp, index_bp };

std::string to_string(QuoteKind kind);
QuoteKind parse_quote_kind(const std::string& text);

/*! One market instrument. lo/hi are pool fractions; upfront quotes are stored as fractions of the
    tranche notional, running and index quotes in bp.
*/
struct Quote {
    double lo = 0.0;
    double hi = 1.0;
    QuoteKind kind = QuoteKind::running_bp;
    double bid = 0.0;
    double ask = 0.0;

    double mid() const { return 0.5 * (bid + ask); }
    std::string label() const;
};

struct QuoteSet {
    double maturity = 5.0;
    int n_obligors = 100;
    double recovery = 0.4;
    double r = 0.05;
    double period = 0.25;
    //! Running spread paid on upfront-quoted tranches, in bp.
    double upfront_running_bp = 0.0;
    std::vector<Quote> tranches; // contiguous, increasing
    double index_bid = 0.0;
    double index_ask = 0.0;

    double index_mid() const { return 0.5 * (index_bid + index_ask); }
    //! Tranches followed by the index.
    std::vector<Quote> instruments() const;
    std::vector<double> mids() const;
    void validate() const;
};

/*! Reads `maturity_years,lo,hi,kind,bid,ask` rows (lo/hi and upfronts in percent) and groups them
    by maturity, ascending. Fields other than the quotes are copied from `defaults`.
*/
std::vector<QuoteSet> read_quotes_csv(std::istream& in, const QuoteSet& defaults = {});
std::vector<QuoteSet> read_quotes_csv(const std::string& path, const QuoteSet& defaults = {});

//! x = (a0, rho, delta, kappa, theta, sigma, mu, l, y0).
inline constexpr int parameter_count = 9;
using ParameterVector = std::array<double, parameter_count>;

const std::array<const char*, parameter_count>& parameter_names();

ParameterVector to_parameters(double a0, double rho, double delta, const AJDParams& ajd);
ContagionSpec spec_of(const ParameterVector& x, int n_obligors);
AJDParams factor_of(const ParameterVector& x);

struct CalibrationBox {
    ParameterVector lower{0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    ParameterVector upper{2.0, 2.0, 1.0, 7.0, 7.0, 0.4, 5.0, 1.0, 10.0};

    void validate() const;
    bool contains(const ParameterVector& x) const;
    //! Strictly interior point obtained by pulling x a tiny fraction of the width away from each face.
    ParameterVector clamp_interior(const ParameterVector& x) const;
};

//! Deck covering the quoted tranches plus the whole pool, for one maturity.
TrancheDeck quote_deck(const QuoteSet& quotes);

//! Model values in quote units (upfront as fraction, running and index in bp), tranches then index.
std::vector<double> model_quotes(const ParameterVector& x, const QuoteSet& quotes, const PrecisionPolicy& precision = {});

inline constexpr double objective_penalty = 1e6;

//! Sum of squared relative errors against mids; objective_penalty if pricing fails at x.
double objective(const ParameterVector& x, const QuoteSet& quotes, const PrecisionPolicy& precision = {});
//! Sum of the single-maturity objectives.
double objective(const ParameterVector& x, const std::vector<QuoteSet>& quotes, const PrecisionPolicy& precision = {});

//! Mean of |model - mid| / mid as a fraction; zero mids are skipped with a warning.
double aape(const std::vector<double>& model, const std::vector<double>& market);

struct TraceEntry {
    int start = 0;
    int iteration = 0;
    double objective = 0.0;
};

struct StartReport {
    int start = 0;
    ParameterVector x0{};
    ParameterVector x{};
    double objective = 0.0;
    int iterations = 0;
    bool ok = false;
    std::string message;
};

struct CalibrationOptions {
    int starts = 8;
    std::uint64_t seed = 1;
    int max_iterations = 200;
    double function_tolerance = 1e-15;
    //! Absolute finite-difference step for the Jacobian.
    double fd_step = 1.49e-10;
    bool central_differences = false;
    PrecisionPolicy precision{};
    //! Optional extra starting points tried before the quasi-random ones.
    std::vector<ParameterVector> initial;
    std::function<void(const TraceEntry&)> on_iteration;
};

struct CalibrationResult {
    ParameterVector x_hat{};
    double objective = 0.0;
    double aape = 0.0;
    std::vector<double> model_quotes; // concatenated over maturities
    std::vector<double> market_mids;
    std::vector<std::string> labels;
    std::vector<TraceEntry> trace;
    std::vector<StartReport> starts;
};

CalibrationResult calibrate(const QuoteSet& quotes, const CalibrationBox& box = {}, const CalibrationOptions& options = {});
CalibrationResult calibrate(const std::vector<QuoteSet>& quotes, const CalibrationBox& box = {},
                            const CalibrationOptions& options = {});

struct RhoBracket {
    double lo = 0.0; // box edges for rho
    double hi = 2.0;
    double tol = 1e-8;
};

/*! rho that reprices instrument `index` (0-based over instruments(), index last) with every other
    parameter frozen at x. Throws NoRoot when no sign change is found before the bracket edges.
*/
double implied_rho(const QuoteSet& quotes, int index, const ParameterVector& x, const RhoBracket& bracket = {},
                   const PrecisionPolicy& precision = {});

} // namespace contagion
