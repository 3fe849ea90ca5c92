#pragma once

#include <contagion/ajd.hpp>
#include <contagion/model.hpp>
#include <contagion/precision.hpp>

#include <limits>
#include <utility>
#include <vector>

namespace contagion {

//! Where defaults fall inside a payment period when valuing the legs.
enum class DefaultTiming { start, midpoint, end };
//! Index premium notional: 1 - E[L] (the [0,1] tranche) or 1 - E[|X|]/N (surviving names).
enum class IndexConvention { tranche_zero_to_one, surviving_notional };
enum class CountRounding { half_up, ceil, floor };

struct TrancheDeck {
    std::vector<double> attach;    // p_0 = 0 < p_1 < ... < p_K <= 1
    std::vector<double> upfront;   // u^(i), fraction of tranche notional
    double maturity = 5.0;
    std::vector<double> pay_times; // 0 = t_0 < ... < t_m = maturity
    double r = 0.05;
    RecoveryVector recovery;
    DefaultTiming timing = DefaultTiming::start;

    //! Equally spaced payment grid with step `period`.
    static TrancheDeck regular(std::vector<double> attach, std::vector<double> upfront, double maturity,
                               double period, double r, RecoveryVector recovery);

    int tranche_count() const { return static_cast<int>(attach.size()) - 1; }
    int obligors() const { return recovery.size(); }
    //! Tranche indices are 1-based, matching [p_{i-1}, p_i].
    double lo(int i) const;
    double hi(int i) const;
    double width(int i) const { return hi(i) - lo(i); }
    void validate() const;
};

struct LossCurve {
    std::vector<double> times;
    std::vector<std::vector<double>> values; // values[i-1][k] = E[L^(i)(X_{t_k})]
    std::vector<double> pool_loss;           // E[L_{t_k}]
    std::vector<double> default_fraction;    // E[|X_{t_k}|] / N
};

//! Pool loss fraction sum_{j in F} (1 - R_j) / N.
double pool_loss(const TrancheDeck& deck, const ObligorSet& f);
double tranche_loss(const TrancheDeck& deck, int i, const ObligorSet& f);
//! I^(i)(n) for a homogeneous recovery rate.
double tranche_loss_by_count(const TrancheDeck& deck, int i, int n);

double expected_tranche_loss_general(const ContagionSpec& spec, const TrancheDeck& deck, int i, double t,
                                     const AJDParams& ajd, const PrecisionPolicy& precision = {});
double expected_tranche_loss_hcm(const ContagionSpec& spec, const TrancheDeck& deck, int i, double t,
                                 const AJDParams& ajd, const PrecisionPolicy& precision = {});
double expected_tranche_loss_ncm(const ContagionSpec& spec, const TrancheDeck& deck, int i, double t,
                                 const AJDParams& ajd, const PrecisionPolicy& precision = {});

enum class PricingMethod { automatic, general, closed_form };

//! Expected tranche losses on the deck's payment grid. automatic picks the closed form for hcm/ncm.
LossCurve loss_curve(const ContagionSpec& spec, const TrancheDeck& deck, const AJDParams& ajd,
                     const PrecisionPolicy& precision = {}, PricingMethod method = PricingMethod::automatic);

struct LegValues {
    double protection = 0.0;
    double annuity = 0.0; // premium leg per unit running spread
};

/*! Discounted protection and premium legs of one tranche path or expected curve under the deck's
    timing convention. notional_loss reduces the premium notional (usually the tranche loss itself).
*/
LegValues leg_values(const TrancheDeck& deck, const std::vector<double>& loss, const std::vector<double>& notional_loss,
                     double width);

//! Running spread in bp that balances the legs given the deck's upfront.
double tranche_spread(const TrancheDeck& deck, int i, const LossCurve& curve);
//! Upfront fraction that balances the legs at a fixed running spread (bp).
double upfront_rate(const TrancheDeck& deck, int i, const LossCurve& curve, double running_bp = 0.0);
//! Spread in bp of the whole-pool index with zero upfront.
double index_spread(const TrancheDeck& deck, const LossCurve& curve,
                    IndexConvention convention = IndexConvention::tranche_zero_to_one);

//! P(|X_t| = n), n = 0..N.
std::vector<double> loss_count_distribution(const ContagionSpec& spec, double t, const AJDParams& ajd,
                                            const PrecisionPolicy& precision = {});
double expected_default_count(const ContagionSpec& spec, double t, const AJDParams& ajd,
                              const PrecisionPolicy& precision = {});

struct AttachOptions {
    CountRounding rounding = CountRounding::half_up;
    //! Read a zero attachment count as "first expected default" (threshold 1) instead of time 0.
    bool zero_attach_is_first_default = true;
    double horizon = 1000.0;
    double tol = 1e-6;
};

struct AttachDetach {
    int attach_count;
    int detach_count;
    double attach_time; // +inf when the threshold is never reached
    double detach_time;
};

std::vector<AttachDetach> attach_detach_times(const ContagionSpec& spec, const TrancheDeck& deck, const AJDParams& ajd,
                                              const PrecisionPolicy& precision = {}, const AttachOptions& options = {});

//! Spreads and index spread recomputed with doubled mantissa; returns the worst relative change.
double precision_self_check(const ContagionSpec& spec, const TrancheDeck& deck, const AJDParams& ajd,
                            const PrecisionPolicy& precision = {});

inline constexpr double infinite_time = std::numeric_limits<double>::infinity();

} // namespace contagion
