#include <contagion/errors.hpp>
#include <contagion/hypoexp.hpp>
#include <contagion/kernel.hpp>
#include <contagion/pricing.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

namespace contagion {

TrancheDeck TrancheDeck::regular(std::vector<double> attach, std::vector<double> upfront, double maturity,
                                 double period, double r, RecoveryVector recovery) {
    if (!(period > 0.0) || !(maturity > 0.0))
        throw DomainError("maturity and payment period must be positive");
    TrancheDeck d;
    d.attach = std::move(attach);
    d.upfront = std::move(upfront);
    d.maturity = maturity;
    d.r = r;
    d.recovery = std::move(recovery);
    const auto m = static_cast<int>(std::llround(maturity / period));
    if (m < 1 || std::abs(m * period - maturity) > 1e-9 * maturity)
        throw DomainError("maturity must be a whole number of payment periods");
    d.pay_times.resize(static_cast<std::size_t>(m) + 1);
    for (int k = 0; k <= m; ++k)
        d.pay_times[static_cast<std::size_t>(k)] = k == m ? maturity : k * period;
    d.validate();
    return d;
}

double TrancheDeck::lo(int i) const {
    if (i < 1 || i > tranche_count())
        throw IndexError("tranche index " + std::to_string(i) + " outside 1.." + std::to_string(tranche_count()));
    return attach[static_cast<std::size_t>(i - 1)];
}

double TrancheDeck::hi(int i) const {
    if (i < 1 || i > tranche_count())
        throw IndexError("tranche index " + std::to_string(i) + " outside 1.." + std::to_string(tranche_count()));
    return attach[static_cast<std::size_t>(i)];
}

void TrancheDeck::validate() const {
    if (attach.size() < 2)
        throw DomainError("a deck needs at least one tranche");
    if (attach.front() != 0.0)
        throw DomainError("the first attachment point must be 0");
    for (std::size_t k = 1; k < attach.size(); ++k)
        if (!(attach[k] > attach[k - 1]))
            throw DomainError("attachment points must be strictly increasing");
    if (attach.back() > 1.0)
        throw DomainError("attachment points must not exceed 1");
    if (upfront.size() + 1 != attach.size())
        throw DomainError("one upfront rate per tranche is required");
    if (pay_times.size() < 2 || pay_times.front() != 0.0)
        throw DomainError("the payment grid must start at 0 and have at least one period");
    for (std::size_t k = 1; k < pay_times.size(); ++k)
        if (!(pay_times[k] > pay_times[k - 1]))
            throw DomainError("payment times must be strictly increasing");
    if (std::abs(pay_times.back() - maturity) > 1e-12)
        throw DomainError("the payment grid must end at maturity");
    if (recovery.size() < 1)
        throw DomainError("the deck needs a recovery vector");
    if (!std::isfinite(r))
        throw DomainError("discount rate must be finite");
}

double pool_loss(const TrancheDeck& deck, const ObligorSet& f) {
    if (f.universe() != deck.obligors())
        throw ContractViolation("obligor set universe does not match the deck");
    double loss = 0.0;
    f.for_each([&](int j) { loss += 1.0 - deck.recovery.rate(j); });
    return loss / deck.obligors();
}

namespace {

double slice(double loss, double lo, double hi) { return std::max(loss - lo, 0.0) - std::max(loss - hi, 0.0); }

} // namespace

double tranche_loss(const TrancheDeck& deck, int i, const ObligorSet& f) {
    if (deck.recovery.homogeneous())
        return tranche_loss_by_count(deck, i, f.size());
    return slice(pool_loss(deck, f), deck.lo(i), deck.hi(i));
}

double tranche_loss_by_count(const TrancheDeck& deck, int i, int n) {
    const int big_n = deck.obligors();
    if (n < 0 || n > big_n)
        throw IndexError("default count outside 0..N");
    const double r = deck.recovery.common();
    const double v_lo = big_n * deck.lo(i) / (1.0 - r);
    const double v_hi = big_n * deck.hi(i) / (1.0 - r);
    return (1.0 - r) / big_n * (std::max(n - v_lo, 0.0) - std::max(n - v_hi, 0.0));
}

namespace {

/*! A family of functionals f(X_t) written as sum_j c_fj E[exp(-l_j int_0^t Y)].

    Coefficients stay at the policy precision. The Laplace factors only need enough bits to keep
    sum_j |c_fj| times their rounding error below double resolution, so they are evaluated at a
    reduced width derived from the coefficient magnitudes.
*/
struct Expansion {
    PrecisionPolicy precision;
    std::vector<Real> rates;
    std::vector<std::vector<Real>> coeffs;
    // f(empty set): X_0 is empty, so this is the exact value at t = 0
    std::vector<double> at_zero;

    int laplace_bits() const {
        PrecisionScope scope(precision);
        double worst = 1.0;
        for (const auto& row : coeffs) {
            Real s = 0;
            for (const auto& c : row)
                s += abs(c);
            worst = std::max(worst, s.convert_to<double>());
        }
        if (!std::isfinite(worst))
            throw NumericDomainError("expansion coefficients are not finite");
        const int need = static_cast<int>(std::ceil(std::log2(worst))) + 96;
        if (need > precision.mantissa_bits)
            throw PrecisionLoss("cancellation needs " + std::to_string(need) + " bits but mantissa_bits is " +
                                std::to_string(precision.mantissa_bits));
        return std::max(need, 96);
    }

    std::vector<std::vector<double>> evaluate(const AJDParams& ajd, const std::vector<double>& times) const {
        PrecisionScope scope(precision);
        const int bits = laplace_bits();
        const unsigned digits = digits10_for_bits(bits);
        std::vector<std::optional<AffineTransform<Real>>> transforms(rates.size());
        {
            PrecisionScope narrow(bits);
            for (std::size_t j = 0; j < rates.size(); ++j)
                if (rates[j] != 0)
                    transforms[j].emplace(ajd, Real(rates[j], digits));
        }
        std::vector<std::vector<double>> out(coeffs.size(), std::vector<double>(times.size()));
        std::vector<Real> e(rates.size());
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (times[k] < 0.0)
                throw DomainError("pricing time must be nonnegative");
            if (times[k] == 0.0) {
                for (std::size_t f = 0; f < coeffs.size(); ++f)
                    out[f][k] = at_zero[f];
                continue;
            }
            {
                PrecisionScope narrow(bits);
                const Real t(times[k]);
                for (std::size_t j = 0; j < rates.size(); ++j)
                    e[j] = transforms[j] ? transforms[j]->expectation(t) : Real(1);
            }
            for (std::size_t f = 0; f < coeffs.size(); ++f) {
                Real sum = 0;
                for (std::size_t j = 0; j < rates.size(); ++j)
                    if (coeffs[f][j] != 0)
                        sum += coeffs[f][j] * e[j];
                out[f][k] = sum.convert_to<double>();
                if (!std::isfinite(out[f][k]))
                    throw NumericDomainError("non-finite expectation at t=" + std::to_string(times[k]) + " (" +
                                             ajd.describe() + ")");
            }
        }
        return out;
    }
};

//! Cardinality ladder: P(|X_t| = n) = W_n sum_{j<=n} alpha^(n)_j E[exp(-a_j int Y)].
struct Ladder {
    std::vector<Real> rates;
    std::vector<Real> weight;
    std::vector<std::vector<Real>> alpha;
};

Ladder hcm_ladder(const ContagionSpec& spec, const PrecisionPolicy& precision) {
    if (spec.kind() != ContagionKind::hcm)
        throw ContractViolation("the homogeneous closed form needs an hcm spec");
    PrecisionScope scope(precision);
    const int n_total = spec.size();
    const Real rho(spec.hcm_rho());
    const Real delta(spec.delta());
    Ladder lad;
    lad.rates.resize(static_cast<std::size_t>(n_total) + 1);
    lad.rates[0] = aggregate_load_real(spec, spec.empty_set());
    for (int k = 1; k <= n_total; ++k)
        lad.rates[static_cast<std::size_t>(k)] = rho * k * (n_total - k) * exp(-delta * k);
    // W_n = a_0 (n-1)! (N-1)!/(N-n)! rho^{n-1} e^{-delta n(n-1)/2}, built as a running product.
    lad.weight.resize(static_cast<std::size_t>(n_total) + 1);
    lad.weight[0] = 1;
    if (n_total >= 1)
        lad.weight[1] = lad.rates[0];
    for (int n = 2; n <= n_total; ++n)
        lad.weight[static_cast<std::size_t>(n)] =
            lad.weight[static_cast<std::size_t>(n - 1)] * (n - 1) * (n_total - n + 1) * rho * exp(-delta * (n - 1));
    lad.alpha = alpha_ladder(lad.rates, precision);
    return lad;
}

Ladder ncm_ladder(const ContagionSpec& spec, const PrecisionPolicy& precision) {
    if (spec.kind() != ContagionKind::ncm)
        throw ContractViolation("the near-neighbour closed form needs an ncm spec");
    PrecisionScope scope(precision);
    const int n_total = spec.size();
    const Real pq = Real(spec.ncm_p()) + Real(spec.ncm_q());
    const Real delta(spec.delta());
    Ladder lad;
    lad.rates.resize(static_cast<std::size_t>(n_total) + 1);
    lad.rates[0] = aggregate_load_real(spec, spec.empty_set());
    for (int k = 1; k < n_total; ++k)
        lad.rates[static_cast<std::size_t>(k)] = exp(-delta * k) * pq;
    lad.rates[static_cast<std::size_t>(n_total)] = 0;
    // W_n = a_0 e^{-delta n(n-1)/2} (p+q)^{n-1}
    lad.weight.resize(static_cast<std::size_t>(n_total) + 1);
    lad.weight[0] = 1;
    lad.weight[1] = lad.rates[0];
    for (int n = 2; n <= n_total; ++n)
        lad.weight[static_cast<std::size_t>(n)] =
            lad.weight[static_cast<std::size_t>(n - 1)] * pq * exp(-delta * (n - 1));
    lad.alpha = alpha_ladder(lad.rates, precision);
    return lad;
}

Ladder ladder_for(const ContagionSpec& spec, const PrecisionPolicy& precision) {
    return spec.kind() == ContagionKind::hcm ? hcm_ladder(spec, precision) : ncm_ladder(spec, precision);
}

/*! Coefficients of E[g(|X_t|)] on the ladder basis:
    c_j = sum_{n >= max(j, first)} g(n) W_n alpha^(n)_j. The j = N entry multiplies E = 1 (a_N = 0)
    and is the constant term, W_N g(N) alpha^(N)_N, whose exact value is g(N).
*/
std::vector<Real> ladder_coefficients(const Ladder& lad, const std::function<double(int)>& g, int first) {
    const auto n_total = static_cast<int>(lad.rates.size()) - 1;
    std::vector<Real> c(lad.rates.size(), Real(0));
    for (int n = std::max(first, 0); n <= n_total; ++n) {
        const double gn = g(n);
        if (gn == 0.0)
            continue;
        const Real w = lad.weight[static_cast<std::size_t>(n)] * gn;
        const auto& row = lad.alpha[static_cast<std::size_t>(n)];
        for (int j = 0; j <= n; ++j)
            c[static_cast<std::size_t>(j)] += w * row[static_cast<std::size_t>(j)];
    }
    return c;
}

int first_loss_count(const TrancheDeck& deck, int i) {
    // ||V_{i-1}|| + 1
    const double v = deck.obligors() * deck.lo(i) / (1.0 - deck.recovery.common());
    return static_cast<int>(std::floor(v)) + 1;
}

void check_deck_for(const ContagionSpec& spec, const TrancheDeck& deck) {
    deck.validate();
    if (deck.obligors() != spec.size())
        throw ContractViolation("deck recovery vector has " + std::to_string(deck.obligors()) +
                                " entries for a pool of " + std::to_string(spec.size()));
}

Expansion ladder_expansion(const ContagionSpec& spec, const TrancheDeck& deck, const std::vector<int>& tranches,
                           bool extras, const PrecisionPolicy& precision) {
    check_deck_for(spec, deck);
    if (!deck.recovery.homogeneous())
        throw ContractViolation("the closed forms need a homogeneous recovery rate");
    PrecisionScope scope(precision);
    const Ladder lad = ladder_for(spec, precision);
    Expansion ex;
    ex.precision = precision;
    ex.rates = lad.rates;
    for (int i : tranches) {
        ex.coeffs.push_back(
            ladder_coefficients(lad, [&](int n) { return tranche_loss_by_count(deck, i, n); }, first_loss_count(deck, i)));
        ex.at_zero.push_back(tranche_loss_by_count(deck, i, 0));
    }
    if (extras) {
        const double r = deck.recovery.common();
        const double n_total = spec.size();
        ex.coeffs.push_back(ladder_coefficients(lad, [&](int n) { return n * (1.0 - r) / n_total; }, 1));
        ex.coeffs.push_back(ladder_coefficients(lad, [&](int n) { return n / n_total; }, 1));
        ex.at_zero.insert(ex.at_zero.end(), {0.0, 0.0});
    }
    return ex;
}

//! Brute-force basis: one Laplace factor per state S, coefficients summed over every F and ordering.
Expansion general_expansion(const ContagionSpec& spec, const std::vector<std::function<double(const ObligorSet&)>>& fs,
                            const PrecisionPolicy& precision) {
    const int n_total = spec.size();
    if (n_total > 8)
        throw SizeRefusal("brute-force pricing enumerates all orderings and is limited to N <= 8");
    PrecisionScope scope(precision);
    const std::size_t count = std::size_t{1} << n_total;
    Expansion ex;
    ex.precision = precision;
    ex.rates.resize(count);
    for (std::size_t s = 0; s < count; ++s)
        ex.rates[s] = aggregate_load_real(spec, ObligorSet::from_bits(n_total, s));
    ex.coeffs.assign(fs.size(), std::vector<Real>(count, Real(0)));
    const ObligorSet empty = spec.empty_set();
    for (const auto& f : fs)
        ex.at_zero.push_back(f(empty));
    for (std::size_t fb = 0; fb < count; ++fb) {
        const ObligorSet f = ObligorSet::from_bits(n_total, fb);
        std::vector<double> weights(fs.size());
        bool any = false;
        for (std::size_t q = 0; q < fs.size(); ++q) {
            weights[q] = fs[q](f);
            any = any || weights[q] != 0.0;
        }
        if (!any)
            continue;
        for (const auto& sc : kernel_coefficients(spec, empty, f, precision)) {
            const auto s = static_cast<std::size_t>(sc.state.bits());
            for (std::size_t q = 0; q < fs.size(); ++q)
                if (weights[q] != 0.0)
                    ex.coeffs[q][s] += sc.coeff * weights[q];
        }
    }
    return ex;
}

Expansion general_deck_expansion(const ContagionSpec& spec, const TrancheDeck& deck, const std::vector<int>& tranches,
                                 bool extras, const PrecisionPolicy& precision) {
    check_deck_for(spec, deck);
    std::vector<std::function<double(const ObligorSet&)>> fs;
    for (int i : tranches)
        fs.push_back([&deck, i](const ObligorSet& f) { return tranche_loss(deck, i, f); });
    if (extras) {
        fs.push_back([&deck](const ObligorSet& f) { return pool_loss(deck, f); });
        const double n_total = spec.size();
        fs.push_back([n_total](const ObligorSet& f) { return f.size() / n_total; });
    }
    return general_expansion(spec, fs, precision);
}

bool use_closed_form(const ContagionSpec& spec, PricingMethod method) {
    if (method == PricingMethod::general)
        return false;
    const bool available = spec.kind() != ContagionKind::general;
    if (method == PricingMethod::closed_form && !available)
        throw ContractViolation("no closed form for a general contagion spec");
    return available;
}

} // namespace

double expected_tranche_loss_general(const ContagionSpec& spec, const TrancheDeck& deck, int i, double t,
                                     const AJDParams& ajd, const PrecisionPolicy& precision) {
    deck.lo(i);
    return general_deck_expansion(spec, deck, {i}, false, precision).evaluate(ajd, {t})[0][0];
}

double expected_tranche_loss_hcm(const ContagionSpec& spec, const TrancheDeck& deck, int i, double t,
                                 const AJDParams& ajd, const PrecisionPolicy& precision) {
    if (spec.kind() != ContagionKind::hcm)
        throw ContractViolation("expected_tranche_loss_hcm needs an hcm spec");
    deck.lo(i);
    return ladder_expansion(spec, deck, {i}, false, precision).evaluate(ajd, {t})[0][0];
}

double expected_tranche_loss_ncm(const ContagionSpec& spec, const TrancheDeck& deck, int i, double t,
                                 const AJDParams& ajd, const PrecisionPolicy& precision) {
    if (spec.kind() != ContagionKind::ncm)
        throw ContractViolation("expected_tranche_loss_ncm needs an ncm spec");
    deck.lo(i);
    return ladder_expansion(spec, deck, {i}, false, precision).evaluate(ajd, {t})[0][0];
}

LossCurve loss_curve(const ContagionSpec& spec, const TrancheDeck& deck, const AJDParams& ajd,
                     const PrecisionPolicy& precision, PricingMethod method) {
    ajd.validate();
    precision.validate();
    if (spec.base_total() == 0.0) {
        // nobody can default first, so the empty set is absorbing
        deck.validate();
        const std::vector<double> zero(deck.pay_times.size(), 0.0);
        return {deck.pay_times, std::vector<std::vector<double>>(static_cast<std::size_t>(deck.tranche_count()), zero),
                zero, zero};
    }
    std::vector<int> tranches(static_cast<std::size_t>(deck.tranche_count()));
    for (int i = 1; i <= deck.tranche_count(); ++i)
        tranches[static_cast<std::size_t>(i - 1)] = i;
    const Expansion ex = use_closed_form(spec, method) ? ladder_expansion(spec, deck, tranches, true, precision)
                                                       : general_deck_expansion(spec, deck, tranches, true, precision);
    auto values = ex.evaluate(ajd, deck.pay_times);
    LossCurve curve;
    curve.times = deck.pay_times;
    curve.default_fraction = std::move(values.back());
    values.pop_back();
    curve.pool_loss = std::move(values.back());
    values.pop_back();
    curve.values = std::move(values);
    return curve;
}

LegValues leg_values(const TrancheDeck& deck, const std::vector<double>& el, const std::vector<double>& notional_loss,
                     double width) {
    const auto& t = deck.pay_times;
    if (el.size() != t.size() || notional_loss.size() != t.size())
        throw ContractViolation("loss curve does not match the payment grid");
    LegValues out;
    for (std::size_t k = 1; k < t.size(); ++k) {
        const double dk = t[k] - t[k - 1];
        const double df = std::exp(-deck.r * t[k]);
        double df_prot = df;
        double outstanding = width - notional_loss[k - 1];
        switch (deck.timing) {
        case DefaultTiming::start:
            break;
        case DefaultTiming::midpoint:
            df_prot = std::exp(-deck.r * 0.5 * (t[k - 1] + t[k]));
            outstanding = width - 0.5 * (notional_loss[k - 1] + notional_loss[k]);
            break;
        case DefaultTiming::end:
            outstanding = width - notional_loss[k];
            break;
        }
        out.protection += df_prot * (el[k] - el[k - 1]);
        out.annuity += df * outstanding * dk;
    }
    return out;
}

namespace {

using Legs = LegValues;

Legs legs(const TrancheDeck& deck, const std::vector<double>& el, const std::vector<double>& notional_loss, double width) {
    const Legs out = leg_values(deck, el, notional_loss, width);
    if (!(out.annuity > 0.0))
        throw DegenerateTranche("premium leg vanishes on the payment grid");
    return out;
}

const std::vector<double>& tranche_values(const LossCurve& curve, int i) {
    if (i < 1 || static_cast<std::size_t>(i) > curve.values.size())
        throw IndexError("tranche index outside the loss curve");
    return curve.values[static_cast<std::size_t>(i - 1)];
}

} // namespace

double tranche_spread(const TrancheDeck& deck, int i, const LossCurve& curve) {
    const auto& el = tranche_values(curve, i);
    const double width = deck.width(i);
    const Legs l = legs(deck, el, el, width);
    const double u = deck.upfront[static_cast<std::size_t>(i - 1)];
    return (l.protection - u * width) / l.annuity * 1e4;
}

double upfront_rate(const TrancheDeck& deck, int i, const LossCurve& curve, double running_bp) {
    const auto& el = tranche_values(curve, i);
    const double width = deck.width(i);
    const Legs l = legs(deck, el, el, width);
    return (l.protection - running_bp * 1e-4 * l.annuity) / width;
}

double index_spread(const TrancheDeck& deck, const LossCurve& curve, IndexConvention convention) {
    const auto& notional =
        convention == IndexConvention::tranche_zero_to_one ? curve.pool_loss : curve.default_fraction;
    const Legs l = legs(deck, curve.pool_loss, notional, 1.0);
    return l.protection / l.annuity * 1e4;
}

namespace {

Expansion count_expansion(const ContagionSpec& spec, bool mean_only, const PrecisionPolicy& precision) {
    const int n_total = spec.size();
    if (spec.kind() == ContagionKind::general) {
        std::vector<std::function<double(const ObligorSet&)>> fs;
        if (mean_only)
            fs.push_back([](const ObligorSet& f) { return static_cast<double>(f.size()); });
        else
            for (int n = 0; n <= n_total; ++n)
                fs.push_back([n](const ObligorSet& f) { return f.size() == n ? 1.0 : 0.0; });
        return general_expansion(spec, fs, precision);
    }
    PrecisionScope scope(precision);
    const Ladder lad = ladder_for(spec, precision);
    Expansion ex;
    ex.precision = precision;
    ex.rates = lad.rates;
    if (mean_only) {
        ex.coeffs.push_back(ladder_coefficients(lad, [](int n) { return static_cast<double>(n); }, 1));
        ex.at_zero.push_back(0.0);
    } else {
        for (int m = 0; m <= n_total; ++m) {
            ex.coeffs.push_back(ladder_coefficients(lad, [m](int n) { return n == m ? 1.0 : 0.0; }, m));
            ex.at_zero.push_back(m == 0 ? 1.0 : 0.0);
        }
    }
    return ex;
}

} // namespace

std::vector<double> loss_count_distribution(const ContagionSpec& spec, double t, const AJDParams& ajd,
                                            const PrecisionPolicy& precision) {
    const auto values = count_expansion(spec, false, precision).evaluate(ajd, {t});
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& v : values)
        out.push_back(v[0]);
    return out;
}

double expected_default_count(const ContagionSpec& spec, double t, const AJDParams& ajd,
                              const PrecisionPolicy& precision) {
    return count_expansion(spec, true, precision).evaluate(ajd, {t})[0][0];
}

namespace {

int rounded_count(double v, CountRounding mode) {
    switch (mode) {
    case CountRounding::half_up:
        return static_cast<int>(std::floor(v + 0.5));
    case CountRounding::ceil:
        return static_cast<int>(std::ceil(v));
    case CountRounding::floor:
        return static_cast<int>(std::floor(v));
    }
    return 0;
}

double first_passage(const std::function<double(double)>& count, double threshold, const AttachOptions& opt) {
    double hi = 0.25;
    while (count(hi) < threshold) {
        if (hi >= opt.horizon)
            return infinite_time;
        hi = std::min(2.0 * hi, opt.horizon);
    }
    double lo = 0.0;
    while (hi - lo > opt.tol) {
        const double mid = 0.5 * (lo + hi);
        if (count(mid) >= threshold)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

} // namespace

std::vector<AttachDetach> attach_detach_times(const ContagionSpec& spec, const TrancheDeck& deck, const AJDParams& ajd,
                                              const PrecisionPolicy& precision, const AttachOptions& options) {
    check_deck_for(spec, deck);
    const double r = deck.recovery.common();
    const int n_total = spec.size();
    const Expansion ex = count_expansion(spec, true, precision);
    auto count = [&](double t) { return ex.evaluate(ajd, {t})[0][0]; };

    std::vector<AttachDetach> out;
    for (int i = 1; i <= deck.tranche_count(); ++i) {
        AttachDetach ad{};
        ad.attach_count = rounded_count(n_total * deck.lo(i) / (1.0 - r), options.rounding);
        ad.detach_count = rounded_count(n_total * deck.hi(i) / (1.0 - r), options.rounding);
        auto solve = [&](int threshold) {
            if (threshold > n_total)
                return infinite_time;
            if (threshold <= 0) {
                if (!options.zero_attach_is_first_default)
                    return 0.0;
                threshold = 1;
            }
            return first_passage(count, threshold, options);
        };
        ad.attach_time = solve(ad.attach_count);
        ad.detach_time = solve(ad.detach_count);
        out.push_back(ad);
    }
    return out;
}

double precision_self_check(const ContagionSpec& spec, const TrancheDeck& deck, const AJDParams& ajd,
                            const PrecisionPolicy& precision) {
    auto spreads = [&](const PrecisionPolicy& p) {
        const LossCurve c = loss_curve(spec, deck, ajd, p);
        std::vector<double> s;
        for (int i = 1; i <= deck.tranche_count(); ++i)
            s.push_back(tranche_spread(deck, i, c));
        s.push_back(index_spread(deck, c));
        return s;
    };
    const auto base = spreads(precision);
    const auto fine = spreads(precision.doubled());
    double worst = 0.0;
    for (std::size_t k = 0; k < base.size(); ++k) {
        const double scale = std::max(std::abs(fine[k]), 1e-300);
        worst = std::max(worst, std::abs(base[k] - fine[k]) / scale);
    }
    return worst;
}

} // namespace contagion
