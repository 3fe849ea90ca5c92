#include <contagion/errors.hpp>
#include <contagion/hypoexp.hpp>
#include <contagion/kernel.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

namespace contagion {

using boost::math::quadrature::gauss_kronrod;

namespace {

constexpr unsigned quad_depth = 12;
constexpr double quad_tol = 1e-12;

// Scatter the low bits of k onto the set bits of mask, lowest first.
std::uint32_t deposit(std::uint32_t k, std::uint32_t mask) {
    std::uint32_t out = 0;
    for (std::uint32_t bit = 1; mask != 0; bit <<= 1) {
        const std::uint32_t low = mask & (~mask + 1);
        if (k & bit)
            out |= low;
        mask &= mask - 1;
    }
    return out;
}

void require_same_universe(const ContagionSpec& spec, const ObligorSet& a, const ObligorSet& b) {
    if (a.universe() != spec.size() || b.universe() != spec.size())
        throw ContractViolation("obligor set universe does not match the spec");
}

} // namespace

IntensityCurves factor_curves(const ContagionSpec& spec, std::function<double(double)> phi,
                              std::function<double(double, double)> phi_integral) {
    IntensityCurves c;
    c.rate = [spec, phi](const ObligorSet& e, const ObligorSet& f, double t) { return intensity(spec, e, f, phi(t)); };
    if (phi_integral)
        c.exit_integral = [spec, phi_integral](const ObligorSet& e, double s, double t) {
            return aggregate_load(spec, e) * phi_integral(s, t);
        };
    return c;
}

namespace {

struct GeneralKernel {
    const IntensityCurves& curves;
    const std::vector<ObligorSet>& chain;

    double exit_integral(const ObligorSet& e, double a, double b) const {
        if (b <= a)
            return 0.0;
        if (curves.exit_integral)
            return curves.exit_integral(e, a, b);
        auto f = [&](double u) { return -curves.rate(e, e, u); };
        return gauss_kronrod<double, 15>::integrate(f, a, b, quad_depth, quad_tol);
    }

    double h(std::size_t k, double s, double t) const {
        if (k == 0)
            return std::exp(-exit_integral(chain[0], s, t));
        if (t <= s)
            return 0.0;
        auto integrand = [&](double v) {
            return curves.rate(chain[k - 1], chain[k], v) * std::exp(-exit_integral(chain[k], v, t)) * h(k - 1, s, v);
        };
        return gauss_kronrod<double, 15>::integrate(integrand, s, t, quad_depth, quad_tol);
    }
};

} // namespace

double kernel_general(const KernelQuery& q) {
    if (q.from.universe() != q.to.universe())
        throw ContractViolation("kernel endpoints live in different universes");
    if (q.from.universe() > 8)
        throw SizeRefusal("kernel_general enumerates permutations and is limited to N <= 8");
    if (!(q.s <= q.t))
        throw DomainError("kernel_general needs s <= t");
    if (!q.curves.rate)
        throw ContractViolation("kernel_general needs intensity curves");
    if (!q.from.is_subset_of(q.to))
        return 0.0;

    std::vector<int> added = q.to.minus(q.from).members();
    std::vector<ObligorSet> chain(added.size() + 1);
    double total = 0.0;
    do {
        chain[0] = q.from;
        for (std::size_t k = 0; k < added.size(); ++k)
            chain[k + 1] = chain[k].with(added[k]);
        total += GeneralKernel{q.curves, chain}.h(added.size(), q.s, q.t);
    } while (std::next_permutation(added.begin(), added.end()));
    return total;
}

void for_each_chain(const ContagionSpec& spec, const ObligorSet& e, const ObligorSet& f,
                    const std::function<void(const std::vector<ObligorSet>&, const Real&)>& visit,
                    const PrecisionPolicy& precision) {
    require_same_universe(spec, e, f);
    if (!e.is_subset_of(f))
        return;
    PrecisionScope scope(precision);
    const int n = f.size() - e.size();
    std::vector<ObligorSet> chain{e};
    chain.reserve(static_cast<std::size_t>(n) + 1);
    std::vector<Real> loads{Real(1)};

    std::function<void()> dfs = [&]() {
        const ObligorSet& cur = chain.back();
        if (cur == f) {
            visit(chain, loads.back());
            return;
        }
        f.minus(cur).for_each([&](int i) {
            Real load = contagion_load_real(spec, cur, i);
            if (load == 0)
                return;
            loads.push_back(loads.back() * load);
            chain.push_back(cur.with(i));
            dfs();
            chain.pop_back();
            loads.pop_back();
        });
    };
    dfs();
}

std::vector<StateCoefficient> kernel_coefficients(const ContagionSpec& spec, const ObligorSet& e,
                                                  const ObligorSet& f, const PrecisionPolicy& precision) {
    require_same_universe(spec, e, f);
    PrecisionScope scope(precision);
    std::unordered_map<ObligorSet, Real, ObligorSetHash> acc;
    for_each_chain(
        spec, e, f,
        [&](const std::vector<ObligorSet>& chain, const Real& lhat) {
            std::vector<Real> rates;
            rates.reserve(chain.size());
            for (const auto& s : chain)
                rates.push_back(aggregate_load_real(spec, s));
            const AlphaTable table = alpha_coeffs(rates, precision);
            for (std::size_t i = 0; i < chain.size(); ++i) {
                auto [it, fresh] = acc.try_emplace(chain[i], 0);
                it->second += lhat * table.coeffs[i];
            }
        },
        precision);
    std::vector<StateCoefficient> out;
    out.reserve(acc.size());
    for (auto& [state, c] : acc)
        out.push_back({state, std::move(c)});
    std::sort(out.begin(), out.end(),
              [](const StateCoefficient& a, const StateCoefficient& b) { return a.state.bits() < b.state.bits(); });
    return out;
}

double kernel_factorized(const ContagionSpec& spec, const ObligorSet& e, const ObligorSet& f, double z,
                         const PrecisionPolicy& precision) {
    if (!(z >= 0.0))
        throw DomainError("kernel_factorized needs z >= 0");
    PrecisionScope scope(precision);
    const Real zr(z);
    Real total = 0;
    for (const auto& sc : kernel_coefficients(spec, e, f, precision))
        total += sc.coeff * exp(-aggregate_load_real(spec, sc.state) * zr);
    return total.convert_to<double>();
}

KernelExpansion::KernelExpansion(const ContagionSpec& spec, const ObligorSet& e, const ObligorSet& upper,
                                 const PrecisionPolicy& precision)
    : precision_(precision), e_(e) {
    require_same_universe(spec, e, upper);
    precision.validate();
    if (spec.size() > 25)
        throw SizeRefusal("exact subset enumeration is limited to N <= 25");
    if (!e.is_subset_of(upper))
        throw ContractViolation("kernel block upper bound must contain the start set");
    free_ = upper.minus(e).members();
    d_ = static_cast<int>(free_.size());
    if (d_ > max_free)
        throw SizeRefusal("kernel block with " + std::to_string(d_) + " free obligors exceeds the limit of " +
                          std::to_string(max_free));

    PrecisionScope scope(precision);
    const std::uint32_t count = 1u << d_;
    lbar_.resize(count);
    for (std::uint32_t t = 0; t < count; ++t)
        lbar_[t] = aggregate_load_real(spec, state_of(t));

    coeffs_.resize(count);
    coeffs_[0] = {Real(1)};
    std::vector<Real> num;
    for (std::uint32_t t = 1; t < count; ++t) {
        const int size_t_ = std::popcount(t);
        const std::uint32_t width = 1u << size_t_;
        num.assign(width, Real(0));
        const ObligorSet global_t = state_of(t);
        bool any = false;
        // bit position of j inside t, counted among t's set bits
        int pos = 0;
        for (int b = 0; b < d_; ++b) {
            if (!((t >> b) & 1u))
                continue;
            const std::uint32_t prev = t & ~(1u << b);
            const auto& cprev = coeffs_[prev];
            if (!cprev.empty()) {
                const Real load = contagion_load_real(spec, global_t.without(free_[static_cast<std::size_t>(b)]),
                                                      free_[static_cast<std::size_t>(b)]);
                if (load != 0) {
                    const std::uint32_t low = (1u << pos) - 1;
                    for (std::uint32_t k = 0; k < cprev.size(); ++k) {
                        if (cprev[k] == 0)
                            continue;
                        const std::uint32_t idx = (k & low) | ((k >> pos) << (pos + 1));
                        num[idx] += load * cprev[k];
                        any = true;
                    }
                }
            }
            ++pos;
        }
        if (!any)
            continue;
        auto& ct = coeffs_[t];
        ct.assign(width, Real(0));
        Real last = 0;
        for (std::uint32_t k = 0; k + 1 < width; ++k) {
            if (num[k] == 0)
                continue;
            const std::uint32_t s = deposit(k, t);
            if (rates_collide(lbar_[t], lbar_[s], precision.collision_rel_tol))
                throw RateCollision(s, t, lbar_[t].convert_to<double>());
            ct[k] = num[k] / (lbar_[t] - lbar_[s]);
            last -= ct[k];
        }
        ct[width - 1] = last;
    }
}

ObligorSet KernelExpansion::state_of(std::uint32_t local) const {
    ObligorSet s = e_;
    for (int b = 0; b < d_; ++b)
        if ((local >> b) & 1u)
            s = s.with(free_[static_cast<std::size_t>(b)]);
    return s;
}

std::vector<RowEntry> KernelExpansion::evaluate(double z) const {
    if (!(z >= 0.0))
        throw DomainError("kernel row needs z >= 0");
    PrecisionScope scope(precision_);
    const std::uint32_t count = 1u << d_;
    const Real zr(z);
    std::vector<Real> decay(count);
    for (std::uint32_t s = 0; s < count; ++s)
        decay[s] = exp(-lbar_[s] * zr);

    std::vector<RowEntry> out;
    out.reserve(count);
    for (std::uint32_t t = 0; t < count; ++t) {
        const auto& ct = coeffs_[t];
        Real p = 0;
        for (std::uint32_t k = 0; k < ct.size(); ++k)
            if (ct[k] != 0)
                p += ct[k] * decay[deposit(k, t)];
        out.push_back({state_of(t), p.convert_to<double>()});
    }
    return out;
}

std::vector<RowEntry> kernel_block(const ContagionSpec& spec, const ObligorSet& e, const ObligorSet& upper,
                                   double z, const PrecisionPolicy& precision) {
    return KernelExpansion(spec, e, upper, precision).evaluate(z);
}

std::vector<RowEntry> kernel_row(const ContagionSpec& spec, const ObligorSet& e, double z,
                                 const PrecisionPolicy& precision) {
    return kernel_block(spec, e, spec.full_set(), z, precision);
}

double two_obligor_mode(double lambda) {
    if (!(lambda > 0.0))
        throw DomainError("two_obligor_mode needs lambda > 0");
    return std::numbers::ln2 / lambda;
}

} // namespace contagion
