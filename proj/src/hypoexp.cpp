#include <contagion/errors.hpp>
#include <contagion/hypoexp.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

namespace contagion {

bool rates_collide(const Real& a, const Real& b, double rel_tol) {
    const Real scale = std::max(abs(a), abs(b));
    return abs(a - b) <= rel_tol * scale;
}

void check_distinct(const std::vector<Real>& rates, double rel_tol) {
    for (std::size_t i = 0; i < rates.size(); ++i)
        for (std::size_t j = i + 1; j < rates.size(); ++j)
            if (rates_collide(rates[i], rates[j], rel_tol))
                throw RateCollision(i, j, rates[i].convert_to<double>());
}

AlphaTable alpha_coeffs(const std::vector<double>& rates, const PrecisionPolicy& precision) {
    PrecisionScope scope(precision);
    std::vector<Real> r(rates.begin(), rates.end());
    return alpha_coeffs(r, precision);
}

AlphaTable alpha_coeffs(const std::vector<Real>& rates, const PrecisionPolicy& precision) {
    precision.validate();
    if (rates.empty())
        throw DomainError("alpha_coeffs needs at least one rate");
    PrecisionScope scope(precision);
    check_distinct(rates, precision.collision_rel_tol);
    AlphaTable table;
    table.rates = rates;
    table.precision = precision;
    table.coeffs.reserve(rates.size());
    table.coeffs.emplace_back(1);
    for (std::size_t m = 1; m < rates.size(); ++m) {
        Real last = 0;
        for (std::size_t i = 0; i < m; ++i) {
            table.coeffs[i] /= rates[m] - rates[i];
            last -= table.coeffs[i];
        }
        table.coeffs.push_back(last);
    }
    return table;
}

std::vector<std::vector<Real>> alpha_ladder(const std::vector<Real>& rates, const PrecisionPolicy& precision) {
    precision.validate();
    PrecisionScope scope(precision);
    check_distinct(rates, precision.collision_rel_tol);
    std::vector<std::vector<Real>> rows;
    rows.reserve(rates.size());
    if (rates.empty())
        return rows;
    rows.push_back({Real(1)});
    for (std::size_t m = 1; m < rates.size(); ++m) {
        const auto& prev = rows.back();
        std::vector<Real> row(m + 1);
        Real last = 0;
        for (std::size_t i = 0; i < m; ++i) {
            row[i] = prev[i] / (rates[m] - rates[i]);
            last -= row[i];
        }
        row[m] = last;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<Real> alpha_product_form(const std::vector<Real>& rates, const PrecisionPolicy& precision) {
    PrecisionScope scope(precision);
    check_distinct(rates, precision.collision_rel_tol);
    std::vector<Real> out(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i) {
        Real p = 1;
        for (std::size_t j = 0; j < rates.size(); ++j)
            if (j != i)
                p *= rates[j] - rates[i];
        out[i] = 1 / p;
    }
    return out;
}

Real hypoexp_mix(const AlphaTable& table, const Real& z) {
    if (z < 0)
        throw DomainError("hypoexp_mix needs z >= 0");
    PrecisionScope scope(table.precision);
    Real sum = 0;
    for (std::size_t i = 0; i < table.coeffs.size(); ++i)
        sum += table.coeffs[i] * exp(-table.rates[i] * z);
    return sum;
}

double hypoexp_mix(const AlphaTable& table, double z) {
    PrecisionScope scope(table.precision);
    return hypoexp_mix(table, Real(z)).convert_to<double>();
}

namespace {

using boost::math::quadrature::gauss_kronrod;

double convolve(const std::vector<double>& rates, std::size_t m, double t) {
    if (m == 0)
        return std::exp(-rates[0] * t);
    if (t <= 0.0)
        return 0.0;
    auto integrand = [&](double u) { return std::exp(-rates[m] * (t - u)) * convolve(rates, m - 1, u); };
    return gauss_kronrod<double, 15>::integrate(integrand, 0.0, t, 10, 1e-13);
}

} // namespace

double hypoexp_mix_integral(const std::vector<double>& rates, double z) {
    if (rates.empty())
        throw DomainError("hypoexp_mix_integral needs at least one rate");
    if (rates.size() > 7)
        throw SizeRefusal("nested quadrature is limited to n <= 6");
    if (z < 0.0)
        throw DomainError("hypoexp_mix_integral needs z >= 0");
    return convolve(rates, rates.size() - 1, z);
}

double hypoexp_mix_ode(const std::vector<double>& rates, double z) {
    namespace odeint = boost::numeric::odeint;
    if (rates.empty())
        throw DomainError("hypoexp_mix_ode needs at least one rate");
    if (z < 0.0)
        throw DomainError("hypoexp_mix_ode needs z >= 0");
    using State = std::vector<double>;
    State h(rates.size(), 0.0);
    h[0] = 1.0;
    if (z == 0.0)
        return h.back();
    auto rhs = [&](const State& x, State& dx, double) {
        dx[0] = -rates[0] * x[0];
        for (std::size_t m = 1; m < x.size(); ++m)
            dx[m] = -rates[m] * x[m] + x[m - 1];
    };
    auto stepper = odeint::make_controlled(1e-300, 1e-13, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_adaptive(stepper, rhs, h, 0.0, z, std::min(1e-3, z));
    return h.back();
}

double cancellation_residual(const AlphaTable& table) {
    const int n = table.order();
    if (n < 1)
        return 0.0;
    PrecisionScope scope(table.precision);
    Real last = 1;
    for (int j = 0; j < n; ++j)
        last *= table.rates[static_cast<std::size_t>(j)] - table.rates[static_cast<std::size_t>(n)];
    Real sum = 1 / last;
    Real biggest = 0;
    for (int i = 0; i <= n; ++i) {
        if (i < n)
            sum += table.coeffs[static_cast<std::size_t>(i)];
        biggest = std::max(biggest, abs(table.coeffs[static_cast<std::size_t>(i)]));
    }
    return (abs(sum) / biggest).convert_to<double>();
}

} // namespace contagion
