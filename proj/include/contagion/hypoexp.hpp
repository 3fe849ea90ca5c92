#pragma once

#include <contagion/precision.hpp>

#include <vector>

namespace contagion {

/*! Coefficients of the hypoexponential mixture sum_i alpha_i exp(-l_i z).

    coeffs[i] = alpha^(n)_i(l_0, ..., l_n) where n = rates.size() - 1. Values are held at
    the policy's mantissa width.
*/
struct AlphaTable {
    std::vector<Real> rates;
    std::vector<Real> coeffs;
    PrecisionPolicy precision;

    int order() const { return static_cast<int>(coeffs.size()) - 1; }
};

//! Throws RateCollision for the first pair (i, j) with |l_i - l_j| <= tol * max(|l_i|, |l_j|).
void check_distinct(const std::vector<Real>& rates, double rel_tol);
bool rates_collide(const Real& a, const Real& b, double rel_tol);

AlphaTable alpha_coeffs(const std::vector<double>& rates, const PrecisionPolicy& precision = {});
//! Rates must already carry the policy precision (create them inside a PrecisionScope).
AlphaTable alpha_coeffs(const std::vector<Real>& rates, const PrecisionPolicy& precision = {});

//! Every prefix row alpha^(m), m = 0..n, of the recursion. Row m has m + 1 entries.
std::vector<std::vector<Real>> alpha_ladder(const std::vector<Real>& rates, const PrecisionPolicy& precision = {});

//! alpha_i = prod_{j != i} 1 / (l_j - l_i). Independent cross-check of the recursion.
std::vector<Real> alpha_product_form(const std::vector<Real>& rates, const PrecisionPolicy& precision = {});

Real hypoexp_mix(const AlphaTable& table, const Real& z);
double hypoexp_mix(const AlphaTable& table, double z);

/*! Evaluates H_n(z) straight from the convolution H_m(t) = int_0^t exp(-l_m (t-u)) H_{m-1}(u) du
    by nested adaptive Gauss-Kronrod quadrature. Slow; for tests. Refuses n > 6.
*/
double hypoexp_mix_integral(const std::vector<double>& rates, double z);

//! Same H_n(z) from the linear system H_0' = -l_0 H_0, H_m' = -l_m H_m + H_{m-1} (dopri5, tight tolerance).
double hypoexp_mix_ode(const std::vector<double>& rates, double z);

/*! |sum_{i<n} alpha_i + alpha_n^product| / max_i |alpha_i|, i.e. how far the recursion's
    leading coefficients are from summing to minus the independently computed last one.
*/
double cancellation_residual(const AlphaTable& table);

} // namespace contagion
