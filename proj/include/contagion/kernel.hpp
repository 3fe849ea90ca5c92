#pragma once

#include <contagion/model.hpp>
#include <contagion/precision.hpp>

#include <functional>
#include <vector>

namespace contagion {

/*! Time-dependent intensity family for the general kernel.

    rate(E, F, t) is the signed lambda_EF(t) (negative on the diagonal). exit_integral(E, s, t),
    when set, returns int_s^t lambda_E(u) du with lambda_E = -lambda_EE; otherwise it is obtained
    by quadrature of -rate(E, E, .).
*/
struct IntensityCurves {
    std::function<double(const ObligorSet&, const ObligorSet&, double)> rate;
    std::function<double(const ObligorSet&, double, double)> exit_integral;
};

//! lambda_EF(t) = phi(t) L_E(i). phi_integral(s, t), if given, must return int_s^t phi.
IntensityCurves factor_curves(const ContagionSpec& spec, std::function<double(double)> phi,
                              std::function<double(double, double)> phi_integral = {});

struct KernelQuery {
    ObligorSet from;
    ObligorSet to;
    double s = 0.0;
    double t = 0.0;
    double phi_integral = 0.0;
    IntensityCurves curves;
};

//! G(s,t;E,F) by nested Gauss-Kronrod quadrature of the H recursion, summed over all orderings of F/E.
double kernel_general(const KernelQuery& q);

/*! Depth-first enumeration of the default orderings of F/E. The callback receives the chain
    F_0 = E, ..., F_n = F and the path load; orderings with a zero load are pruned.
*/
void for_each_chain(const ContagionSpec& spec, const ObligorSet& e, const ObligorSet& f,
                    const std::function<void(const std::vector<ObligorSet>&, const Real&)>& visit,
                    const PrecisionPolicy& precision = {});

struct StateCoefficient {
    ObligorSet state;
    Real coeff;
};

/*! G(E, F, z) = sum_S c_S exp(-Lbar_S z): the permutation sum of the factorized kernel with the
    alpha coefficients collected per visited state S.
*/
std::vector<StateCoefficient> kernel_coefficients(const ContagionSpec& spec, const ObligorSet& e,
                                                  const ObligorSet& f, const PrecisionPolicy& precision = {});

double kernel_factorized(const ContagionSpec& spec, const ObligorSet& e, const ObligorSet& f, double z,
                         const PrecisionPolicy& precision = {});

struct RowEntry {
    ObligorSet state;
    double probability;
};

/*! Transition probabilities from E to every H with E <= H <= upper, kept in exponential-basis form
    so the row can be evaluated at many z.

    The coefficients are aggregated over orderings by a recursion on subsets, which carries the
    same alpha algebra as the permutation sum without enumerating |F/E|! paths.
*/
class KernelExpansion {
  public:
    static constexpr int max_free = 13;

    KernelExpansion(const ContagionSpec& spec, const ObligorSet& e, const ObligorSet& upper,
                    const PrecisionPolicy& precision = {});

    std::vector<RowEntry> evaluate(double z) const;
    int free_count() const { return d_; }

  private:
    ObligorSet state_of(std::uint32_t local) const;

    PrecisionPolicy precision_;
    ObligorSet e_;
    std::vector<int> free_;
    int d_ = 0;
    std::vector<Real> lbar_;
    std::vector<std::vector<Real>> coeffs_;
};

//! Full conditional law of X_t given X_s = E; refuses N > 25.
std::vector<RowEntry> kernel_row(const ContagionSpec& spec, const ObligorSet& e, double z,
                                 const PrecisionPolicy& precision = {});
std::vector<RowEntry> kernel_block(const ContagionSpec& spec, const ObligorSet& e, const ObligorSet& upper,
                                   double z, const PrecisionPolicy& precision = {});

//! ln 2 / lambda, where P[X = {i} | start empty] peaks for two symmetric obligors.
double two_obligor_mode(double lambda);

} // namespace contagion
