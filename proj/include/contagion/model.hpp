#pragma once

#include <contagion/obligor_set.hpp>
#include <contagion/precision.hpp>

#include <span>
#include <utility>
#include <vector>

namespace contagion {

enum class ContagionKind { general, hcm, ncm };

const char* to_string(ContagionKind kind);

/*! Base intensities, pairwise contagion rates and the contagion-magnitude exponent.

    rho(j, i) is the rate at which a default of j loads onto survivor i. The diagonal is
    always zero. h(n) = exp(-delta * n). The hcm and ncm kinds carry the structural
    constants that enable the cardinality-ladder pricing formulas.
*/
class ContagionSpec {
  public:
    //! Dense contagion matrix, row-major by source: rho[(j-1)*N + (i-1)] = rho_ji.
    static ContagionSpec general(std::vector<double> beta, std::vector<double> rho, double delta);
    //! Constant off-diagonal contagion rate.
    static ContagionSpec hcm(std::vector<double> beta, double rho, double delta);
    //! hcm with the total base intensity a0 split uniformly across the n obligors.
    static ContagionSpec hcm_uniform(int n, double a0, double rho, double delta);
    //! Circular near-neighbour contagion: j -> j+1 at rate p, j -> j-1 at rate q. Needs n >= 3.
    static ContagionSpec ncm(std::vector<double> beta, double p, double q, double delta);
    static ContagionSpec ncm_uniform(int n, double a0, double p, double q, double delta);

    int size() const { return n_; }
    ContagionKind kind() const { return kind_; }
    double delta() const { return delta_; }
    double beta(int i) const;
    const std::vector<double>& betas() const { return beta_; }
    double rho(int j, int i) const;
    //! sum_i beta_i
    double base_total() const { return base_total_; }
    //! h(n) = exp(-delta n)
    double magnitude(int n) const;

    double hcm_rho() const;
    double ncm_p() const;
    double ncm_q() const;

    //! Survivors with nonzero contagion from j, with the rate rho_ji.
    const std::vector<std::pair<int, double>>& successors(int j) const;

    ObligorSet empty_set() const { return ObligorSet(n_); }
    ObligorSet full_set() const { return ObligorSet::full(n_); }

  private:
    ContagionSpec() = default;
    void finish();

    int n_ = 0;
    ContagionKind kind_ = ContagionKind::general;
    std::vector<double> beta_;
    std::vector<double> rho_;
    double delta_ = 0.0;
    double base_total_ = 0.0;
    double hcm_rho_ = 0.0;
    double ncm_p_ = 0.0;
    double ncm_q_ = 0.0;
    std::vector<std::vector<std::pair<int, double>>> successors_;
};

//! Per-obligor recovery rates in [0,1).
class RecoveryVector {
  public:
    RecoveryVector() = default;
    explicit RecoveryVector(std::vector<double> rates);
    static RecoveryVector uniform(int n, double rate);

    int size() const { return static_cast<int>(r_.size()); }
    double rate(int i) const;
    bool homogeneous() const;
    //! Common rate; throws if the vector is heterogeneous.
    double common() const;
    const std::vector<double>& rates() const { return r_; }

  private:
    std::vector<double> r_;
};

//! Contagion load of E on survivor i: beta_i for E empty, else h(|E|) sum_{j in E} rho_ji.
double contagion_load(const ContagionSpec& spec, const ObligorSet& e, int i);
//! Sum of contagion_load over survivors; zero on the full set.
double aggregate_load(const ContagionSpec& spec, const ObligorSet& e);
//! aggregate_load without the hcm/ncm shortcuts.
double aggregate_load_general(const ContagionSpec& spec, const ObligorSet& e);
//! Product of contagion loads along start, start+{pi_1}, ...
double path_load(const ContagionSpec& spec, const ObligorSet& start, std::span<const int> pi);
//! Signed transition intensity lambda_EF for the factor value phi.
double intensity(const ContagionSpec& spec, const ObligorSet& e, const ObligorSet& f, double phi_value);

//! Extended-precision variants evaluated at the precision of the enclosing PrecisionScope.
Real contagion_load_real(const ContagionSpec& spec, const ObligorSet& e, int i);
Real aggregate_load_real(const ContagionSpec& spec, const ObligorSet& e);

//! The factor functional Phi(t, y). Only the identity Phi(t, y) = y is provided.
inline double factor_functional(double /*t*/, double y) { return y; }

} // namespace contagion
