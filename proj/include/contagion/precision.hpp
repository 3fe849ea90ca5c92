#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <mutex>

namespace contagion {

//! Variable-precision binary float. The precision of new values is set by PrecisionScope.
using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;

struct PrecisionPolicy {
    //! Working mantissa for the alternating exponential sums.
    int mantissa_bits = 1024;
    //! Two rates l, m collide when |l - m| <= tol * max(|l|, |m|).
    double collision_rel_tol = 1e-12;

    void validate() const;
    PrecisionPolicy doubled() const { return {2 * mantissa_bits, collision_rel_tol}; }
};

/*! RAII guard that sets the precision of Real values created on this thread.

    The backend keeps its default precision in a process-wide variable, so scopes are
    serialized through a recursive mutex; nested scopes on one thread are allowed.
*/
class PrecisionScope {
  public:
    explicit PrecisionScope(int mantissa_bits);
    explicit PrecisionScope(const PrecisionPolicy& policy) : PrecisionScope(policy.mantissa_bits) {}
    ~PrecisionScope();

    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

  private:
    std::unique_lock<std::recursive_mutex> lock_;
    unsigned saved_digits10_;
};

//! Decimal digits that carry at least `bits` binary digits.
unsigned digits10_for_bits(int bits);

} // namespace contagion
