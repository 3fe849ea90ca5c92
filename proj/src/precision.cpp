#include <contagion/errors.hpp>
#include <contagion/precision.hpp>

#include <cmath>

namespace contagion {

namespace {
std::recursive_mutex& precision_mutex() {
    static std::recursive_mutex m;
    return m;
}
} // namespace

void PrecisionPolicy::validate() const {
    if (mantissa_bits < 53)
        throw DomainError("mantissa_bits must be >= 53, got " + std::to_string(mantissa_bits));
    if (!(collision_rel_tol >= 0.0) || !std::isfinite(collision_rel_tol))
        throw DomainError("collision_rel_tol must be finite and nonnegative");
}

unsigned digits10_for_bits(int bits) {
    return static_cast<unsigned>(std::ceil(bits * 0.30102999566398120)) + 1;
}

PrecisionScope::PrecisionScope(int mantissa_bits)
    : lock_(precision_mutex()), saved_digits10_(Real::default_precision()) {
    if (mantissa_bits < 53)
        throw DomainError("mantissa_bits must be >= 53");
    Real::default_precision(digits10_for_bits(mantissa_bits));
}

PrecisionScope::~PrecisionScope() { Real::default_precision(saved_digits10_); }

} // namespace contagion
