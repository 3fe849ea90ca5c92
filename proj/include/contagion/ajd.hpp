#pragma once

#include <contagion/errors.hpp>
#include <contagion/precision.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <type_traits>

namespace contagion {

//! dY = kappa (theta - Y) dt + sigma sqrt(Y) dW + dJ, J compound Poisson(l) with Exp(mean mu) jumps.
struct AJDParams {
    double kappa = 0.6;
    double theta = 0.02;
    double sigma = 0.141;
    double l = 0.2;
    double mu = 0.1;
    double y0 = 1.0;

    void validate() const;
    std::string describe() const;
};

//! E[exp(-g int_0^t Y ds)] = exp(a + y0 b).
template <class T>
struct BasicTransform {
    T a;
    T b;
};
using TransformValue = BasicTransform<double>;

namespace detail {

inline double to_double(double v) { return v; }
inline double to_double(const Real& v) { return v.convert_to<double>(); }

[[noreturn]] inline void log_domain(const AJDParams& p, double g, double t, const char* which, double arg) {
    std::ostringstream os;
    os << "affine transform: log argument " << which << " = " << arg << " is not positive (g=" << g << ", t=" << t
       << ", " << p.describe() << ")";
    throw NumericDomainError(os.str());
}

} // namespace detail

/*! Closed-form A(g,0,t) and B(g,0,t) for one g, with the g-dependent constants computed once.
    T is double or Real; Real values are evaluated at the precision of the enclosing PrecisionScope.
*/
template <class T>
class AffineTransform {
  public:
    AffineTransform(const AJDParams& p, const T& g) : p_(p), g_(g) {
        using std::sqrt;
        if (!(g > 0))
            throw DomainError("affine transform needs g > 0");
        kappa_ = T(p.kappa);
        theta_ = T(p.theta);
        l_ = T(p.l);
        const T sigma(p.sigma), mu(p.mu);
        gamma_ = sqrt(kappa_ * kappa_ + 2 * g * sigma * sigma);
        c1_ = -(gamma_ + kappa_) / (2 * g);
        // (kappa - gamma) / (2g) without the cancellation for small sigma
        d1_ = -(sigma * sigma) / (gamma_ + kappa_);
        c2_ = 1 - mu / c1_;
        d2_ = (d1_ + mu) / c1_;
        b_ = d1_ * g + g * (kappa_ * c1_ - sigma * sigma) / gamma_;
        k1_ = kappa_ * theta_ * gamma_ / (g * b_ * c1_ * d1_);
        k2_ = l_ * (c2_ * d1_ - c1_ * d2_) / (b_ * c1_ * c2_ * d2_);
    }

    BasicTransform<T> at(const T& t) const {
        using std::exp;
        using std::log;
        if (t < 0)
            throw DomainError("affine transform needs t >= 0");
        if (t == 0)
            return {T(0), T(0)};
        if constexpr (std::is_same_v<T, double>) {
            if (std::abs(b_ * t) < 1e-8) {
                // e^{bt} - 1 carries too few digits here; use the Taylor expansion of the Riccati system.
                const double bb = -g_ * t + kappa_ * g_ * t * t / 2;
                const double aa = -(kappa_ * theta_ + l_ * p_.mu) * g_ * t * t / 2;
                return {aa, bb};
            }
        }
        // Both log arguments equal 1 at t = 0; they are carried as 1 + x so that log1p keeps the digits
        // the large prefactors k1, k2 would otherwise amplify.
        const T em1 = expm1_of(b_ * t);
        const T ebt = em1 + 1;
        const T bcoef = -em1 / (c1_ + d1_ * ebt);
        const T x1 = -d1_ * em1 * g_ / gamma_;
        if (!(x1 > -1))
            detail::log_domain(p_, detail::to_double(g_), detail::to_double(t), "(c1+d1 e^bt)/(-gamma/g)",
                               detail::to_double(x1 + 1));
        T a = k1_ * log1p_of(x1) + kappa_ * theta_ * t / c1_;
        if (p_.l != 0.0) {
            const T x2 = d2_ * em1 / (c2_ + d2_);
            if (!(x2 > -1))
                detail::log_domain(p_, detail::to_double(g_), detail::to_double(t), "(c2+d2 e^bt)/(c2+d2)",
                                   detail::to_double(x2 + 1));
            a += k2_ * log1p_of(x2) + (l_ / c2_ - l_) * t;
        }
        return {a, bcoef};
    }

    T expectation(const T& t) const {
        using std::exp;
        const auto v = at(t);
        return exp(v.a + T(p_.y0) * v.b);
    }

  private:
    static T expm1_of(const T& x) {
        using std::expm1;
        using boost::multiprecision::expm1;
        return expm1(x);
    }
    static T log1p_of(const T& x) {
        using std::log1p;
        using boost::multiprecision::log1p;
        return log1p(x);
    }

    AJDParams p_;
    T g_, kappa_, theta_, l_, gamma_, c1_, d1_, c2_, d2_, b_, k1_, k2_;
};

template <class T>
BasicTransform<T> transform_t(const AJDParams& p, const T& g, const T& t) {
    return AffineTransform<T>(p, g).at(t);
}

template <class T>
T expectation_t(const AJDParams& p, const T& g, const T& t) {
    return AffineTransform<T>(p, g).expectation(t);
}

TransformValue transform(const AJDParams& p, double g, double t);
double expectation(const AJDParams& p, double g, double t);

//! Integrates B' = -g - kappa B + sigma^2 B^2 / 2, A' = kappa theta B + l (1/(1 - mu B) - 1) with dopri5.
TransformValue riccati_oracle(const AJDParams& p, double g, double t, double tol = 1e-12);

} // namespace contagion
