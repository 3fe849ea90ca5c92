#include <contagion/ajd.hpp>

#include <boost/numeric/odeint.hpp>

#include <array>

namespace contagion {

void AJDParams::validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!(kappa > 0) || !finite(kappa))
        throw DomainError("kappa must be > 0");
    if (!(sigma > 0) || !finite(sigma))
        throw DomainError("sigma must be > 0");
    if (!(theta >= 0) || !finite(theta))
        throw DomainError("theta must be >= 0");
    if (!(l >= 0) || !finite(l))
        throw DomainError("l must be >= 0");
    if (!(mu >= 0) || !finite(mu))
        throw DomainError("mu must be >= 0");
    if (!(y0 >= 0) || !finite(y0))
        throw DomainError("y0 must be >= 0");
}

std::string AJDParams::describe() const {
    std::ostringstream os;
    os.precision(10);
    os << "kappa=" << kappa << ", theta=" << theta << ", sigma=" << sigma << ", l=" << l << ", mu=" << mu
       << ", y0=" << y0;
    return os.str();
}

TransformValue transform(const AJDParams& p, double g, double t) { return transform_t<double>(p, g, t); }

double expectation(const AJDParams& p, double g, double t) { return expectation_t<double>(p, g, t); }

TransformValue riccati_oracle(const AJDParams& p, double g, double t, double tol) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 2>; // {A, B}
    if (t < 0)
        throw DomainError("riccati_oracle needs t >= 0");
    State x{0.0, 0.0};
    if (t == 0)
        return {0.0, 0.0};
    auto rhs = [&](const State& s, State& ds, double) {
        const double b = s[1];
        const double denom = 1.0 - p.mu * b;
        if (!(denom > 0.0))
            throw NumericDomainError("riccati oracle left its domain: mu*B >= 1 (" + p.describe() + ")");
        ds[0] = p.kappa * p.theta * b + p.l * (1.0 / denom - 1.0);
        ds[1] = -g - p.kappa * b + 0.5 * p.sigma * p.sigma * b * b;
    };
    auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_adaptive(stepper, rhs, x, 0.0, t, std::min(1e-3, t));
    return {x[0], x[1]};
}

} // namespace contagion
