#include <contagion/errors.hpp>
#include <contagion/model.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace contagion {

const char* to_string(ContagionKind kind) {
    switch (kind) {
    case ContagionKind::general:
        return "general";
    case ContagionKind::hcm:
        return "hcm";
    case ContagionKind::ncm:
        return "ncm";
    }
    return "?";
}

namespace {

void check_count(std::size_t n) {
    if (n < 1 || n > static_cast<std::size_t>(ObligorSet::max_obligors))
        throw DomainError("obligor count must lie in 1..128, got " + std::to_string(n));
}

void check_betas(const std::vector<double>& beta) {
    for (std::size_t i = 0; i < beta.size(); ++i)
        if (!(beta[i] >= 0.0) || !std::isfinite(beta[i]))
            throw DomainError("beta_" + std::to_string(i + 1) + " must be finite and >= 0");
}

void check_rate(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v))
        throw DomainError(std::string(name) + " must be finite and >= 0");
}

} // namespace

void ContagionSpec::finish() {
    if (!std::isfinite(delta_))
        throw DomainError("delta must be finite");
    base_total_ = 0.0;
    for (double b : beta_)
        base_total_ += b;
    successors_.assign(static_cast<std::size_t>(n_), {});
    for (int j = 1; j <= n_; ++j)
        for (int i = 1; i <= n_; ++i) {
            const double r = rho_[static_cast<std::size_t>((j - 1) * n_ + (i - 1))];
            if (r > 0.0)
                successors_[static_cast<std::size_t>(j - 1)].emplace_back(i, r);
        }
}

ContagionSpec ContagionSpec::general(std::vector<double> beta, std::vector<double> rho, double delta) {
    check_count(beta.size());
    check_betas(beta);
    const auto n = static_cast<int>(beta.size());
    if (rho.size() != beta.size() * beta.size())
        throw DomainError("rho must be an N x N matrix");
    for (double r : rho)
        check_rate(r, "rho_ji");
    for (int i = 0; i < n; ++i)
        rho[static_cast<std::size_t>(i * n + i)] = 0.0;
    ContagionSpec s;
    s.n_ = n;
    s.kind_ = ContagionKind::general;
    s.beta_ = std::move(beta);
    s.rho_ = std::move(rho);
    s.delta_ = delta;
    s.finish();
    return s;
}

ContagionSpec ContagionSpec::hcm(std::vector<double> beta, double rho, double delta) {
    check_count(beta.size());
    check_betas(beta);
    check_rate(rho, "rho");
    const auto n = static_cast<int>(beta.size());
    ContagionSpec s;
    s.n_ = n;
    s.kind_ = ContagionKind::hcm;
    s.beta_ = std::move(beta);
    s.rho_.assign(static_cast<std::size_t>(n * n), rho);
    for (int i = 0; i < n; ++i)
        s.rho_[static_cast<std::size_t>(i * n + i)] = 0.0;
    s.delta_ = delta;
    s.hcm_rho_ = rho;
    s.finish();
    return s;
}

ContagionSpec ContagionSpec::hcm_uniform(int n, double a0, double rho, double delta) {
    check_count(static_cast<std::size_t>(std::max(n, 0)));
    return hcm(std::vector<double>(static_cast<std::size_t>(n), a0 / n), rho, delta);
}

ContagionSpec ContagionSpec::ncm(std::vector<double> beta, double p, double q, double delta) {
    check_count(beta.size());
    check_betas(beta);
    check_rate(p, "p");
    check_rate(q, "q");
    const auto n = static_cast<int>(beta.size());
    if (n < 3)
        throw DomainError("the near-neighbour model needs at least 3 obligors");
    ContagionSpec s;
    s.n_ = n;
    s.kind_ = ContagionKind::ncm;
    s.beta_ = std::move(beta);
    s.rho_.assign(static_cast<std::size_t>(n * n), 0.0);
    for (int j = 1; j <= n; ++j) {
        const int next = j == n ? 1 : j + 1;
        const int prev = j == 1 ? n : j - 1;
        s.rho_[static_cast<std::size_t>((j - 1) * n + (next - 1))] = p;
        s.rho_[static_cast<std::size_t>((j - 1) * n + (prev - 1))] = q;
    }
    s.delta_ = delta;
    s.ncm_p_ = p;
    s.ncm_q_ = q;
    s.finish();
    return s;
}

ContagionSpec ContagionSpec::ncm_uniform(int n, double a0, double p, double q, double delta) {
    check_count(static_cast<std::size_t>(std::max(n, 0)));
    return ncm(std::vector<double>(static_cast<std::size_t>(n), a0 / n), p, q, delta);
}

double ContagionSpec::beta(int i) const {
    if (i < 1 || i > n_)
        throw IndexError("obligor index " + std::to_string(i) + " outside 1.." + std::to_string(n_));
    return beta_[static_cast<std::size_t>(i - 1)];
}

double ContagionSpec::rho(int j, int i) const {
    if (i < 1 || i > n_ || j < 1 || j > n_)
        throw IndexError("rho index outside 1.." + std::to_string(n_));
    return rho_[static_cast<std::size_t>((j - 1) * n_ + (i - 1))];
}

double ContagionSpec::magnitude(int n) const { return std::exp(-delta_ * n); }

double ContagionSpec::hcm_rho() const {
    if (kind_ != ContagionKind::hcm)
        throw ContractViolation("hcm_rho requested from a non-hcm spec");
    return hcm_rho_;
}

double ContagionSpec::ncm_p() const {
    if (kind_ != ContagionKind::ncm)
        throw ContractViolation("ncm_p requested from a non-ncm spec");
    return ncm_p_;
}

double ContagionSpec::ncm_q() const {
    if (kind_ != ContagionKind::ncm)
        throw ContractViolation("ncm_q requested from a non-ncm spec");
    return ncm_q_;
}

const std::vector<std::pair<int, double>>& ContagionSpec::successors(int j) const {
    if (j < 1 || j > n_)
        throw IndexError("obligor index " + std::to_string(j) + " outside 1.." + std::to_string(n_));
    return successors_[static_cast<std::size_t>(j - 1)];
}

RecoveryVector::RecoveryVector(std::vector<double> rates) : r_(std::move(rates)) {
    for (std::size_t i = 0; i < r_.size(); ++i)
        if (!(r_[i] >= 0.0 && r_[i] < 1.0))
            throw DomainError("recovery rate R_" + std::to_string(i + 1) + " must lie in [0,1)");
}

RecoveryVector RecoveryVector::uniform(int n, double rate) {
    return RecoveryVector(std::vector<double>(static_cast<std::size_t>(n), rate));
}

double RecoveryVector::rate(int i) const {
    if (i < 1 || i > size())
        throw IndexError("recovery index " + std::to_string(i) + " outside 1.." + std::to_string(size()));
    return r_[static_cast<std::size_t>(i - 1)];
}

bool RecoveryVector::homogeneous() const {
    return std::all_of(r_.begin(), r_.end(), [&](double v) { return v == r_.front(); });
}

double RecoveryVector::common() const {
    if (r_.empty() || !homogeneous())
        throw ContractViolation("recovery rates are not homogeneous");
    return r_.front();
}

namespace {

void require_survivor(const ContagionSpec& spec, const ObligorSet& e, int i) {
    if (e.universe() != spec.size())
        throw ContractViolation("obligor set universe does not match the spec");
    if (e.contains(i))
        throw ContractViolation("obligor " + std::to_string(i) + " already belongs to " + e.to_string());
}

} // namespace

double contagion_load(const ContagionSpec& spec, const ObligorSet& e, int i) {
    require_survivor(spec, e, i);
    if (e.empty())
        return spec.beta(i);
    const int k = e.size();
    if (spec.kind() == ContagionKind::hcm)
        return spec.magnitude(k) * (spec.hcm_rho() * k);
    double sum = 0.0;
    e.for_each([&](int j) { sum += spec.rho(j, i); });
    return spec.magnitude(k) * sum;
}

double aggregate_load(const ContagionSpec& spec, const ObligorSet& e) {
    if (e.universe() != spec.size())
        throw ContractViolation("obligor set universe does not match the spec");
    if (e.is_full())
        return 0.0;
    if (e.empty())
        return spec.base_total();
    const int k = e.size();
    const int n = spec.size();
    if (spec.kind() == ContagionKind::hcm)
        return spec.magnitude(k) * (spec.hcm_rho() * k) * (n - k);
    double sum = 0.0;
    e.for_each([&](int j) {
        for (const auto& [i, r] : spec.successors(j))
            if (!e.contains(i))
                sum += r;
    });
    return spec.magnitude(k) * sum;
}

double aggregate_load_general(const ContagionSpec& spec, const ObligorSet& e) {
    if (e.universe() != spec.size())
        throw ContractViolation("obligor set universe does not match the spec");
    if (e.is_full())
        return 0.0;
    double sum = 0.0;
    e.complement().for_each([&](int i) { sum += contagion_load(spec, e, i); });
    return sum;
}

double path_load(const ContagionSpec& spec, const ObligorSet& start, std::span<const int> pi) {
    ObligorSet current = start;
    double product = 1.0;
    for (int i : pi) {
        if (current.contains(i))
            throw ContractViolation("obligor " + std::to_string(i) + " repeated or already in the start set");
        product *= contagion_load(spec, current, i);
        current = current.with(i);
    }
    return product;
}

double intensity(const ContagionSpec& spec, const ObligorSet& e, const ObligorSet& f, double phi_value) {
    if (!(phi_value >= 0.0))
        throw DomainError("factor value must be nonnegative");
    if (e == f)
        return -phi_value * aggregate_load(spec, e);
    if (!e.is_subset_of(f))
        return 0.0;
    const ObligorSet added = f.minus(e);
    if (added.size() != 1)
        return 0.0;
    return phi_value * contagion_load(spec, e, added.members().front());
}

Real contagion_load_real(const ContagionSpec& spec, const ObligorSet& e, int i) {
    require_survivor(spec, e, i);
    if (e.empty())
        return Real(spec.beta(i));
    const int k = e.size();
    Real sum = 0;
    e.for_each([&](int j) { sum += spec.rho(j, i); });
    return exp(-Real(spec.delta()) * k) * sum;
}

Real aggregate_load_real(const ContagionSpec& spec, const ObligorSet& e) {
    if (e.universe() != spec.size())
        throw ContractViolation("obligor set universe does not match the spec");
    if (e.is_full())
        return Real(0);
    if (e.empty()) {
        Real sum = 0;
        for (double b : spec.betas())
            sum += b;
        return sum;
    }
    const int k = e.size();
    const int n = spec.size();
    const Real h = exp(-Real(spec.delta()) * k);
    if (spec.kind() == ContagionKind::hcm)
        return h * Real(spec.hcm_rho()) * k * (n - k);
    Real sum = 0;
    e.for_each([&](int j) {
        for (const auto& [i, r] : spec.successors(j))
            if (!e.contains(i))
                sum += r;
    });
    return h * sum;
}

} // namespace contagion
