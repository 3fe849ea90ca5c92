#include <contagion/errors.hpp>
#include <contagion/simulator.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace contagion {

PathRng path_rng(std::uint64_t seed, std::uint64_t path_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path_index), static_cast<std::uint32_t>(path_index >> 32)};
    return PathRng(seq);
}

double FactorPath::integral_at(double t) const {
    if (t <= grid.front())
        return 0.0;
    if (t >= grid.back())
        return phi_integral.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    const auto k = static_cast<std::size_t>(it - grid.begin()) - 1;
    const double h = t - grid[k];
    const double slope = (values[k + 1] - values[k]) / (grid[k + 1] - grid[k]);
    return phi_integral[k] + h * (values[k] + 0.5 * slope * h);
}

double FactorPath::invert(double level) const {
    if (level <= 0.0)
        return 0.0;
    if (level > phi_integral.back())
        throw DomainError("level beyond the integrated factor path");
    const auto it = std::lower_bound(phi_integral.begin(), phi_integral.end(), level);
    const auto j = static_cast<std::size_t>(it - phi_integral.begin());
    if (j == 0)
        return grid.front();
    const std::size_t k = j - 1;
    const double span = grid[k + 1] - grid[k];
    const double gap = level - phi_integral[k];
    const double y = values[k];
    const double slope = (values[k + 1] - values[k]) / span;
    // root of y h + slope h^2 / 2 = gap in the cancellation-free form
    const double disc = std::max(y * y + 2.0 * slope * gap, 0.0);
    const double denom = y + std::sqrt(disc);
    const double h = denom > 0.0 ? 2.0 * gap / denom : span;
    return grid[k] + std::clamp(h, 0.0, span);
}

namespace {

void push_point(FactorPath& path, double t, double y) {
    const double psi = path.phi_integral.back() + 0.5 * (t - path.grid.back()) * (path.values.back() + y);
    path.grid.push_back(t);
    path.values.push_back(y);
    path.phi_integral.push_back(psi);
}

} // namespace

FactorPath simulate_y_path(const AJDParams& p, double horizon, double dt, PathRng& rng) {
    if (!(dt > 0.0))
        throw DomainError("time step must be positive");
    if (!(horizon > 0.0))
        throw DomainError("path horizon must be positive");
    std::normal_distribution<double> normal;
    std::exponential_distribution<double> unit_exp(1.0);

    FactorPath path;
    path.grid = {0.0};
    path.values = {p.y0};
    path.phi_integral = {0.0};

    double y = p.y0;
    double t = 0.0;
    double next_jump = p.l > 0.0 ? unit_exp(rng) / p.l : infinite_time;

    // Mean reversion is applied exactly over each step; the diffusion uses the truncated level.
    auto advance = [&](double h) {
        if (h <= 0.0)
            return;
        const double decay = std::exp(-p.kappa * h);
        const double sd = std::sqrt((1.0 - decay * decay) / (2.0 * p.kappa));
        const double yp = std::max(y, 0.0);
        y = p.theta + (yp - p.theta) * decay + p.sigma * std::sqrt(yp) * sd * normal(rng);
        y = std::max(y, 0.0);
    };

    const auto steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
    for (long k = 1; k <= steps; ++k) {
        const double t_next = k == steps ? horizon : k * dt;
        while (next_jump <= t_next) {
            advance(next_jump - t);
            t = next_jump;
            push_point(path, t, y);
            y += p.mu * unit_exp(rng);
            push_point(path, t, y);
            next_jump = t + unit_exp(rng) / p.l;
        }
        advance(t_next - t);
        t = t_next;
        push_point(path, t, y);
    }
    return path;
}

FactorPath deterministic_path(const std::function<double(double)>& phi, double horizon, double dt) {
    if (!(dt > 0.0) || !(horizon > 0.0))
        throw DomainError("deterministic path needs positive horizon and step");
    FactorPath path;
    path.grid = {0.0};
    path.values = {phi(0.0)};
    path.phi_integral = {0.0};
    const auto steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
    for (long k = 1; k <= steps; ++k) {
        const double t = k == steps ? horizon : k * dt;
        push_point(path, t, phi(t));
    }
    return path;
}

DefaultScenario simulate_defaults(const ContagionSpec& spec, const FactorPath& path, PathRng& rng) {
    std::exponential_distribution<double> unit_exp(1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const int n_total = spec.size();
    const double total = path.phi_integral.back();

    DefaultScenario sc;
    ObligorSet e = spec.empty_set();
    std::vector<double> column(static_cast<std::size_t>(n_total), 0.0); // sum_{j in E} rho_ji
    double level = 0.0;
    double now = 0.0;
    while (!e.is_full()) {
        const double lbar = aggregate_load(spec, e);
        if (!(lbar > 0.0))
            break;
        level += unit_exp(rng) / lbar;
        if (level > total)
            break;
        double t = path.invert(level);
        if (t <= now)
            t = std::nextafter(now, infinite_time);

        int chosen = 0;
        if (spec.kind() == ContagionKind::hcm && !e.empty()) {
            const int survivors = n_total - e.size();
            auto pick = static_cast<int>(uniform(rng) * survivors);
            pick = std::min(pick, survivors - 1);
            e.complement().for_each([&](int i) {
                if (pick-- == 0)
                    chosen = i;
            });
        } else {
            double weight_total = 0.0;
            e.complement().for_each([&](int i) {
                weight_total += e.empty() ? spec.beta(i) : column[static_cast<std::size_t>(i - 1)];
            });
            double u = uniform(rng) * weight_total;
            int last_positive = 0;
            e.complement().for_each([&](int i) {
                const double w = e.empty() ? spec.beta(i) : column[static_cast<std::size_t>(i - 1)];
                if (w <= 0.0 || chosen != 0)
                    return;
                last_positive = i;
                if (u < w)
                    chosen = i;
                u -= w;
            });
            if (chosen == 0)
                chosen = last_positive;
        }

        e = e.with(chosen);
        for (const auto& [i, r] : spec.successors(chosen))
            column[static_cast<std::size_t>(i - 1)] += r;
        sc.order.push_back(chosen);
        sc.times.push_back(t);
        sc.sets.push_back(e);
        now = t;
    }
    return sc;
}

void parallel_paths(long n, int threads, const std::function<void(long)>& body) {
    if (threads <= 1 || n <= 1) {
        for (long i = 0; i < n; ++i)
            body(i);
        return;
    }
    const long workers = std::min<long>(threads, n);
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (long w = 0; w < workers; ++w) {
        const long begin = n * w / workers;
        const long end = n * (w + 1) / workers;
        pool.emplace_back([&, begin, end] {
            try {
                for (long i = begin; i < end; ++i)
                    body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
}

namespace {

constexpr long chunk_paths = 1000;

// Per-chunk sums, combined afterwards in chunk order so the result does not depend on threads.
struct Moments {
    std::vector<double> sum;
    std::vector<double> sum_sq;

    explicit Moments(std::size_t n = 0) : sum(n, 0.0), sum_sq(n, 0.0) {}
    void add(std::size_t k, double v) {
        sum[k] += v;
        sum_sq[k] += v * v;
    }
    void merge(const Moments& o) {
        for (std::size_t k = 0; k < sum.size(); ++k) {
            sum[k] += o.sum[k];
            sum_sq[k] += o.sum_sq[k];
        }
    }
};

double standard_error(double sum, double sum_sq, long n) {
    if (n < 2)
        return 0.0;
    const double mean = sum / n;
    const double var = std::max(sum_sq / n - mean * mean, 0.0) * n / (n - 1.0);
    return std::sqrt(var / n);
}

template <class Acc, class PerPath>
Acc run_chunks(long n_paths, int threads, const Acc& zero, PerPath&& per_path) {
    const long chunks = (n_paths + chunk_paths - 1) / chunk_paths;
    std::vector<Acc> partial(static_cast<std::size_t>(chunks), zero);
    parallel_paths(chunks, threads, [&](long c) {
        Acc& acc = partial[static_cast<std::size_t>(c)];
        const long end = std::min(n_paths, (c + 1) * chunk_paths);
        for (long path = c * chunk_paths; path < end; ++path)
            per_path(path, acc);
    });
    Acc total = zero;
    for (const auto& a : partial)
        total.merge(a);
    return total;
}

ObligorSet state_at(const ContagionSpec& spec, const DefaultScenario& sc, double t) {
    const auto it = std::upper_bound(sc.times.begin(), sc.times.end(), t);
    if (it == sc.times.begin())
        return spec.empty_set();
    return sc.sets[static_cast<std::size_t>(it - sc.times.begin()) - 1];
}

} // namespace

DefaultScenario simulate_path(const ContagionSpec& spec, const AJDParams& p, double horizon, double dt,
                              std::uint64_t seed, std::uint64_t path_index) {
    PathRng rng = path_rng(seed, path_index);
    const FactorPath path = simulate_y_path(p, horizon, dt, rng);
    return simulate_defaults(spec, path, rng);
}

McSpread mc_tranche_spread(const ContagionSpec& spec, const TrancheDeck& deck, const AJDParams& p, long n_paths,
                           std::uint64_t seed, const McOptions& options) {
    if (n_paths < 1000)
        throw DomainError("mc_tranche_spread needs at least 1000 paths");
    deck.validate();
    p.validate();
    if (deck.obligors() != spec.size())
        throw ContractViolation("deck and spec disagree on the pool size");

    const int k_tr = deck.tranche_count();
    const std::size_t m = deck.pay_times.size();
    const auto instruments = static_cast<std::size_t>(k_tr) + 1; // tranches, then the index

    // Layout: protection, annuity, protection*annuity per instrument; then curve values.
    struct Acc {
        Moments legs;
        std::vector<double> cross;
        Moments curve;
        void merge(const Acc& o) {
            legs.merge(o.legs);
            curve.merge(o.curve);
            for (std::size_t k = 0; k < cross.size(); ++k)
                cross[k] += o.cross[k];
        }
    };
    const std::size_t curve_cells = (instruments + 1) * m; // tranches, pool loss, default fraction
    Acc zero{Moments(2 * instruments), std::vector<double>(instruments, 0.0), Moments(curve_cells)};

    const Acc total = run_chunks(n_paths, options.threads, zero, [&](long path_index, Acc& acc) {
        PathRng rng = path_rng(seed, static_cast<std::uint64_t>(path_index));
        const FactorPath path = simulate_y_path(p, deck.maturity, options.dt, rng);
        const DefaultScenario sc = simulate_defaults(spec, path, rng);
        std::vector<std::vector<double>> loss(instruments + 1, std::vector<double>(m, 0.0));
        for (std::size_t k = 0; k < m; ++k) {
            const ObligorSet x = state_at(spec, sc, deck.pay_times[k]);
            for (int i = 1; i <= k_tr; ++i)
                loss[static_cast<std::size_t>(i - 1)][k] = tranche_loss(deck, i, x);
            loss[instruments - 1][k] = pool_loss(deck, x);
            loss[instruments][k] = static_cast<double>(x.size()) / spec.size();
        }
        for (std::size_t q = 0; q < instruments; ++q) {
            const double width = q + 1 < instruments ? deck.width(static_cast<int>(q) + 1) : 1.0;
            const LegValues lv = leg_values(deck, loss[q], loss[q], width);
            acc.legs.add(2 * q, lv.protection);
            acc.legs.add(2 * q + 1, lv.annuity);
            acc.cross[q] += lv.protection * lv.annuity;
        }
        for (std::size_t q = 0; q <= instruments; ++q)
            for (std::size_t k = 0; k < m; ++k)
                acc.curve.add(q * m + k, loss[q][k]);
    });

    McSpread out;
    const double n = static_cast<double>(n_paths);
    for (std::size_t q = 0; q < instruments; ++q) {
        const double width = q + 1 < instruments ? deck.width(static_cast<int>(q) + 1) : 1.0;
        const double u = q + 1 < instruments ? deck.upfront[q] : 0.0;
        const double d_mean = total.legs.sum[2 * q] / n;
        const double p_mean = total.legs.sum[2 * q + 1] / n;
        if (!(p_mean > 0.0))
            throw DegenerateTranche("Monte Carlo premium leg vanishes");
        const double var_d = total.legs.sum_sq[2 * q] / n - d_mean * d_mean;
        const double var_p = total.legs.sum_sq[2 * q + 1] / n - p_mean * p_mean;
        const double cov = total.cross[q] / n - d_mean * p_mean;
        const double s = (d_mean - u * width) / p_mean;
        const double var_s = std::max(var_d - 2.0 * s * cov + s * s * var_p, 0.0) / (n - 1.0) / (p_mean * p_mean);
        out.spread_bp.push_back(s * 1e4);
        out.se_bp.push_back(std::sqrt(var_s) * 1e4);
    }
    out.mean_curve.times = deck.pay_times;
    out.curve_se.assign(instruments + 1, std::vector<double>(m, 0.0));
    std::vector<std::vector<double>> means(instruments + 1, std::vector<double>(m, 0.0));
    for (std::size_t q = 0; q <= instruments; ++q)
        for (std::size_t k = 0; k < m; ++k) {
            means[q][k] = total.curve.sum[q * m + k] / n;
            out.curve_se[q][k] = standard_error(total.curve.sum[q * m + k], total.curve.sum_sq[q * m + k], n_paths);
        }
    out.mean_curve.default_fraction = means[instruments];
    out.mean_curve.pool_loss = means[instruments - 1];
    means.resize(instruments - 1);
    out.mean_curve.values = std::move(means);
    return out;
}

MartingaleReport martingale_check(const ContagionSpec& spec, const AJDParams& p, const ObligorSet& f,
                                  const std::vector<double>& grid, long n_paths, std::uint64_t seed,
                                  const McOptions& options) {
    if (grid.empty())
        throw DomainError("martingale_check needs a time grid");
    if (f.universe() != spec.size())
        throw ContractViolation("target set universe does not match the spec");
    p.validate();
    const double horizon = *std::max_element(grid.begin(), grid.end());
    const double start_indicator = f.empty() ? 1.0 : 0.0;

    struct Acc {
        Moments m;
        void merge(const Acc& o) { m.merge(o.m); }
    };
    const Acc total = run_chunks(n_paths, options.threads, Acc{Moments(grid.size())}, [&](long path_index, Acc& acc) {
        PathRng rng = path_rng(seed, static_cast<std::uint64_t>(path_index));
        const FactorPath path = simulate_y_path(p, horizon, options.dt, rng);
        const DefaultScenario sc = simulate_defaults(spec, path, rng);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double t = grid[g];
            double comp = 0.0;
            ObligorSet state = spec.empty_set();
            double entered = 0.0;
            for (std::size_t k = 0; k <= sc.times.size(); ++k) {
                const double left = k < sc.times.size() ? std::min(sc.times[k], t) : t;
                const double rate = intensity(spec, state, f, 1.0);
                if (rate != 0.0 && left > entered)
                    comp += rate * (path.integral_at(left) - path.integral_at(entered));
                if (k == sc.times.size() || sc.times[k] > t)
                    break;
                state = sc.sets[k];
                entered = sc.times[k];
            }
            const double indicator = state == f ? 1.0 : 0.0;
            acc.m.add(g, indicator - start_indicator - comp);
        }
    });

    MartingaleReport rep;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double mean = total.m.sum[g] / static_cast<double>(n_paths);
        const double se = standard_error(total.m.sum[g], total.m.sum_sq[g], n_paths);
        if (std::abs(mean) >= rep.worst_abs_mean) {
            rep.worst_abs_mean = std::abs(mean);
            rep.se_at_worst = se;
        }
        if (se > 0.0)
            rep.worst_z = std::max(rep.worst_z, std::abs(mean) / se);
        else if (mean != 0.0)
            rep.worst_z = infinite_time;
    }
    return rep;
}

McEstimate mc_laplace(const AJDParams& p, double g, double t, long n_paths, std::uint64_t seed,
                      const McOptions& options) {
    p.validate();
    struct Acc {
        Moments m;
        void merge(const Acc& o) { m.merge(o.m); }
    };
    const Acc total = run_chunks(n_paths, options.threads, Acc{Moments(1)}, [&](long path_index, Acc& acc) {
        PathRng rng = path_rng(seed, static_cast<std::uint64_t>(path_index));
        const FactorPath path = simulate_y_path(p, t, options.dt, rng);
        acc.m.add(0, std::exp(-g * path.phi_integral.back()));
    });
    return {total.m.sum[0] / static_cast<double>(n_paths), standard_error(total.m.sum[0], total.m.sum_sq[0], n_paths)};
}

} // namespace contagion
