#include <contagion/calibration.hpp>
#include <contagion/errors.hpp>

#include <boost/algorithm/string.hpp>
#include <boost/random/sobol.hpp>
#include <ceres/ceres.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace contagion {

std::string to_string(QuoteKind kind) {
    switch (kind) {
    case QuoteKind::upfront_pct:
        return "upfront_pct";
    case QuoteKind::running_bp:
        return "running_bp";
    case QuoteKind::index_bp:
        return "index_bp";
    }
    return "?";
}

QuoteKind parse_quote_kind(const std::string& text) {
    if (text == "upfront_pct")
        return QuoteKind::upfront_pct;
    if (text == "running_bp")
        return QuoteKind::running_bp;
    if (text == "index_bp")
        return QuoteKind::index_bp;
    throw InputError("unknown quote kind '" + text + "'");
}

std::string Quote::label() const {
    std::ostringstream os;
    os << lo * 100.0 << '-' << hi * 100.0;
    return os.str();
}

std::vector<Quote> QuoteSet::instruments() const {
    std::vector<Quote> out = tranches;
    out.push_back({0.0, 1.0, QuoteKind::index_bp, index_bid, index_ask});
    return out;
}

std::vector<double> QuoteSet::mids() const {
    std::vector<double> out;
    for (const auto& q : instruments())
        out.push_back(q.mid());
    return out;
}

void QuoteSet::validate() const {
    if (tranches.empty())
        throw InputError("quote set has no tranche quotes");
    if (!(index_bid > 0.0) || index_bid > index_ask)
        throw InputError("index quote needs 0 < bid <= ask");
    if (!(maturity > 0.0) || n_obligors < 1 || !(recovery >= 0.0 && recovery < 1.0))
        throw InputError("quote set needs maturity > 0, N >= 1 and recovery in [0,1)");
    double edge = 0.0;
    for (const auto& q : tranches) {
        if (q.kind == QuoteKind::index_bp)
            throw InputError("index quotes belong in index_bid/index_ask");
        if (q.bid > q.ask)
            throw InputError("quote " + q.label() + " has bid above ask");
        if (std::abs(q.lo - edge) > 1e-12 || !(q.hi > q.lo) || q.hi > 1.0)
            throw InputError("tranche bands must be contiguous and increasing from 0, got " + q.label());
        edge = q.hi;
    }
}

namespace {

double parse_number(const std::string& field, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size() || !std::isfinite(v))
            throw std::invalid_argument(field);
        return v;
    } catch (const std::logic_error&) {
        throw InputError("line " + std::to_string(line) + ": '" + field + "' is not a number");
    }
}

} // namespace

std::vector<QuoteSet> read_quotes_csv(std::istream& in, const QuoteSet& defaults) {
    std::map<double, QuoteSet> by_maturity;
    std::string text;
    int line = 0;
    bool header = false;
    while (std::getline(in, text)) {
        ++line;
        boost::algorithm::trim(text);
        if (text.empty() || text.front() == '#')
            continue;
        std::vector<std::string> fields;
        boost::algorithm::split(fields, text, boost::algorithm::is_any_of(","));
        for (auto& f : fields)
            boost::algorithm::trim(f);
        if (!header) {
            const std::vector<std::string> expected{"maturity_years", "lo", "hi", "kind", "bid", "ask"};
            if (fields != expected)
                throw InputError("line " + std::to_string(line) + ": expected header maturity_years,lo,hi,kind,bid,ask");
            header = true;
            continue;
        }
        if (fields.size() != 6)
            throw InputError("line " + std::to_string(line) + ": expected 6 fields, got " + std::to_string(fields.size()));
        const double maturity = parse_number(fields[0], line);
        QuoteKind kind;
        try {
            kind = parse_quote_kind(fields[3]);
        } catch (const InputError& e) {
            throw InputError("line " + std::to_string(line) + ": " + e.what());
        }
        Quote q{parse_number(fields[1], line) / 100.0, parse_number(fields[2], line) / 100.0, kind,
                parse_number(fields[4], line), parse_number(fields[5], line)};
        if (q.bid > q.ask)
            throw InputError("line " + std::to_string(line) + ": bid above ask");
        auto [it, fresh] = by_maturity.try_emplace(maturity, defaults);
        QuoteSet& set = it->second;
        if (fresh) {
            set.maturity = maturity;
            set.tranches.clear();
            set.index_bid = set.index_ask = 0.0;
        }
        if (kind == QuoteKind::index_bp) {
            if (set.index_ask != 0.0)
                throw InputError("line " + std::to_string(line) + ": second index quote for maturity " + fields[0]);
            set.index_bid = q.bid;
            set.index_ask = q.ask;
        } else {
            if (kind == QuoteKind::upfront_pct) {
                q.bid /= 100.0;
                q.ask /= 100.0;
            }
            set.tranches.push_back(q);
        }
    }
    if (by_maturity.empty())
        throw InputError("quote file contains no quotes");
    std::vector<QuoteSet> out;
    for (auto& [m, set] : by_maturity) {
        std::sort(set.tranches.begin(), set.tranches.end(), [](const Quote& a, const Quote& b) { return a.lo < b.lo; });
        try {
            set.validate();
        } catch (const InputError& e) {
            std::ostringstream os;
            os << "maturity " << m << ": " << e.what();
            throw InputError(os.str());
        }
        out.push_back(std::move(set));
    }
    return out;
}

std::vector<QuoteSet> read_quotes_csv(const std::string& path, const QuoteSet& defaults) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open quote file " + path);
    try {
        return read_quotes_csv(in, defaults);
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

const std::array<const char*, parameter_count>& parameter_names() {
    static const std::array<const char*, parameter_count> names{"a0",    "rho",   "delta", "kappa", "theta",
                                                                 "sigma", "mu",    "l",     "y0"};
    return names;
}

ParameterVector to_parameters(double a0, double rho, double delta, const AJDParams& ajd) {
    return {a0, rho, delta, ajd.kappa, ajd.theta, ajd.sigma, ajd.mu, ajd.l, ajd.y0};
}

ContagionSpec spec_of(const ParameterVector& x, int n_obligors) {
    return ContagionSpec::hcm_uniform(n_obligors, x[0], x[1], x[2]);
}

AJDParams factor_of(const ParameterVector& x) {
    AJDParams p;
    p.kappa = x[3];
    p.theta = x[4];
    p.sigma = x[5];
    p.mu = x[6];
    p.l = x[7];
    p.y0 = x[8];
    return p;
}

void CalibrationBox::validate() const {
    for (int k = 0; k < parameter_count; ++k)
        if (!(lower[k] < upper[k]))
            throw InputError(std::string("calibration box needs lower < upper for ") + parameter_names()[k]);
}

bool CalibrationBox::contains(const ParameterVector& x) const {
    for (int k = 0; k < parameter_count; ++k)
        if (!(x[k] >= lower[k] && x[k] <= upper[k]))
            return false;
    return true;
}

namespace {
constexpr double face_margin = 1e-6;
}

ParameterVector CalibrationBox::clamp_interior(const ParameterVector& x) const {
    ParameterVector out;
    for (int k = 0; k < parameter_count; ++k) {
        const double pad = face_margin * (upper[k] - lower[k]);
        out[k] = std::clamp(x[k], lower[k] + pad, upper[k] - pad);
    }
    return out;
}

TrancheDeck quote_deck(const QuoteSet& quotes) {
    std::vector<double> attach{0.0};
    for (const auto& q : quotes.tranches)
        attach.push_back(q.hi);
    std::vector<double> upfront(quotes.tranches.size(), 0.0);
    return TrancheDeck::regular(attach, upfront, quotes.maturity, quotes.period, quotes.r,
                                RecoveryVector::uniform(quotes.n_obligors, quotes.recovery));
}

std::vector<double> model_quotes(const ParameterVector& x, const QuoteSet& quotes, const PrecisionPolicy& precision) {
    const TrancheDeck deck = quote_deck(quotes);
    const LossCurve curve = loss_curve(spec_of(x, quotes.n_obligors), deck, factor_of(x), precision);
    std::vector<double> out;
    for (std::size_t k = 0; k < quotes.tranches.size(); ++k) {
        const int i = static_cast<int>(k) + 1;
        if (quotes.tranches[k].kind == QuoteKind::upfront_pct)
            out.push_back(upfront_rate(deck, i, curve, quotes.upfront_running_bp));
        else
            out.push_back(tranche_spread(deck, i, curve));
    }
    out.push_back(index_spread(deck, curve));
    return out;
}

namespace {

double squared_relative_error(const std::vector<double>& model, const std::vector<double>& mids) {
    double s = 0.0;
    for (std::size_t k = 0; k < model.size(); ++k) {
        const double e = (model[k] - mids[k]) / mids[k];
        s += e * e;
    }
    return s;
}

std::string describe(const ParameterVector& x) {
    std::ostringstream os;
    os.precision(6);
    for (int k = 0; k < parameter_count; ++k)
        os << (k ? ", " : "") << parameter_names()[k] << '=' << x[k];
    return os.str();
}

} // namespace

double objective(const ParameterVector& x, const QuoteSet& quotes, const PrecisionPolicy& precision) {
    try {
        return squared_relative_error(model_quotes(x, quotes, precision), quotes.mids());
    } catch (const std::exception& e) {
        std::clog << "warning: pricing failed at (" << describe(x) << "): " << e.what() << '\n';
        return objective_penalty;
    }
}

double objective(const ParameterVector& x, const std::vector<QuoteSet>& quotes, const PrecisionPolicy& precision) {
    double s = 0.0;
    for (const auto& q : quotes) {
        const double v = objective(x, q, precision);
        if (v >= objective_penalty)
            return objective_penalty;
        s += v;
    }
    return s;
}

double aape(const std::vector<double>& model, const std::vector<double>& market) {
    if (model.size() != market.size())
        throw ContractViolation("aape needs equally long model and market vectors");
    double s = 0.0;
    int used = 0;
    for (std::size_t k = 0; k < model.size(); ++k) {
        if (market[k] == 0.0) {
            std::clog << "warning: aape skips instrument " << k << " with zero market mid\n";
            continue;
        }
        s += std::abs(model[k] - market[k]) / std::abs(market[k]);
        ++used;
    }
    return used ? s / used : 0.0;
}

namespace {

// Residuals (model - mid) / mid with a finite-difference Jacobian in x using an absolute step; the
// residuals at the current point are reused.
class QuoteResiduals : public ceres::CostFunction {
  public:
    QuoteResiduals(const std::vector<QuoteSet>& quotes, const CalibrationBox& box, const CalibrationOptions& options)
        : quotes_(quotes), box_(box), options_(options) {
        int n = 0;
        for (const auto& q : quotes)
            n += static_cast<int>(q.tranches.size()) + 1;
        set_num_residuals(n);
        mutable_parameter_block_sizes()->push_back(parameter_count);
    }

    bool Evaluate(double const* const* params, double* residuals, double** jacobians) const override {
        ParameterVector x;
        std::copy(params[0], params[0] + parameter_count, x.begin());
        const auto m = static_cast<std::size_t>(num_residuals());
        if (cached_ && x == cached_x_) {
            std::copy(cached_r_.begin(), cached_r_.end(), residuals);
        } else {
            if (!residuals_at(x, residuals))
                return false;
            cached_ = true;
            cached_x_ = x;
            cached_r_.assign(residuals, residuals + m);
        }
        if (!jacobians || !jacobians[0])
            return true;
        std::vector<double> up(m), down(m);
        const double h = options_.fd_step;
        for (int k = 0; k < parameter_count; ++k) {
            // step away from a nearby face so the perturbed point stays inside the box, and try the
            // other side if pricing fails there
            double dir = x[k] + h < box_.upper[k] ? 1.0 : -1.0;
            ParameterVector xp = x;
            xp[k] += dir * h;
            if (!residuals_at(xp, up.data())) {
                dir = -dir;
                xp[k] = x[k] + dir * h;
                if (!residuals_at(xp, up.data())) {
                    // no usable neighbour: freeze this coordinate for the step
                    for (std::size_t r = 0; r < m; ++r)
                        jacobians[0][r * parameter_count + static_cast<std::size_t>(k)] = 0.0;
                    continue;
                }
            }
            double span = dir * h;
            if (options_.central_differences) {
                ParameterVector xm = x;
                xm[k] -= dir * h;
                if (!residuals_at(xm, down.data()))
                    return false;
                span = 2.0 * dir * h;
            } else {
                std::copy(residuals, residuals + m, down.begin());
            }
            for (std::size_t r = 0; r < m; ++r)
                jacobians[0][r * parameter_count + static_cast<std::size_t>(k)] = (up[r] - down[r]) / span;
        }
        return true;
    }

  private:
    bool residuals_at(const ParameterVector& x, double* out) const {
        try {
            std::size_t r = 0;
            for (const auto& q : quotes_) {
                const auto model = model_quotes(x, q, options_.precision);
                const auto mids = q.mids();
                for (std::size_t k = 0; k < model.size(); ++k)
                    out[r++] = (model[k] - mids[k]) / mids[k];
            }
            return true;
        } catch (const std::exception&) {
            return false;
        }
    }

    const std::vector<QuoteSet>& quotes_;
    const CalibrationBox& box_;
    const CalibrationOptions& options_;
    mutable bool cached_ = false;
    mutable ParameterVector cached_x_{};
    mutable std::vector<double> cached_r_;
};

class TraceRecorder : public ceres::IterationCallback {
  public:
    TraceRecorder(int start, std::vector<TraceEntry>& sink, const std::function<void(const TraceEntry&)>& notify)
        : start_(start), sink_(sink), notify_(notify) {}
    ceres::CallbackReturnType operator()(const ceres::IterationSummary& s) override {
        sink_.push_back({start_, s.iteration, 2.0 * s.cost});
        if (notify_)
            notify_(sink_.back());
        return ceres::SOLVER_CONTINUE;
    }

  private:
    int start_;
    std::vector<TraceEntry>& sink_;
    const std::function<void(const TraceEntry&)>& notify_;
};

std::vector<ParameterVector> start_points(const CalibrationBox& box, const CalibrationOptions& options) {
    std::vector<ParameterVector> out;
    for (const auto& x : options.initial) {
        if (static_cast<int>(out.size()) >= options.starts)
            break;
        out.push_back(box.clamp_interior(x));
    }
    boost::random::sobol gen(parameter_count);
    // the first Sobol point is the origin; skip it and shift by the seed
    gen.discard(static_cast<std::uintmax_t>(parameter_count) * (1 + options.seed));
    const double scale = static_cast<double>(gen.max()) - static_cast<double>(gen.min()) + 1.0;
    while (static_cast<int>(out.size()) < options.starts) {
        ParameterVector x;
        for (int k = 0; k < parameter_count; ++k) {
            const double u = (static_cast<double>(gen()) - static_cast<double>(gen.min()) + 0.5) / scale;
            x[k] = box.lower[k] + u * (box.upper[k] - box.lower[k]);
        }
        out.push_back(box.clamp_interior(x));
    }
    return out;
}

} // namespace

CalibrationResult calibrate(const std::vector<QuoteSet>& quotes, const CalibrationBox& box,
                            const CalibrationOptions& options) {
    if (quotes.empty())
        throw InputError("calibration needs at least one quote set");
    for (const auto& q : quotes)
        q.validate();
    box.validate();
    options.precision.validate();
    if (options.starts < 1)
        throw InputError("calibration needs at least one start");

    CalibrationResult result;
    const auto starts = start_points(box, options);
    int best = -1;
    for (int s = 0; s < static_cast<int>(starts.size()); ++s) {
        StartReport rep;
        rep.start = s;
        rep.x0 = starts[static_cast<std::size_t>(s)];
        std::array<double, parameter_count> x = rep.x0;

        ceres::Problem::Options po;
        po.cost_function_ownership = ceres::DO_NOT_TAKE_OWNERSHIP;
        QuoteResiduals cost(quotes, box, options);
        ceres::Problem problem(po);
        problem.AddResidualBlock(&cost, nullptr, x.data());
        for (int k = 0; k < parameter_count; ++k) {
            const double pad = face_margin * (box.upper[k] - box.lower[k]);
            problem.SetParameterLowerBound(x.data(), k, box.lower[k] + pad);
            problem.SetParameterUpperBound(x.data(), k, box.upper[k] - pad);
        }

        std::vector<TraceEntry> trace;
        TraceRecorder recorder(s, trace, options.on_iteration);
        ceres::Solver::Options so;
        so.linear_solver_type = ceres::DENSE_QR;
        // plain projected steps; the bounded line search would price the Jacobian at every trial
        so.max_num_line_search_step_size_iterations = 0;
        so.max_num_iterations = options.max_iterations;
        so.function_tolerance = options.function_tolerance;
        so.gradient_tolerance = 1e-14;
        so.parameter_tolerance = 1e-12;
        so.callbacks.push_back(&recorder);
        so.logging_type = ceres::SILENT;

        ceres::Solver::Summary summary;
        ceres::Solve(so, &problem, &summary);

        rep.x = box.clamp_interior(x);
        rep.iterations = static_cast<int>(summary.iterations.size());
        rep.ok = summary.IsSolutionUsable();
        rep.message = summary.message;
        rep.objective = rep.ok ? objective(rep.x, quotes, options.precision) : objective_penalty;
        if (rep.objective >= objective_penalty)
            rep.ok = false;
        result.trace.insert(result.trace.end(), trace.begin(), trace.end());
        if (rep.ok && (best < 0 || rep.objective < result.starts[static_cast<std::size_t>(best)].objective))
            best = s;
        result.starts.push_back(rep);
    }

    if (best < 0) {
        std::ostringstream os;
        os << "all " << result.starts.size() << " calibration starts failed:";
        for (const auto& r : result.starts)
            os << "\n  start " << r.start << " from (" << describe(r.x0) << "): " << r.message;
        throw CalibrationFailed(os.str());
    }

    const auto& win = result.starts[static_cast<std::size_t>(best)];
    result.x_hat = win.x;
    result.objective = win.objective;
    for (const auto& q : quotes) {
        const auto m = model_quotes(result.x_hat, q, options.precision);
        const auto mids = q.mids();
        result.model_quotes.insert(result.model_quotes.end(), m.begin(), m.end());
        result.market_mids.insert(result.market_mids.end(), mids.begin(), mids.end());
        std::ostringstream tag;
        tag << q.maturity << "Y ";
        for (const auto& inst : q.instruments())
            result.labels.push_back(tag.str() + (inst.kind == QuoteKind::index_bp ? std::string("index") : inst.label()));
    }
    result.aape = aape(result.model_quotes, result.market_mids);
    return result;
}

CalibrationResult calibrate(const QuoteSet& quotes, const CalibrationBox& box, const CalibrationOptions& options) {
    return calibrate(std::vector<QuoteSet>{quotes}, box, options);
}

double implied_rho(const QuoteSet& quotes, int index, const ParameterVector& x, const RhoBracket& bracket,
                   const PrecisionPolicy& precision) {
    const auto inst = quotes.instruments();
    if (index < 0 || index >= static_cast<int>(inst.size()))
        throw IndexError("instrument index out of range");
    if (!(bracket.lo < bracket.hi) || !(bracket.tol > 0.0))
        throw DomainError("implied_rho needs lo < hi and tol > 0");
    const double target = inst[static_cast<std::size_t>(index)].mid();

    // NaN marks a rho where pricing failed; the search steps over such points
    auto f = [&](double rho) {
        ParameterVector y = x;
        y[1] = rho;
        try {
            return model_quotes(y, quotes, precision)[static_cast<std::size_t>(index)] - target;
        } catch (const std::exception&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    const double floor = bracket.lo + bracket.tol;
    const double ceiling = bracket.hi - bracket.tol;
    const double rho0 = std::clamp(x[1], floor, ceiling);
    const double f0 = f(rho0);
    if (f0 == 0.0)
        return rho0;

    if (!std::isfinite(f0))
        throw NoRoot("pricing failed at the starting rho");
    // march outward on both sides; the last finite point on each side still has the sign of f0
    const bool positive = f0 > 0.0;
    double a = rho0, fa = f0, b = rho0, fb = f0;
    double up = rho0, down = rho0;
    bool found = false;
    while (!found && (up < ceiling || down > floor)) {
        if (up < ceiling) {
            const double next = std::min(ceiling, up * 2.0);
            const double fn = f(next);
            if (std::isfinite(fn) && (fn > 0.0) != positive) {
                a = up, b = next, fb = fn;
                found = true;
            } else {
                up = next;
            }
        }
        if (!found && down > floor) {
            const double next = std::max(floor, down * 0.5);
            const double fn = f(next);
            if (std::isfinite(fn) && (fn > 0.0) != positive) {
                b = down, a = next, fa = fn;
                fb = f(b);
                found = true;
            } else {
                down = next;
            }
        }
    }
    if (!found || !std::isfinite(fa) || !std::isfinite(fb)) {
        std::ostringstream os;
        os << "no sign change for instrument " << index << " with rho in [" << bracket.lo << ", " << bracket.hi << "]";
        throw NoRoot(os.str());
    }

    while (b - a > bracket.tol) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (!std::isfinite(fm))
            throw NoRoot("pricing failed inside the implied rho bracket");
        if (fm == 0.0)
            return m;
        if ((fm > 0.0) == (fa > 0.0))
            a = m, fa = fm;
        else
            b = m, fb = fm;
    }
    return 0.5 * (a + b);
}

} // namespace contagion
