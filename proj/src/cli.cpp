#include <contagion/cli.hpp>
#include <contagion/errors.hpp>
#include <contagion/simulator.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace contagion::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- config parsing

class ConfigReader {
  public:
    explicit ConfigReader(std::string file) : file_(std::move(file)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
        const YAML::Mark m = at.Mark();
        std::ostringstream os;
        os << file_;
        if (m.line >= 0)
            os << ':' << m.line + 1 << ':' << m.column + 1;
        os << ": " << what;
        throw InputError(os.str());
    }

    void allow(const YAML::Node& map, std::initializer_list<const char*> keys) const {
        if (!map.IsMap())
            fail(map, "expected a mapping");
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (!ok.count(key))
                fail(kv.first, "unknown key '" + key + "'");
        }
    }

    template <class T>
    T scalar(const YAML::Node& node, const std::string& what) const {
        if (!node.IsScalar())
            fail(node, what + " must be a scalar");
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, what + " has an invalid value '" + node.Scalar() + "'");
        }
    }

    template <class T>
    void read(const YAML::Node& map, const char* key, T& out) const {
        const YAML::Node n = map[key];
        if (n)
            out = scalar<T>(n, key);
    }

    template <class T>
    T require(const YAML::Node& map, const char* key) const {
        const YAML::Node n = map[key];
        if (!n)
            fail(map, std::string("missing required key '") + key + "'");
        return scalar<T>(n, key);
    }

    std::vector<double> list(const YAML::Node& node, const std::string& what) const {
        if (!node.IsSequence())
            fail(node, what + " must be a list");
        std::vector<double> out;
        for (const auto& e : node)
            out.push_back(scalar<double>(e, what + " entry"));
        return out;
    }

    ParameterVector vector9(const YAML::Node& node, const std::string& what) const {
        const auto v = list(node, what);
        if (v.size() != static_cast<std::size_t>(parameter_count))
            fail(node, what + " needs " + std::to_string(parameter_count) +
                           " entries (a0, rho, delta, kappa, theta, sigma, mu, l, y0)");
        ParameterVector x;
        std::copy(v.begin(), v.end(), x.begin());
        return x;
    }

    // wraps a domain check so its message points at the block that failed
    template <class F>
    void check(const YAML::Node& at, F&& f) const {
        try {
            f();
        } catch (const std::logic_error& e) {
            fail(at, e.what());
        } catch (const InputError& e) {
            fail(at, e.what());
        }
    }

  private:
    std::string file_;
};

ContagionKind parse_kind(const ConfigReader& cr, const YAML::Node& node) {
    const auto s = cr.scalar<std::string>(node, "kind");
    if (s == "hcm")
        return ContagionKind::hcm;
    if (s == "ncm")
        return ContagionKind::ncm;
    if (s == "general")
        return ContagionKind::general;
    cr.fail(node, "kind must be hcm, ncm or general");
}

DefaultTiming parse_timing(const ConfigReader& cr, const YAML::Node& node) {
    const auto s = cr.scalar<std::string>(node, "timing");
    if (s == "start")
        return DefaultTiming::start;
    if (s == "midpoint")
        return DefaultTiming::midpoint;
    if (s == "end")
        return DefaultTiming::end;
    cr.fail(node, "timing must be start, midpoint or end");
}

IndexConvention parse_index(const ConfigReader& cr, const YAML::Node& node) {
    const auto s = cr.scalar<std::string>(node, "index_notional");
    if (s == "tranche")
        return IndexConvention::tranche_zero_to_one;
    if (s == "surviving")
        return IndexConvention::surviving_notional;
    cr.fail(node, "index_notional must be tranche or surviving");
}

CountRounding parse_rounding(const ConfigReader& cr, const YAML::Node& node) {
    const auto s = cr.scalar<std::string>(node, "rounding");
    if (s == "half_up")
        return CountRounding::half_up;
    if (s == "ceil")
        return CountRounding::ceil;
    if (s == "floor")
        return CountRounding::floor;
    cr.fail(node, "rounding must be half_up, ceil or floor");
}

void parse_model(const ConfigReader& cr, const YAML::Node& node, ModelBlock& m) {
    cr.allow(node, {"kind", "n", "a0", "beta", "rho", "p", "q", "delta"});
    m.kind = node["kind"] ? parse_kind(cr, node["kind"]) : ContagionKind::hcm;
    m.n = cr.require<int>(node, "n");
    if (node["a0"])
        m.a0 = cr.scalar<double>(node["a0"], "a0");
    if (node["beta"])
        m.beta = cr.list(node["beta"], "beta");
    if (m.a0 && !m.beta.empty())
        cr.fail(node, "give either a0 or beta, not both");
    if (!m.a0 && m.beta.empty())
        cr.fail(node, "model needs a0 or beta");
    cr.read(node, "delta", m.delta);
    switch (m.kind) {
    case ContagionKind::hcm:
        m.rho = cr.require<double>(node, "rho");
        break;
    case ContagionKind::ncm:
        m.p = cr.require<double>(node, "p");
        m.q = cr.require<double>(node, "q");
        break;
    case ContagionKind::general: {
        const YAML::Node r = node["rho"];
        if (!r || !r.IsSequence())
            cr.fail(node, "general model needs rho as an N x N list of rows");
        for (const auto& row : r) {
            const auto v = cr.list(row, "rho row");
            m.rho_matrix.insert(m.rho_matrix.end(), v.begin(), v.end());
        }
        break;
    }
    }
    cr.check(node, [&] { (void)m.build(); });
}

void parse_factor(const ConfigReader& cr, const YAML::Node& node, AJDParams& p) {
    cr.allow(node, {"kappa", "theta", "sigma", "l", "mu", "y0"});
    cr.read(node, "kappa", p.kappa);
    cr.read(node, "theta", p.theta);
    cr.read(node, "sigma", p.sigma);
    cr.read(node, "l", p.l);
    cr.read(node, "mu", p.mu);
    cr.read(node, "y0", p.y0);
    cr.check(node, [&] { p.validate(); });
}

void parse_deck(const ConfigReader& cr, const YAML::Node& node, DeckBlock& d) {
    cr.allow(node, {"attach", "upfront_bp", "maturity", "period", "payments", "r", "recovery", "timing",
                    "index_notional"});
    if (!node["attach"])
        cr.fail(node, "deck needs attach points");
    d.attach = cr.list(node["attach"], "attach");
    d.upfront_bp = node["upfront_bp"] ? cr.list(node["upfront_bp"], "upfront_bp")
                                      : std::vector<double>(d.attach.empty() ? 0 : d.attach.size() - 1, 0.0);
    cr.read(node, "maturity", d.maturity);
    cr.read(node, "period", d.period);
    if (node["payments"]) {
        if (node["period"])
            cr.fail(node, "give either period or payments, not both");
        const int m = cr.scalar<int>(node["payments"], "payments");
        if (m < 1)
            cr.fail(node["payments"], "payments must be positive");
        d.period = d.maturity / m;
    }
    cr.read(node, "r", d.r);
    cr.read(node, "recovery", d.recovery);
    if (node["timing"])
        d.timing = parse_timing(cr, node["timing"]);
    if (node["index_notional"])
        d.index = parse_index(cr, node["index_notional"]);
}

void parse_precision(const ConfigReader& cr, const YAML::Node& node, PrecisionPolicy& p) {
    cr.allow(node, {"mantissa_bits", "collision_rel_tol"});
    cr.read(node, "mantissa_bits", p.mantissa_bits);
    cr.read(node, "collision_rel_tol", p.collision_rel_tol);
    cr.check(node, [&] { p.validate(); });
}

void parse_mc(const ConfigReader& cr, const YAML::Node& node, McBlock& mc) {
    cr.allow(node, {"paths", "dt", "seed"});
    cr.read(node, "paths", mc.paths);
    cr.read(node, "dt", mc.dt);
    cr.read(node, "seed", mc.seed);
    if (mc.paths < 1000)
        cr.fail(node, "mc.paths must be at least 1000");
    if (!(mc.dt > 0.0))
        cr.fail(node, "mc.dt must be positive");
}

void parse_calibration(const ConfigReader& cr, const YAML::Node& node, const fs::path& base, CalibrationBlock& c) {
    cr.allow(node, {"quotes", "maturities", "starts", "max_iterations", "box", "n_obligors", "recovery", "r",
                    "period", "upfront_running_bp", "parameters", "initial"});
    if (node["quotes"]) {
        const fs::path q = cr.scalar<std::string>(node["quotes"], "quotes");
        c.quotes = (q.is_absolute() ? q : base / q).string();
        if (!fs::is_regular_file(c.quotes))
            cr.fail(node["quotes"], "quote file " + c.quotes + " does not exist");
    }
    if (node["maturities"])
        c.maturities = cr.list(node["maturities"], "maturities");
    cr.read(node, "starts", c.starts);
    cr.read(node, "max_iterations", c.max_iterations);
    if (c.starts < 1)
        cr.fail(node, "starts must be at least 1");
    if (c.max_iterations < 1)
        cr.fail(node, "max_iterations must be at least 1");
    if (const YAML::Node box = node["box"]) {
        cr.allow(box, {"lower", "upper"});
        if (box["lower"])
            c.box.lower = cr.vector9(box["lower"], "box.lower");
        if (box["upper"])
            c.box.upper = cr.vector9(box["upper"], "box.upper");
        cr.check(box, [&] { c.box.validate(); });
    }
    cr.read(node, "n_obligors", c.defaults.n_obligors);
    cr.read(node, "recovery", c.defaults.recovery);
    cr.read(node, "r", c.defaults.r);
    cr.read(node, "period", c.defaults.period);
    cr.read(node, "upfront_running_bp", c.defaults.upfront_running_bp);
    if (const YAML::Node ps = node["parameters"]) {
        if (!ps.IsMap())
            cr.fail(ps, "parameters must map maturity to a parameter vector");
        for (const auto& kv : ps) {
            const double m = cr.scalar<double>(kv.first, "maturity");
            const auto x = cr.vector9(kv.second, "parameters");
            if (!c.box.contains(x))
                cr.fail(kv.second, "parameter vector lies outside the calibration box");
            c.parameters[m] = x;
        }
    }
    if (const YAML::Node init = node["initial"]) {
        if (!init.IsSequence())
            cr.fail(init, "initial must be a list of parameter vectors");
        for (const auto& v : init)
            c.initial.push_back(cr.vector9(v, "initial"));
    }
}

void parse_report(const ConfigReader& cr, const YAML::Node& node, ReportBlock& r) {
    cr.allow(node, {"attach_detach", "self_check", "rounding"});
    cr.read(node, "attach_detach", r.attach_detach);
    cr.read(node, "self_check", r.self_check);
    if (node["rounding"])
        r.rounding = parse_rounding(cr, node["rounding"]);
}

// ---------------------------------------------------------------- output

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return buf;
}

std::string plain(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

// Output files are staged in memory and only written once the command has succeeded.
class Outputs {
  public:
    explicit Outputs(std::string dir) : dir_(std::move(dir)) {}

    std::ostringstream& file(const std::string& name) { return files_[name]; }

    void commit() {
        fs::create_directories(dir_);
        std::vector<std::pair<fs::path, fs::path>> staged;
        try {
            for (auto& [name, content] : files_) {
                const fs::path final_path = fs::path(dir_) / name;
                const fs::path tmp = fs::path(dir_) / ("." + name + ".tmp");
                std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
                out << content.str();
                out.close();
                if (!out)
                    throw std::runtime_error("cannot write " + tmp.string());
                staged.emplace_back(tmp, final_path);
            }
        } catch (...) {
            for (auto& [tmp, final_path] : staged)
                fs::remove(tmp);
            throw;
        }
        for (auto& [tmp, final_path] : staged)
            fs::rename(tmp, final_path);
    }

  private:
    std::string dir_;
    std::map<std::string, std::ostringstream> files_;
};

json summary_header(const std::string& command, const RunConfig& cfg) {
    return json{{"format_version", format_version}, {"command", command}, {"config", cfg.path}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const YAML::Exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const CalibrationFailed& e) {
        std::cerr << "calibration failed: " << e.what() << '\n';
        return exit_calibration;
    } catch (const std::exception& e) {
        std::cerr << "pricing error: " << e.what() << '\n';
        return exit_pricing;
    }
}

void write_spreads(std::ostream& out, const TrancheDeck& deck, const std::vector<double>& spreads) {
    out << "tranche_lo,tranche_hi,upfront_bp,spread_bp\n";
    for (int i = 1; i <= deck.tranche_count(); ++i)
        out << plain(deck.lo(i)) << ',' << plain(deck.hi(i)) << ','
            << fixed2(deck.upfront[static_cast<std::size_t>(i - 1)] * 1e4) << ','
            << fixed2(spreads[static_cast<std::size_t>(i - 1)]) << '\n';
}

void write_loss_curve(std::ostream& out, const TrancheDeck& deck, const LossCurve& curve) {
    out << "t,tranche_lo,tranche_hi,expected_loss\n";
    for (std::size_t k = 0; k < curve.times.size(); ++k) {
        for (int i = 1; i <= deck.tranche_count(); ++i)
            out << plain(curve.times[k]) << ',' << plain(deck.lo(i)) << ',' << plain(deck.hi(i)) << ','
                << sci(curve.values[static_cast<std::size_t>(i - 1)][k]) << '\n';
        out << plain(curve.times[k]) << ",0,1," << sci(curve.pool_loss[k]) << '\n';
    }
}

std::vector<double> spreads_of(const TrancheDeck& deck, const LossCurve& curve) {
    std::vector<double> s;
    for (int i = 1; i <= deck.tranche_count(); ++i)
        s.push_back(tranche_spread(deck, i, curve));
    return s;
}

void require_model_and_deck(const RunConfig& cfg) {
    if (!cfg.has_model || !cfg.has_deck)
        throw InputError(cfg.path + ": this command needs model and deck blocks");
}

std::vector<QuoteSet> load_quotes(const RunConfig& cfg, const std::string& override_path) {
    const std::string path = override_path.empty() ? cfg.calibration.quotes : override_path;
    if (path.empty())
        throw InputError(cfg.path + ": no quote file given (calibration.quotes or command argument)");
    auto all = read_quotes_csv(path, cfg.calibration.defaults);
    if (cfg.calibration.maturities.empty())
        return all;
    std::vector<QuoteSet> picked;
    for (double m : cfg.calibration.maturities) {
        auto it = std::find_if(all.begin(), all.end(), [&](const QuoteSet& q) { return std::abs(q.maturity - m) < 1e-9; });
        if (it == all.end())
            throw InputError(path + ": no quotes for maturity " + plain(m));
        picked.push_back(*it);
    }
    return picked;
}

json parameters_json(const ParameterVector& x) {
    json j = json::object();
    for (int k = 0; k < parameter_count; ++k)
        j[parameter_names()[k]] = x[k];
    return j;
}

std::string quote_kind_unit(QuoteKind k) { return k == QuoteKind::upfront_pct ? "pct" : "bp"; }

// quotes are held as fractions (upfront) or bp; reports show upfronts in percent
double display(QuoteKind k, double v) { return k == QuoteKind::upfront_pct ? 100.0 * v : v; }

} // namespace

ContagionSpec ModelBlock::build() const {
    std::vector<double> b = beta;
    if (a0) {
        if (n < 1)
            throw DomainError("model.n must be positive");
        if (kind == ContagionKind::hcm)
            return ContagionSpec::hcm_uniform(n, *a0, rho, delta);
        if (kind == ContagionKind::ncm)
            return ContagionSpec::ncm_uniform(n, *a0, p, q, delta);
        b.assign(static_cast<std::size_t>(n), *a0 / n);
    }
    if (static_cast<int>(b.size()) != n)
        throw DomainError("beta must have N entries");
    switch (kind) {
    case ContagionKind::hcm:
        return ContagionSpec::hcm(b, rho, delta);
    case ContagionKind::ncm:
        return ContagionSpec::ncm(b, p, q, delta);
    case ContagionKind::general:
        if (rho_matrix.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
            throw DomainError("rho must be an N x N matrix");
        return ContagionSpec::general(b, rho_matrix, delta);
    }
    throw DomainError("unknown model kind");
}

TrancheDeck DeckBlock::build(int n_obligors) const {
    if (upfront_bp.size() + 1 != attach.size())
        throw DomainError("deck needs one upfront per tranche");
    std::vector<double> up;
    for (double u : upfront_bp)
        up.push_back(u * 1e-4);
    TrancheDeck d = TrancheDeck::regular(attach, up, maturity, period, r, RecoveryVector::uniform(n_obligors, recovery));
    d.timing = timing;
    d.validate();
    return d;
}

RunConfig load_config(const std::string& path) {
    if (!fs::exists(path))
        throw InputError(path + ": config file not found");
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << path << ':' << e.mark.line + 1 << ':' << e.mark.column + 1 << ": " << e.msg;
        throw InputError(os.str());
    } catch (const YAML::BadFile&) {
        throw InputError(path + ": cannot read config file");
    }
    const ConfigReader cr(path);
    if (!root.IsMap())
        cr.fail(root, "config must be a mapping");
    cr.allow(root, {"model", "factor", "deck", "precision", "mc", "calibration", "report"});

    RunConfig cfg;
    cfg.path = path;
    if (root["precision"])
        parse_precision(cr, root["precision"], cfg.precision);
    if (root["model"]) {
        parse_model(cr, root["model"], cfg.model);
        cfg.has_model = true;
    }
    if (root["factor"])
        parse_factor(cr, root["factor"], cfg.factor);
    if (root["deck"]) {
        if (!cfg.has_model)
            cr.fail(root["deck"], "deck needs a model block for the pool size");
        parse_deck(cr, root["deck"], cfg.deck);
        cr.check(root["deck"], [&] { (void)cfg.deck.build(cfg.model.n); });
        cfg.has_deck = true;
    }
    if (root["mc"])
        parse_mc(cr, root["mc"], cfg.mc);
    if (root["calibration"])
        parse_calibration(cr, root["calibration"], fs::path(path).parent_path(), cfg.calibration);
    if (root["report"])
        parse_report(cr, root["report"], cfg.report);
    return cfg;
}

std::vector<double> parse_grid(const std::string& spec) {
    std::vector<std::string> parts;
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size())
                throw std::invalid_argument(s);
            return v;
        } catch (const std::logic_error&) {
            throw InputError("grid entry '" + s + "' is not a number");
        }
    };
    if (spec.find(':') != std::string::npos) {
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ':');)
            parts.push_back(p);
        if (parts.size() != 3)
            throw InputError("grid '" + spec + "' must look like a:b:n");
        const double a = number(parts[0]), b = number(parts[1]);
        const double nd = number(parts[2]);
        const int n = static_cast<int>(nd);
        if (n < 1 || n != nd)
            throw InputError("grid point count must be a positive integer");
        if (n == 1)
            return {a};
        std::vector<double> g;
        for (int k = 0; k < n; ++k)
            g.push_back(a + (b - a) * k / (n - 1));
        return g;
    }
    std::stringstream ss(spec);
    std::vector<double> g;
    for (std::string p; std::getline(ss, p, ',');)
        g.push_back(number(p));
    if (g.empty())
        throw InputError("empty grid");
    return g;
}

int cmd_price(const std::string& config_path, const CommandOptions& options) {
    return guarded([&] {
        const RunConfig cfg = load_config(config_path);
        require_model_and_deck(cfg);
        const auto t0 = std::chrono::steady_clock::now();
        const ContagionSpec spec = cfg.model.build();
        const TrancheDeck deck = cfg.deck.build(spec.size());
        const LossCurve curve = loss_curve(spec, deck, cfg.factor, cfg.precision);
        const auto spreads = spreads_of(deck, curve);
        const double index = index_spread(deck, curve, cfg.deck.index);
        const double elapsed = seconds_since(t0);

        Outputs out(options.out_dir);
        write_spreads(out.file("spreads.csv"), deck, spreads);
        write_loss_curve(out.file("loss_curve.csv"), deck, curve);

        json s = summary_header("price", cfg);
        s["model"] = to_string(spec.kind());
        s["obligors"] = spec.size();
        s["mantissa_bits"] = cfg.precision.mantissa_bits;
        s["runtime_seconds"] = elapsed;
        s["index_spread_bp"] = std::round(index * 100.0) / 100.0;
        for (int i = 1; i <= deck.tranche_count(); ++i)
            s["tranches"].push_back({{"lo", deck.lo(i)},
                                     {"hi", deck.hi(i)},
                                     {"upfront_bp", std::round(deck.upfront[static_cast<std::size_t>(i - 1)] * 1e6) / 100.0},
                                     {"spread_bp", std::round(spreads[static_cast<std::size_t>(i - 1)] * 100.0) / 100.0}});
        if (cfg.report.attach_detach) {
            AttachOptions ao;
            ao.rounding = cfg.report.rounding;
            std::ostream& csv = out.file("attach_detach.csv");
            csv << "tranche_lo,tranche_hi,attach_count,detach_count,attach_time,detach_time\n";
            const auto ad = attach_detach_times(spec, deck, cfg.factor, cfg.precision, ao);
            for (int i = 1; i <= deck.tranche_count(); ++i) {
                const auto& a = ad[static_cast<std::size_t>(i - 1)];
                csv << plain(deck.lo(i)) << ',' << plain(deck.hi(i)) << ',' << a.attach_count << ',' << a.detach_count
                    << ',' << plain(a.attach_time) << ',' << plain(a.detach_time) << '\n';
            }
        }
        if (cfg.report.self_check)
            s["precision_self_check"] = precision_self_check(spec, deck, cfg.factor, cfg.precision);
        out.file("price_summary.json") << s.dump(2) << '\n';
        out.commit();
        std::cout << "equity spread " << fixed2(spreads.front()) << " bp, index " << fixed2(index) << " bp ("
                  << elapsed << " s)\n";
        return static_cast<int>(exit_ok);
    });
}

int cmd_sensitivity(const std::string& config_path, const std::string& factor, const std::string& grid,
                    const CommandOptions& options) {
    return guarded([&] {
        const RunConfig cfg = load_config(config_path);
        require_model_and_deck(cfg);
        static const std::set<std::string> factors{"rho", "delta", "m", "R", "kappa", "sigma"};
        if (!factors.count(factor))
            throw InputError("unknown sensitivity factor '" + factor + "' (rho, delta, m, R, kappa, sigma)");
        if (factor == "rho" && cfg.model.kind != ContagionKind::hcm)
            throw InputError("the rho sweep needs an hcm model");
        const auto values = parse_grid(grid);

        Outputs out(options.out_dir);
        std::ostream& csv = out.file("sensitivity_" + factor + ".csv");
        csv << "factor,factor_value,tranche_lo,tranche_hi,spread_bp\n";
        for (double v : values) {
            ModelBlock model = cfg.model;
            DeckBlock deckb = cfg.deck;
            AJDParams ajd = cfg.factor;
            if (factor == "rho")
                model.rho = v;
            else if (factor == "delta")
                model.delta = v;
            else if (factor == "m") {
                if (v < 1 || v != std::floor(v))
                    throw InputError("payment counts must be positive integers");
                deckb.period = deckb.maturity / v;
            } else if (factor == "R")
                deckb.recovery = v;
            else if (factor == "kappa")
                ajd.kappa = v;
            else
                ajd.sigma = v;
            ContagionSpec spec = [&] {
                try {
                    return model.build();
                } catch (const std::logic_error& e) {
                    throw InputError(factor + "=" + plain(v) + ": " + e.what());
                }
            }();
            TrancheDeck deck = [&] {
                try {
                    return deckb.build(spec.size());
                } catch (const std::logic_error& e) {
                    throw InputError(factor + "=" + plain(v) + ": " + e.what());
                }
            }();
            try {
                ajd.validate();
            } catch (const std::logic_error& e) {
                throw InputError(factor + "=" + plain(v) + ": " + e.what());
            }
            const LossCurve curve = loss_curve(spec, deck, ajd, cfg.precision);
            const auto spreads = spreads_of(deck, curve);
            for (int i = 1; i <= deck.tranche_count(); ++i)
                csv << factor << ',' << plain(v) << ',' << plain(deck.lo(i)) << ',' << plain(deck.hi(i)) << ','
                    << fixed2(spreads[static_cast<std::size_t>(i - 1)]) << '\n';
        }
        json s = summary_header("sensitivity", cfg);
        s["factor"] = factor;
        s["grid"] = values;
        out.file("sensitivity_summary.json") << s.dump(2) << '\n';
        out.commit();
        return static_cast<int>(exit_ok);
    });
}

int cmd_calibrate(const std::string& config_path, const std::string& quotes_path, const CommandOptions& options) {
    return guarded([&] {
        const RunConfig cfg = load_config(config_path);
        const auto quotes = load_quotes(cfg, quotes_path);
        CalibrationOptions co;
        co.starts = cfg.calibration.starts;
        co.max_iterations = cfg.calibration.max_iterations;
        co.seed = options.seed.value_or(cfg.mc.seed);
        co.precision = cfg.precision;
        co.initial = cfg.calibration.initial;

        const auto t0 = std::chrono::steady_clock::now();
        const CalibrationResult r = calibrate(quotes, cfg.calibration.box, co);
        const double elapsed = seconds_since(t0);

        Outputs out(options.out_dir);
        std::ostream& fit = out.file("fit.csv");
        fit << "maturity,instrument,kind,unit,market_bid,market_ask,market_mid,model,rel_error\n";
        std::size_t k = 0;
        for (const auto& q : quotes)
            for (const auto& inst : q.instruments()) {
                const double model = r.model_quotes[k];
                fit << plain(q.maturity) << ',' << (inst.kind == QuoteKind::index_bp ? "index" : inst.label()) << ','
                    << to_string(inst.kind) << ',' << quote_kind_unit(inst.kind) << ','
                    << fixed2(display(inst.kind, inst.bid)) << ',' << fixed2(display(inst.kind, inst.ask)) << ','
                    << fixed2(display(inst.kind, inst.mid())) << ',' << fixed2(display(inst.kind, model)) << ','
                    << sci((model - inst.mid()) / inst.mid()) << '\n';
                ++k;
            }

        json s = summary_header("calibrate", cfg);
        s["quotes"] = quotes_path.empty() ? cfg.calibration.quotes : quotes_path;
        for (const auto& q : quotes)
            s["maturities"].push_back(q.maturity);
        s["x_hat"] = parameters_json(r.x_hat);
        s["objective"] = r.objective;
        s["aape"] = r.aape;
        s["runtime_seconds"] = elapsed;
        s["starts"] = json::array();
        for (const auto& st : r.starts)
            s["starts"].push_back({{"start", st.start},
                                   {"x0", parameters_json(st.x0)},
                                   {"x", parameters_json(st.x)},
                                   {"objective", st.objective},
                                   {"iterations", st.iterations},
                                   {"ok", st.ok},
                                   {"message", st.message}});
        s["trace"] = json::array();
        for (const auto& t : r.trace)
            s["trace"].push_back({{"start", t.start}, {"iteration", t.iteration}, {"objective", t.objective}});
        out.file("calibration.json") << s.dump(2) << '\n';
        out.commit();
        std::cout << "objective " << r.objective << ", aape " << fixed2(100.0 * r.aape) << "% (" << elapsed << " s)\n";
        return static_cast<int>(exit_ok);
    });
}

int cmd_implied_rho(const std::string& config_path, const std::string& quotes_path, const CommandOptions& options) {
    return guarded([&] {
        const RunConfig cfg = load_config(config_path);
        const auto quotes = load_quotes(cfg, quotes_path);
        RhoBracket bracket;
        bracket.lo = cfg.calibration.box.lower[1];
        bracket.hi = cfg.calibration.box.upper[1];

        Outputs out(options.out_dir);
        std::ostream& csv = out.file("implied_rho.csv");
        csv << "maturity,instrument,market_mid,implied_rho,status\n";
        json s = summary_header("implied-rho", cfg);
        s["rows"] = json::array();
        for (const auto& q : quotes) {
            auto it = std::find_if(cfg.calibration.parameters.begin(), cfg.calibration.parameters.end(),
                                   [&](const auto& kv) { return std::abs(kv.first - q.maturity) < 1e-9; });
            if (it == cfg.calibration.parameters.end())
                throw InputError(cfg.path + ": calibration.parameters has no vector for maturity " + plain(q.maturity));
            const auto inst = q.instruments();
            for (int i = 0; i < static_cast<int>(inst.size()); ++i) {
                const auto& qi = inst[static_cast<std::size_t>(i)];
                const std::string name = qi.kind == QuoteKind::index_bp ? "index" : qi.label();
                csv << plain(q.maturity) << ',' << name << ',' << fixed2(display(qi.kind, qi.mid())) << ',';
                json row{{"maturity", q.maturity}, {"instrument", name}};
                try {
                    const double rho = implied_rho(q, i, it->second, bracket, cfg.precision);
                    csv << sci(rho) << ",OK\n";
                    row["implied_rho"] = rho;
                    row["status"] = "OK";
                } catch (const NoRoot& e) {
                    csv << ",NO_ROOT\n";
                    row["implied_rho"] = nullptr;
                    row["status"] = "NO_ROOT";
                    row["reason"] = e.what();
                }
                s["rows"].push_back(row);
            }
        }
        out.file("implied_rho_summary.json") << s.dump(2) << '\n';
        out.commit();
        return static_cast<int>(exit_ok);
    });
}

int cmd_simulate(const std::string& config_path, const CommandOptions& options) {
    return guarded([&] {
        const RunConfig cfg = load_config(config_path);
        require_model_and_deck(cfg);
        const ContagionSpec spec = cfg.model.build();
        const TrancheDeck deck = cfg.deck.build(spec.size());
        const std::uint64_t seed = options.seed.value_or(cfg.mc.seed);
        McOptions mo;
        mo.dt = cfg.mc.dt;
        mo.threads = std::max(1, options.threads);

        const auto t0 = std::chrono::steady_clock::now();
        const McSpread mc = mc_tranche_spread(spec, deck, cfg.factor, cfg.mc.paths, seed, mo);
        const double elapsed = seconds_since(t0);

        json s = summary_header("simulate", cfg);
        s["seed"] = seed;
        s["paths"] = cfg.mc.paths;
        s["dt"] = cfg.mc.dt;
        s["runtime_seconds"] = elapsed;

        // the analytic cross-check is skipped when no exact method covers the spec
        std::optional<std::vector<double>> exact;
        try {
            const LossCurve curve = loss_curve(spec, deck, cfg.factor, cfg.precision);
            auto v = spreads_of(deck, curve);
            v.push_back(index_spread(deck, curve));
            exact = std::move(v);
        } catch (const SizeRefusal& e) {
            s["analytic_skipped"] = e.what();
        }
        bool consistent = true;
        const int k_tr = deck.tranche_count();
        for (int i = 0; i <= k_tr; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            json row{{"lo", i < k_tr ? deck.lo(i + 1) : 0.0},
                     {"hi", i < k_tr ? deck.hi(i + 1) : 1.0},
                     {"instrument", i < k_tr ? "tranche" : "index"},
                     {"mc_spread_bp", mc.spread_bp[idx]},
                     {"mc_se_bp", mc.se_bp[idx]}};
            if (exact) {
                const double a = (*exact)[idx];
                row["analytic_spread_bp"] = a;
                const double diff = std::abs(mc.spread_bp[idx] - a);
                const bool ok = diff <= 3.0 * mc.se_bp[idx] || diff <= 1e-9 * std::max(1.0, std::abs(a));
                row["within_3se"] = ok;
                consistent = consistent && ok;
            }
            s["instruments"].push_back(row);
        }
        if (exact)
            s["within_3se"] = consistent;

        Outputs out(options.out_dir);
        if (options.dump_scenarios) {
            std::ostream& csv = out.file("scenarios.csv");
            csv << "path_id,k,tau_k,obligor\n";
            for (long p = 0; p < cfg.mc.paths; ++p) {
                const DefaultScenario sc =
                    simulate_path(spec, cfg.factor, deck.maturity, mo.dt, seed, static_cast<std::uint64_t>(p));
                for (std::size_t k = 0; k < sc.order.size(); ++k)
                    csv << p << ',' << k + 1 << ',' << std::setprecision(12) << sc.times[k] << ',' << sc.order[k]
                        << '\n';
            }
        }
        out.file("mc_summary.json") << s.dump(2) << '\n';
        out.commit();
        std::cout << "simulated " << cfg.mc.paths << " paths in " << elapsed << " s\n";
        return static_cast<int>(exit_ok);
    });
}

int run(int argc, char** argv) {
    CLI::App app{"Default contagion pricing, simulation and calibration"};
    app.require_subcommand(1);
    CommandOptions opts;
    std::uint64_t seed = 0;
    app.add_option("--out-dir", opts.out_dir, "Directory for output files")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "Override the configured random seed");
    app.add_option("--threads", opts.threads, "Worker threads for Monte Carlo")->check(CLI::PositiveNumber);

    std::string config, quotes, factor, grid;
    auto* price = app.add_subcommand("price", "Tranche spreads and expected loss curve");
    price->add_option("config", config, "Run config (YAML)")->required();
    auto* sens = app.add_subcommand("sensitivity", "Sweep one factor and report spreads");
    sens->add_option("config", config, "Run config (YAML)")->required();
    sens->add_option("--factor", factor, "rho, delta, m, R, kappa or sigma")->required();
    sens->add_option("--grid", grid, "a:b:n or a comma-separated list")->required();
    auto* cal = app.add_subcommand("calibrate", "Fit the homogeneous model to tranche quotes");
    cal->add_option("config", config, "Run config (YAML)")->required();
    cal->add_option("quotes", quotes, "Quote CSV (defaults to calibration.quotes)");
    auto* rho = app.add_subcommand("implied-rho", "Implied contagion rate per instrument");
    rho->add_option("config", config, "Run config (YAML)")->required();
    rho->add_option("quotes", quotes, "Quote CSV (defaults to calibration.quotes)");
    auto* sim = app.add_subcommand("simulate", "Monte Carlo spreads and default scenarios");
    sim->add_option("config", config, "Run config (YAML)")->required();
    sim->add_flag("--dump-scenarios", opts.dump_scenarios, "Write scenarios.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_input;
    }
    if (*seed_opt)
        opts.seed = seed;

    if (*price)
        return cmd_price(config, opts);
    if (*sens)
        return cmd_sensitivity(config, factor, grid, opts);
    if (*cal)
        return cmd_calibrate(config, quotes, opts);
    if (*rho)
        return cmd_implied_rho(config, quotes, opts);
    return cmd_simulate(config, opts);
}

} // namespace contagion::cli
