// Runs the acceptance criteria and prints one PASS/FAIL line each.
// Usage: acceptance [--strict] [criterion numbers...]

#include <contagion/ajd.hpp>
#include <contagion/calibration.hpp>
#include <contagion/cli.hpp>
#include <contagion/kernel.hpp>
#include <contagion/pricing.hpp>
#include <contagion/simulator.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace contagion;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string data(const std::string& name) { return std::string(CONTAGION_DATA_DIR) + "/" + name; }

fs::path scratch_dir() {
    static const fs::path dir = [] {
        std::random_device rd;
        fs::path p = fs::temp_directory_path() / ("contagion_acceptance_" + std::to_string(rd()));
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::stringstream ls(line);
        for (std::string f; std::getline(ls, f, ',');)
            fields.push_back(f);
        rows.push_back(fields);
    }
    return rows;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

double rel(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

Verdict price_table(const std::string& config, const std::vector<double>& expected) {
    const fs::path out = scratch_dir() / fs::path(config).stem();
    cli::CommandOptions opt;
    opt.out_dir = out.string();
    const auto t0 = Clock::now();
    const int code = cli::cmd_price(data(config), opt);
    const double elapsed = seconds_since(t0);
    if (code != cli::exit_ok)
        return {false, "cmd_price exited with " + std::to_string(code)};
    const auto rows = read_csv(out / "spreads.csv");
    Verdict v{elapsed <= 60.0, ""};
    double worst = 0.0;
    std::string got;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const double s = std::stod(rows.at(i + 1).at(3));
        worst = std::max(worst, rel(s, expected[i]));
        got += (i ? " " : "") + rows[i + 1][3];
    }
    v.pass = v.pass && worst <= 0.015;
    v.detail = "spreads " + got + " bp, worst rel dev " + fmt(worst, 3) + ", " + fmt(elapsed, 3) + " s";
    return v;
}

Verdict criterion1() { return price_table("base_hcm.yaml", {1002, 840, 795, 777, 739, 619}); }

Verdict criterion2() { return price_table("base_ncm.yaml", {418, 190, 211, 235, 259, 283}); }

Verdict criterion3() {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> beta(0.02, 0.3), rate(0.01, 0.5), delta(-0.5, 0.5), near(0.01, 0.6);
    const int n = 6;
    const auto deck = TrancheDeck::regular({0.0, 0.1, 0.2, 0.3, 0.5, 1.0}, std::vector<double>(5, 0.0), 5.0, 0.25, 0.05,
                                           RecoveryVector::uniform(n, 0.4));
    const AJDParams ajd{};
    const auto t0 = Clock::now();
    double worst = 0.0;
    int compared = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> b(n);
        for (auto& x : b)
            x = beta(rng);
        const ContagionSpec spec = trial < 50 ? ContagionSpec::hcm(b, rate(rng), delta(rng))
                                              : ContagionSpec::ncm(b, near(rng), near(rng), delta(rng));
        const auto fast = loss_curve(spec, deck, ajd, {}, PricingMethod::closed_form);
        const auto slow = loss_curve(spec, deck, ajd, {}, PricingMethod::general);
        for (int i = 0; i < deck.tranche_count(); ++i)
            for (std::size_t k = 0; k < deck.pay_times.size(); ++k) {
                worst = std::max(worst, rel(fast.values[i][k], slow.values[i][k]));
                ++compared;
            }
    }
    const double elapsed = seconds_since(t0);
    return {worst <= 1e-9 && elapsed <= 300.0, std::to_string(compared) + " values, worst rel diff " + fmt(worst, 3) +
                                                   ", " + fmt(elapsed, 3) + " s"};
}

Verdict criterion4() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 0.3), b(0.02, 0.3), d(-0.3, 0.3), z(0.05, 3.0);
    double worst_sum = 0.0, worst_ck = 0.0;
    for (int n : {3, 6, 9, 12}) {
        for (int trial = 0; trial < 3; ++trial) {
            std::vector<double> beta(n), rho(static_cast<std::size_t>(n * n));
            for (auto& x : beta)
                x = b(rng);
            for (auto& x : rho)
                x = u(rng);
            const auto spec = ContagionSpec::general(beta, rho, d(rng));
            ObligorSet e = spec.empty_set();
            if (trial == 2)
                e = e.with(1 + static_cast<int>(rng() % n));
            for (double zz : {0.0, z(rng), 20.0}) {
                double total = 0.0;
                for (const auto& r : kernel_row(spec, e, zz))
                    total += r.probability;
                worst_sum = std::max(worst_sum, std::abs(total - 1.0));
            }
            // Chapman-Kolmogorov towards a few targets F, summing over the lattice E <= H <= F
            const double z1 = z(rng), z2 = z(rng);
            std::vector<ObligorSet> targets{spec.full_set()};
            for (int k = 0; k < 3; ++k) {
                ObligorSet f = e;
                for (int i = 1; i <= n; ++i)
                    if (rng() % 2 == 0 && !f.contains(i))
                        f = f.with(i);
                targets.push_back(f);
            }
            for (const auto& f : targets) {
                if (n == 12 && f.is_full() && trial > 0)
                    continue;
                double composed = 0.0, direct = 0.0;
                for (const auto& h : kernel_block(spec, e, f, z1)) {
                    for (const auto& g : kernel_block(spec, h.state, f, z2))
                        if (g.state == f)
                            composed += h.probability * g.probability;
                }
                for (const auto& g : kernel_block(spec, e, f, z1 + z2))
                    if (g.state == f)
                        direct = g.probability;
                worst_ck = std::max(worst_ck, std::abs(composed - direct));
            }
        }
    }
    return {worst_sum <= 1e-12 && worst_ck <= 1e-10,
            "worst |sum-1| " + fmt(worst_sum, 3) + ", worst composition error " + fmt(worst_ck, 3)};
}

Verdict criterion5() {
    const AJDParams p{};
    double worst = 0.0;
    for (double g : {0.1, 0.35, 1.0, 10.0})
        for (double t : {1.0, 5.0, 10.0}) {
            const auto c = transform(p, g, t);
            const auto o = riccati_oracle(p, g, t);
            worst = std::max({worst, std::abs(c.a - o.a), std::abs(c.b - o.b)});
        }
    const auto t0 = Clock::now();
    const auto mc = mc_laplace(p, 0.35, 5.0, 1000000, 505, {0.01, 1});
    const double closed = expectation(p, 0.35, 5.0);
    const double z = std::abs(mc.mean - closed) / mc.se;
    return {worst <= 1e-8 && z <= 3.0, "worst |closed-ODE| " + fmt(worst, 3) + "; MC " + fmt(mc.mean, 8) + " +- " +
                                           fmt(mc.se, 3) + " vs " + fmt(closed, 8) + " (" + fmt(z, 3) + " se, " +
                                           fmt(seconds_since(t0), 3) + " s)"};
}

Verdict criterion6() {
    const double lam = 0.8, t = 1.1;
    const auto two = ContagionSpec::hcm({lam, lam}, lam, 0.0);
    const auto path = deterministic_path([](double) { return 1.0; }, t, 0.01);
    const long n = 1000000;
    std::array<long, 4> counts{};
    for (long i = 0; i < n; ++i) {
        PathRng rng = path_rng(606, static_cast<std::uint64_t>(i));
        const auto sc = simulate_defaults(two, path, rng);
        ++counts[sc.sets.empty() ? 0 : static_cast<std::size_t>(sc.sets.back().bits())];
    }
    const double e1 = std::exp(-lam * t), e2 = std::exp(-2 * lam * t);
    const std::array<double, 4> p{e2, e1 - e2, e1 - e2, 1 - 2 * e1 + e2};
    double worst_z = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const double freq = static_cast<double>(counts[k]) / n;
        worst_z = std::max(worst_z, std::abs(freq - p[k]) / std::sqrt(p[k] * (1 - p[k]) / n));
    }
    const double step = 1e-3;
    double best_z = 0.0, best = -1.0;
    for (double z = 0.0; z <= 6.0; z += step) {
        const double v = kernel_factorized(two, two.empty_set(), ObligorSet::of(2, {1}), z);
        if (v > best) {
            best = v;
            best_z = z;
        }
    }
    const double mode = two_obligor_mode(lam);
    return {worst_z <= 3.0 && std::abs(best_z - mode) <= step,
            "worst cell " + fmt(worst_z, 3) + " se; grid argmax " + fmt(best_z, 6) + " vs ln2/lambda " + fmt(mode, 6)};
}

Verdict criterion7() {
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u(0.0, 0.4), b(0.05, 0.3);
    std::vector<double> beta(6), rho(36);
    for (auto& x : beta)
        x = b(rng);
    for (auto& x : rho)
        x = u(rng);
    const auto spec = ContagionSpec::general(beta, rho, -0.1);
    const AJDParams p{};
    const std::vector<double> grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    double worst = 0.0;
    std::set<ObligorSet::Bits> used;
    while (used.size() < 10) {
        const auto bits = static_cast<ObligorSet::Bits>(rng() % 63 + 1);
        if (!used.insert(bits).second)
            continue;
        const auto rep = martingale_check(spec, p, ObligorSet::from_bits(6, bits), grid, 100000,
                                          900 + static_cast<std::uint64_t>(used.size()), {0.02, 1});
        worst = std::max(worst, rep.worst_z);
    }
    return {worst <= 3.0, "worst |mean|/se over 10 sets " + fmt(worst, 3)};
}

Verdict criterion8() {
    std::ifstream in(data("cdx_hy_2007-05-11.csv"));
    const auto sets = read_quotes_csv(in);
    const ParameterVector fit{1.135, 0.00258, 0.0149, 0.958, 0.680, 0.125, 2.380, 0.236, 0.998};
    const auto model = model_quotes(fit, sets.at(0));
    const std::vector<double> reference{0.6670, 0.3289, 337.72, 78.82, 248.00};
    double worst = 0.0;
    std::string got;
    for (std::size_t i = 0; i < model.size(); ++i) {
        worst = std::max(worst, rel(model[i], reference[i]));
        got += (i ? " " : "") + fmt(i < 2 ? 100 * model[i] : model[i], 5) + (i < 2 ? "%" : "bp");
    }
    return {worst <= 0.05, "model " + got + ", worst rel dev " + fmt(worst, 3)};
}

Verdict calibration_run(const std::string& config, const std::string& tag) {
    const fs::path out = scratch_dir() / tag;
    cli::CommandOptions opt;
    opt.out_dir = out.string();
    const auto t0 = Clock::now();
    const int code = cli::cmd_calibrate(data(config), "", opt);
    const double elapsed = seconds_since(t0);
    if (code != cli::exit_ok)
        return {false, tag + " exited with " + std::to_string(code)};
    const json r = read_json(out / "calibration.json");
    const double aape = r["aape"].get<double>();
    return {aape <= 0.08 && elapsed <= 1800.0, tag + " AAPE " + fmt(100 * aape, 3) + "% objective " +
                                                    fmt(r["objective"].get<double>(), 3) + " in " + fmt(elapsed, 4) +
                                                    " s"};
}

Verdict criterion9() {
    const Verdict five = calibration_run("calibrate_5y.yaml", "5y");
    const Verdict joint = calibration_run("calibrate_joint.yaml", "joint");
    return {five.pass && joint.pass, five.detail + "; " + joint.detail};
}

Verdict criterion10() {
    const fs::path out = scratch_dir() / "implied";
    cli::CommandOptions opt;
    opt.out_dir = out.string();
    if (const int code = cli::cmd_implied_rho(data("implied_rho.yaml"), "", opt); code != cli::exit_ok)
        return {false, "cmd_implied_rho exited with " + std::to_string(code)};
    std::map<std::string, double> five;
    std::string column;
    for (const auto& row : read_csv(out / "implied_rho.csv")) {
        if (row.size() < 5 || row[0] != "5")
            continue;
        column += (column.empty() ? "" : " ") + row[1] + "=" + (row[4] == "OK" ? row[3] : row[4]);
        if (row[4] == "OK")
            five[row[1]] = std::stod(row[3]);
    }
    if (five.size() != 5)
        return {false, "5Y column incomplete: " + column};
    double lo = 1e300, hi = 0.0;
    for (const auto& [name, v] : five) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double equity = five["0-10"];
    const bool smile = hi > lo && five["10-15"] < equity;
    const bool level = std::abs(equity - 0.0027) <= 0.25 * 0.0027;
    return {smile && level, "5Y " + column + (smile ? "; ordering holds" : "; ordering fails") +
                                (level ? "" : "; equity outside 0.0027 +-25%")};
}

Verdict criterion11() {
    const auto spec = ContagionSpec::hcm_uniform(125, 0.35, 0.05, -0.008);
    const auto deck = TrancheDeck::regular({0.0, 0.03, 0.06, 0.09, 0.12, 0.22, 0.60}, {0.05, 0.04, 0.03, 0.02, 0.01, 0.0},
                                           5.0, 0.25, 0.05, RecoveryVector::uniform(125, 0.4));
    AttachOptions options;
    options.rounding = CountRounding::half_up;
    const auto times = attach_detach_times(spec, deck, AJDParams{}, {}, options);
    const auto& eq = times.at(0);
    return {eq.attach_time >= 0.25 && eq.attach_time <= 0.75 && eq.detach_time >= 1.0 && eq.detach_time <= 1.5,
            "equity attach " + fmt(eq.attach_time, 4) + "y, detach " + fmt(eq.detach_time, 4) + "y (count " +
                std::to_string(eq.detach_count) + ")"};
}

Verdict criterion12() {
    const auto cfg = cli::load_config(data("base_hcm.yaml"));
    const auto spec = cfg.model.build();
    const auto deck = cfg.deck.build(spec.size());
    auto spreads = [&](const PrecisionPolicy& p) {
        const auto curve = loss_curve(spec, deck, cfg.factor, p);
        std::vector<double> s;
        for (int i = 1; i <= deck.tranche_count(); ++i)
            s.push_back(tranche_spread(deck, i, curve));
        s.push_back(index_spread(deck, curve));
        return s;
    };
    const auto base = spreads(cfg.precision);
    const auto doubled = spreads(cfg.precision.doubled());
    double worst = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i)
        worst = std::max(worst, rel(base[i], doubled[i]));
    return {worst <= 1e-9, "mantissa " + std::to_string(cfg.precision.mantissa_bits) + " vs " +
                               std::to_string(2 * cfg.precision.mantissa_bits) + " bits, worst rel change " +
                               fmt(worst, 3)};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Verdict()>> criteria{criterion1, criterion2, criterion3,  criterion4,
                                                          criterion5, criterion6, criterion7,  criterion8,
                                                          criterion9, criterion10, criterion11, criterion12};
    bool strict = false;
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--strict")
            strict = true;
        else
            selected.push_back(std::stoi(a));
    }
    if (selected.empty())
        for (int i = 1; i <= static_cast<int>(criteria.size()); ++i)
            selected.push_back(i);

    int failed = 0;
    for (int k : selected) {
        Verdict v;
        const auto t0 = Clock::now();
        try {
            v = criteria.at(static_cast<std::size_t>(k - 1))();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        if (!v.pass)
            ++failed;
        std::cout << "CRITERION " << std::setw(2) << k << ' ' << (v.pass ? "PASS" : "FAIL") << "  " << v.detail
                  << "  [" << fmt(seconds_since(t0), 3) << " s]" << std::endl;
    }
    std::error_code ec;
    fs::remove_all(scratch_dir(), ec);
    std::cout << selected.size() - static_cast<std::size_t>(failed) << " of " << selected.size() << " criteria passed"
              << std::endl;
    return strict && failed > 0 ? 1 : 0;
}
