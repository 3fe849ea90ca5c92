#pragma once

#include <contagion/ajd.hpp>
#include <contagion/calibration.hpp>
#include <contagion/model.hpp>
#include <contagion/precision.hpp>
#include <contagion/pricing.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace contagion::cli {

inline constexpr int format_version = 1;

enum ExitCode : int { exit_ok = 0, exit_input = 2, exit_pricing = 3, exit_calibration = 4 };

struct ModelBlock {
    ContagionKind kind = ContagionKind::hcm;
    int n = 0;
    std::optional<double> a0;
    std::vector<double> beta;
    double rho = 0.0;
    std::vector<double> rho_matrix; // general kind, row-major rho(j, i)
    double p = 0.0;
    double q = 0.0;
    double delta = 0.0;

    ContagionSpec build() const;
};

struct DeckBlock {
    std::vector<double> attach;
    std::vector<double> upfront_bp;
    double maturity = 5.0;
    double period = 0.25;
    double r = 0.05;
    double recovery = 0.4;
    DefaultTiming timing = DefaultTiming::start;
    IndexConvention index = IndexConvention::tranche_zero_to_one;

    TrancheDeck build(int n_obligors) const;
};

struct McBlock {
    long paths = 20000;
    double dt = 1.0 / 250.0;
    std::uint64_t seed = 1;
};

struct CalibrationBlock {
    CalibrationBox box;
    int starts = 8;
    int max_iterations = 50;
    std::string quotes; // resolved against the config directory
    std::vector<double> maturities; // empty: every maturity in the quote file, fitted jointly
    QuoteSet defaults;
    std::map<double, ParameterVector> parameters; // frozen vectors for implied rho, by maturity
    std::vector<ParameterVector> initial;
};

struct ReportBlock {
    bool attach_detach = false;
    bool self_check = false;
    CountRounding rounding = CountRounding::half_up;
};

struct RunConfig {
    std::string path;
    ModelBlock model;
    AJDParams factor;
    DeckBlock deck;
    PrecisionPolicy precision;
    McBlock mc;
    CalibrationBlock calibration;
    ReportBlock report;
    bool has_model = false;
    bool has_deck = false;
};

//! Parses and validates a YAML run config; throws InputError with file:line:column context.
RunConfig load_config(const std::string& path);

struct CommandOptions {
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    int threads = 1;
    bool dump_scenarios = false;
};

int cmd_price(const std::string& config_path, const CommandOptions& options);
int cmd_sensitivity(const std::string& config_path, const std::string& factor, const std::string& grid,
                    const CommandOptions& options);
int cmd_calibrate(const std::string& config_path, const std::string& quotes_path, const CommandOptions& options);
int cmd_implied_rho(const std::string& config_path, const std::string& quotes_path, const CommandOptions& options);
int cmd_simulate(const std::string& config_path, const CommandOptions& options);

//! "a:b:n" (n points from a to b inclusive) or a comma-separated list.
std::vector<double> parse_grid(const std::string& spec);

int run(int argc, char** argv);

} // namespace contagion::cli
