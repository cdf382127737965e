#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracdyn/errors.hpp"
#include "fracdyn/scalar_analysis.hpp"
#include "json.hpp"

namespace fracdyn::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad command line: unknown flag, missing or conflicting options, values out of range.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Raised by parse_args for --help; carries the usage text.
struct HelpRequested {
    std::string text;
};

/// Where the vector field comes from: a catalog name or expressions.
struct FieldSource {
    std::string catalog;
    std::vector<std::string> components;
    std::vector<std::string> f;  // triangular factors f1, f2, ...
    std::vector<std::string> h;  // triangular couplings h2, h3, ...
    std::vector<std::pair<std::string, double>> params;
};

struct RunConfig {
    std::string command;
    FieldSource source;

    double alpha = 0.6;
    double beta = 1.0;
    std::optional<double> z;
    bool batch = false;

    std::vector<double> x0;
    std::vector<double> etas;
    std::optional<double> t_end;
    std::optional<double> dt;
    double t_back = 50.0;
    double t_fwd = 100.0;

    std::optional<double> a;
    std::optional<double> b;
    std::optional<ScanInterval> scan;
    std::size_t resolution = 1000;

    std::string family;
    std::string gamma_name = "gamma";
    double gamma_lo = -1.0;
    double gamma_hi = 1.0;
    std::size_t gamma_count = 201;
    std::string expect;

    std::size_t seeds = 0;
    std::uint64_t rng_seed = 1;

    double tau1 = 0.5;
    double tau2 = 0.5;
    std::size_t dt_levels = 3;
    std::size_t n_max = 20;
    double lambda = 1.0;

    std::string suite = "all";
    std::string fault;

    std::string out;

    nlohmann::json to_json() const;
};

/// Maps the arguments (without the program name) to a validated config.
/// Throws UsageError or HelpRequested.
RunConfig parse_args(const std::vector<std::string>& args);

/// Runs one command. Exit codes: 0 success, 1 a check failed or the
/// computation failed, 2 usage error. Reports go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace fracdyn::cli
