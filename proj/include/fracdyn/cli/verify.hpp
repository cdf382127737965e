#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracdyn/cli/catalog.hpp"
#include "fracdyn/cli/commands.hpp"
#include "fracdyn/cli/report.hpp"
#include "fracdyn/field_expr.hpp"
#include "fracdyn/scalar_analysis.hpp"

namespace fracdyn::cli {

/// Suites: ml, solver, scalar, triangular, bifurcation, semigroup, or all.
inline const std::vector<std::string>& verify_suites() {
    static const std::vector<std::string> names{"ml", "solver", "scalar", "triangular", "bifurcation", "semigroup"};
    return names;
}

/// Runs the invariant battery selected by cfg.suite on the catalog fields.
/// The fault "inflate-gamma" multiplies every envelope rate by 10, which
/// must make envelope_check fail.
Report run_verify(const RunConfig& cfg);

struct ScalarSuiteInput {
    const FieldDef* field = nullptr;
    std::vector<double> params;
    ScanInterval scan{-10, 10};
    std::optional<Certificate> certificate;
    double alpha = 0.6;
    std::vector<double> etas;  // empty: one seed inside each interval between and beyond the zeros
    double t_end = 1e3;
    double dt = 0.1;
    double gamma_scale = 1.0;
    std::string label;  // appended to check names as "check/label"
};

/// Zero-set invariants, envelopes toward stable zeros, limit agreement with
/// the solver and the t^-alpha rate, for one scalar field.
void verify_scalar_field(Report& report, const ScalarSuiteInput& in);

}  // namespace fracdyn::cli
