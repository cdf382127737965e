#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fracdyn/field_expr.hpp"
#include "fracdyn/scalar_analysis.hpp"

namespace fracdyn {

/// A steady-state curve followed across consecutive parameter values.
struct Branch {
    std::vector<std::size_t> slices;  // indices into BifurcationDiagram::gammas
    std::vector<double> zeros;
    std::vector<bool> stable;
};

struct BifurcationDiagram {
    std::string parameter;
    std::vector<double> gammas;
    std::vector<ZeroSet> zero_sets;  // degenerate zeros kept and flagged
    std::vector<Branch> branches;

    std::vector<std::size_t> counts() const;
};

/// Zero sets of the scalar family at gamma_i = lo + (hi - lo) i / (M - 1),
/// with branches linked by nearest-neighbour matching between consecutive
/// slices. `params` holds the values of every field parameter; the swept one
/// is overwritten.
BifurcationDiagram sweep(const FieldDef& family, std::span<const double> params, std::string_view parameter,
                         double lo, double hi, std::size_t m, ScanInterval scan, std::size_t resolution = 1000);

struct Classification {
    std::string label;  // "saddle-node", "pitchfork" or "none"
    std::optional<double> critical_gamma;
    double exponent = 0.0;           // fitted half-spread exponent, 0 when not fitted
    std::vector<std::size_t> runs;   // zero counts of the non-degenerate runs, in sweep order
};

/// Saddle-node: counts 0 then 2 (either order); pitchfork: 1 then 3 with the
/// middle zero continuing the single one. In both cases the half spread of
/// the outer zeros must scale like |gamma - gamma*|^p with p = 0.5 +- 0.1,
/// fitted on the 10 slices nearest the critical value.
Classification classify(const BifurcationDiagram& diag);

struct DivergenceReport {
    bool diverges = false;             // escaped towards -infinity
    std::optional<double> escape_time;
    double final_value = 0.0;
    bool bound_checked = false;
    bool bound_holds = true;           // x(t) <= eta + g_sup t^alpha / Gamma(alpha + 1) on the whole grid
};

/// Solves from x0 and reports escape towards -infinity. When `g_sup` bounds
/// the field from above, the trajectory is also checked against the bound it
/// implies.
DivergenceReport divergence_check(const FieldDef& family, std::span<const double> params, double alpha, double x0,
                                  double t_end, double dt, std::optional<double> g_sup = std::nullopt);

}  // namespace fracdyn
