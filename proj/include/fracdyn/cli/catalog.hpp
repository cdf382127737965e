#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fracdyn/field_expr.hpp"
#include "fracdyn/scalar_analysis.hpp"
#include "fracdyn/triangular_systems.hpp"

namespace fracdyn::cli {

/// Dissipativity constants (a, b) to check on the entry's scan box.
struct Certificate {
    double a;
    double b;
};

/// A named field with default parameter values and analysis settings.
struct CatalogEntry {
    std::string name;
    std::string description;
    std::vector<std::string> components;  // scalar fields; one expression
    std::vector<std::string> f;           // triangular fields: factors f_i
    std::vector<std::string> h;           // triangular fields: h_2..h_d
    std::vector<std::string> param_names;
    std::vector<double> param_values;
    std::optional<Certificate> certificate;
    std::vector<ScanInterval> scan;

    bool triangular() const noexcept { return !f.empty(); }
    FieldDef field() const;
    TriangularField triangular_field() const;
};

/// linear, cubic, logistic, saddle, pitchfork, fig2, sec3text.
const std::vector<CatalogEntry>& catalog();

/// nullptr when the name is not in the catalog.
const CatalogEntry* find_entry(std::string_view name);

}  // namespace fracdyn::cli
