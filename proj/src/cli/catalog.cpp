#include "fracdyn/cli/catalog.hpp"

namespace fracdyn::cli {

FieldDef CatalogEntry::field() const {
    if (triangular()) return triangular_field().assembled();
    return FieldDef::parse(components, param_names);
}

TriangularField CatalogEntry::triangular_field() const {
    if (!triangular()) throw PreconditionError("catalog entry '" + name + "' is not triangular");
    return TriangularField::parse(f, h, param_names);
}

const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries{
        {"linear", "g(x) = -x", {"-x"}, {}, {}, {}, {}, Certificate{1, 1}, {{-2, 2}}},
        {"cubic", "g(x) = x - x^3", {"x - x^3"}, {}, {}, {}, {}, Certificate{1, 1}, {{-2, 2}}},
        {"logistic", "g(x) = x(1 - x)", {"x*(1 - x)"}, {}, {}, {}, {}, std::nullopt, {{-2, 2}}},
        {"saddle", "g(x) = gamma - x^2", {"gamma - x^2"}, {}, {}, {"gamma"}, {0.25}, std::nullopt, {{-2, 2}}},
        {"pitchfork", "g(x) = gamma x - x^3", {"gamma*x - x^3"}, {}, {}, {"gamma"}, {1.0}, Certificate{1, 1},
         {{-2, 2}}},
        {"fig2", "g = (x(1 - x^2), (1 + x^2) y(1 - y^2))", {}, {"x*(1 - x^2)", "y*(1 - y^2)"}, {"1 + x^2"}, {},
         {}, Certificate{4, 1}, {{-2, 2}, {-2, 2}}},
        {"sec3text", "g = (x(1 - x), (1 + x^2) y(1 - y^2))", {}, {"x*(1 - x)", "y*(1 - y^2)"}, {"1 + x^2"}, {},
         {}, Certificate{4, 1}, {{-2, 2}, {-2, 2}}},
    };
    return entries;
}

const CatalogEntry* find_entry(std::string_view name) {
    for (const auto& e : catalog())
        if (e.name == name) return &e;
    return nullptr;
}

}  // namespace fracdyn::cli
