#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fracdyn/errors.hpp"
#include "fracdyn/field_expr.hpp"
#include "fracdyn/scalar_analysis.hpp"

namespace fracdyn {

/// A coupling factor h_i that vanishes or changes sign on the scan box.
class VanishingFactorError : public Error {
public:
    VanishingFactorError(std::size_t component, std::vector<double> witness, double value);
    std::size_t component() const noexcept { return component_; }
    const std::vector<double>& witness() const noexcept { return witness_; }
    double value() const noexcept { return value_; }

private:
    std::size_t component_;
    std::vector<double> witness_;
    double value_;
};

/// Product-form field g_i(x) = h_i(x_1..x_{i-1}) * f_i(x_i), with h_1 = 1.
class TriangularField {
public:
    /// `h` and `f` have one entry per component, all over the full state
    /// space. Throws PreconditionError if h_i reads x_j with j >= i or f_i
    /// reads anything but x_i.
    TriangularField(std::vector<ExprAst> h, std::vector<ExprAst> f, std::vector<std::string> parameters);

    /// `f` has one expression per component; `h` has one per component from
    /// the second on (h_1 is fixed to 1).
    static TriangularField parse(const std::vector<std::string>& f, const std::vector<std::string>& h,
                                 const std::vector<std::string>& parameters = {});

    std::size_t dimension() const noexcept { return f_.size(); }
    const ExprAst& h(std::size_t i) const { return h_.at(i); }
    const ExprAst& f(std::size_t i) const { return f_.at(i); }
    const std::vector<std::string>& parameters() const noexcept { return parameters_; }

    /// The full field with components h_i * f_i.
    FieldDef assembled() const;

    /// f_i as a scalar field in x1, multiplied by `sign`.
    FieldDef factor(std::size_t i, double sign = 1.0) const;

private:
    std::vector<ExprAst> h_;
    std::vector<ExprAst> f_;
    std::vector<std::string> parameters_;
};

struct TriangularReport {
    bool passed = false;
    std::vector<double> min_abs_h;  // per component over the box
    std::vector<int> h_sign;        // +1 or -1 per component
    DissipativityCertificate dissipativity;
    std::vector<ZeroSet> zero_sets;  // per f_i, degenerate zeros rejected
};

/// Samples each h_i on a grid of at least n_samples points over the box and
/// throws VanishingFactorError unless min |h_i| > 1e-9 with constant sign.
/// Then runs check_h1 on the assembled field and find_zeros on each f_i.
/// Passes when the dissipativity check passes and every zero set is odd.
TriangularReport validate_triangular(const TriangularField& tf, std::span<const double> params,
                                     const std::vector<ScanInterval>& box, double a, double b,
                                     std::size_t n_samples = 1000);

struct ProductAttractor {
    std::vector<AttractorInterval> intervals;
    std::vector<ZeroSet> zero_sets;

    /// Whether the point lies in the box widened by `inflate` on every side.
    bool contains(std::span<const double> point, double inflate = 0.0) const;
};

/// Attractor interval of each f_i on its scan interval.
ProductAttractor product_attractor(const TriangularField& tf, std::span<const double> params,
                                   const std::vector<ScanInterval>& box, std::size_t resolution = 1000);

/// Limit of the solution from x0, coordinate by coordinate: classify_limit on
/// sign(h_i(x0)) * f_i.
std::vector<double> componentwise_limits(const TriangularField& tf, std::span<const double> params,
                                         const std::vector<ScanInterval>& box, std::span<const double> x0);

}  // namespace fracdyn
