#include "fracdyn/triangular_systems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fracdyn {

namespace {

constexpr double kMinFactor = 1e-9;

std::string format_point(const std::vector<double>& x) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ')';
    return os.str();
}

// Calls visit(x) on a tensor grid with at least n_samples points over the box.
// An odd count per axis puts the centre of each interval on the grid.
template <class Visit>
void sample_box(const std::vector<ScanInterval>& box, std::size_t n_samples, Visit visit) {
    const std::size_t d = box.size();
    std::size_t per_axis = d == 1 ? n_samples : 3;
    while (std::pow(static_cast<double>(per_axis), static_cast<double>(d)) < static_cast<double>(n_samples)) ++per_axis;
    if (per_axis % 2 == 0) ++per_axis;
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(d);
    for (;;) {
        for (std::size_t c = 0; c < d; ++c)
            x[c] = box[c].lo + (box[c].hi - box[c].lo) * static_cast<double>(idx[c]) / static_cast<double>(per_axis - 1);
        visit(x);
        std::size_t c = 0;
        while (c < d && ++idx[c] == per_axis) idx[c++] = 0;
        if (c == d) break;
    }
}

void check_box(const TriangularField& tf, const std::vector<ScanInterval>& box) {
    if (box.size() != tf.dimension()) throw PreconditionError("scan box must have one interval per coordinate");
    for (const auto& s : box)
        if (!(s.lo < s.hi) || !std::isfinite(s.lo) || !std::isfinite(s.hi))
            throw PreconditionError("scan box must be bounded with lo < hi");
}

}  // namespace

VanishingFactorError::VanishingFactorError(std::size_t component, std::vector<double> witness, double value)
    : Error("coupling factor h" + std::to_string(component + 1) + " = " + std::to_string(value) + " at " +
            format_point(witness) + " vanishes or changes sign"),
      component_(component),
      witness_(std::move(witness)),
      value_(value) {}

TriangularField::TriangularField(std::vector<ExprAst> h, std::vector<ExprAst> f, std::vector<std::string> parameters)
    : h_(std::move(h)), f_(std::move(f)), parameters_(std::move(parameters)) {
    const std::size_t d = f_.size();
    if (d == 0) throw PreconditionError("triangular field needs at least one component");
    if (h_.size() != d) throw PreconditionError("triangular field needs one coupling factor per component");
    for (std::size_t i = 0; i < d; ++i) {
        if (h_[i].dimension() != d || f_[i].dimension() != d)
            throw PreconditionError("factors must be expressions over the full state space");
        for (std::size_t v : h_[i].variables())
            if (v >= i)
                throw PreconditionError("h" + std::to_string(i + 1) + " may only read x1..x" + std::to_string(i));
        for (std::size_t v : f_[i].variables())
            if (v != i) throw PreconditionError("f" + std::to_string(i + 1) + " may only read x" + std::to_string(i + 1));
    }
}

TriangularField TriangularField::parse(const std::vector<std::string>& f, const std::vector<std::string>& h,
                                       const std::vector<std::string>& parameters) {
    const std::size_t d = f.size();
    if (d == 0) throw PreconditionError("triangular field needs at least one component");
    if (h.size() + 1 != d) throw PreconditionError("expected one coupling factor for each component after the first");
    std::vector<ExprAst> hs{ExprAst::constant(1.0, d, parameters)};
    std::vector<ExprAst> fs;
    for (const auto& s : h) hs.push_back(parse_expr(s, d, parameters));
    for (const auto& s : f) fs.push_back(parse_expr(s, d, parameters));
    return TriangularField(std::move(hs), std::move(fs), parameters);
}

FieldDef TriangularField::assembled() const {
    std::vector<ExprAst> g;
    for (std::size_t i = 0; i < dimension(); ++i) g.push_back(multiply(h_[i], f_[i]));
    return FieldDef(std::move(g), parameters_);
}

FieldDef TriangularField::factor(std::size_t i, double sign) const {
    // f_i reads only x_i, so every other coordinate may map anywhere.
    const std::vector<std::size_t> to_scalar(dimension(), 0);
    ExprAst fi = f_.at(i).remap_variables(to_scalar, 1);
    if (sign != 1.0) fi = multiply(ExprAst::constant(sign, 1, parameters_), fi);
    return FieldDef({fi}, parameters_);
}

TriangularReport validate_triangular(const TriangularField& tf, std::span<const double> params,
                                     const std::vector<ScanInterval>& box, double a, double b, std::size_t n_samples) {
    check_box(tf, box);
    const std::size_t d = tf.dimension();
    TriangularReport report;
    report.min_abs_h.assign(d, std::numeric_limits<double>::infinity());
    report.h_sign.assign(d, 0);
    for (std::size_t i = 0; i < d; ++i) {
        sample_box(box, n_samples, [&](const std::vector<double>& x) {
            const double v = tf.h(i).eval(x, params);
            const int s = v > 0.0 ? 1 : -1;
            if (!(std::abs(v) > kMinFactor) || (report.h_sign[i] != 0 && s != report.h_sign[i]))
                throw VanishingFactorError(i, x, v);
            report.h_sign[i] = s;
            report.min_abs_h[i] = std::min(report.min_abs_h[i], std::abs(v));
        });
    }
    report.dissipativity = check_h1(tf.assembled(), params, a, b, box, n_samples);
    report.passed = report.dissipativity.passed;
    for (std::size_t i = 0; i < d; ++i) {
        report.zero_sets.push_back(find_zeros(tf.factor(i), params, box[i], std::max<std::size_t>(n_samples, 1000)));
        if (report.zero_sets.back().even_count) report.passed = false;
    }
    return report;
}

bool ProductAttractor::contains(std::span<const double> point, double inflate) const {
    if (point.size() != intervals.size()) throw PreconditionError("point dimension does not match the attractor");
    for (std::size_t i = 0; i < point.size(); ++i)
        if (!(point[i] >= intervals[i].lo - inflate && point[i] <= intervals[i].hi + inflate)) return false;
    return true;
}

ProductAttractor product_attractor(const TriangularField& tf, std::span<const double> params,
                                   const std::vector<ScanInterval>& box, std::size_t resolution) {
    check_box(tf, box);
    ProductAttractor pa;
    for (std::size_t i = 0; i < tf.dimension(); ++i) {
        pa.zero_sets.push_back(find_zeros(tf.factor(i), params, box[i], resolution));
        pa.intervals.push_back(attractor_interval(pa.zero_sets.back()));
    }
    return pa;
}

std::vector<double> componentwise_limits(const TriangularField& tf, std::span<const double> params,
                                         const std::vector<ScanInterval>& box, std::span<const double> x0) {
    check_box(tf, box);
    if (x0.size() != tf.dimension()) throw PreconditionError("initial state dimension does not match the field");
    std::vector<double> limits;
    for (std::size_t i = 0; i < tf.dimension(); ++i) {
        const double hv = tf.h(i).eval(x0, params);
        if (!(std::abs(hv) > kMinFactor)) throw VanishingFactorError(i, {x0.begin(), x0.end()}, hv);
        const FieldDef fi = tf.factor(i, hv > 0.0 ? 1.0 : -1.0);
        const ZeroSet zs = find_zeros(fi, params, box[i]);
        limits.push_back(classify_limit(fi, params, zs, x0[i]));
    }
    return limits;
}

}  // namespace fracdyn
