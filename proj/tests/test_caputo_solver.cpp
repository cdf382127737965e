#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fracdyn/caputo_solver.hpp"
#include "fracdyn/errors.hpp"
#include "oracles.hpp"

using namespace fracdyn;

namespace {

// E_{1/2}(-1), see test_mittag_leffler.cpp.
constexpr double kHalfAtMinusOne = 0.427583576155807004;
// x = 1 + t - I^{1/2} x has the exact solution E_{1/2}(-t^{1/2}) + t E_{1/2,2}(-t^{1/2});
// value at t = 1 from a 40-digit evaluation of both series.
constexpr double kForcedLinearAtOne = 0.983546319407126583;

CaputoProblem problem(const char* g, double alpha, double x0, double t_end, double dt,
                      std::vector<std::string> names = {}, std::vector<double> values = {}) {
    return CaputoProblem{alpha, FieldDef::parse({g}, names), values, {x0}, t_end, dt};
}

}  // namespace

TEST_SUITE("caputo_solver") {

TEST_CASE("frozen oracle values") {
    CHECK(std::abs(static_cast<double>(oracle::ml_definition_series(0.5L, 1.0L, -1.0L)) - kHalfAtMinusOne) < 1e-16);
    const long double forced =
        oracle::ml_definition_series(0.5L, 1.0L, -1.0L) + oracle::ml_definition_series(0.5L, 2.0L, -1.0L);
    CHECK(std::abs(static_cast<double>(forced) - kForcedLinearAtOne) < 1e-16);
}

TEST_CASE("zero field keeps the initial value") {
    const auto tr = solve_pece(problem("0", 0.4, 3.0, 2.0, 0.01));
    REQUIRE(tr.size() == 201);
    for (std::size_t n = 0; n < tr.size(); ++n) REQUIRE(tr.at(n) == 3.0);
    CHECK(!tr.escape);
}

TEST_CASE("constant field gives t^alpha / Gamma(alpha+1)") {
    const auto tr = solve_pece(problem("1", 0.5, 0.0, 1.0, 1e-3));
    CHECK(tr.at(0) == 0.0);
    CHECK(std::abs(tr.final_state()[0] - 1.1283791670955126) < 1e-4);
    // Product integration is exact for a constant integrand.
    for (std::size_t n : {1u, 10u, 500u, 1000u}) {
        const double t = tr.times[n];
        CHECK(std::abs(tr.at(n) - std::pow(t, 0.5) / std::tgamma(1.5)) < 1e-12);
    }
}

TEST_CASE("linear field tracks E_alpha(-t^alpha)") {
    const auto tr = solve_pece(problem("-x", 0.5, 1.0, 1.0, 1e-3));
    CHECK(std::abs(tr.final_state()[0] - kHalfAtMinusOne) < 1e-3);
    CHECK(tr.meta.max_corrector_residual <= 1e-12);
    CHECK(tr.meta.max_corrector_iterations <= 10);
}

TEST_CASE("grid layout") {
    const auto tr = solve_pece(problem("-x", 0.5, 1.0, 1.0, 0.3));
    REQUIRE(tr.size() == 5);
    CHECK(tr.times.back() == 1.0);
    CHECK(tr.dt == doctest::Approx(0.25));
    CHECK(grid_steps(1e4, 0.05) == 200000);
    CHECK(grid_steps(1.0, 1e-3) == 1000);
}

TEST_CASE("problem validation") {
    CHECK_THROWS_AS(solve_pece(problem("-x", 1.5, 1.0, 1.0, 0.1)), PreconditionError);
    CHECK_THROWS_AS(solve_pece(problem("-x", 0.0, 1.0, 1.0, 0.1)), PreconditionError);
    CHECK_THROWS_AS(solve_pece(problem("-x", 0.5, 1.0, 1.0, 1.0)), PreconditionError);
    CHECK_THROWS_AS(solve_pece(problem("-x", 0.5, 1.0, 1e8, 1.0)), PreconditionError);
    CHECK_THROWS_AS(solve_pece(problem("-x", 0.5, NAN, 1.0, 0.1)), PreconditionError);
    CaputoProblem p = problem("-x", 0.5, 1.0, 1.0, 0.1);
    p.x0 = {1.0, 2.0};
    CHECK_THROWS_AS(solve_pece(p), PreconditionError);
}

TEST_CASE("escape marker on blow-up") {
    const auto tr = solve_pece(problem("gamma - x^2", 0.6, 0.0, 50.0, 0.01, {"gamma"}, {-0.5}));
    REQUIRE(tr.escape);
    CHECK(tr.escape->sign == -1);
    CHECK(tr.escape->index == tr.size() - 1);
    CHECK(std::abs(tr.final_state()[0]) > kEscapeThreshold);
    for (std::size_t n = 0; n + 1 < tr.size(); ++n) REQUIRE(std::abs(tr.at(n)) <= kEscapeThreshold);
}

TEST_CASE("non-finite field values are reported") {
    CHECK_THROWS_AS(solve_pece(problem("1/x", 0.5, 0.0, 1.0, 0.1)), NonFiniteError);
}

TEST_CASE("svie with constant forcing reproduces the initial value problem") {
    const auto p = problem("x - x^3", 0.6, 0.3, 5.0, 0.01);
    const auto a = solve_pece(p);
    const double x0[] = {0.3};
    const auto forcing = SampledFunction::constant(x0, 0.01, 500);
    const auto b = solve_svie(forcing, p.field, p.params, p.alpha, p.t_end, p.dt);
    REQUIRE(a.size() == b.size());
    for (std::size_t n = 0; n < a.size(); ++n) REQUIRE(std::abs(a.at(n) - b.at(n)) <= 1e-14);
}

TEST_CASE("svie with zero field returns the forcing") {
    const auto field = FieldDef::parse({"0"});
    const auto f = SampledFunction::from_function(0.01, 200, 1, [](double t, std::span<double> out) {
        out[0] = std::sin(3.0 * t) + t * t;
    });
    const auto tr = solve_svie(f, field, {}, 0.5, 2.0, 0.01);
    for (std::size_t n = 0; n < tr.size(); ++n) REQUIRE(tr.at(n) == f.at(n, 0));
}

TEST_CASE("svie forcing is resampled onto the solver grid") {
    const auto field = FieldDef::parse({"0"});
    const auto f = SampledFunction::from_function(0.1, 20, 1, [](double t, std::span<double> out) { out[0] = 2 * t; });
    const auto tr = solve_svie(f, field, {}, 0.5, 2.0, 0.025);
    CHECK(tr.size() == 81);
    for (std::size_t n = 0; n < tr.size(); ++n) REQUIRE(std::abs(tr.at(n) - 2 * tr.times[n]) < 1e-14);
    CHECK_THROWS_AS(solve_svie(f, field, {}, 0.5, 3.0, 0.025), PreconditionError);
}

TEST_CASE("forced linear equation against the exact solution and a Richardson reference") {
    const auto field = FieldDef::parse({"-x"});
    auto endpoint = [&](double dt) {
        const auto n = static_cast<std::size_t>(std::llround(1.0 / dt));
        const auto f = SampledFunction::from_function(dt, n, 1, [](double t, std::span<double> out) { out[0] = 1 + t; });
        return solve_svie(f, field, {}, 0.5, 1.0, dt).final_state()[0];
    };
    const double dt = 0.01;
    const double coarse = endpoint(dt);
    const double r4 = endpoint(dt / 4), r8 = endpoint(dt / 8);
    const double richardson = r8 + (r8 - r4) / (std::pow(2.0, 1.5) - 1.0);
    CHECK(std::abs(coarse - richardson) <= 2 * std::pow(dt, 1.2));
    CHECK(std::abs(coarse - kForcedLinearAtOne) <= 2 * std::pow(dt, 1.2));
    CHECK(std::abs(richardson - kForcedLinearAtOne) < std::abs(coarse - kForcedLinearAtOne));
}

TEST_CASE("convergence_order") {
    const auto zero = convergence_order(problem("0", 0.5, 1.0, 1.0, 0.02), 4);
    CHECK(zero.exact);

    const auto half = convergence_order(problem("-x", 0.5, 1.0, 1.0, 0.02), 4);
    CHECK(!half.exact);
    CHECK(half.slope >= 1.2);

    const auto low = convergence_order(problem("-x", 0.3, 1.0, 1.0, 0.02), 4);
    CHECK(low.slope >= 1.05);

    CHECK_THROWS_AS(convergence_order(problem("-x", 0.5, 1.0, 1.0, 0.02), 2), PreconditionError);
}

TEST_CASE("order preservation for scalar fields") {
    // Seeds below -sqrt(gamma) blow up in finite time; the fixed-step scheme
    // cannot resolve the singularity, so the saddle family draws from its
    // bounded basin.
    struct Field { const char* expr; std::vector<std::string> names; std::vector<double> values; double lo; };
    const std::vector<Field> fields{
        {"-x", {}, {}, -1.5},
        {"x - x^3", {}, {}, -1.5},
        {"gamma - x^2", {"gamma"}, {0.25}, -0.49},
        {"gamma*x - x^3", {"gamma"}, {1.0}, -1.5},
    };
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> which(0, fields.size() - 1);
    std::uniform_real_distribution<double> alpha(0.4, 0.9), unit(0.0, 1.0), gap(1e-3, 0.5);
    for (int draw = 0; draw < 40; ++draw) {
        const auto& f = fields[which(rng)];
        const double a = alpha(rng), e1 = f.lo + (1.5 - f.lo) * unit(rng), e2 = e1 + gap(rng);
        const auto lo = solve_pece(problem(f.expr, a, e1, 5.0, 2e-3, f.names, f.values));
        const auto hi = solve_pece(problem(f.expr, a, e2, 5.0, 2e-3, f.names, f.values));
        const std::size_t n = std::min(lo.size(), hi.size());
        INFO(f.expr << " alpha=" << a << " eta=" << e1 << "," << e2);
        for (std::size_t i = 0; i < n; ++i) REQUIRE(lo.at(i) < hi.at(i));
    }
}

TEST_CASE("absorbing bound for dissipative fields") {
    // Certificates (a, b) = (1, 1) give the absorbing ball x^2 <= 1 + a/b + 0.1.
    struct Field { const char* expr; std::vector<std::string> names; std::vector<double> values; };
    for (const auto& f : std::vector<Field>{{"-x", {}, {}}, {"x - x^3", {}, {}}, {"gamma*x - x^3", {"gamma"}, {1.0}}}) {
        for (double eta : {-3.0, -0.7, 0.2, 3.0}) {
            const auto tr = solve_pece(problem(f.expr, 0.6, eta, 50.0, 0.01, f.names, f.values));
            for (std::size_t n = tr.size() / 2; n < tr.size(); ++n) REQUIRE(tr.at(n) * tr.at(n) <= 2.1);
        }
    }
}

TEST_CASE("grid refinement is Cauchy") {
    const auto base = problem("x - x^3", 0.6, 0.5, 2.0, 0.02);
    std::vector<double> ends;
    for (int k = 0; k < 4; ++k) {
        auto p = base;
        p.dt = base.dt / std::ldexp(1.0, k);
        ends.push_back(solve_pece(p).final_state()[0]);
    }
    for (int k = 0; k + 2 < 4; ++k) {
        const double d1 = std::abs(ends[k] - ends[k + 1]);
        const double d2 = std::abs(ends[k + 1] - ends[k + 2]);
        CHECK(d1 / d2 >= 2.0);
    }
}

TEST_CASE("stiff start is resolved by the corrector") {
    const auto tr = solve_pece(problem("x - x^3", 0.3, 2.0, 20.0, 0.05));
    CHECK(tr.meta.max_corrector_residual <= 1e-12);
    CHECK(std::abs(tr.final_state()[0] - 1.0) < 0.2);
}

}
