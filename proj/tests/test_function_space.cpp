#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fracdyn/errors.hpp"
#include "fracdyn/function_space.hpp"
#include "fracdyn/mittag_leffler.hpp"
#include "oracles.hpp"

using namespace fracdyn;

namespace {

// (T_1 1)(1/2) for g = -x, alpha = 1/2:
// 1 - (1/Gamma(1/2)) int_0^1 (3/2 - s)^(-1/2) E_{1/2}(-s^(1/2)) ds, 30-digit quadrature.
constexpr double kShiftedLinear = 0.684118553268521368;
// |E_a(-2^a) - E_a(-1)^2| from 30-digit series sums.
constexpr double kDefectHalf = 0.153376287848152405;
constexpr double kDefectLow = 0.195202765369952786;
constexpr double kDefectHigh = 0.0738176243196517981;

SampledFunction constant(double v, double step, double horizon) {
    const double x[] = {v};
    return SampledFunction::constant(x, step, static_cast<std::size_t>(std::llround(horizon / step)));
}

}  // namespace

TEST_SUITE("function_space") {

TEST_CASE("frozen oracle values") {
    const long double e1 = oracle::ml_definition_series(0.5L, 1.0L, -1.0L);
    const long double e2 = oracle::ml_definition_series(0.5L, 1.0L, -std::sqrt(2.0L));
    CHECK(std::abs(static_cast<double>(e2 - e1 * e1) - kDefectHalf) < 1e-15);
}

TEST_CASE("rho") {
    const auto zero = constant(0.0, 0.1, 30), one = constant(1.0, 0.1, 30);
    CHECK(rho(zero, zero) == 0.0);
    CHECK(std::abs(rho(zero, one, {30}) - 0.5) <= std::ldexp(1.0, -30));
    CHECK(rho(zero, one, {20}) < 0.5);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise;
    for (int k = 0; k < 20; ++k) {
        auto rnd = [&](double step) {
            return SampledFunction::from_function(step, static_cast<std::size_t>(std::llround(20 / step)), 2,
                                                  [&](double, std::span<double> out) {
                                                      out[0] = noise(rng);
                                                      out[1] = noise(rng);
                                                  });
        };
        const auto f = rnd(0.05), h = rnd(0.05);
        CHECK(rho(f, h) == rho(h, f));
        CHECK(rho(f, h) <= 1.0);
    }
    // A coarser second argument is interpolated onto the first grid.
    const auto lin_fine = SampledFunction::from_function(0.01, 2000, 1, [](double t, std::span<double> o) { o[0] = t; });
    const auto lin_coarse = SampledFunction::from_function(0.1, 200, 1, [](double t, std::span<double> o) { o[0] = t; });
    CHECK(rho(lin_fine, lin_coarse) < 1e-12);

    CHECK_THROWS_AS(rho(constant(0.0, 0.1, 5), constant(1.0, 0.1, 5)), DomainError);
}

TEST_CASE("apply_T basic cases") {
    const auto lin = FieldDef::parse({"-x"});
    const auto f = SampledFunction::from_function(0.01, 3000, 1, [](double t, std::span<double> o) { o[0] = std::cos(t); });

    const auto same = apply_T(0.0, f, lin, {}, 0.5, 0.01, 20.0);
    CHECK(rho(same, f) <= 1e-12);
    for (std::size_t i = 0; i < same.size(); ++i) REQUIRE(same.at(i, 0) == f.at(i, 0));

    const auto zero = FieldDef::parse({"0"});
    const auto shifted = apply_T(1.5, f, zero, {}, 0.5, 0.01, 5.0);
    for (std::size_t i = 0; i < shifted.size(); ++i) REQUIRE(shifted.at(i, 0) == f.at(i + 150, 0));

    ApplyReport rep;
    apply_T(0.504, f, zero, {}, 0.5, 0.01, 5.0, &rep);
    CHECK(rep.tau == doctest::Approx(0.5));
    CHECK(rep.snap_error == doctest::Approx(0.004));
    CHECK(!rep.extended);
    apply_T(1.0, f, zero, {}, 0.5, 0.01, 40.0, &rep);
    CHECK(rep.extended);
}

TEST_CASE("apply_T against the linear solution") {
    const auto lin = FieldDef::parse({"-x"});
    const auto one = constant(1.0, 1e-3, 3.0);
    const auto out = apply_T(1.0, one, lin, {}, 0.5, 1e-3, 1.0);
    CHECK(std::abs(out.at(0, 0) - ml_decay(0.5, 1.0, 1.0)) <= 1e-3);
    CHECK(std::abs(out.at(500, 0) - kShiftedLinear) <= 1e-5);

    // Error against the oracle shrinks with the grid.
    double prev = 1.0;
    for (double dt : {0.01, 0.005, 0.0025}) {
        const auto o = apply_T(1.0, constant(1.0, dt, 3.0), lin, {}, 0.5, dt, 1.0);
        const double err = std::abs(o.at(static_cast<std::size_t>(std::llround(0.5 / dt)), 0) - kShiftedLinear);
        CHECK(err < prev / 2);
        prev = err;
    }
}

TEST_CASE("semigroup_defect") {
    const auto zero = FieldDef::parse({"0"});
    const auto f = SampledFunction::from_function(0.01, 3000, 1, [](double t, std::span<double> o) { o[0] = std::sin(t); });
    CHECK(semigroup_defect(0.5, 0.7, f, zero, {}, 0.5, 0.01) == 0.0);

    const auto cubic = FieldDef::parse({"x - x^3"});
    CHECK(semigroup_defect(0.5, 0.0, constant(0.5, 0.01, 25), cubic, {}, 0.6, 0.01) <= 1e-12);

    // On an aligned grid the product-trapezoid operator reproduces the
    // restarted corrector sums term by term, so the composition defect
    // stays at round-off for every step size.
    const auto lin = FieldDef::parse({"-x"});
    for (double dt : {0.02, 0.01, 0.005, 0.0025}) {
        INFO("dt = " << dt);
        CHECK(semigroup_defect(0.5, 0.5, constant(1.0, dt, 22), lin, {}, 0.5, dt) <= 1e-12);
        CHECK(semigroup_defect(0.5, 0.5, constant(0.5, dt, 22), cubic, {}, 0.5, dt) <= 1e-12);
    }
}

TEST_CASE("state_space_defect") {
    CHECK(state_space_defect(1.0, 1.0, 1.0, 1.0) <= 1e-12);
    CHECK(state_space_defect(1.0, 0.3, 2.5, 0.7) <= 1e-12);
    CHECK(std::abs(state_space_defect(0.5, 1, 1, 1) - kDefectHalf) < 1e-10);
    CHECK(std::abs(state_space_defect(0.3, 1, 1, 1) - kDefectLow) < 1e-10);
    CHECK(std::abs(state_space_defect(0.8, 1, 1, 1) - kDefectHigh) < 1e-10);
    for (double a : {0.3, 0.5, 0.8}) CHECK(state_space_defect(a, 1, 1, 1) > 0.01);
    double prev = 1.0;
    for (double t : {1e-2, 1e-4, 1e-6, 1e-8}) {
        const double d = state_space_defect(0.5, t, t, 1.0);
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev < 1e-3);
    CHECK_THROWS_AS(state_space_defect(0.5, 0.0, 1.0, 1.0), PreconditionError);
}

}
