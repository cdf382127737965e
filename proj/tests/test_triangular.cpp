#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fracdyn/caputo_solver.hpp"
#include "fracdyn/triangular_systems.hpp"

using namespace fracdyn;

namespace {

const std::vector<double> kNoParams;
const std::vector<ScanInterval> kBox2{{-2, 2}, {-2, 2}};

TriangularField fig2() { return TriangularField::parse({"x*(1 - x^2)", "y*(1 - y^2)"}, {"1 + x^2"}); }
TriangularField sec3text() { return TriangularField::parse({"x*(1 - x)", "y*(1 - y^2)"}, {"1 + x^2"}); }

}  // namespace

TEST_SUITE("triangular_systems") {

TEST_CASE("structure is enforced") {
    CHECK_THROWS_AS(TriangularField::parse({"x", "y"}, {"y"}), PreconditionError);
    CHECK_THROWS_AS(TriangularField::parse({"x*y", "y"}, {"1"}), PreconditionError);
    CHECK_THROWS_AS(TriangularField::parse({"x", "y"}, {}), PreconditionError);
    const auto tf = fig2();
    const auto g = tf.assembled();
    const double s[] = {0.5, -0.3};
    const auto v = eval_field(g, s, kNoParams);
    CHECK(v[0] == 0.5 * (1 - 0.5 * 0.5));
    CHECK(std::abs(v[1] - (1 + 0.25) * (-0.3) * (1 - 0.09)) < 1e-15);
    CHECK(tf.factor(1).eval_scalar(0.5, kNoParams) == 0.5 * (1 - 0.5 * 0.5));
    CHECK(tf.factor(1, -1.0).eval_scalar(0.5, kNoParams) == -0.5 * (1 - 0.5 * 0.5));
}

TEST_CASE("validate_triangular") {
    const auto rep = validate_triangular(fig2(), kNoParams, kBox2, 4, 1);
    CHECK(rep.passed);
    CHECK(rep.min_abs_h[1] == 1.0);
    CHECK(rep.h_sign[1] == 1);
    CHECK(rep.dissipativity.passed);
    REQUIRE(rep.zero_sets.size() == 2);
    CHECK(rep.zero_sets[1].size() == 3);

    try {
        validate_triangular(TriangularField::parse({"-x", "-y"}, {"x"}), kNoParams, kBox2, 4, 1);
        FAIL("expected VanishingFactorError");
    } catch (const VanishingFactorError& e) {
        CHECK(e.component() == 1);
        CHECK(std::abs(e.witness()[0]) <= 1e-9);
    }

    const auto one = validate_triangular(TriangularField::parse({"-x"}, {}), kNoParams, {{-10, 10}}, 1, 1);
    CHECK(one.passed);

    // x(1-x) has the even zero set {0, 1} and is not dissipative for x < 0.
    const auto text = validate_triangular(sec3text(), kNoParams, kBox2, 4, 1);
    CHECK(!text.passed);
    CHECK(text.zero_sets[0].even_count);
}

TEST_CASE("product_attractor") {
    const auto a = product_attractor(fig2(), kNoParams, kBox2);
    REQUIRE(a.intervals.size() == 2);
    for (const auto& iv : a.intervals) {
        CHECK(std::abs(iv.lo + 1) <= 1e-9);
        CHECK(std::abs(iv.hi - 1) <= 1e-9);
    }
    const auto b = product_attractor(sec3text(), kNoParams, kBox2);
    CHECK(std::abs(b.intervals[0].lo) <= 1e-9);
    CHECK(std::abs(b.intervals[0].hi - 1) <= 1e-9);
    CHECK(std::abs(b.intervals[1].lo + 1) <= 1e-9);
    CHECK(std::abs(b.intervals[1].hi - 1) <= 1e-9);

    const auto c = product_attractor(TriangularField::parse({"-x"}, {}), kNoParams, {{-10, 10}});
    CHECK(std::abs(c.intervals[0].lo) <= 1e-12);
    CHECK(std::abs(c.intervals[0].hi) <= 1e-12);

    const double in[] = {0.99, -1.04}, out[] = {0.0, 1.2};
    CHECK(!a.contains(in));
    CHECK(a.contains(in, 0.05));
    CHECK(!a.contains(out, 0.05));
}

TEST_CASE("componentwise_limits") {
    const auto tf = fig2();
    const double a[] = {0.5, 0.5}, b[] = {0.0, -0.5}, c[] = {1.0, -1.0};
    CHECK(componentwise_limits(tf, kNoParams, kBox2, a) == std::vector<double>{1.0, 1.0});
    const auto lb = componentwise_limits(tf, kNoParams, kBox2, b);
    CHECK(std::abs(lb[0]) <= 1e-12);
    CHECK(std::abs(lb[1] + 1) <= 1e-9);
    const auto lc = componentwise_limits(tf, kNoParams, kBox2, c);
    CHECK(std::abs(lc[0] - 1) <= 1e-9);
    CHECK(std::abs(lc[1] + 1) <= 1e-9);

    // A negative coupling factor swaps stability in the second coordinate.
    const auto neg = TriangularField::parse({"x*(1 - x^2)", "y*(1 - y^2)"}, {"-(1 + x^2)"});
    const auto ln = componentwise_limits(neg, kNoParams, kBox2, a);
    CHECK(std::abs(ln[1]) <= 1e-12);
    const auto tr = solve_pece(CaputoProblem{0.7, neg.assembled(), {}, {0.5, 0.5}, 200.0, 0.05});
    CHECK(std::abs(tr.final_state()[1]) < 0.05);
}

TEST_CASE("solver agrees with the predicted limits and stays in the attractor") {
    const auto tf = fig2();
    const auto g = tf.assembled();
    const auto box = product_attractor(tf, kNoParams, kBox2);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> seed(-2.0, 2.0);
    int checked = 0;
    while (checked < 25) {
        const std::vector<double> x0{seed(rng), seed(rng)};
        if (std::abs(x0[0]) < 1e-3 || std::abs(x0[1]) < 1e-3) continue;
        const auto want = componentwise_limits(tf, kNoParams, kBox2, x0);
        const auto tr = solve_pece(CaputoProblem{0.6, g, {}, x0, 1e3, 0.1});
        REQUIRE(!tr.escape);
        const auto end = tr.final_state();
        INFO("x0 = " << x0[0] << ", " << x0[1]);
        CHECK(std::abs(end[0] - want[0]) < 0.05);
        CHECK(std::abs(end[1] - want[1]) < 0.05);
        CHECK(box.contains(end, 0.05));
        ++checked;
    }
}

TEST_CASE("per-coordinate decay rate is t^-alpha") {
    const auto g = fig2().assembled();
    const double alpha = 0.6;
    const auto tr = solve_pece(CaputoProblem{alpha, g, {}, {0.5, -1.5}, 1e4, 0.25});
    const double limits[] = {1.0, -1.0};
    for (std::size_t c = 0; c < 2; ++c) {
        Trajectory one;
        one.alpha = alpha;
        one.dt = tr.dt;
        one.dimension = 1;
        one.times = tr.times;
        one.states = tr.component(c);
        const double slope = rate_fit(one, limits[c]);
        INFO("component " << c << " slope " << slope);
        CHECK(std::abs(slope + alpha) <= 0.1);
    }
}

}
