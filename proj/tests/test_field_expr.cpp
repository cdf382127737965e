#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "fracdyn/errors.hpp"
#include "fracdyn/field_expr.hpp"

using namespace fracdyn;

namespace {

double eval1(const std::string& src, double x, std::vector<std::string> names = {}, std::vector<double> values = {}) {
    const auto ast = parse_expr(src, 1, names);
    const double s[] = {x};
    return ast.eval(s, values);
}

}  // namespace

TEST_SUITE("field_expr") {

TEST_CASE("parse_expr examples") {
    CHECK(eval1("x - x^3", 2.0) == -6.0);
    CHECK(eval1("gamma - x^2", 3.0, {"gamma"}, {1.0}) == -8.0);

    const auto ast = parse_expr("y*(1-y^2)*(1+x^2)", 2);
    const double s[] = {1.0, 2.0};
    CHECK(ast.eval(s, {}) == -12.0);

    try {
        parse_expr("x +* 2", 1);
        FAIL("expected a syntax error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 3);
    }
}

TEST_CASE("precedence and associativity") {
    CHECK(eval1("-x^2", 3.0) == -9.0);
    CHECK(eval1("2^3^2", 0.0) == 512.0);
    CHECK(eval1("2^-1", 0.0) == 0.5);
    CHECK(eval1("1 - 2 - 3", 0.0) == -4.0);
    CHECK(eval1("8 / 4 / 2", 0.0) == 1.0);
    CHECK(eval1("1 + 2 * 3", 0.0) == 7.0);
    CHECK(eval1("-2 * 3", 0.0) == -6.0);
    CHECK(eval1("--x", 4.0) == 4.0);
    CHECK(eval1("(1 + 2) * 3", 0.0) == 9.0);
    CHECK(eval1("1.5e2 + .5", 0.0) == 150.5);
}

TEST_CASE("functions") {
    // volatile keeps the reference on the runtime libm path
    volatile double a = 1.0, b = 0.3, c = 0.7;
    CHECK(eval1("exp(x)", a) == std::exp(a));
    CHECK(eval1("sin(x) + cos(x)", b) == std::sin(b) + std::cos(b));
    CHECK(eval1("tanh(x)", c) == std::tanh(c));
    CHECK(eval1("abs(x)", -2.5) == 2.5);
    CHECK_THROWS_AS(parse_expr("exp()", 1), ArityError);
    CHECK_THROWS_AS(parse_expr("exp(x, x)", 1), ArityError);
    CHECK_THROWS_AS(parse_expr("exp + 1", 1), ArityError);
}

TEST_CASE("identifier resolution") {
    CHECK(parse_expr("x1 + x2 + x3 + x4", 4).variables() == std::set<std::size_t>{0, 1, 2, 3});
    CHECK(parse_expr("x + y + z", 3).variables() == std::set<std::size_t>{0, 1, 2});
    CHECK_THROWS_AS(parse_expr("y", 1), UnknownIdentifierError);
    CHECK_THROWS_AS(parse_expr("x", 4), UnknownIdentifierError);
    CHECK_THROWS_AS(parse_expr("x0", 2), UnknownIdentifierError);
    CHECK_THROWS_AS(parse_expr("x01", 2), UnknownIdentifierError);
    try {
        parse_expr("x1 + x4", 3);
        FAIL("expected an unknown identifier");
    } catch (const UnknownIdentifierError& e) {
        CHECK(e.name() == "x4");
        CHECK(e.offset() == 5);
    }
    try {
        parse_expr("2 * foo(x)", 1);
        FAIL("expected an unknown identifier");
    } catch (const UnknownIdentifierError& e) {
        CHECK(e.name() == "foo");
    }
    CHECK_THROWS_AS(parse_expr("x", 1, {"x"}), PreconditionError);
    CHECK_THROWS_AS(parse_expr("x", 1, {"exp"}), PreconditionError);
}

TEST_CASE("syntax errors carry offsets") {
    struct Case { const char* src; std::size_t offset; };
    for (const auto& c : std::vector<Case>{{"2x", 1}, {"(x", 2}, {"x)", 1}, {"", 0}, {"x + ", 4}, {"3 $ 4", 2}}) {
        INFO(c.src);
        try {
            parse_expr(c.src, 1);
            FAIL("expected a syntax error");
        } catch (const ParseError& e) {
            CHECK(e.offset() == c.offset);
        }
    }
    CHECK_THROWS_AS(parse_expr("1e999", 1), ParseError);
}

TEST_CASE("pretty-print round trip") {
    const std::vector<std::string> params{"gamma", "k"};
    for (const char* src : {"x - x^3", "gamma*x - x^3", "-x^2 + 0.1*exp(-abs(y))", "2^3^2", "-(-x)", "k/(1+y^2)",
                            "1e-7 * x", "tanh(sin(cos(x*y)))", "-2 * -3"}) {
        const auto a = parse_expr(src, 2, params);
        const auto b = parse_expr(a.to_string(), 2, params);
        INFO(src << " -> " << a.to_string());
        CHECK(a == b);
        CHECK(b.to_string() == a.to_string());
    }
    CHECK(parse_expr("x - x^3", 1).to_string() == "(x1 - (x1 ^ 3))");
    CHECK(!(parse_expr("x - x^3", 1) == parse_expr("x - x^2", 1)));
}

TEST_CASE("eval_field examples") {
    const auto cubic = FieldDef::parse({"x - x^3"});
    CHECK(eval_field(cubic, std::vector<double>{1.0}, {}) == std::vector<double>{0.0});

    const auto pitchfork = FieldDef::parse({"gamma*x - x^3"}, {"gamma"});
    CHECK(eval_field(pitchfork, std::vector<double>{2.0}, std::vector<double>{4.0}) == std::vector<double>{0.0});

    const auto recip = FieldDef::parse({"1/x"});
    try {
        eval_field(recip, std::vector<double>{0.0}, {});
        FAIL("expected a non-finite error");
    } catch (const NonFiniteError& e) {
        CHECK(e.component() == 0);
    }

    const auto planar = FieldDef::parse({"-x", "1/(x - 1)"});
    try {
        eval_field(planar, std::vector<double>{1.0, 0.0}, {});
        FAIL("expected a non-finite error");
    } catch (const NonFiniteError& e) {
        CHECK(e.component() == 1);
    }

    CHECK_THROWS_AS(eval_field(cubic, std::vector<double>{1.0, 2.0}, {}), PreconditionError);
    CHECK_THROWS_AS(eval_field(pitchfork, std::vector<double>{1.0}, {}), PreconditionError);
}

TEST_CASE("numeric_derivative examples") {
    const auto cubic = FieldDef::parse({"x - x^3"});
    CHECK(std::abs(numeric_derivative(cubic, 0, std::vector<double>{0.0}, 0, {}) - 1.0) < 1e-8);
    CHECK(std::abs(numeric_derivative(cubic, 0, std::vector<double>{1.0}, 0, {}) + 2.0) < 1e-8);
    const auto lin = FieldDef::parse({"-x"});
    CHECK(std::abs(numeric_derivative(lin, 0, std::vector<double>{5.0}, 0, {}) + 1.0) < 1e-10);

    const auto planar = FieldDef::parse({"x*y", "y^2"});
    const std::vector<double> s{3.0, 2.0};
    CHECK(std::abs(numeric_derivative(planar, 0, s, 1, {}) - 3.0) < 1e-8);
    CHECK(std::abs(numeric_derivative(planar, 1, s, 0, {})) < 1e-12);
}

TEST_CASE("remap and multiply") {
    const auto f = parse_expr("x - x^3", 1);
    const auto g = f.remap_variables({1}, 2);
    CHECK(g.variables() == std::set<std::size_t>{1});
    const auto h = parse_expr("1 + x^2", 2);
    const auto prod = multiply(h, g);
    const double s[] = {1.0, 2.0};
    CHECK(prod.eval(s, {}) == (1.0 + 1.0) * (2.0 - 8.0));
    CHECK_THROWS_AS(multiply(f, h), PreconditionError);
}

TEST_CASE("parser totality on fuzzed input") {
    // Every string either parses (and then round-trips) or raises a
    // positioned ParseError inside the input.
    std::mt19937_64 rng(20240611);
    const std::string alphabet = "xyz123.e+-*/^() abcsintahpo,_$";
    std::uniform_int_distribution<std::size_t> len(0, 24);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    int parsed = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string s(len(rng), ' ');
        for (char& c : s) c = alphabet[pick(rng)];
        try {
            const auto ast = parse_expr(s, 3, {"a"});
            REQUIRE(parse_expr(ast.to_string(), 3, {"a"}) == ast);
            ++parsed;
        } catch (const ParseError& e) {
            REQUIRE(e.offset() <= s.size());
        }
    }
    CHECK(parsed > 0);
}

}
