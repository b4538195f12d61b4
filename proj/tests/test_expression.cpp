#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "harmonic/expression.hpp"

using namespace harmonic;
using Catch::Matchers::WithinRel;

namespace {
const std::vector<std::string> names{"xi1", "xi3", "t", "s"};

double ev(const std::string& text, std::vector<double> v = {2.0, -1.0, 0.5, 3.0}) {
    return Expression::parse(text, names).eval(v);
}
}  // namespace

TEST_CASE("precedence and associativity", "[expr]") {
    CHECK(ev("1 + 2 * 3") == 7.0);
    CHECK(ev("(1 + 2) * 3") == 9.0);
    CHECK(ev("2 ^ 3 ^ 2") == 512.0);
    CHECK(ev("-2 ^ 2") == -4.0);
    CHECK(ev("8 / 4 / 2") == 1.0);
    CHECK(ev("10 - 4 - 3") == 3.0);
    CHECK(ev("2 ^ -1") == 0.5);
    CHECK(ev("--3") == 3.0);
}

TEST_CASE("variables, functions and constants", "[expr]") {
    CHECK(ev("xi1 + t^2/(2*xi1)") == 2.0625);
    CHECK(ev("1/abs(xi3)") == 1.0);
    CHECK(ev("sqrt(xi1*xi1)") == 2.0);
    CHECK_THAT(ev("exp(log(s))"), WithinRel(3.0, 1e-15));
    CHECK_THAT(ev("cos(pi)"), WithinRel(-1.0, 1e-15));
    CHECK(ev("1.5e1 + .5") == 15.5);
    CHECK(ev("xi3^3") == -1.0);
}

TEST_CASE("factorial constants", "[expr]") {
    CHECK(ev("3!") == 6.0);
    CHECK(ev("0!") == 1.0);
    CHECK(ev("t^3/(3!*xi1^2)") == 0.125 / 24.0);
    CHECK_THROWS_AS(ev("t!"), ExpressionError);
    CHECK_THROWS_AS(ev("2.5!"), ExpressionError);
}

TEST_CASE("unicode operator spellings", "[expr]") {
    CHECK(ev("6 \xC3\xB7 3 \xC3\x97 2") == 4.0);
    CHECK(ev("5 \xE2\x88\x92 2") == 3.0);
}

TEST_CASE("malformed input is rejected with a position", "[expr]") {
    CHECK_THROWS_AS(ev("1 +"), ExpressionError);
    CHECK_THROWS_AS(ev("(1 + 2"), ExpressionError);
    CHECK_THROWS_AS(ev("foo(1)"), ExpressionError);
    CHECK_THROWS_AS(ev("y + 1"), ExpressionError);
    CHECK_THROWS_AS(ev("1 2"), ExpressionError);
    CHECK_THROWS_AS(ev(""), ExpressionError);
    try {
        ev("xi1 + $");
        FAIL("expected a parse error");
    } catch (const ExpressionError& e) {
        CHECK(e.position() == 6);
    }
}

TEST_CASE("structure queries", "[expr]") {
    const auto bare = Expression::parse("  t ", names);
    REQUIRE(bare.bare_variable().has_value());
    CHECK(*bare.bare_variable() == 2);
    const auto q = Expression::parse("xi3 + t^2/(2*xi1)", names);
    CHECK_FALSE(q.bare_variable().has_value());
    CHECK(q.uses(0));
    CHECK(q.uses(1));
    CHECK(q.uses(2));
    CHECK_FALSE(q.uses(3));
}
