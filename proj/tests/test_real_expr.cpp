#include <catch_amalgamated.hpp>

#include <random>

#include "diffcalc/real_expr.hpp"
#include "diffcalc/testing/oracles.hpp"

using namespace diffcalc;

namespace {

RealExpr x() { return RealExpr::var("x"); }
RealExpr y() { return RealExpr::var("y"); }

RealExpr random_poly(std::mt19937_64& rng, int degree = 3) {
  std::uniform_int_distribution<int> coeff(-3, 3);
  std::vector<RealExpr> terms{RealExpr::rat(coeff(rng))};
  for (int k = 1; k <= degree; ++k) {
    int c = coeff(rng);
    if (c == 0) continue;
    terms.push_back(RealExpr::prod({RealExpr::rat(c), RealExpr::pow(x(), k)}));
    if (coeff(rng) > 0)
      terms.push_back(RealExpr::prod({RealExpr::rat(1), y(),
                                      RealExpr::pow(x(), k)}));
  }
  return RealExpr::sum(std::move(terms));
}

}  // namespace

TEST_CASE("canonical forms identify the ring laws") {
  RealExpr a = RealExpr::var("a");
  RealExpr b = RealExpr::var("b");
  RealExpr c = RealExpr::var("c");

  CHECK(canonical(RealExpr::sum({a, b})) == canonical(RealExpr::sum({b, a})));
  CHECK(canonical(RealExpr::sum({RealExpr::sum({a, b}), c})) ==
        canonical(RealExpr::sum({a, RealExpr::sum({b, c})})));
  CHECK(canonical(RealExpr::prod({a, RealExpr::sum({b, c})})) ==
        canonical(RealExpr::sum(
            {RealExpr::prod({a, b}), RealExpr::prod({a, c})})));
  // cancellation
  CHECK(canonical(RealExpr::sum({RealExpr::sum({a, b}), RealExpr::neg(b)})) ==
        canonical(a));
  // multiplication commutes and associates
  CHECK(canonical(RealExpr::prod({a, b})) == canonical(RealExpr::prod({b, a})));
}

TEST_CASE("canonicalization is idempotent") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    RealExpr e = random_poly(rng);
    RealExpr c1 = canonical(e);
    CHECK(canonical(c1) == c1);
  }
  RealExpr trig = RealExpr::sum(
      {RealExpr::sin(RealExpr::sum({x(), y()})), RealExpr::exp(x())});
  CHECK(canonical(canonical(trig)) == canonical(trig));
}

TEST_CASE("special values at zero") {
  CHECK(canonical(RealExpr::sin(RealExpr::rat(0))) == RealExpr::rat(0));
  CHECK(canonical(RealExpr::cos(RealExpr::rat(0))) == RealExpr::rat(1));
  CHECK(canonical(RealExpr::exp(RealExpr::rat(0))) == RealExpr::rat(1));
  // nonzero rational arguments stay symbolic
  CHECK(canonical(RealExpr::sin(RealExpr::rat(1))).is(RealExpr::Kind::Sin));
}

TEST_CASE("symbolic differentiation") {
  CHECK(sym_diff(RealExpr::pow(x(), 2), "x") ==
        canonical(RealExpr::prod({RealExpr::rat(2), x()})));
  CHECK(sym_diff(RealExpr::sin(x()), "x") == canonical(RealExpr::cos(x())));
  CHECK(sym_diff(RealExpr::var("c"), "x") == RealExpr::rat(0));
  // chain rule through an affine argument
  RealExpr inner = RealExpr::sum({RealExpr::prod({RealExpr::rat(2), x()}), y()});
  CHECK(sym_diff(RealExpr::exp(inner), "x") ==
        canonical(RealExpr::prod({RealExpr::rat(2), RealExpr::exp(inner)})));
}

TEST_CASE("definite integration") {
  CHECK(sym_integrate(RealExpr::rat(1), "x", RealExpr::rat(0),
                      RealExpr::rat(2)) == RealExpr::rat(2));
  CHECK(sym_integrate(RealExpr::rat(2), "x", RealExpr::rat(0),
                      RealExpr::rat(3)) == RealExpr::rat(6));
  CHECK(sym_integrate(x(), "x", RealExpr::rat(0), RealExpr::rat(1)) ==
        RealExpr::rat(Rational(1, 2)));

  // symbolic bounds stay exact
  RealExpr r = sym_integrate(x(), "x", RealExpr::var("a"), RealExpr::var("b"));
  CHECK(r == canonical(RealExpr::sum(
                 {RealExpr::prod({RealExpr::rat(Rational(1, 2)),
                                  RealExpr::pow(RealExpr::var("b"), 2)}),
                  RealExpr::neg(RealExpr::prod(
                      {RealExpr::rat(Rational(1, 2)),
                       RealExpr::pow(RealExpr::var("a"), 2)}))})));
}

TEST_CASE("fundamental theorem at base type") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 40; ++i) {
    RealExpr e = random_poly(rng);
    RealExpr d = sym_diff(e, "x");
    RealExpr back = sym_integrate(d, "x", RealExpr::var("a"),
                                  RealExpr::var("b"));
    RealExpr expect = canonical(RealExpr::sum(
        {real_subst(e, "x", RealExpr::var("b")),
         RealExpr::neg(real_subst(e, "x", RealExpr::var("a")))}));
    CHECK(expr_eq(back, expect));
  }
  // with a trig leaf
  RealExpr e = RealExpr::sin(
      RealExpr::sum({RealExpr::prod({RealExpr::rat(3), x()}), RealExpr::rat(1)}));
  RealExpr back = sym_integrate(sym_diff(e, "x"), "x", RealExpr::rat(0), x());
  CHECK(expr_eq(back,
                canonical(RealExpr::sum(
                    {e, RealExpr::neg(real_subst(e, "x", RealExpr::rat(0)))}))));
}

TEST_CASE("integration outside the supported class is rejected") {
  CHECK_THROWS_AS(sym_integrate(RealExpr::prod({x(), RealExpr::sin(x())}), "x",
                                RealExpr::rat(0), RealExpr::rat(1)),
                  IntegrationUnsupportedError);
  CHECK_THROWS_AS(sym_integrate(RealExpr::sin(RealExpr::pow(x(), 2)), "x",
                                RealExpr::rat(0), RealExpr::rat(1)),
                  IntegrationUnsupportedError);
  CHECK_THROWS_AS(sym_integrate(RealExpr::prim("gauss", {x()}), "x",
                                RealExpr::rat(0), RealExpr::rat(1)),
                  IntegrationUnsupportedError);
}

TEST_CASE("numeric evaluation") {
  CHECK(eval(RealExpr::sin(x()), {{"x", 0.0}}) == 0.0);
  RealExpr two_x_plus_1 = RealExpr::sum(
      {RealExpr::prod({RealExpr::rat(2), x()}), RealExpr::rat(1)});
  CHECK(eval(two_x_plus_1, {{"x", 3.0}}) == 7.0);
  CHECK(eval(RealExpr::pow(x(), 2), {{"x", 1.5}}) == 2.25);
  CHECK_THROWS_AS(eval(x(), {}), UnboundVariableError);
  CHECK_THROWS_AS(eval(RealExpr::prim("mystery", {x()}), {{"x", 1.0}}),
                  UnsupportedPrimitiveError);
}

TEST_CASE("expression equality") {
  // canonical route and the 16-point sampling route agree
  RealExpr lhs = RealExpr::sum({x(), x()});
  RealExpr rhs = RealExpr::prod({RealExpr::rat(2), x()});
  CHECK(canonical(lhs) == canonical(rhs));
  std::mt19937_64 rng(kDefaultEqSeed);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int i = 0; i < 16; ++i) {
    double p = dist(rng);
    CHECK(eval(lhs, {{"x", p}}) == Catch::Approx(eval(rhs, {{"x", p}})));
  }
  CHECK(expr_eq(lhs, rhs));

  RealExpr a = RealExpr::var("a");
  RealExpr b = RealExpr::var("b");
  CHECK(expr_eq(RealExpr::sum({RealExpr::sum({a, b}), RealExpr::neg(b)}), a));
  CHECK_FALSE(expr_eq(x(), RealExpr::sum({x(), RealExpr::rat(1)})));

  // sampling fallback through opaque primitives
  RealExpr h1 = RealExpr::prim("h", {RealExpr::sum({x(), x()})});
  RealExpr h2 = RealExpr::prim("h", {RealExpr::prod({RealExpr::rat(2), x()})});
  CHECK(expr_eq(h1, h2));
  CHECK_FALSE(expr_eq(h1, RealExpr::prim("h", {x()})));
}

TEST_CASE("derivatives of registered primitives") {
  PrimitiveTable table = PrimitiveTable::defaults();
  RealExpr u = RealExpr::var("$1");
  // d sq(u) = 2u du, antiderivative u^3/3 is deliberately omitted
  table.register_primitive(
      {"sq", 1, RealExpr::prod({RealExpr::rat(2), u}), std::nullopt});
  RealExpr e = RealExpr::prim("sq", {RealExpr::prod({RealExpr::rat(3), x()})});
  CHECK(sym_diff(e, "x", table) ==
        canonical(RealExpr::prod(
            {RealExpr::rat(18), x()})));
  CHECK_THROWS_AS(sym_diff(RealExpr::prim("nosig", {x()}), "x", table),
                  UnsupportedPrimitiveError);
  CHECK_THROWS_AS(
      sym_integrate(e, "x", RealExpr::rat(0), RealExpr::rat(1), table),
      IntegrationUnsupportedError);
}

TEST_CASE("printing round-trips through the parsers") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 60; ++i) {
    RealExpr e = canonical(random_poly(rng));
    CHECK(canonical(real_from_string(real_to_string(e))) == e);
    CHECK(canonical(real_from_sexpr(real_to_sexpr(e))) == e);
  }
  RealExpr mixed = canonical(RealExpr::sum(
      {RealExpr::prod({RealExpr::rat(Rational(-1, 2)),
                       RealExpr::pow(RealExpr::var("dth"), 2)}),
       RealExpr::sin(RealExpr::sum({x(), RealExpr::rat(1)})),
       RealExpr::prim("k", {x(), y()})}));
  CHECK(canonical(real_from_string(real_to_string(mixed))) == mixed);
  CHECK(canonical(real_from_sexpr(real_to_sexpr(mixed))) == mixed);
}

TEST_CASE("finite differences validate sym_diff") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> point(-1.5, 1.5);
  for (int i = 0; i < 30; ++i) {
    RealExpr e = random_poly(rng, 2);
    RealExpr d = sym_diff(e, "x");
    double px = point(rng);
    double py = point(rng);
    double sym = eval(d, {{"x", px}, {"y", py}});
    double fd = testing::central_diff(
        [&](double u) { return eval(e, {{"x", u}, {"y", py}}); }, px);
    CHECK(std::abs(sym - fd) <= 1e-5 * std::max(1.0, std::abs(sym)));
  }
}
