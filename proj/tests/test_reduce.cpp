#include <catch_amalgamated.hpp>

#include "diffcalc/builtins.hpp"
#include "diffcalc/embed.hpp"
#include "diffcalc/equality.hpp"
#include "diffcalc/parser.hpp"
#include "diffcalc/printer.hpp"
#include "diffcalc/reduce.hpp"
#include "diffcalc/testing/generators.hpp"

using namespace diffcalc;

namespace {

TypingContext ctx_of(const Term& t) {
  TypingContext ctx;
  for (const auto& v : free_vars(t)) ctx = ctx.extend(v, Type::real());
  return ctx;
}

Term parse(const std::string& s) { return parse_term(s, ParseOptions{true}); }

}  // namespace

TEST_CASE("normal form recognition") {
  CHECK(is_normal_form({}, Term::rat(3)));
  CHECK_FALSE(is_normal_form({}, parse("(\\x:R.x) 3")));
  CHECK(is_normal_form({}, parse("sin 3")));  // primitive application

  // lambda bodies only need to be irreducible, not in the nb grammar
  Term f = parse("\\x:(R,R). pi1 x");
  CHECK(is_normal_form({}, f));

  TypingContext ctx;
  ctx = ctx.extend("h", Type::arrow(Type::real(), Type::real()));
  CHECK(is_normal_form(ctx, parse("h 3")));
  CHECK(is_normal_form(ctx, parse("h (-) \\x:R.x")));
  CHECK_FALSE(is_normal_form(ctx, parse("(\\x:R.x) (-) (\\x:R.x)")));
}

TEST_CASE("single steps fire the expected rules") {
  auto beta = step({}, parse("(\\x:R.x) 3"));
  REQUIRE(beta.has_value());
  CHECK(beta->rule == RuleName::Beta);
  CHECK(beta->term == Term::rat(3));

  // D{\y:R. x*y ; x @ 2} pushes the point under the lambda
  Term der = Term::der(
      Term::lam("y", Type::real(), Term::mul(Term::var("x"), Term::var("y"))),
      "x", Term::rat(2));
  auto s = step({}, der);
  REQUIRE(s.has_value());
  CHECK(s->rule == RuleName::EAppDer3);
  CHECK(alpha_eq(s->term,
                 Term::lam("y", Type::real(),
                           Term::der(Term::mul(Term::var("x"), Term::var("y")),
                                     "x", Term::rat(2)))));

  auto mul = step({}, parse("((1,4),(2,5),(3,6)) * (7,8,9)"));
  REQUIRE(mul.has_value());
  CHECK(mul->rule == RuleName::EAppMul4);
  CHECK(mul->term == parse("(1,4)*7 (+) (2,5)*8 (+) (3,6)*9"));

  auto projection = step({}, parse("pi2 (1,2,3)"));
  REQUIRE(projection.has_value());
  CHECK(projection->rule == RuleName::Proj);
  CHECK(projection->term == Term::rat(2));

  auto case_l = step({}, parse("case inl 4 as R+R of inl a => a | inr b => 0"));
  REQUIRE(case_l.has_value());
  CHECK(case_l->rule == RuleName::CaseInl);
  CHECK(case_l->term == Term::rat(4));
}

TEST_CASE("matrix multiplication normalizes to (50,122)") {
  Term t = parse("((1,4),(2,5),(3,6)) * (7,8,9)");
  auto r = normalize(t);
  REQUIRE(r.normalized());
  CHECK(interpret_normal_form({}, r.term) == parse("(50, 122)"));
}

TEST_CASE("fundamental-identity example normalizes to (5,6,3)") {
  Term t = parse("Int{ D{ f y ; y @ x } dx ; (0,0) .. (2,3) }");
  auto r = normalize(t);
  REQUIRE(r.normalized());
  CHECK(nf_eq({}, r.term, parse("(5,6,3)")));
}

TEST_CASE("pair-point derivative matches the worked jacobian") {
  // f maps (x,y) to (x*x, x*y + y); derivative at (x,y): ((2x, y), (0, x+1))
  Term f = parse("\\z:(R,R). (pi1 z * pi1 z, pi1 z * pi2 z (+) pi2 z)");
  Term t = Term::der(Term::app(f, Term::var("z")), "z",
                     parse("(x, y)"));
  TypingContext ctx = ctx_of(t);
  auto r = normalize(ctx, t);
  REQUIRE(r.normalized());
  CHECK(term_eq(ctx, r.term, parse("((2*x, y), (0, x (+) 1))")).equal);
}

TEST_CASE("fix without a terminating body exhausts fuel") {
  Term t = parse("fix (\\f:R->R. f)");
  auto r = normalize(t, Fuel{100});
  CHECK(r.status == NormalizeResult::Status::FuelExhausted);
  CHECK(r.steps_used == 100);
}

TEST_CASE("fix that drops its argument unfolds once") {
  Term t = Term::fix(Term::lam("r", Type::real(), Term::rat(7)));
  auto r = normalize(t, Fuel{10});
  REQUIRE(r.normalized());
  CHECK(r.term == Term::rat(7));
}

TEST_CASE("traces replay and preserve types") {
  Term t = parse("Int{ D{ f y ; y @ x } dx ; (0,0) .. (2,3) }");
  ReductionTrace trace;
  auto r = normalize({}, t, Fuel{100000}, &trace);
  REQUIRE(r.normalized());
  REQUIRE_FALSE(trace.steps.empty());

  Type ty = typecheck({}, t);
  Term replay = t;
  for (const auto& s : trace.steps) {
    CHECK(s.before == replay);
    // the recorded path points at the contracted redex
    CHECK_FALSE(s.before.child_at(s.redex_path) ==
                s.after.child_at(s.redex_path));
    replay = replay.replace_at(s.redex_path,
                               s.after.child_at(s.redex_path));
    CHECK(replay == s.after);
    CHECK(typecheck({}, s.after) == ty);
  }
  CHECK(replay == r.term);

  std::string rendered = render_trace(trace);
  CHECK(rendered.find("#1 ") != std::string::npos);
  CHECK(rendered.find("EAppInt4") != std::string::npos);
}

TEST_CASE("stuck terms are reported loudly") {
  // pi1 x with x a free pair-typed variable has no rule and is not normal
  TypingContext ctx;
  ctx = ctx.extend("x", parse_type("(R,R)"));
  Term t = Term::proj(1, Term::var("x"));
  CHECK_THROWS_AS(step(ctx, t), StuckTermError);
}

TEST_CASE("binder hygiene in push rules") {
  // D{\y:R. x ; x @ y}: the lambda binder must not capture the point
  Term der = Term::der(Term::lam("y", Type::real(), Term::var("x")), "x",
                       Term::var("y"));
  TypingContext ctx;
  ctx = ctx.extend("y", Type::real());
  auto s = step(ctx, der);
  REQUIRE(s.has_value());
  REQUIRE(s->term.is(Term::Kind::Lam));
  CHECK(s->term.lam_var() != "y");
  CHECK(free_vars(s->term) == std::set<std::string>{"y"});
  CHECK(typecheck(ctx, s->term) == typecheck(ctx, der));

  // (\x:R. x (+) z) (+) (\z:R. z) merges without capturing z
  Term add = Term::add(
      Term::lam("x", Type::real(), Term::add(Term::var("x"), Term::var("z"))),
      Term::lam("z", Type::real(), Term::var("z")));
  TypingContext ctx2;
  ctx2 = ctx2.extend("z", Type::real());
  auto merged = step(ctx2, add);
  REQUIRE(merged.has_value());
  CHECK(merged->rule == RuleName::EAppAdd2);
  CHECK(free_vars(merged->term) == std::set<std::string>{"z"});
  CHECK(term_eq(ctx2.extend("w", Type::real()),
                Term::app(merged->term, Term::var("w")),
                parse("w (+) z (+) w"))
            .equal);
}

TEST_CASE("staircase decomposition uses upper-then-lower bounds") {
  // Int over pair bounds splits into two base integrals; the first component
  // integrates with the second coordinate frozen at its lower bound, the
  // second with the first coordinate at its upper bound.
  TypingContext ctx;
  for (const char* v : {"a1", "a2", "b1", "b2"})
    ctx = ctx.extend(v, Type::real());
  Term body = Term::der(Term::app(builtins::pair_g(), Term::var("y")), "y",
                        Term::var("x"));
  Term t = Term::integral(parse("(a1,a2)"), parse("(b1,b2)"), body, "x");
  auto s = step(ctx, t);
  REQUIRE(s.has_value());
  CHECK(s->rule == RuleName::EAppInt4);
  REQUIRE(s->term.is(Term::Kind::Add));
  const Term& first = s->term.lhs();
  const Term& second = s->term.rhs();
  REQUIRE(first.is(Term::Kind::Int));
  REQUIRE(second.is(Term::Kind::Int));
  CHECK(first.int_lo() == Term::var("a1"));
  CHECK(first.int_hi() == Term::var("b1"));
  // the substituted point for component 1 keeps the lower bound a2
  std::string rendered = term_to_string(first);
  CHECK(rendered.find("a2") != std::string::npos);
  std::string rendered2 = term_to_string(second);
  CHECK(rendered2.find("b1") != std::string::npos);
}

TEST_CASE("reduction happens under lambdas") {
  Term t = parse("\\x:R. (\\y:R. y) x");
  auto r = normalize(t);
  REQUIRE(r.normalized());
  CHECK(alpha_eq(r.term, parse("\\x:R. x")));
}

TEST_CASE("derivative and integral leaves stay opaque to the reducer") {
  TypingContext ctx;
  ctx = ctx.extend("c", Type::real());
  Term t = parse("D{ x*x ; x @ c }");
  auto r = normalize(ctx, t);
  REQUIRE(r.normalized());
  CHECK(r.term == t);  // an nb: untouched by reduction
  CHECK(interpret_normal_form(ctx, r.term) == parse("2*c"));
}
