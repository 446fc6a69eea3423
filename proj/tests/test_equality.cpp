#include <catch_amalgamated.hpp>

#include "diffcalc/builtins.hpp"
#include "diffcalc/equality.hpp"
#include "diffcalc/parser.hpp"
#include "diffcalc/testing/generators.hpp"

using namespace diffcalc;

namespace {

Term parse(const std::string& s) { return parse_term(s, ParseOptions{true}); }

TypingContext real_ctx(std::initializer_list<const char*> names) {
  TypingContext ctx;
  for (const char* n : names) ctx = ctx.extend(n, Type::real());
  return ctx;
}

}  // namespace

TEST_CASE("normal-form equality clauses") {
  CHECK(nf_eq({}, parse("(5,6,3)"), parse("(5,6,3)")));
  CHECK_FALSE(nf_eq({}, parse("(5,6,3)"), parse("(5,6,4)")));

  // lambdas extensionally: both applied to one shared fresh variable; the
  // canonical-form oracle identifies z (+) z with 2*z
  CHECK(canonical(RealExpr::sum({RealExpr::var("z"), RealExpr::var("z")})) ==
        canonical(RealExpr::prod({RealExpr::rat(2), RealExpr::var("z")})));
  CHECK(nf_eq({}, parse("\\x:R. x (+) x"), parse("\\y:R. 2*y")));
  CHECK_FALSE(nf_eq({}, parse("\\x:R. x (+) x"), parse("\\y:R. 3*y")));

  // constructor mismatch
  CHECK_FALSE(nf_eq({}, parse("inl 1 as R+R"), parse("inr 1 as R+R")));
  CHECK(nf_eq({}, parse("inl 1 as R+R"), parse("inl 1 as R+R")));
}

TEST_CASE("nf_eq reports the first differing position") {
  std::string where;
  CHECK_FALSE(nf_eq({}, parse("(1, (2, 3))"), parse("(1, (2, 4))"), EqConfig{},
                    PrimitiveTable::defaults(), &where));
  CHECK(where == "pi2.pi2.base");
}

TEST_CASE("open-term equality over the running example") {
  Term lhs = parse("Int{ D{ f y ; y @ x } dx ; (0,0) .. (2,3) }");
  Term rhs = parse("f (2,3) (-) f (0,0)");
  CHECK(term_eq(lhs, rhs).equal);
}

TEST_CASE("reflexivity on randomized normalizable terms") {
  testing::TermGen gen(41);
  TypingContext ctx = gen.ambient_context();
  for (int i = 0; i < 30; ++i) {
    Term t = gen.random_term(ctx, gen.random_type(), 8);
    CHECK(term_eq(ctx, t, t).equal);
  }
}

TEST_CASE("tuple-typed free variables are split into base components") {
  TypingContext ctx;
  ctx = ctx.extend("x", parse_type("(R,R)"));
  Term lhs = parse("pi1 x (+) pi2 x");
  Term rhs = parse("pi2 x (+) pi1 x");
  CHECK(term_eq(ctx, lhs, rhs).equal);
  CHECK_FALSE(term_eq(ctx, lhs, parse("pi1 x")).equal);
}

TEST_CASE("function-typed free variables are sampled with polynomial lambdas") {
  TypingContext ctx;
  ctx = ctx.extend("k", parse_type("R->R"));
  // k (1 (+) 1) = k 2 under every sampled instantiation
  CHECK(term_eq(ctx, parse("k (1 (+) 1)"), parse("k 2")).equal);
  CHECK_FALSE(term_eq(ctx, parse("k 1"), parse("k 2")).equal);
}

TEST_CASE("sum-typed free variables sample both constructors") {
  TypingContext ctx;
  ctx = ctx.extend("s", parse_type("R+R"));
  Term drop = parse("case s of inl a => 1 | inr b => 1");
  CHECK(term_eq(ctx, drop, parse("1")).equal);
  // distinguishes on the inr side only
  Term pick = parse("case s of inl a => 1 | inr b => 2");
  auto r = term_eq(ctx, pick, parse("1"));
  CHECK_FALSE(r.equal);
  REQUIRE(r.witness.has_value());
  CHECK_FALSE(r.witness->substitution.empty());
}

TEST_CASE("equality is symmetric and transitive on commuted sums") {
  testing::TermGen gen(43);
  TypingContext ctx = real_ctx({"u1", "u2"});
  std::vector<Term> reads{Term::var("u1"), Term::var("u2")};
  for (int i = 0; i < 20; ++i) {
    Term a = gen.poly_expr(reads, 2);
    Term b = gen.poly_expr(reads, 2);
    Term ab = Term::add(a, b);
    Term ba = Term::add(b, a);
    Term ab2 = Term::sub(Term::add(Term::add(a, b), b), b);
    CHECK(term_eq(ctx, ab, ba).equal);
    CHECK(term_eq(ctx, ba, ab).equal);
    // transitivity across a chain of three equal presentations
    CHECK(term_eq(ctx, ab, ab2).equal);
    CHECK(term_eq(ctx, ba, ab2).equal);
  }
}

TEST_CASE("addition is a congruence") {
  testing::TermGen gen(47);
  TypingContext ctx = real_ctx({"u1", "u2"});
  std::vector<Term> reads{Term::var("u1"), Term::var("u2")};
  for (int i = 0; i < 20; ++i) {
    Term a = gen.poly_expr(reads, 2);
    Term a2 = Term::sub(Term::add(a, Term::rat(1)), Term::rat(1));
    Term b = gen.poly_expr(reads, 2);
    Term b2 = Term::add(b, Term::rat(0));
    REQUIRE(term_eq(ctx, a, a2).equal);
    REQUIRE(term_eq(ctx, b, b2).equal);
    CHECK(term_eq(ctx, Term::add(a, b), Term::add(a2, b2)).equal);
  }
}

TEST_CASE("replacing one equal subterm preserves equality") {
  testing::TermGen gen(53);
  TypingContext ctx = gen.ambient_context();
  int done = 0;
  for (int i = 0; i < 60 && done < 20; ++i) {
    Term t = gen.random_term(ctx, gen.random_type(), 8);
    // find a base-typed subterm position
    std::vector<int> path;
    std::function<bool(const Term&, std::vector<int>&)> find =
        [&](const Term& cur, std::vector<int>& acc) -> bool {
      for (std::size_t c = 0; c < cur.children().size(); ++c) {
        acc.push_back(static_cast<int>(c));
        const Term& child = cur.children()[c];
        if (child.is(Term::Kind::Const) &&
            free_vars(child).empty()) return true;
        if (find(child, acc)) return true;
        acc.pop_back();
      }
      return false;
    };
    if (!find(t, path)) continue;
    const Term& sub = t.child_at(path);
    if (!sub.const_type().is_base()) continue;
    Term equal_sub = Term::sub(Term::add(sub, Term::rat(2)), Term::rat(2));
    REQUIRE(term_eq(ctx, sub, equal_sub).equal);
    Term replaced = t.replace_at(path, equal_sub);
    CHECK(term_eq(ctx, t, replaced).equal);
    ++done;
  }
  CHECK(done > 0);
}

TEST_CASE("reduction respects substitution") {
  // if t1 ->* t1' and t2 ->* t2' then t1[t2/x] = t1'[t2'/x]
  testing::TermGen gen(59);
  TypingContext ctx = gen.ambient_context();
  for (int i = 0; i < 20; ++i) {
    std::string x = gen.fresh_name("x");
    TypingContext inner = ctx.extend(x, Type::real());
    Term t1 = gen.random_term(inner, Type::real(), 7);
    Term t2 = gen.random_term(ctx, Type::real(), 5);
    Term t1p = normalize(inner, t1).term;
    Term t2p = normalize(ctx, t2).term;
    CHECK(term_eq(ctx, substitute(t1, x, t2), substitute(t1p, x, t2p)).equal);
  }
}

TEST_CASE("equality never equates distinct types") {
  auto r = term_eq({}, parse("(1,2)"), parse("1"));
  CHECK_FALSE(r.equal);
  REQUIRE(r.witness.has_value());
  CHECK(r.witness->position == "type");
}

TEST_CASE("equality on unnormalizable input is undefined") {
  EqConfig cfg;
  cfg.fuel = Fuel{50};
  CHECK_THROWS_AS(term_eq({}, parse("fix (\\f:R->R. f)"), parse("\\x:R. x"),
                          cfg),
                  FuelExhaustedError);
}

TEST_CASE("witnesses carry the substitution and both normal forms") {
  TypingContext ctx;
  ctx = ctx.extend("p", parse_type("(R,R)"));
  auto r = term_eq(ctx, parse("pi1 p"), parse("pi2 p"));
  REQUIRE_FALSE(r.equal);
  REQUIRE(r.witness.has_value());
  CHECK(r.witness->substitution.size() == 1);
  CHECK(r.witness->substitution[0].first == "p");
  CHECK(r.witness->position == "base");
}
