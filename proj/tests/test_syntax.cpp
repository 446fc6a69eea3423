#include <catch_amalgamated.hpp>

#include "diffcalc/sexpr.hpp"
#include "diffcalc/syntax.hpp"
#include "diffcalc/testing/generators.hpp"

using namespace diffcalc;

namespace {

Term v(const std::string& n) { return Term::var(n); }

}  // namespace

TEST_CASE("free variables respect all four binders") {
  CHECK(free_vars(Term::add(v("x"), v("y"))) ==
        std::set<std::string>{"x", "y"});

  Term lam = Term::lam("x", Type::real(), Term::add(v("x"), v("y")));
  CHECK(free_vars(lam) == std::set<std::string>{"y"});

  // Int and Der both bind z; bounds stay outside the binder scope.
  Term der = Term::der(Term::mul(v("x"), v("z")), "z", v("z"));
  Term integral = Term::integral(v("a"), v("b"), der, "z");
  CHECK(free_vars(integral) == std::set<std::string>{"a", "b", "x"});

  Term c = Term::case_of(v("s"), "l", v("l"), "r", v("q"));
  CHECK(free_vars(c) == std::set<std::string>{"s", "q"});
}

TEST_CASE("substitution examples") {
  CHECK(substitute(Term::add(v("x"), v("y")), "x", Term::rat(3)) ==
        Term::add(Term::rat(3), v("y")));

  // capture avoidance forced: [y/x](\y. x) renames the binder
  Term lam = Term::lam("y", Type::real(), v("x"));
  Term out = substitute(lam, "x", v("y"));
  REQUIRE(out.is(Term::Kind::Lam));
  CHECK(out.lam_var() != "y");
  CHECK(out.lam_body() == v("y"));
  CHECK(alpha_eq(out, Term::lam("w", Type::real(), v("y"))));

  Term pair = Term::tuple({Term::rat(1), Term::rat(2)});
  CHECK(substitute(v("x"), "x", pair) == pair);
}

TEST_CASE("alpha equivalence") {
  Term idx = Term::lam("x", Type::real(), v("x"));
  Term idy = Term::lam("y", Type::real(), v("y"));
  CHECK(alpha_eq(idx, idy));
  CHECK_FALSE(alpha_eq(idx, Term::lam("x", Type::real(), Term::rat(0))));

  // Der is a binder
  Term d1 = Term::der(v("x"), "x", v("c"));
  Term d2 = Term::der(v("z"), "z", v("c"));
  CHECK(alpha_eq(d1, d2));
  CHECK_FALSE(alpha_eq(d1, Term::der(v("c"), "z", v("c"))));

  // annotation matters
  CHECK_FALSE(alpha_eq(
      idx, Term::lam("x", Type::product({Type::real(), Type::real()}), v("x"))));
}

TEST_CASE("fresh name scheme") {
  CHECK(fresh_var("x", {}) == "x");
  CHECK(fresh_var("x", {"x"}) == "x_1");
  CHECK(fresh_var("x", {"x", "x_1"}) == "x_2");
}

TEST_CASE("constructor arity guards") {
  CHECK_THROWS_AS(Term::tuple({Term::rat(1)}), std::invalid_argument);
  CHECK_THROWS_AS(Type::product({Type::real()}), std::invalid_argument);
  CHECK_THROWS_AS(Term::proj(0, v("x")), std::invalid_argument);
}

TEST_CASE("substitution and freshness properties") {
  testing::TermGen gen(7);
  TypingContext ctx = gen.ambient_context();
  for (int i = 0; i < 60; ++i) {
    Term t = gen.random_term(ctx, gen.random_type(), 8);
    Term s = gen.random_term(ctx, Type::real(), 4);
    Term sub = substitute(t, "u1", s);

    auto fv_t = free_vars(t);
    auto fv_s = free_vars(s);
    std::set<std::string> bound;
    for (const auto& name : fv_t)
      if (name != "u1") bound.insert(name);
    bound.insert(fv_s.begin(), fv_s.end());
    for (const auto& name : free_vars(sub)) CHECK(bound.count(name) == 1);

    // alpha-stability under a bound-variable rename
    if (t.is(Term::Kind::Lam)) {
      std::set<std::string> avoid = free_vars(t.lam_body());
      avoid.insert(t.lam_var());
      std::string renamed = fresh_var(t.lam_var() + "_r", avoid);
      Term t2 = Term::lam(renamed, t.lam_annot(),
                          substitute(t.lam_body(), t.lam_var(),
                                     Term::var(renamed)));
      REQUIRE(alpha_eq(t, t2));
      CHECK(alpha_eq(substitute(t, "u1", s), substitute(t2, "u1", s)));
    }
  }
}

TEST_CASE("substitution commutation") {
  // [u/y]([s/x]t) = [[u/y]s/x]([u/y]t) for x != y, y not free in s, and x
  // not free in u
  testing::TermGen gen(11);
  TypingContext ctx = gen.ambient_context();
  for (int i = 0; i < 60; ++i) {
    Term t = gen.random_term(ctx, gen.random_type(), 8);
    Term s = gen.random_term(ctx, Type::real(), 3);
    Term u = gen.random_term(ctx, Type::real(), 3);
    Term s_clean = substitute(s, "u2", Term::rat(1));  // drop y from s
    Term u_clean = substitute(u, "u1", Term::rat(2));  // drop x from u
    Term lhs = substitute(substitute(t, "u1", s_clean), "u2", u_clean);
    Term rhs = substitute(substitute(t, "u2", u_clean), "u1",
                          substitute(s_clean, "u2", u_clean));
    CHECK(alpha_eq(lhs, rhs));
  }
}

TEST_CASE("sexpr round-trips are bit-exact") {
  Term sample = Term::lam(
      "x", Type::product({Type::real(), Type::real()}),
      Term::integral(Term::rat(0), v("b"),
                     Term::der(Term::mul(v("z"), v("z")), "z", v("w")), "w"));
  CHECK(term_from_sexpr(term_to_sexpr(sample)) == sample);
  CHECK(term_to_sexpr(term_from_sexpr(term_to_sexpr(sample))) ==
        term_to_sexpr(sample));

  testing::TermGen gen(23);
  TypingContext ctx = gen.ambient_context();
  for (int i = 0; i < 120; ++i) {
    Term t = gen.random_term(ctx, gen.random_type(), 10);
    std::string printed = term_to_sexpr(t);
    Term back = term_from_sexpr(printed);
    CHECK(back == t);
    CHECK(term_to_sexpr(back) == printed);
  }

  Type ty = Type::arrow(Type::sum(Type::real(), Type::base("C")),
                        Type::product({Type::real(), Type::real()}));
  CHECK(type_from_sexpr(type_to_sexpr(ty)) == ty);
}

TEST_CASE("paths address structural children") {
  Term t = Term::add(Term::mul(v("a"), v("b")), v("c"));
  CHECK(t.child_at({0, 1}) == v("b"));
  Term replaced = t.replace_at({0, 1}, Term::rat(4));
  CHECK(replaced == Term::add(Term::mul(v("a"), Term::rat(4)), v("c")));
  CHECK(t.child_at({}) == t);
}
