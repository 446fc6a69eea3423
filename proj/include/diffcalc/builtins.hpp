#pragma once

#include <map>
#include <optional>
#include <string>

#include "diffcalc/syntax.hpp"

namespace diffcalc {

// Demo programs available by name in any term position of the CLI.
namespace builtins {

inline Type rr() { return Type::product({Type::real(), Type::real()}); }

inline Term p1(const std::string& v) { return Term::proj(1, Term::var(v)); }
inline Term p2(const std::string& v) { return Term::proj(2, Term::var(v)); }

// f (x1,x2) = (x1 + x2, x1*x2, x2)
inline Term pair_f() {
  return Term::lam(
      "x", rr(),
      Term::tuple({Term::add(p1("x"), p2("x")), Term::mul(p1("x"), p2("x")),
                   p2("x")}));
}

// g (x1,x2) = (x1 + x2, x2)
inline Term pair_g() {
  return Term::lam("x", rr(),
                   Term::tuple({Term::add(p1("x"), p2("x")), p2("x")}));
}

// sqr a = a*a
inline Term sqr() {
  return Term::lam("a", Type::real(), Term::mul(Term::var("a"), Term::var("a")));
}

// magSqr (a,b) = sqr a + sqr b
inline Term mag_sqr() {
  return Term::lam("x", rr(),
                   Term::add(Term::app(sqr(), p1("x")),
                             Term::app(sqr(), p2("x"))));
}

// average (x1,x2) = (x1 + x2) * 1/2
inline Term average() {
  return Term::lam("x", rr(),
                   Term::mul(Term::add(p1("x"), p2("x")),
                             Term::rat(Rational(1, 2))));
}

// polar2cartesian (r,theta) = (r*cos theta, r*sin theta)
inline Term polar2cartesian() {
  Type rtor = Type::arrow(Type::real(), Type::real());
  Term cos_c = Term::constant("cos", rtor);
  Term sin_c = Term::constant("sin", rtor);
  return Term::lam(
      "x", rr(),
      Term::tuple({Term::mul(p1("x"), Term::app(cos_c, p2("x"))),
                   Term::mul(p1("x"), Term::app(sin_c, p2("x")))}));
}

// taylorf (x1,x2) = (2*x1*x2, 3*x1*x1 + x2)
inline Term taylorf() {
  return Term::lam(
      "x", rr(),
      Term::tuple({Term::mul(Term::mul(Term::rat(2), p1("x")), p2("x")),
                   Term::add(Term::mul(Term::mul(Term::rat(3), p1("x")),
                                       p1("x")),
                             p2("x"))}));
}

inline std::optional<Term> lookup(const std::string& name) {
  if (name == "f") return pair_f();
  if (name == "g") return pair_g();
  if (name == "sqr") return sqr();
  if (name == "magSqr") return mag_sqr();
  if (name == "average") return average();
  if (name == "polar2cartesian") return polar2cartesian();
  if (name == "taylorf") return taylorf();
  return std::nullopt;
}

}  // namespace builtins
}  // namespace diffcalc
