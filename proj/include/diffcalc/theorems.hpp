#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffcalc/equality.hpp"
#include "diffcalc/printer.hpp"
#include "diffcalc/reduce.hpp"
#include "diffcalc/syntax.hpp"
#include "diffcalc/typecheck.hpp"

namespace diffcalc {

class NotALambdaError : public std::runtime_error {
 public:
  explicit NotALambdaError(const Term& t)
      : std::runtime_error("expected a term normalizing to a lambda, got: " +
                           term_excerpt(t)) {}
};

// (\x:T.t)' = \x:T. D{t' ; z @ x} with the body rebound through a fresh
// derivative variable.
inline Term fun_derive(const Term& f, const TypingContext& ctx = {},
                       Fuel fuel = {},
                       const PrimitiveTable& table = PrimitiveTable::defaults()) {
  auto r = normalize(ctx, f, fuel, nullptr, table);
  if (!r.normalized())
    throw FuelExhaustedError("while normalizing the function to derive");
  const Term& lam = r.term;
  if (!lam.is(Term::Kind::Lam)) throw NotALambdaError(lam);
  const Type& dom = lam.lam_annot();
  if (dom.contains_arrow_or_sum())
    throw TypeError(TypeError::Kind::NoDerivativeType, "TDer",
                    "an arrow/sum-free domain", type_to_string(dom), lam);
  std::set<std::string> avoid = free_vars(lam.lam_body());
  avoid.insert(lam.lam_var());
  std::string dvar = fresh_var(lam.lam_var(), avoid);
  Term body = substitute(lam.lam_body(), lam.lam_var(), Term::var(dvar));
  return Term::lam(lam.lam_var(), dom,
                   Term::der(body, dvar, Term::var(lam.lam_var())));
}

// f^(0) = f, f^(n) = (f')^(n-1)
inline Term derive_n(const Term& f, unsigned n, const TypingContext& ctx = {},
                     Fuel fuel = {},
                     const PrimitiveTable& table = PrimitiveTable::defaults()) {
  Term acc = f;
  for (unsigned i = 0; i < n; ++i) acc = fun_derive(acc, ctx, fuel, table);
  return acc;
}

// t*t1^0 = t, t*t1^n = (t*t1)*t1^(n-1)
inline Term power_mul(const Term& t, const Term& t1, unsigned n) {
  Term acc = t;
  for (unsigned i = 0; i < n; ++i) acc = Term::mul(acc, t1);
  return acc;
}

struct TaylorExpansion {
  Term center;
  unsigned order = 0;
  std::vector<Term> partial_sums;      // order+1 entries
  std::vector<Rational> coefficients;  // 1/j! for j = 0..order
};

inline TaylorExpansion taylor_expansion(
    const Term& f, const Term& t0, const Term& t, unsigned order,
    const TypingContext& ctx = {}, Fuel fuel = {},
    const PrimitiveTable& table = PrimitiveTable::defaults()) {
  TaylorExpansion out;
  out.center = t0;
  out.order = order;
  Term acc = Term::app(f, t0);
  out.partial_sums.push_back(acc);
  out.coefficients.push_back(Rational(1));
  for (unsigned j = 1; j <= order; ++j) {
    Rational inv_fact = factorial_inverse(j);
    Term derivative_at = Term::app(derive_n(f, j, ctx, fuel, table), t0);
    Term powered = power_mul(derivative_at, Term::sub(t, t0), j);
    Term term_j = Term::mul(powered, Term::rat(inv_fact));
    acc = Term::add(acc, term_j);
    out.partial_sums.push_back(acc);
    out.coefficients.push_back(inv_fact);
  }
  return out;
}

inline Term taylor_expand(const Term& f, const Term& t0, const Term& t,
                          unsigned order, const TypingContext& ctx = {},
                          Fuel fuel = {},
                          const PrimitiveTable& table = PrimitiveTable::defaults()) {
  return taylor_expansion(f, t0, t, order, ctx, fuel, table).partial_sums.back();
}

// ---------------------------------------------------------------------------
// Theorem checkers. Reports carry both normal forms and a verdict; fuel
// exhaustion is inconclusive rather than a failure.
// ---------------------------------------------------------------------------

struct TheoremReport {
  std::string theorem;
  std::map<std::string, std::string> inputs;
  std::string lhs_nf;
  std::string rhs_nf;
  std::string verdict;  // "holds" | "fails" | "inconclusive"
  std::optional<std::string> witness;

  bool ok() const { return verdict == "holds"; }

  nlohmann::json to_json() const {
    nlohmann::json j{{"theorem", theorem},
                     {"inputs", inputs},
                     {"lhs_nf", lhs_nf},
                     {"rhs_nf", rhs_nf},
                     {"verdict", verdict}};
    if (witness) j["witness"] = *witness;
    return j;
  }
};

namespace detail {

inline std::string witness_to_string(const EqWitness& w) {
  std::string out = "at " + w.position;
  if (!w.substitution.empty()) {
    out += " under [";
    bool first = true;
    for (const auto& [name, term] : w.substitution) {
      if (!first) out += ", ";
      first = false;
      out += name + " := " + term_to_string(term);
    }
    out += "]";
  }
  out += "; lhs = " + term_to_string(w.lhs_nf) +
         "; rhs = " + term_to_string(w.rhs_nf);
  return out;
}

inline TheoremReport equality_report(std::string theorem,
                                     std::map<std::string, std::string> inputs,
                                     const TypingContext& ctx, const Term& lhs,
                                     const Term& rhs, const EqConfig& cfg,
                                     const PrimitiveTable& table) {
  TheoremReport rep;
  rep.theorem = std::move(theorem);
  rep.inputs = std::move(inputs);
  try {
    auto nl = normalize(ctx, lhs, cfg.fuel, nullptr, table);
    auto nr = normalize(ctx, rhs, cfg.fuel, nullptr, table);
    if (!nl.normalized() || !nr.normalized()) {
      rep.verdict = "inconclusive";
      rep.witness = "normalization ran out of fuel";
      return rep;
    }
    rep.lhs_nf = term_to_string(nl.term);
    rep.rhs_nf = term_to_string(nr.term);
    EqResult eq = term_eq(ctx, nl.term, nr.term, cfg, table);
    rep.verdict = eq.equal ? "holds" : "fails";
    if (eq.witness) rep.witness = witness_to_string(*eq.witness);
  } catch (const FuelExhaustedError& e) {
    rep.verdict = "inconclusive";
    rep.witness = e.what();
  }
  return rep;
}

inline std::set<std::string> avoid_of(std::initializer_list<const Term*> terms,
                                      const TypingContext& ctx) {
  std::set<std::string> avoid = ctx.names();
  for (const Term* t : terms) {
    auto fv = free_vars(*t);
    avoid.insert(fv.begin(), fv.end());
  }
  return avoid;
}

}  // namespace detail

// Int{ D{t ; y @ x} dx ; t1 .. t2 }  =  t[t2/y] (-) t[t1/y]
inline TheoremReport check_newton_leibniz(
    const Term& t, const std::string& y, const Term& t1, const Term& t2,
    const EqConfig& cfg = {}, const TypingContext& ctx = {},
    const PrimitiveTable& table = PrimitiveTable::defaults()) {
  std::set<std::string> avoid = detail::avoid_of({&t, &t1, &t2}, ctx);
  avoid.insert(y);
  std::string x = fresh_var("x", avoid);
  Term lhs = Term::integral(t1, t2, Term::der(t, y, Term::var(x)), x);
  Term rhs = Term::sub(substitute(t, y, t2), substitute(t, y, t1));
  return detail::equality_report(
      "newton-leibniz",
      {{"t", term_to_string(t)},
       {"y", y},
       {"from", term_to_string(t1)},
       {"to", term_to_string(t2)}},
      ctx, lhs, rhs, cfg, table);
}

// D{f (g x) ; x @ t1} * t  =  D{f y ; y @ g t1} * (D{g z ; z @ t1} * t)
inline TheoremReport check_chain_rule(
    const Term& f, const Term& g, const Term& t1, const Term& t,
    const EqConfig& cfg = {}, const TypingContext& ctx = {},
    const PrimitiveTable& table = PrimitiveTable::defaults()) {
  std::set<std::string> avoid = detail::avoid_of({&f, &g, &t1, &t}, ctx);
  std::string x = fresh_var("x", avoid);
  avoid.insert(x);
  std::string y = fresh_var("y", avoid);
  avoid.insert(y);
  std::string z = fresh_var("z", avoid);
  Term lhs = Term::mul(
      Term::der(Term::app(f, Term::app(g, Term::var(x))), x, t1), t);
  Term rhs = Term::mul(
      Term::der(Term::app(f, Term::var(y)), y, Term::app(g, t1)),
      Term::mul(Term::der(Term::app(g, Term::var(z)), z, t1), t));
  return detail::equality_report(
      "chain-rule",
      {{"f", term_to_string(f)},
       {"g", term_to_string(g)},
       {"at", term_to_string(t1)},
       {"t", term_to_string(t)}},
      ctx, lhs, rhs, cfg, table);
}

// Gradient of f : T -> R at a point, as the normalized derivative tuple.
inline Term ad_gradient(const Term& f, const Term& point,
                        const TypingContext& ctx = {}, Fuel fuel = {},
                        const PrimitiveTable& table = PrimitiveTable::defaults()) {
  std::set<std::string> avoid = detail::avoid_of({&f, &point}, ctx);
  std::string x = fresh_var("x", avoid);
  Term der = Term::der(Term::app(f, Term::var(x)), x, point);
  auto r = normalize(ctx, der, fuel, nullptr, table);
  if (!r.normalized())
    throw FuelExhaustedError("while normalizing the gradient term");
  return r.term;
}

// Incremental change Int{ D{f v ; v @ u} du ; x .. x (+) delta }, normalized;
// satisfies f (x (+) delta) = f x (+) result.
inline Term derive_incremental(
    const Term& f, const Term& x, const Term& delta,
    const TypingContext& ctx = {}, Fuel fuel = {},
    const PrimitiveTable& table = PrimitiveTable::defaults()) {
  std::set<std::string> avoid = detail::avoid_of({&f, &x, &delta}, ctx);
  std::string u = fresh_var("u", avoid);
  avoid.insert(u);
  std::string v = fresh_var("v", avoid);
  Term body = Term::der(Term::app(f, Term::var(v)), v, Term::var(u));
  Term integral = Term::integral(x, Term::add(x, delta), body, u);
  auto r = normalize(ctx, integral, fuel, nullptr, table);
  if (!r.normalized())
    throw FuelExhaustedError("while normalizing the incremental term");
  return r.term;
}

}  // namespace diffcalc
