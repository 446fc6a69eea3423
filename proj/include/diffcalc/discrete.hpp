#pragma once

#include <string>

#include "diffcalc/equality.hpp"
#include "diffcalc/reduce.hpp"
#include "diffcalc/syntax.hpp"
#include "diffcalc/typecheck.hpp"

namespace diffcalc {
namespace discrete {

// The discrete fragment: the analytical calculus without Der/Int, with
// multiplication restricted to the base ring, plus the finite-difference
// derivative DD{t ; x @ t0, t1}. Its reduction rules are DDeltaConst,
// DDeltaVar, DDeltaLam and the base expansion
//   DD{t ; x @ t0, t1} -> t[t0 (+) t1 / x] (-) t[t0 / x]
// once the numerator is irreducible.

inline Type typecheck(const TypingContext& ctx, const Term& t,
                      const PrimitiveTable& table = PrimitiveTable::defaults()) {
  return diffcalc::typecheck(ctx, t, table, CalculusMode::Discrete);
}

inline std::optional<StepResult> step(
    const TypingContext& ctx, const Term& t,
    const PrimitiveTable& table = PrimitiveTable::defaults()) {
  return diffcalc::step(ctx, t, table, CalculusMode::Discrete);
}

inline NormalizeResult normalize(
    const TypingContext& ctx, const Term& t, Fuel fuel = {},
    ReductionTrace* trace = nullptr,
    const PrimitiveTable& table = PrimitiveTable::defaults()) {
  return diffcalc::normalize(ctx, t, fuel, trace, table,
                             CalculusMode::Discrete);
}

// Derive f = \x. \dx. DD{f y ; y @ x, dx}, satisfying
// (Derive f) x dx = f (x (+) dx) (-) f x.
inline Term derive_fn(const Term& f, const TypingContext& ctx = {},
                      const PrimitiveTable& table = PrimitiveTable::defaults()) {
  Type fty = diffcalc::typecheck(ctx, f, table, CalculusMode::Discrete);
  if (!fty.is_arrow())
    throw TypeError(TypeError::Kind::ApplicationMismatch, "TApp",
                    "a function type", type_to_string(fty), f);
  std::set<std::string> avoid = free_vars(f);
  auto cn = ctx.names();
  avoid.insert(cn.begin(), cn.end());
  std::string x = fresh_var("x", avoid);
  avoid.insert(x);
  std::string dx = fresh_var("dx", avoid);
  avoid.insert(dx);
  std::string y = fresh_var("y", avoid);
  Term body = Term::dder(Term::app(f, Term::var(y)), y, Term::var(x),
                         Term::var(dx));
  return Term::lam(x, fty.domain(),
                   Term::lam(dx, fty.domain(), body));
}

// Equality in the discrete fragment: normalize with the discrete rules (which
// eliminate every DD node), then compare the analytical normal forms.
inline EqResult term_eq(const TypingContext& ctx, const Term& t1,
                        const Term& t2, const EqConfig& cfg = {},
                        const PrimitiveTable& table = PrimitiveTable::defaults()) {
  auto n1 = discrete::normalize(ctx, t1, cfg.fuel, nullptr, table);
  auto n2 = discrete::normalize(ctx, t2, cfg.fuel, nullptr, table);
  if (!n1.normalized() || !n2.normalized())
    throw FuelExhaustedError("while normalizing discrete terms");
  return diffcalc::term_eq(ctx, n1.term, n2.term, cfg, table);
}

}  // namespace discrete
}  // namespace diffcalc
