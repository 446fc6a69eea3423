#pragma once

#include <string>
#include <vector>

#include "diffcalc/real_expr.hpp"
#include "diffcalc/reduce.hpp"
#include "diffcalc/syntax.hpp"
#include "diffcalc/typecheck.hpp"

namespace diffcalc {

// ---------------------------------------------------------------------------
// embed: interpretable normal forms of base type -> canonical RealExpr.
// Free variables of base type stay symbolic; free function variables become
// opaque applications; derivative and integration leaves are discharged by
// sym_diff / sym_integrate.
// ---------------------------------------------------------------------------

inline RealExpr embed(const TypingContext& ctx, const Term& t,
                      const PrimitiveTable& table = PrimitiveTable::defaults());

namespace detail {

// One step of the base interpretation of function-valued expressions: push an
// application through the pointwise operations, derivatives, integrals, and
// literal lambdas.
inline Term distribute_application(const Term& fun, const Term& arg) {
  using K = Term::Kind;
  switch (fun.kind()) {
    case K::Add:
      return Term::add(Term::app(fun.lhs(), arg), Term::app(fun.rhs(), arg));
    case K::Sub:
      return Term::sub(Term::app(fun.lhs(), arg), Term::app(fun.rhs(), arg));
    case K::Mul:
      // (F * c) u = (F u) * c
      return Term::mul(Term::app(fun.lhs(), arg), fun.rhs());
    case K::Der: {
      std::set<std::string> conflict = free_vars(arg);
      auto [x, body] =
          detail::rename_binder_if(fun.der_var(), fun.der_body(), conflict);
      return Term::der(Term::app(body, arg), x, fun.der_at());
    }
    case K::Int: {
      std::set<std::string> conflict = free_vars(arg);
      auto [x, body] =
          detail::rename_binder_if(fun.int_var(), fun.int_body(), conflict);
      return Term::integral(fun.int_lo(), fun.int_hi(), Term::app(body, arg),
                            x);
    }
    case K::Lam:
      return substitute(fun.lam_body(), fun.lam_var(), arg);
    default:
      throw UnsupportedPrimitiveError("uninterpretable application head: " +
                                      term_excerpt(fun));
  }
}

inline RealExpr embed_application(const TypingContext& ctx, const Term& t,
                                  const PrimitiveTable& table) {
  // Collect the application spine: head arg1 arg2 ...
  std::vector<const Term*> args;
  const Term* head = &t;
  while (head->is(Term::Kind::App)) {
    args.push_back(&head->app_arg());
    head = &head->app_fun();
  }
  if (!head->is(Term::Kind::Const) && !head->is(Term::Kind::Var)) {
    Term rebuilt = distribute_application(*head, **args.rbegin());
    for (auto it = std::next(args.rbegin()); it != args.rend(); ++it)
      rebuilt = Term::app(rebuilt, **it);
    auto r = normalize(ctx, rebuilt, Fuel{100000}, nullptr, table);
    if (!r.normalized())
      throw UnsupportedPrimitiveError(
          "interpretation of a function-valued head did not normalize");
    return embed(ctx, r.term, table);
  }
  std::vector<RealExpr> embedded;
  embedded.reserve(args.size());
  for (auto it = args.rbegin(); it != args.rend(); ++it) {
    Type arg_ty = typecheck(ctx, **it, table);
    if (!arg_ty.is_base())
      throw UnsupportedPrimitiveError(
          "non-base argument in opaque application: " + term_excerpt(**it));
    embedded.push_back(embed(ctx, **it, table));
  }

  if (head->is(Term::Kind::Const)) {
    const std::string& name = head->const_name();
    const PrimitiveSignature* sig = table.find(name);
    if (!sig)
      throw UnsupportedPrimitiveError("constant '" + name +
                                      "' has no signature");
    if (sig->arity != embedded.size())
      throw UnsupportedPrimitiveError("arity mismatch for '" + name + "'");
    switch (sig->builtin) {
      case PrimitiveSignature::Builtin::Sin:
        return RealExpr::sin(embedded[0]);
      case PrimitiveSignature::Builtin::Cos:
        return RealExpr::cos(embedded[0]);
      case PrimitiveSignature::Builtin::Exp:
        return RealExpr::exp(embedded[0]);
      case PrimitiveSignature::Builtin::None:
        return RealExpr::prim(name, std::move(embedded));
    }
  }
  if (head->is(Term::Kind::Var))
    return RealExpr::prim(head->var_name(), std::move(embedded));
  throw UnsupportedPrimitiveError("uninterpretable application head: " +
                                  term_excerpt(*head));
}

}  // namespace detail

inline RealExpr embed(const TypingContext& ctx, const Term& t,
                      const PrimitiveTable& table) {
  switch (t.kind()) {
    case Term::Kind::Const: {
      if (auto q = parse_rational(t.const_name()))
        return RealExpr::rat(*q);
      throw UnsupportedPrimitiveError("constant '" + t.const_name() +
                                      "' is not a rational literal");
    }
    case Term::Kind::Var:
      return RealExpr::var(t.var_name());
    case Term::Kind::Add:
      return canonical(
          RealExpr::sum({embed(ctx, t.lhs(), table), embed(ctx, t.rhs(), table)}));
    case Term::Kind::Sub:
      return canonical(RealExpr::sum(
          {embed(ctx, t.lhs(), table),
           RealExpr::neg(embed(ctx, t.rhs(), table))}));
    case Term::Kind::Mul:
      return canonical(RealExpr::prod(
          {embed(ctx, t.lhs(), table), embed(ctx, t.rhs(), table)}));
    case Term::Kind::App:
      return canonical(detail::embed_application(ctx, t, table));
    case Term::Kind::Der: {
      Type at_ty = typecheck(ctx, t.der_at(), table);
      RealExpr body =
          embed(ctx.extend(t.der_var(), at_ty), t.der_body(), table);
      RealExpr d = sym_diff(body, t.der_var(), table);
      return real_subst(d, t.der_var(), embed(ctx, t.der_at(), table), table);
    }
    case Term::Kind::Int: {
      Type lo_ty = typecheck(ctx, t.int_lo(), table);
      RealExpr body =
          embed(ctx.extend(t.int_var(), lo_ty), t.int_body(), table);
      return sym_integrate(body, t.int_var(), embed(ctx, t.int_lo(), table),
                           embed(ctx, t.int_hi(), table), table);
    }
    default:
      throw UnsupportedPrimitiveError(
          "term is not an interpretable normal form of base type: " +
          term_excerpt(t));
  }
}

// ---------------------------------------------------------------------------
// Lowering canonical RealExprs back into calculus terms, used to render the
// base-interpreted view of a normal form (e.g. 1*7 (+) 2*8 (+) 3*9 as 50).
// ---------------------------------------------------------------------------

inline Term lower_to_term(const RealExpr& e) {
  switch (e.kind()) {
    case RealExpr::Kind::Rat:
      return Term::rat(e.rat_value());
    case RealExpr::Kind::Var:
      return Term::var(e.name());
    case RealExpr::Kind::Sum: {
      const auto& ts = e.children();
      Term acc = lower_to_term(ts[0]);
      for (std::size_t i = 1; i < ts.size(); ++i) {
        const RealExpr& term = ts[i];
        // render negative-coefficient summands with (-)
        if (term.is(RealExpr::Kind::Rat) && term.rat_value() < 0) {
          acc = Term::sub(acc, Term::rat(-term.rat_value()));
        } else if (term.is(RealExpr::Kind::Prod) && !term.children().empty() &&
                   term.children()[0].is(RealExpr::Kind::Rat) &&
                   term.children()[0].rat_value() < 0) {
          auto cs = term.children();
          cs[0] = RealExpr::rat(-cs[0].rat_value());
          RealExpr flipped = cs.size() == 2 && cs[0].is_rat(1)
                                 ? cs[1]
                                 : RealExpr::prod(std::move(cs));
          acc = Term::sub(acc, lower_to_term(flipped));
        } else {
          acc = Term::add(acc, lower_to_term(term));
        }
      }
      return acc;
    }
    case RealExpr::Kind::Neg:
      return Term::mul(Term::rat(-1), lower_to_term(e.arg()));
    case RealExpr::Kind::Prod: {
      std::vector<Term> factors;
      for (const auto& f : e.children()) {
        if (f.is(RealExpr::Kind::Pow)) {
          Term base = lower_to_term(f.arg());
          for (int i = 0; i < f.exponent(); ++i) factors.push_back(base);
        } else {
          factors.push_back(lower_to_term(f));
        }
      }
      Term acc = factors[0];
      for (std::size_t i = 1; i < factors.size(); ++i)
        acc = Term::mul(acc, factors[i]);
      return acc;
    }
    case RealExpr::Kind::Pow: {
      Term base = lower_to_term(e.arg());
      Term acc = base;
      for (int i = 1; i < e.exponent(); ++i) acc = Term::mul(acc, base);
      return acc;
    }
    case RealExpr::Kind::Sin:
    case RealExpr::Kind::Cos:
    case RealExpr::Kind::Exp: {
      const char* name = e.is(RealExpr::Kind::Sin)   ? "sin"
                         : e.is(RealExpr::Kind::Cos) ? "cos"
                                                     : "exp";
      return Term::app(
          Term::constant(name, Type::arrow(Type::real(), Type::real())),
          lower_to_term(e.arg()));
    }
    case RealExpr::Kind::Prim: {
      Term head = constant_type(e.name()).has_value()
                      ? Term::constant(e.name(), *constant_type(e.name()))
                      : Term::var(e.name());
      Term acc = head;
      for (const auto& a : e.children())
        acc = Term::app(acc, lower_to_term(a));
      return acc;
    }
  }
  throw std::logic_error("lower_to_term: unreachable");
}

// Rewrites every maximal base-typed interpretable subterm of a normal form
// into its canonical base-interpreted rendering. Subterms the interpreter
// cannot discharge are left as they are.
inline Term interpret_normal_form(
    const TypingContext& ctx, const Term& t,
    const PrimitiveTable& table = PrimitiveTable::defaults()) {
  auto try_base = [&](const TypingContext& c, const Term& u) -> std::optional<Term> {
    try {
      if (!typecheck(c, u, table).is_base()) return std::nullopt;
      return lower_to_term(embed(c, u, table));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  if (auto lowered = try_base(ctx, t)) return *lowered;
  switch (t.kind()) {
    case Term::Kind::Tuple: {
      std::vector<Term> items;
      items.reserve(t.tuple_items().size());
      for (const auto& c : t.tuple_items())
        items.push_back(interpret_normal_form(ctx, c, table));
      return Term::tuple(std::move(items));
    }
    case Term::Kind::Inl:
    case Term::Kind::Inr: {
      Term payload = interpret_normal_form(ctx, t.inj_payload(), table);
      return t.is(Term::Kind::Inl) ? Term::inl(payload, t.inj_annot())
                                   : Term::inr(payload, t.inj_annot());
    }
    case Term::Kind::Lam: {
      Term body = interpret_normal_form(
          ctx.extend(t.lam_var(), t.lam_annot()), t.lam_body(), table);
      return Term::lam(t.lam_var(), t.lam_annot(), body);
    }
    default:
      return t;
  }
}

}  // namespace diffcalc
