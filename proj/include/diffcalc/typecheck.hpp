#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "diffcalc/printer.hpp"
#include "diffcalc/real_expr.hpp"
#include "diffcalc/syntax.hpp"

namespace diffcalc {

// ---------------------------------------------------------------------------
// Typing rules: TCon TVar TInl TInr TAdd TSub TAbs TApp TFix TDer TPair TProj
// TMul TInt TCase, plus the addable grammar T* and the derivative type
// dT/dT0. Errors carry the rule whose premise failed.
// ---------------------------------------------------------------------------

class TypeError : public std::runtime_error {
 public:
  enum class Kind {
    UnboundVariable,
    ArityMismatch,
    NotAddable,
    NoDerivativeType,
    ApplicationMismatch,
    BranchMismatch,
    ProjectionOutOfRange,
    AnnotationRequired,
  };

  TypeError(Kind kind, std::string rule, std::string expected,
            std::string found, const Term& offending)
      : std::runtime_error(rule + ": expected " + expected + ", found " +
                           found + " in " + term_excerpt(offending)),
        kind_(kind),
        rule_(std::move(rule)),
        expected_(std::move(expected)),
        found_(std::move(found)),
        offending_(offending) {}

  Kind kind() const { return kind_; }
  const std::string& rule() const { return rule_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }
  const Term& offending() const { return offending_; }

 private:
  Kind kind_;
  std::string rule_;
  std::string expected_;
  std::string found_;
  Term offending_;
};

// T* grammar: base, products of addables, arrows into addables. Sums are
// never addable.
inline bool is_addable(const Type& t) {
  switch (t.kind()) {
    case Type::Kind::Base:
      return true;
    case Type::Kind::Product: {
      for (const auto& c : t.components())
        if (!is_addable(c)) return false;
      return true;
    }
    case Type::Kind::Arrow:
      return is_addable(t.codomain());
    case Type::Kind::Sum:
      return false;
  }
  return false;
}

// dT/dB = T; dT/d(T1,...,Tn) = (dT/dT1, ..., dT/dTn). Undefined when the
// denominator contains an arrow or sum.
inline Type derivative_type(const Type& t, const Type& t0) {
  switch (t0.kind()) {
    case Type::Kind::Base:
      return t;
    case Type::Kind::Product: {
      std::vector<Type> comps;
      comps.reserve(t0.components().size());
      for (const auto& c : t0.components())
        comps.push_back(derivative_type(t, c));
      return Type::product(std::move(comps));
    }
    default:
      throw TypeError(TypeError::Kind::NoDerivativeType, "TDer",
                      "arrow/sum-free denominator type", type_to_string(t0),
                      Term::var("_"));
  }
}

namespace detail {

// Inverse of derivative_type in its first argument: find T* with
// derivative_type(T*, t0) == s. Deterministic because the notation is
// injective in T* for a fixed arrow/sum-free t0.
inline std::optional<Type> integrate_type(const Type& s, const Type& t0) {
  switch (t0.kind()) {
    case Type::Kind::Base:
      return s;
    case Type::Kind::Product: {
      if (!s.is_product() ||
          s.components().size() != t0.components().size())
        return std::nullopt;
      std::optional<Type> found;
      for (std::size_t i = 0; i < t0.components().size(); ++i) {
        auto ti = integrate_type(s.components()[i], t0.components()[i]);
        if (!ti) return std::nullopt;
        if (found && !(*found == *ti)) return std::nullopt;
        found = ti;
      }
      return found;
    }
    default:
      return std::nullopt;
  }
}

}  // namespace detail

// Types of named constants: rational literals are R; everything else comes
// from the primitive table (unary functions over R).
inline std::optional<Type> constant_type(
    const std::string& name,
    const PrimitiveTable& table = PrimitiveTable::defaults()) {
  if (parse_rational(name)) return Type::real();
  if (const PrimitiveSignature* sig = table.find(name)) {
    Type ty = Type::real();
    for (unsigned i = 0; i < sig->arity; ++i) ty = Type::arrow(Type::real(), ty);
    return ty;
  }
  return std::nullopt;
}

// The discrete fragment replaces Der/Int with DDer and keeps multiplication
// only on the base ring.
enum class CalculusMode { Analytical, Discrete };

inline Type typecheck(const TypingContext& ctx, const Term& t,
                      const PrimitiveTable& table = PrimitiveTable::defaults(),
                      CalculusMode mode = CalculusMode::Analytical) {
  auto check = [&](const TypingContext& c, const Term& u) {
    return typecheck(c, u, table, mode);
  };
  switch (t.kind()) {
    case Term::Kind::Const: {
      auto declared = constant_type(t.const_name(), table);
      if (!declared)
        throw TypeError(TypeError::Kind::UnboundVariable, "TCon",
                        "a signed constant", "'" + t.const_name() + "'", t);
      if (!(*declared == t.const_type()))
        throw TypeError(TypeError::Kind::ApplicationMismatch, "TCon",
                        type_to_string(*declared),
                        type_to_string(t.const_type()), t);
      return t.const_type();
    }
    case Term::Kind::Var: {
      auto ty = ctx.lookup(t.var_name());
      if (!ty)
        throw TypeError(TypeError::Kind::UnboundVariable, "TVar",
                        "a bound variable", "'" + t.var_name() + "'", t);
      return *ty;
    }
    case Term::Kind::Lam: {
      Type body = check(ctx.extend(t.lam_var(), t.lam_annot()), t.lam_body());
      return Type::arrow(t.lam_annot(), body);
    }
    case Term::Kind::App: {
      Type fun = check(ctx, t.app_fun());
      Type arg = check(ctx, t.app_arg());
      if (!fun.is_arrow())
        throw TypeError(TypeError::Kind::ApplicationMismatch, "TApp",
                        "a function type", type_to_string(fun), t);
      if (!(fun.domain() == arg))
        throw TypeError(TypeError::Kind::ApplicationMismatch, "TApp",
                        type_to_string(fun.domain()), type_to_string(arg), t);
      return fun.codomain();
    }
    case Term::Kind::Tuple: {
      std::vector<Type> comps;
      comps.reserve(t.tuple_items().size());
      for (const auto& item : t.tuple_items())
        comps.push_back(check(ctx, item));
      return Type::product(std::move(comps));
    }
    case Term::Kind::Proj: {
      Type tup = check(ctx, t.proj_tuple());
      if (!tup.is_product())
        throw TypeError(TypeError::Kind::ProjectionOutOfRange, "TProj",
                        "a product type", type_to_string(tup), t);
      int n = static_cast<int>(tup.components().size());
      if (t.proj_index() < 1 || t.proj_index() > n)
        throw TypeError(TypeError::Kind::ProjectionOutOfRange, "TProj",
                        "index in [1," + std::to_string(n) + "]",
                        "pi" + std::to_string(t.proj_index()), t);
      return tup.components()[t.proj_index() - 1];
    }
    case Term::Kind::Add:
    case Term::Kind::Sub: {
      const char* rule = t.is(Term::Kind::Add) ? "TAdd" : "TSub";
      Type l = check(ctx, t.lhs());
      Type r = check(ctx, t.rhs());
      if (!(l == r))
        throw TypeError(TypeError::Kind::NotAddable, rule, type_to_string(l),
                        type_to_string(r), t);
      if (!is_addable(l))
        throw TypeError(TypeError::Kind::NotAddable, rule, "an addable type",
                        type_to_string(l), t);
      return l;
    }
    case Term::Kind::Mul: {
      Type s = check(ctx, t.lhs());
      Type arg = check(ctx, t.rhs());
      if (mode == CalculusMode::Discrete) {
        if (!s.is_base() || !arg.is_base())
          throw TypeError(TypeError::Kind::ApplicationMismatch, "TMul",
                          "base-type operands in the discrete fragment",
                          type_to_string(s) + " * " + type_to_string(arg), t);
        return s;
      }
      if (arg.contains_arrow_or_sum())
        throw TypeError(TypeError::Kind::NoDerivativeType, "TMul",
                        "an arrow/sum-free multiplier type",
                        type_to_string(arg), t);
      auto target = detail::integrate_type(s, arg);
      if (!target)
        throw TypeError(TypeError::Kind::ArityMismatch, "TMul",
                        "dT*/d" + type_to_string(arg), type_to_string(s), t);
      if (!is_addable(*target))
        throw TypeError(TypeError::Kind::NotAddable, "TMul",
                        "an addable result type", type_to_string(*target), t);
      return *target;
    }
    case Term::Kind::Der: {
      if (mode == CalculusMode::Discrete)
        throw TypeError(TypeError::Kind::NoDerivativeType, "TDer",
                        "a discrete derivative", "an analytical derivative", t);
      Type at = check(ctx, t.der_at());
      Type body = check(ctx.extend(t.der_var(), at), t.der_body());
      if (at.contains_arrow_or_sum())
        throw TypeError(TypeError::Kind::NoDerivativeType, "TDer",
                        "an arrow/sum-free point type", type_to_string(at), t);
      return derivative_type(body, at);
    }
    case Term::Kind::Int: {
      if (mode == CalculusMode::Discrete)
        throw TypeError(TypeError::Kind::NoDerivativeType, "TInt",
                        "no integration in the discrete fragment",
                        "an integral", t);
      Type lo = check(ctx, t.int_lo());
      Type hi = check(ctx, t.int_hi());
      if (!(lo == hi))
        throw TypeError(TypeError::Kind::BranchMismatch, "TInt",
                        type_to_string(lo), type_to_string(hi), t);
      if (lo.contains_arrow_or_sum())
        throw TypeError(TypeError::Kind::NoDerivativeType, "TInt",
                        "arrow/sum-free bound types", type_to_string(lo), t);
      Type body = check(ctx.extend(t.int_var(), lo), t.int_body());
      auto target = detail::integrate_type(body, lo);
      if (!target)
        throw TypeError(TypeError::Kind::ArityMismatch, "TInt",
                        "dT*/d" + type_to_string(lo), type_to_string(body), t);
      if (!is_addable(*target))
        throw TypeError(TypeError::Kind::NotAddable, "TInt",
                        "an addable result type", type_to_string(*target), t);
      return *target;
    }
    case Term::Kind::Inl:
    case Term::Kind::Inr: {
      const char* rule = t.is(Term::Kind::Inl) ? "TInl" : "TInr";
      const Type& annot = t.inj_annot();
      if (!annot.is_sum())
        throw TypeError(TypeError::Kind::AnnotationRequired, rule,
                        "a sum-type annotation", type_to_string(annot), t);
      Type payload = check(ctx, t.inj_payload());
      const Type& want =
          t.is(Term::Kind::Inl) ? annot.left() : annot.right();
      if (!(payload == want))
        throw TypeError(TypeError::Kind::AnnotationRequired, rule,
                        type_to_string(want), type_to_string(payload), t);
      return annot;
    }
    case Term::Kind::Case: {
      Type scrut = check(ctx, t.case_scrutinee());
      if (!scrut.is_sum())
        throw TypeError(TypeError::Kind::BranchMismatch, "TCase",
                        "a sum type", type_to_string(scrut), t);
      Type l = check(ctx.extend(t.case_lvar(), scrut.left()), t.case_lbranch());
      Type r = check(ctx.extend(t.case_rvar(), scrut.right()), t.case_rbranch());
      if (!(l == r))
        throw TypeError(TypeError::Kind::BranchMismatch, "TCase",
                        type_to_string(l), type_to_string(r), t);
      return l;
    }
    case Term::Kind::Fix: {
      Type f = check(ctx, t.fix_body());
      if (!f.is_arrow() || !(f.domain() == f.codomain()))
        throw TypeError(TypeError::Kind::ApplicationMismatch, "TFix",
                        "a type T->T", type_to_string(f), t);
      return f.domain();
    }
    case Term::Kind::DDer: {
      if (mode != CalculusMode::Discrete)
        throw TypeError(TypeError::Kind::ApplicationMismatch, "TDer",
                        "an analytical term",
                        "a discrete derivative (see the discrete fragment)", t);
      Type at = check(ctx, t.dder_at());
      Type delta = check(ctx, t.dder_delta());
      if (!(at == delta))
        throw TypeError(TypeError::Kind::BranchMismatch, "TDDer",
                        type_to_string(at), type_to_string(delta), t);
      if (!is_addable(at))
        throw TypeError(TypeError::Kind::NotAddable, "TDDer",
                        "an addable point type", type_to_string(at), t);
      Type body = check(ctx.extend(t.dder_var(), at), t.dder_body());
      if (!is_addable(body))
        throw TypeError(TypeError::Kind::NotAddable, "TDDer",
                        "an addable body type", type_to_string(body), t);
      return body;
    }
  }
  throw std::logic_error("typecheck: unreachable");
}

}  // namespace diffcalc
