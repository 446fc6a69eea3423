#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "diffcalc/embed.hpp"
#include "diffcalc/reduce.hpp"
#include "diffcalc/syntax.hpp"
#include "diffcalc/typecheck.hpp"

namespace diffcalc {

// Equality between terms that fail to normalize within fuel is undefined.
class FuelExhaustedError : public std::runtime_error {
 public:
  explicit FuelExhaustedError(const std::string& what)
      : std::runtime_error("fuel exhausted: " + what) {}
};

struct EqConfig {
  Fuel fuel{100000};
  int trials = 8;  // open-term substitution samples
  std::uint64_t seed = kDefaultEqSeed;

  ExprEqConfig expr_config() const { return ExprEqConfig{seed, 16, 1e-9}; }
};

struct EqWitness {
  std::vector<std::pair<std::string, Term>> substitution;
  Term lhs_nf;
  Term rhs_nf;
  std::string position;
};

struct EqResult {
  bool equal = false;
  std::optional<EqWitness> witness;
};

// ---------------------------------------------------------------------------
// Instantiation helpers. Function-typed unknowns become random lambdas whose
// bodies are degree-<=2 polynomials in the argument's base components; sum
// types are sampled on both sides across trials.
// ---------------------------------------------------------------------------

namespace eqdetail {

inline void collect_base_reads(const Term& access, const Type& ty,
                               std::vector<Term>& out) {
  switch (ty.kind()) {
    case Type::Kind::Base:
      out.push_back(access);
      return;
    case Type::Kind::Product: {
      const auto& cs = ty.components();
      for (std::size_t j = 0; j < cs.size(); ++j)
        collect_base_reads(Term::proj(static_cast<int>(j) + 1, access), cs[j],
                           out);
      return;
    }
    default:
      return;  // no direct base reads through arrows or sums
  }
}

inline Term random_poly_expr(const std::vector<Term>& reads,
                             std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coeff(-2, 2);
  Term acc = Term::rat(coeff(rng));
  for (const auto& r : reads) {
    int c = coeff(rng);
    if (c != 0) acc = Term::add(acc, Term::mul(Term::rat(c), r));
  }
  if (!reads.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, reads.size() - 1);
    for (int q = 0; q < 2; ++q) {
      int c = coeff(rng);
      if (c == 0) continue;
      const Term& a = reads[pick(rng)];
      const Term& b = reads[pick(rng)];
      acc = Term::add(acc, Term::mul(Term::mul(Term::rat(c), a), b));
    }
  }
  return acc;
}

inline Term build_of_type(const Type& ty, std::vector<Term> reads,
                          std::mt19937_64& rng, std::set<std::string>& avoid);

inline Term random_poly_lambda(const Type& ty, std::mt19937_64& rng,
                               std::set<std::string>& avoid) {
  std::string name = fresh_var("u", avoid);
  avoid.insert(name);
  std::vector<Term> reads;
  collect_base_reads(Term::var(name), ty.domain(), reads);
  Term body = build_of_type(ty.codomain(), std::move(reads), rng, avoid);
  return Term::lam(name, ty.domain(), body);
}

inline Term build_of_type(const Type& ty, std::vector<Term> reads,
                          std::mt19937_64& rng, std::set<std::string>& avoid) {
  switch (ty.kind()) {
    case Type::Kind::Base:
      return random_poly_expr(reads, rng);
    case Type::Kind::Product: {
      std::vector<Term> items;
      items.reserve(ty.components().size());
      for (const auto& c : ty.components())
        items.push_back(build_of_type(c, reads, rng, avoid));
      return Term::tuple(std::move(items));
    }
    case Type::Kind::Arrow: {
      std::string name = fresh_var("u", avoid);
      avoid.insert(name);
      std::vector<Term> inner = reads;
      collect_base_reads(Term::var(name), ty.domain(), inner);
      Term body = build_of_type(ty.codomain(), std::move(inner), rng, avoid);
      return Term::lam(name, ty.domain(), body);
    }
    case Type::Kind::Sum: {
      bool left = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
      Term payload =
          build_of_type(left ? ty.left() : ty.right(), reads, rng, avoid);
      return left ? Term::inl(payload, ty) : Term::inr(payload, ty);
    }
  }
  throw std::logic_error("build_of_type: unreachable");
}

struct Candidate {
  Term arg;
  std::vector<std::pair<std::string, Type>> bindings;
};

// Shared arguments for extensional comparison at a given domain type: fresh
// symbolic variables through base/product/interpretable-arrow structure, one
// candidate per sum side, deterministic polynomial lambdas elsewhere.
inline std::vector<Candidate> argument_candidates(const Type& ty,
                                                  std::set<std::string>& avoid,
                                                  std::mt19937_64& rng) {
  switch (ty.kind()) {
    case Type::Kind::Base: {
      std::string z = fresh_var("z", avoid);
      avoid.insert(z);
      return {{Term::var(z), {{z, ty}}}};
    }
    case Type::Kind::Product: {
      std::vector<Candidate> acc{{Term(), {}}};
      std::vector<std::vector<Candidate>> per_comp;
      for (const auto& c : ty.components())
        per_comp.push_back(argument_candidates(c, avoid, rng));
      std::vector<std::vector<std::size_t>> picks{{}};
      for (const auto& options : per_comp) {
        std::vector<std::vector<std::size_t>> next;
        for (const auto& prefix : picks)
          for (std::size_t i = 0; i < options.size(); ++i) {
            auto p = prefix;
            p.push_back(i);
            next.push_back(std::move(p));
          }
        picks = std::move(next);
      }
      std::vector<Candidate> out;
      for (const auto& pick : picks) {
        Candidate cand;
        std::vector<Term> items;
        for (std::size_t j = 0; j < pick.size(); ++j) {
          const Candidate& comp = per_comp[j][pick[j]];
          items.push_back(comp.arg);
          cand.bindings.insert(cand.bindings.end(), comp.bindings.begin(),
                               comp.bindings.end());
        }
        cand.arg = Term::tuple(std::move(items));
        out.push_back(std::move(cand));
      }
      return out;
    }
    case Type::Kind::Arrow: {
      if (ty.is_interpretable()) {
        std::string z = fresh_var("zf", avoid);
        avoid.insert(z);
        return {{Term::var(z), {{z, ty}}}};
      }
      return {{random_poly_lambda(ty, rng, avoid), {}}};
    }
    case Type::Kind::Sum: {
      std::vector<Candidate> out;
      for (auto& c : argument_candidates(ty.left(), avoid, rng)) {
        c.arg = Term::inl(c.arg, ty);
        out.push_back(std::move(c));
      }
      for (auto& c : argument_candidates(ty.right(), avoid, rng)) {
        c.arg = Term::inr(c.arg, ty);
        out.push_back(std::move(c));
      }
      return out;
    }
  }
  throw std::logic_error("argument_candidates: unreachable");
}

}  // namespace eqdetail

// ---------------------------------------------------------------------------
// Normal-form equality: base types through the interpreter, tuples pointwise,
// lambdas extensionally via shared fresh arguments, injections by
// constructor.
// ---------------------------------------------------------------------------

namespace eqdetail {

inline Term normalize_or_throw(const TypingContext& ctx, const Term& t,
                               const EqConfig& cfg,
                               const PrimitiveTable& table) {
  auto r = normalize(ctx, t, cfg.fuel, nullptr, table);
  if (!r.normalized())
    throw FuelExhaustedError("while normalizing " + term_excerpt(t));
  return r.term;
}

inline bool nf_eq_rec(const TypingContext& ctx, const Term& a, const Term& b,
                      const EqConfig& cfg, const PrimitiveTable& table,
                      const std::string& pos, std::string* where) {
  auto fail = [&](const std::string& p) {
    if (where && where->empty()) *where = p.empty() ? "root" : p;
    return false;
  };
  Type ta = typecheck(ctx, a, table);
  Type tb = typecheck(ctx, b, table);
  if (!(ta == tb)) return fail(pos + "type");
  switch (ta.kind()) {
    case Type::Kind::Base: {
      bool ok = expr_eq(embed(ctx, a, table), embed(ctx, b, table),
                        cfg.expr_config());
      return ok ? true : fail(pos + "base");
    }
    case Type::Kind::Product: {
      if (!a.is(Term::Kind::Tuple) || !b.is(Term::Kind::Tuple))
        return alpha_eq(a, b) ? true : fail(pos + "tuple");
      const auto& ia = a.tuple_items();
      const auto& ib = b.tuple_items();
      if (ia.size() != ib.size()) return fail(pos + "arity");
      for (std::size_t i = 0; i < ia.size(); ++i)
        if (!nf_eq_rec(ctx, ia[i], ib[i], cfg, table,
                       pos + "pi" + std::to_string(i + 1) + ".", where))
          return false;
      return true;
    }
    case Type::Kind::Arrow: {
      std::set<std::string> avoid = ctx.names();
      auto fa = free_vars(a);
      auto fb = free_vars(b);
      avoid.insert(fa.begin(), fa.end());
      avoid.insert(fb.begin(), fb.end());
      std::mt19937_64 rng(cfg.seed);
      for (const auto& cand :
           eqdetail::argument_candidates(ta.domain(), avoid, rng)) {
        TypingContext ctx2 = ctx;
        for (const auto& [n, ty] : cand.bindings) ctx2 = ctx2.extend(n, ty);
        Term na = normalize_or_throw(ctx2, Term::app(a, cand.arg), cfg, table);
        Term nb = normalize_or_throw(ctx2, Term::app(b, cand.arg), cfg, table);
        if (!nf_eq_rec(ctx2, na, nb, cfg, table, pos + "applied.", where))
          return false;
      }
      return true;
    }
    case Type::Kind::Sum: {
      bool both_inl = a.is(Term::Kind::Inl) && b.is(Term::Kind::Inl);
      bool both_inr = a.is(Term::Kind::Inr) && b.is(Term::Kind::Inr);
      if (!both_inl && !both_inr) return fail(pos + "constructor");
      return nf_eq_rec(ctx, a.inj_payload(), b.inj_payload(), cfg, table,
                       pos + (both_inl ? "inl." : "inr."), where);
    }
  }
  throw std::logic_error("nf_eq_rec: unreachable");
}

}  // namespace eqdetail

inline bool nf_eq(const TypingContext& ctx, const Term& n1, const Term& n2,
                  const EqConfig& cfg = {},
                  const PrimitiveTable& table = PrimitiveTable::defaults(),
                  std::string* where = nullptr) {
  return eqdetail::nf_eq_rec(ctx, n1, n2, cfg, table, "", where);
}

inline bool nf_eq(const Term& n1, const Term& n2, const EqConfig& cfg = {}) {
  return nf_eq(TypingContext{}, n1, n2, cfg);
}

// ---------------------------------------------------------------------------
// Open-term equality. Free base variables stay symbolic; free variables of
// tuple type become tuples of fresh base variables; function- and sum-typed
// free variables are instantiated per trial. `true` means not falsified;
// `false` comes with a concrete witness substitution.
// ---------------------------------------------------------------------------

namespace eqdetail {

inline bool type_needs_sampling(const Type& ty) {
  switch (ty.kind()) {
    case Type::Kind::Base:
      return false;
    case Type::Kind::Product: {
      for (const auto& c : ty.components())
        if (type_needs_sampling(c)) return true;
      return false;
    }
    default:
      return true;  // arrows and sums
  }
}

// Deterministic part of instantiation; arrows/sums delegate to the trial rng.
inline Term instantiate_var(const Type& ty, int trial, std::mt19937_64& rng,
                            std::set<std::string>& avoid,
                            std::vector<std::pair<std::string, Type>>& fresh) {
  switch (ty.kind()) {
    case Type::Kind::Base: {
      std::string z = fresh_var("z", avoid);
      avoid.insert(z);
      fresh.emplace_back(z, ty);
      return Term::var(z);
    }
    case Type::Kind::Product: {
      std::vector<Term> items;
      items.reserve(ty.components().size());
      for (const auto& c : ty.components())
        items.push_back(instantiate_var(c, trial, rng, avoid, fresh));
      return Term::tuple(std::move(items));
    }
    case Type::Kind::Arrow:
      return random_poly_lambda(ty, rng, avoid);
    case Type::Kind::Sum: {
      bool left = trial == 0   ? true
                  : trial == 1 ? false
                               : std::uniform_int_distribution<int>(0, 1)(rng) == 0;
      Term payload = instantiate_var(left ? ty.left() : ty.right(), trial, rng,
                                     avoid, fresh);
      return left ? Term::inl(payload, ty) : Term::inr(payload, ty);
    }
  }
  throw std::logic_error("instantiate_var: unreachable");
}

}  // namespace eqdetail

inline EqResult term_eq(const TypingContext& ctx, const Term& t1,
                        const Term& t2, const EqConfig& cfg = {},
                        const PrimitiveTable& table = PrimitiveTable::defaults()) {
  EqResult out;
  Type ty1 = typecheck(ctx, t1, table);
  Type ty2 = typecheck(ctx, t2, table);
  if (!(ty1 == ty2)) {
    out.equal = false;
    out.witness = EqWitness{{}, t1, t2, "type"};
    return out;
  }

  std::set<std::string> fv = free_vars(t1);
  auto fv2 = free_vars(t2);
  fv.insert(fv2.begin(), fv2.end());

  // rightmost binding wins for duplicated names
  std::vector<std::pair<std::string, Type>> plan;
  for (const auto& name : fv) {
    auto ty = ctx.lookup(name);
    if (ty) plan.emplace_back(name, *ty);
  }

  bool sampling = false;
  for (const auto& [n, ty] : plan)
    sampling = sampling || eqdetail::type_needs_sampling(ty);
  int trials = sampling ? std::max(1, cfg.trials) : 1;

  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ull * (trial + 1));
    std::set<std::string> avoid = fv;
    auto cn = ctx.names();
    avoid.insert(cn.begin(), cn.end());

    TypingContext ctx2;
    std::vector<std::pair<std::string, Term>> substitution;
    Term a = t1;
    Term b = t2;
    for (const auto& [name, ty] : plan) {
      if (ty.is_base()) {
        ctx2 = ctx2.extend(name, ty);
        continue;
      }
      std::vector<std::pair<std::string, Type>> fresh;
      Term inst = eqdetail::instantiate_var(ty, trial, rng, avoid, fresh);
      for (const auto& [n2, ty2b] : fresh) ctx2 = ctx2.extend(n2, ty2b);
      substitution.emplace_back(name, inst);
      a = substitute(a, name, inst);
      b = substitute(b, name, inst);
    }

    Term na = eqdetail::normalize_or_throw(ctx2, a, cfg, table);
    Term nb = eqdetail::normalize_or_throw(ctx2, b, cfg, table);
    std::string where;
    if (!eqdetail::nf_eq_rec(ctx2, na, nb, cfg, table, "", &where)) {
      out.equal = false;
      out.witness = EqWitness{std::move(substitution), na, nb, where};
      return out;
    }
  }
  out.equal = true;
  return out;
}

inline EqResult term_eq(const Term& t1, const Term& t2,
                        const EqConfig& cfg = {}) {
  return term_eq(TypingContext{}, t1, t2, cfg);
}

}  // namespace diffcalc
