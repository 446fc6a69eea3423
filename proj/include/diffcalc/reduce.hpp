#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffcalc/printer.hpp"
#include "diffcalc/syntax.hpp"
#include "diffcalc/typecheck.hpp"

namespace diffcalc {

enum class RuleName {
  Beta,
  Proj,
  CaseInl,
  CaseInr,
  FixUnfold,
  EAppDer1,
  EAppDer2,
  EAppDer3,
  EAppDer4,
  EAppInt1,
  EAppInt2,
  EAppInt3,
  EAppInt4,
  EAppAdd1,
  EAppAdd2,
  EAppSub1,
  EAppSub2,
  EAppMul1,
  EAppMul2,
  EAppMul3,
  EAppMul4,
  // discrete fragment
  DDeltaConst,
  DDeltaVar,
  DDeltaLam,
  DDeltaExpand,
};

inline const char* rule_name(RuleName r) {
  switch (r) {
    case RuleName::Beta: return "Beta";
    case RuleName::Proj: return "Proj";
    case RuleName::CaseInl: return "CaseInl";
    case RuleName::CaseInr: return "CaseInr";
    case RuleName::FixUnfold: return "FixUnfold";
    case RuleName::EAppDer1: return "EAppDer1";
    case RuleName::EAppDer2: return "EAppDer2";
    case RuleName::EAppDer3: return "EAppDer3";
    case RuleName::EAppDer4: return "EAppDer4";
    case RuleName::EAppInt1: return "EAppInt1";
    case RuleName::EAppInt2: return "EAppInt2";
    case RuleName::EAppInt3: return "EAppInt3";
    case RuleName::EAppInt4: return "EAppInt4";
    case RuleName::EAppAdd1: return "EAppAdd1";
    case RuleName::EAppAdd2: return "EAppAdd2";
    case RuleName::EAppSub1: return "EAppSub1";
    case RuleName::EAppSub2: return "EAppSub2";
    case RuleName::EAppMul1: return "EAppMul1";
    case RuleName::EAppMul2: return "EAppMul2";
    case RuleName::EAppMul3: return "EAppMul3";
    case RuleName::EAppMul4: return "EAppMul4";
    case RuleName::DDeltaConst: return "DDeltaConst";
    case RuleName::DDeltaVar: return "DDeltaVar";
    case RuleName::DDeltaLam: return "DDeltaLam";
    case RuleName::DDeltaExpand: return "DDeltaExpand";
  }
  return "?";
}

class StuckTermError : public std::logic_error {
 public:
  explicit StuckTermError(const Term& t)
      : std::logic_error(
            "stuck term (no rule applies to a non-normal form): " +
            term_excerpt(t, 120)),
        term_(t) {}
  const Term& term() const { return term_; }

 private:
  Term term_;
};

struct ReductionStep {
  RuleName rule;
  std::vector<int> redex_path;  // structural child indices from the root
  Term before;                  // whole term before the step
  Term after;                   // whole term after the step
};

struct ReductionTrace {
  std::vector<ReductionStep> steps;
};

struct Fuel {
  std::uint64_t remaining = 100000;
};

struct Redex {
  std::vector<int> path;
  RuleName rule;
  Term reduct;  // replacement for the subterm at path
};

inline std::optional<Redex> find_redex(const TypingContext& ctx,
                                       const Term& t,
                                       const PrimitiveTable& table,
                                       CalculusMode mode);

namespace detail {

inline std::pair<std::string, Term> rename_binder_if(
    const std::string& binder, Term body, const std::set<std::string>& conflict) {
  if (!conflict.count(binder)) return {binder, std::move(body)};
  std::set<std::string> avoid = conflict;
  auto bf = free_vars(body);
  avoid.insert(bf.begin(), bf.end());
  std::string fresh = fresh_var(binder, avoid);
  return {fresh, substitute(body, binder, Term::var(fresh))};
}

// (\x:T.t1) op (\y:T.t2)  ->  \x:T. (t1 op t2[x/y]), renaming the binder when
// x occurs free in t2.
inline Term merge_lambdas(Term::Kind op, const Term& l, const Term& r) {
  const std::string& x = l.lam_var();
  const std::string& y = r.lam_var();
  std::set<std::string> conflict;
  if (x != y) {
    auto rf = free_vars(r.lam_body());
    if (rf.count(x)) conflict.insert(x);
  }
  auto [z, b1] = rename_binder_if(x, l.lam_body(), conflict);
  Term b2 = substitute(r.lam_body(), y, Term::var(z));
  Term body = op == Term::Kind::Add ? Term::add(b1, b2) : Term::sub(b1, b2);
  return Term::lam(z, l.lam_annot(), body);
}

inline bool base_typed(const TypingContext& ctx, const Term& t,
                       const PrimitiveTable& table, CalculusMode mode) {
  return typecheck(ctx, t, table, mode).is_base();
}

inline Term fold_add(std::vector<Term> terms) {
  Term acc = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i)
    acc = Term::add(acc, terms[i]);
  return acc;
}

}  // namespace detail

// The rule table at one node. Premises about base types are typing premises;
// premises about tuple points/bounds require literal tuples.
inline std::optional<std::pair<RuleName, Term>> try_root_rule(
    const TypingContext& ctx, const Term& t,
    const PrimitiveTable& table = PrimitiveTable::defaults(),
    CalculusMode mode = CalculusMode::Analytical) {
  using K = Term::Kind;
  switch (t.kind()) {
    case K::App:
      if (t.app_fun().is(K::Lam)) {
        const Term& f = t.app_fun();
        return {{RuleName::Beta,
                 substitute(f.lam_body(), f.lam_var(), t.app_arg())}};
      }
      return std::nullopt;
    case K::Proj:
      if (t.proj_tuple().is(K::Tuple)) {
        const auto& items = t.proj_tuple().tuple_items();
        return {{RuleName::Proj,
                 items.at(static_cast<std::size_t>(t.proj_index() - 1))}};
      }
      return std::nullopt;
    case K::Case: {
      const Term& s = t.case_scrutinee();
      if (s.is(K::Inl))
        return {{RuleName::CaseInl,
                 substitute(t.case_lbranch(), t.case_lvar(), s.inj_payload())}};
      if (s.is(K::Inr))
        return {{RuleName::CaseInr,
                 substitute(t.case_rbranch(), t.case_rvar(), s.inj_payload())}};
      return std::nullopt;
    }
    case K::Fix:
      return {{RuleName::FixUnfold, Term::app(t.fix_body(), t)}};
    case K::Add:
    case K::Sub: {
      bool is_add = t.is(K::Add);
      const Term& l = t.lhs();
      const Term& r = t.rhs();
      if (l.is(K::Tuple) && r.is(K::Tuple)) {
        const auto& li = l.tuple_items();
        const auto& ri = r.tuple_items();
        if (li.size() != ri.size()) throw StuckTermError(t);
        std::vector<Term> out;
        out.reserve(li.size());
        for (std::size_t i = 0; i < li.size(); ++i)
          out.push_back(is_add ? Term::add(li[i], ri[i])
                               : Term::sub(li[i], ri[i]));
        return {{is_add ? RuleName::EAppAdd1 : RuleName::EAppSub1,
                 Term::tuple(std::move(out))}};
      }
      if (l.is(K::Lam) && r.is(K::Lam))
        return {{is_add ? RuleName::EAppAdd2 : RuleName::EAppSub2,
                 detail::merge_lambdas(t.kind(), l, r)}};
      return std::nullopt;
    }
    case K::Mul: {
      const Term& l = t.lhs();
      const Term& r = t.rhs();
      if (l.is(K::Tuple) && r.is(K::Tuple)) {
        const auto& li = l.tuple_items();
        const auto& ri = r.tuple_items();
        if (li.size() != ri.size()) throw StuckTermError(t);
        std::vector<Term> summands;
        summands.reserve(li.size());
        for (std::size_t i = 0; i < li.size(); ++i)
          summands.push_back(Term::mul(li[i], ri[i]));
        return {{RuleName::EAppMul4, detail::fold_add(std::move(summands))}};
      }
      if (detail::base_typed(ctx, r, table, mode)) {
        if (l.is(K::Tuple)) {
          std::vector<Term> out;
          out.reserve(l.tuple_items().size());
          for (const auto& c : l.tuple_items()) out.push_back(Term::mul(c, r));
          return {{RuleName::EAppMul1, Term::tuple(std::move(out))}};
        }
        if (l.is(K::Lam)) {
          auto [z, body] =
              detail::rename_binder_if(l.lam_var(), l.lam_body(), free_vars(r));
          return {{RuleName::EAppMul2,
                   Term::lam(z, l.lam_annot(), Term::mul(body, r))}};
        }
        if (l.is(K::Inl) || l.is(K::Inr)) {
          Term payload = Term::mul(l.inj_payload(), r);
          Term out = l.is(K::Inl) ? Term::inl(payload, l.inj_annot())
                                  : Term::inr(payload, l.inj_annot());
          return {{RuleName::EAppMul3, out}};
        }
      }
      return std::nullopt;
    }
    case K::Der: {
      const Term& body = t.der_body();
      const Term& at = t.der_at();
      const std::string& x = t.der_var();
      if (at.is(K::Tuple)) {
        // partial differentiation: split into one derivative per component,
        // the i-th evaluated with every other coordinate frozen at the point
        const auto& pts = at.tuple_items();
        std::set<std::string> avoid = free_vars(body);
        avoid.insert(x);
        for (const auto& p : pts) {
          auto pf = free_vars(p);
          avoid.insert(pf.begin(), pf.end());
        }
        std::vector<Term> comps;
        comps.reserve(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
          std::string xi = fresh_var(x, avoid);
          avoid.insert(xi);
          std::vector<Term> point = pts;
          point[i] = Term::var(xi);
          Term substituted = substitute(body, x, Term::tuple(std::move(point)));
          comps.push_back(Term::der(substituted, xi, pts[i]));
        }
        return {{RuleName::EAppDer4, Term::tuple(std::move(comps))}};
      }
      if (detail::base_typed(ctx, at, table, mode)) {
        if (body.is(K::Tuple)) {
          std::vector<Term> out;
          out.reserve(body.tuple_items().size());
          for (const auto& c : body.tuple_items())
            out.push_back(Term::der(c, x, at));
          return {{RuleName::EAppDer1, Term::tuple(std::move(out))}};
        }
        if (body.is(K::Inl) || body.is(K::Inr)) {
          Term payload = Term::der(body.inj_payload(), x, at);
          Term out = body.is(K::Inl) ? Term::inl(payload, body.inj_annot())
                                     : Term::inr(payload, body.inj_annot());
          return {{RuleName::EAppDer2, out}};
        }
        if (body.is(K::Lam)) {
          std::set<std::string> conflict = free_vars(at);
          conflict.insert(x);
          auto [z, b] =
              detail::rename_binder_if(body.lam_var(), body.lam_body(), conflict);
          return {{RuleName::EAppDer3,
                   Term::lam(z, body.lam_annot(), Term::der(b, x, at))}};
        }
      }
      return std::nullopt;
    }
    case K::Int: {
      const Term& lo = t.int_lo();
      const Term& hi = t.int_hi();
      const Term& body = t.int_body();
      const std::string& x = t.int_var();
      if (lo.is(K::Tuple) && hi.is(K::Tuple)) {
        // staircase decomposition: component i integrates with earlier
        // coordinates at the upper bound and later ones at the lower bound
        const auto& los = lo.tuple_items();
        const auto& his = hi.tuple_items();
        if (los.size() != his.size()) throw StuckTermError(t);
        std::set<std::string> avoid = free_vars(body);
        avoid.insert(x);
        for (const auto& p : los) {
          auto pf = free_vars(p);
          avoid.insert(pf.begin(), pf.end());
        }
        for (const auto& p : his) {
          auto pf = free_vars(p);
          avoid.insert(pf.begin(), pf.end());
        }
        std::vector<Term> summands;
        summands.reserve(los.size());
        for (std::size_t i = 0; i < los.size(); ++i) {
          std::string xi = fresh_var(x, avoid);
          avoid.insert(xi);
          std::vector<Term> point;
          point.reserve(los.size());
          for (std::size_t j = 0; j < los.size(); ++j) {
            if (j < i)
              point.push_back(his[j]);
            else if (j == i)
              point.push_back(Term::var(xi));
            else
              point.push_back(los[j]);
          }
          Term substituted = substitute(body, x, Term::tuple(std::move(point)));
          summands.push_back(
              Term::integral(los[i], his[i],
                             Term::proj(static_cast<int>(i) + 1, substituted),
                             xi));
        }
        return {{RuleName::EAppInt4, detail::fold_add(std::move(summands))}};
      }
      if (detail::base_typed(ctx, lo, table, mode) &&
          detail::base_typed(ctx, hi, table, mode)) {
        if (body.is(K::Tuple)) {
          std::vector<Term> out;
          out.reserve(body.tuple_items().size());
          for (const auto& c : body.tuple_items())
            out.push_back(Term::integral(lo, hi, c, x));
          return {{RuleName::EAppInt1, Term::tuple(std::move(out))}};
        }
        if (body.is(K::Inl) || body.is(K::Inr)) {
          Term payload = Term::integral(lo, hi, body.inj_payload(), x);
          Term out = body.is(K::Inl) ? Term::inl(payload, body.inj_annot())
                                     : Term::inr(payload, body.inj_annot());
          return {{RuleName::EAppInt2, out}};
        }
        if (body.is(K::Lam)) {
          std::set<std::string> conflict = free_vars(lo);
          auto hf = free_vars(hi);
          conflict.insert(hf.begin(), hf.end());
          conflict.insert(x);
          auto [z, b] =
              detail::rename_binder_if(body.lam_var(), body.lam_body(), conflict);
          return {{RuleName::EAppInt3,
                   Term::lam(z, body.lam_annot(), Term::integral(lo, hi, b, x))}};
        }
      }
      return std::nullopt;
    }
    case K::DDer: {
      if (mode != CalculusMode::Discrete)
        throw std::logic_error(
            "discrete derivative reached the analytical reducer");
      const Term& body = t.dder_body();
      const Term& at = t.dder_at();
      const Term& delta = t.dder_delta();
      const std::string& x = t.dder_var();
      if (body.is(K::Const) && body.const_type().is_base())
        return {{RuleName::DDeltaConst, Term::rat(0)}};
      if (body.is(K::Var) && body.var_name() == x)
        return {{RuleName::DDeltaVar, delta}};
      if (body.is(K::Lam)) {
        std::set<std::string> conflict = free_vars(at);
        auto df = free_vars(delta);
        conflict.insert(df.begin(), df.end());
        conflict.insert(x);
        auto [z, b] =
            detail::rename_binder_if(body.lam_var(), body.lam_body(), conflict);
        return {{RuleName::DDeltaLam,
                 Term::lam(z, body.lam_annot(), Term::dder(b, x, at, delta))}};
      }
      Type at_ty = typecheck(ctx, at, table, mode);
      if (!find_redex(ctx.extend(x, at_ty), body, table, mode)) {
        // the base requirement, applied once the numerator is irreducible:
        // Dt/Dx|_{t0,t1} = t[t0 (+) t1 / x] (-) t[t0 / x]
        Term bumped = substitute(body, x, Term::add(at, delta));
        Term base = substitute(body, x, at);
        return {{RuleName::DDeltaExpand, Term::sub(bumped, base)}};
      }
      return std::nullopt;
    }
    default:
      return std::nullopt;
  }
}

namespace detail {

// Search order per node; pairs of (structural child index, context for it).
// Der/Int visit points/bounds before bodies.
inline std::vector<std::pair<int, TypingContext>> search_order(
    const TypingContext& ctx, const Term& t, const PrimitiveTable& table,
    CalculusMode mode) {
  using K = Term::Kind;
  switch (t.kind()) {
    case K::Lam:
      return {{0, ctx.extend(t.lam_var(), t.lam_annot())}};
    case K::Der: {
      Type at_ty = typecheck(ctx, t.der_at(), table, mode);
      return {{1, ctx}, {0, ctx.extend(t.der_var(), at_ty)}};
    }
    case K::Int: {
      Type lo_ty = typecheck(ctx, t.int_lo(), table, mode);
      return {{0, ctx}, {1, ctx}, {2, ctx.extend(t.int_var(), lo_ty)}};
    }
    case K::DDer: {
      Type at_ty = typecheck(ctx, t.dder_at(), table, mode);
      return {{1, ctx}, {2, ctx}, {0, ctx.extend(t.dder_var(), at_ty)}};
    }
    case K::Case: {
      Type scrut_ty = typecheck(ctx, t.case_scrutinee(), table, mode);
      return {{0, ctx},
              {1, ctx.extend(t.case_lvar(), scrut_ty.left())},
              {2, ctx.extend(t.case_rvar(), scrut_ty.right())}};
    }
    default: {
      std::vector<std::pair<int, TypingContext>> out;
      for (std::size_t i = 0; i < t.children().size(); ++i)
        out.emplace_back(static_cast<int>(i), ctx);
      return out;
    }
  }
}

inline bool find_redex_rec(const TypingContext& ctx, const Term& t,
                           const PrimitiveTable& table, CalculusMode mode,
                           std::vector<int>& path, Redex& out) {
  if (auto root = try_root_rule(ctx, t, table, mode)) {
    out.path = path;
    out.rule = root->first;
    out.reduct = std::move(root->second);
    return true;
  }
  for (const auto& [i, child_ctx] : search_order(ctx, t, table, mode)) {
    path.push_back(i);
    if (find_redex_rec(child_ctx, t.children()[static_cast<std::size_t>(i)],
                       table, mode, path, out))
      return true;
    path.pop_back();
  }
  return false;
}

inline void all_redexes_rec(const TypingContext& ctx, const Term& t,
                            const PrimitiveTable& table, CalculusMode mode,
                            std::vector<int>& path, std::vector<Redex>& out) {
  if (auto root = try_root_rule(ctx, t, table, mode))
    out.push_back({path, root->first, std::move(root->second)});
  for (const auto& [i, child_ctx] : search_order(ctx, t, table, mode)) {
    path.push_back(i);
    all_redexes_rec(child_ctx, t.children()[static_cast<std::size_t>(i)], table,
                    mode, path, out);
    path.pop_back();
  }
}

}  // namespace detail

inline std::optional<Redex> find_redex(
    const TypingContext& ctx, const Term& t,
    const PrimitiveTable& table = PrimitiveTable::defaults(),
    CalculusMode mode = CalculusMode::Analytical) {
  std::vector<int> path;
  Redex out;
  if (detail::find_redex_rec(ctx, t, table, mode, path, out)) return out;
  return std::nullopt;
}

inline std::vector<Redex> find_all_redexes(
    const TypingContext& ctx, const Term& t,
    const PrimitiveTable& table = PrimitiveTable::defaults(),
    CalculusMode mode = CalculusMode::Analytical) {
  std::vector<int> path;
  std::vector<Redex> out;
  detail::all_redexes_rec(ctx, t, table, mode, path, out);
  return out;
}

// Fig. 5 grammar check. The lambda case requires an irreducible body, not a
// body in the nf grammar itself.
inline bool is_normal_form(const TypingContext& ctx, const Term& t,
                           const PrimitiveTable& table = PrimitiveTable::defaults(),
                           CalculusMode mode = CalculusMode::Analytical);

namespace detail {

inline bool matches_nb(const TypingContext& ctx, const Term& t,
                       const PrimitiveTable& table, CalculusMode mode) {
  using K = Term::Kind;
  switch (t.kind()) {
    case K::Const:
      return true;
    case K::Var: {
      auto ty = ctx.lookup(t.var_name());
      return ty && ty->is_interpretable();
    }
    case K::App:
      return matches_nb(ctx, t.app_fun(), table, mode) &&
             is_normal_form(ctx, t.app_arg(), table, mode);
    case K::Add:
    case K::Sub: {
      const Term& l = t.lhs();
      const Term& r = t.rhs();
      return (matches_nb(ctx, l, table, mode) &&
              is_normal_form(ctx, r, table, mode)) ||
             (is_normal_form(ctx, l, table, mode) &&
              matches_nb(ctx, r, table, mode));
    }
    case K::Mul:
      return matches_nb(ctx, t.lhs(), table, mode) &&
             matches_nb(ctx, t.rhs(), table, mode);
    case K::Der: {
      if (!matches_nb(ctx, t.der_at(), table, mode)) return false;
      Type at_ty = typecheck(ctx, t.der_at(), table, mode);
      if (!at_ty.is_base()) return false;
      return matches_nb(ctx.extend(t.der_var(), at_ty), t.der_body(), table,
                        mode);
    }
    case K::Int: {
      if (!matches_nb(ctx, t.int_lo(), table, mode) ||
          !matches_nb(ctx, t.int_hi(), table, mode))
        return false;
      Type lo_ty = typecheck(ctx, t.int_lo(), table, mode);
      if (!lo_ty.is_base()) return false;
      return matches_nb(ctx.extend(t.int_var(), lo_ty), t.int_body(), table,
                        mode);
    }
    default:
      return false;
  }
}

}  // namespace detail

inline bool is_normal_form(const TypingContext& ctx, const Term& t,
                           const PrimitiveTable& table, CalculusMode mode) {
  using K = Term::Kind;
  if (detail::matches_nb(ctx, t, table, mode)) return true;
  switch (t.kind()) {
    case K::Tuple: {
      for (const auto& c : t.tuple_items())
        if (!is_normal_form(ctx, c, table, mode)) return false;
      return true;
    }
    case K::Lam:
      return !find_redex(ctx.extend(t.lam_var(), t.lam_annot()), t.lam_body(),
                         table, mode);
    case K::Inl:
    case K::Inr:
      return is_normal_form(ctx, t.inj_payload(), table, mode);
    default:
      return false;
  }
}

struct StepResult {
  Term term;
  RuleName rule;
  std::vector<int> redex_path;
};

// One deterministic step, or nothing on a normal form. A well-typed term
// that is neither is an interpreter bug and raises StuckTermError.
inline std::optional<StepResult> step(
    const TypingContext& ctx, const Term& t,
    const PrimitiveTable& table = PrimitiveTable::defaults(),
    CalculusMode mode = CalculusMode::Analytical) {
  if (auto r = find_redex(ctx, t, table, mode))
    return StepResult{t.replace_at(r->path, r->reduct), r->rule,
                      std::move(r->path)};
  if (!is_normal_form(ctx, t, table, mode)) throw StuckTermError(t);
  return std::nullopt;
}

struct NormalizeResult {
  enum class Status { Normalized, FuelExhausted };
  Status status = Status::Normalized;
  Term term;
  std::uint64_t steps_used = 0;

  bool normalized() const { return status == Status::Normalized; }
};

inline NormalizeResult normalize(
    const TypingContext& ctx, const Term& t, Fuel fuel = {},
    ReductionTrace* trace = nullptr,
    const PrimitiveTable& table = PrimitiveTable::defaults(),
    CalculusMode mode = CalculusMode::Analytical) {
  NormalizeResult out;
  out.term = t;
  while (true) {
    auto next = step(ctx, out.term, table, mode);
    if (!next) {
      out.status = NormalizeResult::Status::Normalized;
      return out;
    }
    if (out.steps_used >= fuel.remaining) {
      out.status = NormalizeResult::Status::FuelExhausted;
      return out;
    }
    if (trace)
      trace->steps.push_back(
          {next->rule, next->redex_path, out.term, next->term});
    out.term = next->term;
    ++out.steps_used;
  }
}

inline NormalizeResult normalize(
    const Term& t, Fuel fuel = {}, ReductionTrace* trace = nullptr,
    const PrimitiveTable& table = PrimitiveTable::defaults()) {
  return normalize(TypingContext{}, t, fuel, trace, table);
}

inline std::string path_to_string(const std::vector<int>& path) {
  if (path.empty()) return ".";
  std::string out;
  for (int i : path) out += "." + std::to_string(i);
  return out;
}

// One line per step: #<n> <rule> @ <path>: <redex> -> <reduct>
inline std::string render_trace(const ReductionTrace& trace,
                                PrintStyle style = {}) {
  std::string out;
  const char* arrow = style.unicode ? " ⟶ " : " -> ";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    const Term& redex = s.before.child_at(s.redex_path);
    const Term& reduct = s.after.child_at(s.redex_path);
    out += "#" + std::to_string(i + 1) + " " + rule_name(s.rule) + " @ " +
           path_to_string(s.redex_path) + ": " + term_to_string(redex, style) +
           arrow + term_to_string(reduct, style) + "\n";
  }
  return out;
}

}  // namespace diffcalc
