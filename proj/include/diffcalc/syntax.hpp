#pragma once

#include <cassert>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diffcalc/rational.hpp"

namespace diffcalc {

// ---------------------------------------------------------------------------
// Types: base B, products (T1,...,Tn) with n >= 2, arrows T -> T, sums T + T.
// Immutable shared values; equality is structural.
// ---------------------------------------------------------------------------

class Type {
 public:
  enum class Kind { Base, Product, Arrow, Sum };

  static Type base(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Base;
    n->name = std::move(name);
    return Type(std::move(n));
  }

  static Type real() { return base("R"); }

  static Type product(std::vector<Type> components) {
    if (components.size() < 2)
      throw std::invalid_argument("product type needs at least 2 components");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Product;
    n->children = std::move(components);
    return Type(std::move(n));
  }

  static Type arrow(Type domain, Type codomain) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Arrow;
    n->children = {std::move(domain), std::move(codomain)};
    return Type(std::move(n));
  }

  static Type sum(Type left, Type right) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Sum;
    n->children = {std::move(left), std::move(right)};
    return Type(std::move(n));
  }

  Kind kind() const { return node_->kind; }
  bool is_base() const { return kind() == Kind::Base; }
  bool is_product() const { return kind() == Kind::Product; }
  bool is_arrow() const { return kind() == Kind::Arrow; }
  bool is_sum() const { return kind() == Kind::Sum; }

  const std::string& base_name() const {
    assert(is_base());
    return node_->name;
  }
  const std::vector<Type>& components() const {
    assert(is_product());
    return node_->children;
  }
  const Type& domain() const {
    assert(is_arrow());
    return node_->children[0];
  }
  const Type& codomain() const {
    assert(is_arrow());
    return node_->children[1];
  }
  const Type& left() const {
    assert(is_sum());
    return node_->children[0];
  }
  const Type& right() const {
    assert(is_sum());
    return node_->children[1];
  }

  bool operator==(const Type& other) const {
    if (node_ == other.node_) return true;
    if (kind() != other.kind()) return false;
    switch (kind()) {
      case Kind::Base:
        return node_->name == other.node_->name;
      default:
        return node_->children == other.node_->children;
    }
  }
  bool operator!=(const Type& other) const { return !(*this == other); }

  // Interpretable types: base types closed under arrows.
  bool is_interpretable() const {
    switch (kind()) {
      case Kind::Base:
        return true;
      case Kind::Arrow:
        return domain().is_interpretable() && codomain().is_interpretable();
      default:
        return false;
    }
  }

  bool contains_arrow_or_sum() const {
    switch (kind()) {
      case Kind::Base:
        return false;
      case Kind::Product: {
        for (const auto& c : components())
          if (c.contains_arrow_or_sum()) return true;
        return false;
      }
      default:
        return true;
    }
  }

 private:
  struct Node {
    Kind kind;
    std::string name;           // Base
    std::vector<Type> children; // Product components / Arrow [dom,cod] / Sum [l,r]
  };

  explicit Type(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// Terms. Der(body, x, at) binds x in body only; Int(lo, hi, body, x) binds x
// in body only. Injections carry their full sum-type annotation so that
// typechecking stays syntax-directed. DDer is the discrete-derivative form
// used by the discrete fragment; the analytical rules never produce it.
// ---------------------------------------------------------------------------

class Term {
 public:
  enum class Kind {
    Const,
    Var,
    Lam,
    App,
    Tuple,
    Proj,
    Add,
    Sub,
    Mul,
    Der,
    Int,
    Inl,
    Inr,
    Case,
    Fix,
    DDer,
  };

  Term() = default;

  static Term constant(std::string name, Type type) {
    auto n = fresh_node(Kind::Const);
    n->name = std::move(name);
    n->type = std::move(type);
    return Term(std::move(n));
  }

  static Term rat(const Rational& q) {
    return constant(rational_to_string(q), Type::real());
  }

  static Term rat(long long v) { return rat(Rational(v)); }

  static Term var(std::string name) {
    auto n = fresh_node(Kind::Var);
    n->name = std::move(name);
    return Term(std::move(n));
  }

  static Term lam(std::string var, Type annot, Term body) {
    auto n = fresh_node(Kind::Lam);
    n->name = std::move(var);
    n->type = std::move(annot);
    n->children = {std::move(body)};
    return Term(std::move(n));
  }

  static Term app(Term fun, Term arg) {
    auto n = fresh_node(Kind::App);
    n->children = {std::move(fun), std::move(arg)};
    return Term(std::move(n));
  }

  static Term tuple(std::vector<Term> items) {
    if (items.size() < 2)
      throw std::invalid_argument("tuple needs at least 2 components");
    auto n = fresh_node(Kind::Tuple);
    n->children = std::move(items);
    return Term(std::move(n));
  }

  static Term proj(int index, Term tup) {
    if (index < 1) throw std::invalid_argument("projection index is 1-based");
    auto n = fresh_node(Kind::Proj);
    n->index = index;
    n->children = {std::move(tup)};
    return Term(std::move(n));
  }

  static Term add(Term l, Term r) { return binary(Kind::Add, std::move(l), std::move(r)); }
  static Term sub(Term l, Term r) { return binary(Kind::Sub, std::move(l), std::move(r)); }
  static Term mul(Term l, Term r) { return binary(Kind::Mul, std::move(l), std::move(r)); }

  static Term der(Term body, std::string var, Term at) {
    auto n = fresh_node(Kind::Der);
    n->name = std::move(var);
    n->children = {std::move(body), std::move(at)};
    return Term(std::move(n));
  }

  static Term integral(Term lo, Term hi, Term body, std::string var) {
    auto n = fresh_node(Kind::Int);
    n->name = std::move(var);
    n->children = {std::move(lo), std::move(hi), std::move(body)};
    return Term(std::move(n));
  }

  static Term inl(Term payload, Type sum_annot) {
    auto n = fresh_node(Kind::Inl);
    n->type = std::move(sum_annot);
    n->children = {std::move(payload)};
    return Term(std::move(n));
  }

  static Term inr(Term payload, Type sum_annot) {
    auto n = fresh_node(Kind::Inr);
    n->type = std::move(sum_annot);
    n->children = {std::move(payload)};
    return Term(std::move(n));
  }

  static Term case_of(Term scrutinee, std::string lvar, Term lbranch,
                      std::string rvar, Term rbranch) {
    auto n = fresh_node(Kind::Case);
    n->name = std::move(lvar);
    n->name2 = std::move(rvar);
    n->children = {std::move(scrutinee), std::move(lbranch), std::move(rbranch)};
    return Term(std::move(n));
  }

  static Term fix(Term f) {
    auto n = fresh_node(Kind::Fix);
    n->children = {std::move(f)};
    return Term(std::move(n));
  }

  static Term dder(Term body, std::string var, Term at, Term delta) {
    auto n = fresh_node(Kind::DDer);
    n->name = std::move(var);
    n->children = {std::move(body), std::move(at), std::move(delta)};
    return Term(std::move(n));
  }

  bool valid() const { return node_ != nullptr; }
  Kind kind() const { return node_->kind; }
  bool is(Kind k) const { return node_ && node_->kind == k; }

  // Const
  const std::string& const_name() const { assert(is(Kind::Const)); return node_->name; }
  const Type& const_type() const { assert(is(Kind::Const)); return node_->type; }
  // Var
  const std::string& var_name() const { assert(is(Kind::Var)); return node_->name; }
  // Lam
  const std::string& lam_var() const { assert(is(Kind::Lam)); return node_->name; }
  const Type& lam_annot() const { assert(is(Kind::Lam)); return node_->type; }
  const Term& lam_body() const { assert(is(Kind::Lam)); return node_->children[0]; }
  // App
  const Term& app_fun() const { assert(is(Kind::App)); return node_->children[0]; }
  const Term& app_arg() const { assert(is(Kind::App)); return node_->children[1]; }
  // Tuple
  const std::vector<Term>& tuple_items() const { assert(is(Kind::Tuple)); return node_->children; }
  // Proj
  int proj_index() const { assert(is(Kind::Proj)); return node_->index; }
  const Term& proj_tuple() const { assert(is(Kind::Proj)); return node_->children[0]; }
  // Add/Sub/Mul
  const Term& lhs() const { assert(is_binary()); return node_->children[0]; }
  const Term& rhs() const { assert(is_binary()); return node_->children[1]; }
  // Der
  const Term& der_body() const { assert(is(Kind::Der)); return node_->children[0]; }
  const std::string& der_var() const { assert(is(Kind::Der)); return node_->name; }
  const Term& der_at() const { assert(is(Kind::Der)); return node_->children[1]; }
  // Int
  const Term& int_lo() const { assert(is(Kind::Int)); return node_->children[0]; }
  const Term& int_hi() const { assert(is(Kind::Int)); return node_->children[1]; }
  const Term& int_body() const { assert(is(Kind::Int)); return node_->children[2]; }
  const std::string& int_var() const { assert(is(Kind::Int)); return node_->name; }
  // Inl/Inr
  const Term& inj_payload() const { assert(is(Kind::Inl) || is(Kind::Inr)); return node_->children[0]; }
  const Type& inj_annot() const { assert(is(Kind::Inl) || is(Kind::Inr)); return node_->type; }
  // Case
  const Term& case_scrutinee() const { assert(is(Kind::Case)); return node_->children[0]; }
  const std::string& case_lvar() const { assert(is(Kind::Case)); return node_->name; }
  const Term& case_lbranch() const { assert(is(Kind::Case)); return node_->children[1]; }
  const std::string& case_rvar() const { assert(is(Kind::Case)); return node_->name2; }
  const Term& case_rbranch() const { assert(is(Kind::Case)); return node_->children[2]; }
  // Fix
  const Term& fix_body() const { assert(is(Kind::Fix)); return node_->children[0]; }
  // DDer
  const Term& dder_body() const { assert(is(Kind::DDer)); return node_->children[0]; }
  const std::string& dder_var() const { assert(is(Kind::DDer)); return node_->name; }
  const Term& dder_at() const { assert(is(Kind::DDer)); return node_->children[1]; }
  const Term& dder_delta() const { assert(is(Kind::DDer)); return node_->children[2]; }

  bool is_binary() const {
    return is(Kind::Add) || is(Kind::Sub) || is(Kind::Mul);
  }

  // Structural children in constructor order; used for path navigation.
  const std::vector<Term>& children() const { return node_->children; }

  Term with_children(std::vector<Term> new_children) const {
    assert(new_children.size() == node_->children.size());
    auto n = std::make_shared<Node>(*node_);
    n->children = std::move(new_children);
    return Term(std::move(n));
  }

  Term with_child(std::size_t i, Term child) const {
    auto cs = node_->children;
    assert(i < cs.size());
    cs[i] = std::move(child);
    return with_children(std::move(cs));
  }

  const Term& child_at(const std::vector<int>& path) const {
    const Term* cur = this;
    for (int i : path) cur = &cur->children().at(static_cast<std::size_t>(i));
    return *cur;
  }

  Term replace_at(const std::vector<int>& path, const Term& replacement,
                  std::size_t from = 0) const {
    if (from == path.size()) return replacement;
    std::size_t i = static_cast<std::size_t>(path[from]);
    return with_child(i, children().at(i).replace_at(path, replacement, from + 1));
  }

  // Syntactic equality (names matter; see alpha_eq for equality modulo
  // bound-variable renaming).
  bool operator==(const Term& other) const {
    if (node_ == other.node_) return true;
    if (!node_ || !other.node_) return false;
    if (kind() != other.kind()) return false;
    const Node& a = *node_;
    const Node& b = *other.node_;
    if (a.name != b.name || a.name2 != b.name2 || a.index != b.index)
      return false;
    bool a_has_type = a.kind == Kind::Const || a.kind == Kind::Lam ||
                      a.kind == Kind::Inl || a.kind == Kind::Inr;
    if (a_has_type && !(a.type == b.type)) return false;
    return a.children == b.children;
  }
  bool operator!=(const Term& other) const { return !(*this == other); }

  std::size_t size() const {
    std::size_t s = 1;
    for (const auto& c : children()) s += c.size();
    return s;
  }

 private:
  struct Node {
    Kind kind;
    std::string name;   // var / binder / const name
    std::string name2;  // case right binder
    Type type = Type::real();
    int index = 0;  // projection index
    std::vector<Term> children;
  };

  static std::shared_ptr<Node> fresh_node(Kind k) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    return n;
  }

  static Term binary(Kind k, Term l, Term r) {
    auto n = fresh_node(k);
    n->children = {std::move(l), std::move(r)};
    return Term(std::move(n));
  }

  explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// Typing contexts: ordered bindings, rightmost binding shadows.
// ---------------------------------------------------------------------------

class TypingContext {
 public:
  TypingContext() = default;

  TypingContext extend(std::string name, Type type) const {
    TypingContext out = *this;
    out.bindings_.emplace_back(std::move(name), std::move(type));
    return out;
  }

  std::optional<Type> lookup(const std::string& name) const {
    for (auto it = bindings_.rbegin(); it != bindings_.rend(); ++it)
      if (it->first == name) return it->second;
    return std::nullopt;
  }

  const std::vector<std::pair<std::string, Type>>& bindings() const {
    return bindings_;
  }

  std::set<std::string> names() const {
    std::set<std::string> out;
    for (const auto& [n, t] : bindings_) out.insert(n);
    return out;
  }

 private:
  std::vector<std::pair<std::string, Type>> bindings_;
};

// ---------------------------------------------------------------------------
// Binding discipline helpers. The four binders are Lam, Der (in its body),
// Int (in its body), and Case (one binder per branch).
// ---------------------------------------------------------------------------

namespace detail {

inline void free_vars_into(const Term& t, std::set<std::string>& bound,
                           std::set<std::string>& out) {
  switch (t.kind()) {
    case Term::Kind::Const:
      return;
    case Term::Kind::Var:
      if (!bound.count(t.var_name())) out.insert(t.var_name());
      return;
    case Term::Kind::Lam: {
      bool inserted = bound.insert(t.lam_var()).second;
      free_vars_into(t.lam_body(), bound, out);
      if (inserted) bound.erase(t.lam_var());
      return;
    }
    case Term::Kind::Der: {
      free_vars_into(t.der_at(), bound, out);
      bool inserted = bound.insert(t.der_var()).second;
      free_vars_into(t.der_body(), bound, out);
      if (inserted) bound.erase(t.der_var());
      return;
    }
    case Term::Kind::Int: {
      free_vars_into(t.int_lo(), bound, out);
      free_vars_into(t.int_hi(), bound, out);
      bool inserted = bound.insert(t.int_var()).second;
      free_vars_into(t.int_body(), bound, out);
      if (inserted) bound.erase(t.int_var());
      return;
    }
    case Term::Kind::Case: {
      free_vars_into(t.case_scrutinee(), bound, out);
      bool li = bound.insert(t.case_lvar()).second;
      free_vars_into(t.case_lbranch(), bound, out);
      if (li) bound.erase(t.case_lvar());
      bool ri = bound.insert(t.case_rvar()).second;
      free_vars_into(t.case_rbranch(), bound, out);
      if (ri) bound.erase(t.case_rvar());
      return;
    }
    case Term::Kind::DDer: {
      free_vars_into(t.dder_at(), bound, out);
      free_vars_into(t.dder_delta(), bound, out);
      bool inserted = bound.insert(t.dder_var()).second;
      free_vars_into(t.dder_body(), bound, out);
      if (inserted) bound.erase(t.dder_var());
      return;
    }
    default:
      for (const auto& c : t.children()) free_vars_into(c, bound, out);
  }
}

}  // namespace detail

inline std::set<std::string> free_vars(const Term& t) {
  std::set<std::string> bound, out;
  detail::free_vars_into(t, bound, out);
  return out;
}

// Deterministic fresh-name scheme: base, base_1, base_2, ...
inline std::string fresh_var(const std::string& base,
                             const std::set<std::string>& avoid) {
  if (!avoid.count(base)) return base;
  for (int k = 1;; ++k) {
    std::string cand = base + "_" + std::to_string(k);
    if (!avoid.count(cand)) return cand;
  }
}

Term substitute(const Term& t, const std::string& x, const Term& s);

namespace detail {

// Shared handling for every (binder, body) position during substitution:
// renames the binder when it would capture a free variable of s.
inline std::pair<std::string, Term> subst_under_binder(
    const std::string& binder, const Term& body, const std::string& x,
    const Term& s, const std::set<std::string>& s_free) {
  if (binder == x) return {binder, body};  // shadowed
  if (s_free.count(binder)) {
    std::set<std::string> avoid = s_free;
    auto body_free = free_vars(body);
    avoid.insert(body_free.begin(), body_free.end());
    avoid.insert(x);
    std::string renamed = fresh_var(binder, avoid);
    Term body2 = substitute(body, binder, Term::var(renamed));
    return {renamed, substitute(body2, x, s)};
  }
  return {binder, substitute(body, x, s)};
}

}  // namespace detail

// Capture-avoiding substitution of s for free occurrences of x in t.
inline Term substitute(const Term& t, const std::string& x, const Term& s) {
  switch (t.kind()) {
    case Term::Kind::Const:
      return t;
    case Term::Kind::Var:
      return t.var_name() == x ? s : t;
    case Term::Kind::Lam: {
      auto [v, b] =
          detail::subst_under_binder(t.lam_var(), t.lam_body(), x, s, free_vars(s));
      return Term::lam(v, t.lam_annot(), b);
    }
    case Term::Kind::Der: {
      Term at = substitute(t.der_at(), x, s);
      auto [v, b] =
          detail::subst_under_binder(t.der_var(), t.der_body(), x, s, free_vars(s));
      return Term::der(b, v, at);
    }
    case Term::Kind::Int: {
      Term lo = substitute(t.int_lo(), x, s);
      Term hi = substitute(t.int_hi(), x, s);
      auto [v, b] =
          detail::subst_under_binder(t.int_var(), t.int_body(), x, s, free_vars(s));
      return Term::integral(lo, hi, b, v);
    }
    case Term::Kind::DDer: {
      Term at = substitute(t.dder_at(), x, s);
      Term delta = substitute(t.dder_delta(), x, s);
      auto [v, b] =
          detail::subst_under_binder(t.dder_var(), t.dder_body(), x, s, free_vars(s));
      return Term::dder(b, v, at, delta);
    }
    case Term::Kind::Case: {
      Term scrut = substitute(t.case_scrutinee(), x, s);
      auto sf = free_vars(s);
      auto [lv, lb] =
          detail::subst_under_binder(t.case_lvar(), t.case_lbranch(), x, s, sf);
      auto [rv, rb] =
          detail::subst_under_binder(t.case_rvar(), t.case_rbranch(), x, s, sf);
      return Term::case_of(scrut, lv, lb, rv, rb);
    }
    default: {
      std::vector<Term> cs;
      cs.reserve(t.children().size());
      for (const auto& c : t.children()) cs.push_back(substitute(c, x, s));
      return t.with_children(std::move(cs));
    }
  }
}

namespace detail {

using AlphaEnv = std::vector<std::pair<std::string, std::string>>;  // name -> slot

inline std::optional<std::string> alpha_lookup(const AlphaEnv& env,
                                               const std::string& name) {
  for (auto it = env.rbegin(); it != env.rend(); ++it)
    if (it->first == name) return it->second;
  return std::nullopt;
}

inline bool alpha_eq_rec(const Term& a, const Term& b, AlphaEnv& ea,
                         AlphaEnv& eb, int& counter);

inline bool alpha_eq_binder(const std::string& va, const Term& ba,
                            const std::string& vb, const Term& bb,
                            AlphaEnv& ea, AlphaEnv& eb, int& counter) {
  std::string slot = "#" + std::to_string(counter++);
  ea.emplace_back(va, slot);
  eb.emplace_back(vb, slot);
  bool ok = alpha_eq_rec(ba, bb, ea, eb, counter);
  ea.pop_back();
  eb.pop_back();
  return ok;
}

inline bool alpha_eq_rec(const Term& a, const Term& b, AlphaEnv& ea,
                         AlphaEnv& eb, int& counter) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Term::Kind::Const:
      return a.const_name() == b.const_name() && a.const_type() == b.const_type();
    case Term::Kind::Var: {
      auto sa = alpha_lookup(ea, a.var_name());
      auto sb = alpha_lookup(eb, b.var_name());
      if (sa.has_value() != sb.has_value()) return false;
      return sa ? *sa == *sb : a.var_name() == b.var_name();
    }
    case Term::Kind::Lam:
      return a.lam_annot() == b.lam_annot() &&
             alpha_eq_binder(a.lam_var(), a.lam_body(), b.lam_var(),
                             b.lam_body(), ea, eb, counter);
    case Term::Kind::Proj:
      if (a.proj_index() != b.proj_index()) return false;
      return alpha_eq_rec(a.proj_tuple(), b.proj_tuple(), ea, eb, counter);
    case Term::Kind::Der:
      return alpha_eq_rec(a.der_at(), b.der_at(), ea, eb, counter) &&
             alpha_eq_binder(a.der_var(), a.der_body(), b.der_var(),
                             b.der_body(), ea, eb, counter);
    case Term::Kind::Int:
      return alpha_eq_rec(a.int_lo(), b.int_lo(), ea, eb, counter) &&
             alpha_eq_rec(a.int_hi(), b.int_hi(), ea, eb, counter) &&
             alpha_eq_binder(a.int_var(), a.int_body(), b.int_var(),
                             b.int_body(), ea, eb, counter);
    case Term::Kind::DDer:
      return alpha_eq_rec(a.dder_at(), b.dder_at(), ea, eb, counter) &&
             alpha_eq_rec(a.dder_delta(), b.dder_delta(), ea, eb, counter) &&
             alpha_eq_binder(a.dder_var(), a.dder_body(), b.dder_var(),
                             b.dder_body(), ea, eb, counter);
    case Term::Kind::Inl:
    case Term::Kind::Inr:
      return a.inj_annot() == b.inj_annot() &&
             alpha_eq_rec(a.inj_payload(), b.inj_payload(), ea, eb, counter);
    case Term::Kind::Case:
      return alpha_eq_rec(a.case_scrutinee(), b.case_scrutinee(), ea, eb,
                          counter) &&
             alpha_eq_binder(a.case_lvar(), a.case_lbranch(), b.case_lvar(),
                             b.case_lbranch(), ea, eb, counter) &&
             alpha_eq_binder(a.case_rvar(), a.case_rbranch(), b.case_rvar(),
                             b.case_rbranch(), ea, eb, counter);
    default: {
      if (a.is_binary() || a.is(Term::Kind::App) || a.is(Term::Kind::Tuple) ||
          a.is(Term::Kind::Fix)) {
        const auto& ca = a.children();
        const auto& cb = b.children();
        if (ca.size() != cb.size()) return false;
        for (std::size_t i = 0; i < ca.size(); ++i)
          if (!alpha_eq_rec(ca[i], cb[i], ea, eb, counter)) return false;
        return true;
      }
      return false;
    }
  }
}

}  // namespace detail

// Equality up to consistent renaming of bound variables.
inline bool alpha_eq(const Term& a, const Term& b) {
  detail::AlphaEnv ea, eb;
  int counter = 0;
  return detail::alpha_eq_rec(a, b, ea, eb, counter);
}

}  // namespace diffcalc
