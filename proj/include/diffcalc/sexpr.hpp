#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffcalc/syntax.hpp"

namespace diffcalc {

// Canonical S-expression forms, one per constructor. Round-trips bit-exactly.
//
//   types:  R | (prod T T ...) | (arrow T T) | (sum T T)
//   terms:  (const name T) | (var x) | (lam x T t) | (app t t)
//           (tuple t t ...) | (proj j t) | (add t t) | (sub t t) | (mul t t)
//           (der body x at) | (int lo hi body x)
//           (inl t T) | (inr t T) | (case t x1 t1 x2 t2) | (fix t)
//           (dder body x at delta)

class SexprError : public std::runtime_error {
 public:
  explicit SexprError(const std::string& msg)
      : std::runtime_error("sexpr: " + msg) {}
};

inline void type_to_sexpr(const Type& t, std::ostream& os) {
  switch (t.kind()) {
    case Type::Kind::Base:
      os << t.base_name();
      return;
    case Type::Kind::Product: {
      os << "(prod";
      for (const auto& c : t.components()) {
        os << " ";
        type_to_sexpr(c, os);
      }
      os << ")";
      return;
    }
    case Type::Kind::Arrow:
      os << "(arrow ";
      type_to_sexpr(t.domain(), os);
      os << " ";
      type_to_sexpr(t.codomain(), os);
      os << ")";
      return;
    case Type::Kind::Sum:
      os << "(sum ";
      type_to_sexpr(t.left(), os);
      os << " ";
      type_to_sexpr(t.right(), os);
      os << ")";
      return;
  }
}

inline std::string type_to_sexpr(const Type& t) {
  std::ostringstream os;
  type_to_sexpr(t, os);
  return os.str();
}

inline void term_to_sexpr(const Term& t, std::ostream& os) {
  auto rec = [&os](const Term& u) { term_to_sexpr(u, os); };
  switch (t.kind()) {
    case Term::Kind::Const:
      os << "(const " << t.const_name() << " ";
      type_to_sexpr(t.const_type(), os);
      os << ")";
      return;
    case Term::Kind::Var:
      os << "(var " << t.var_name() << ")";
      return;
    case Term::Kind::Lam:
      os << "(lam " << t.lam_var() << " ";
      type_to_sexpr(t.lam_annot(), os);
      os << " ";
      rec(t.lam_body());
      os << ")";
      return;
    case Term::Kind::App:
      os << "(app ";
      rec(t.app_fun());
      os << " ";
      rec(t.app_arg());
      os << ")";
      return;
    case Term::Kind::Tuple: {
      os << "(tuple";
      for (const auto& c : t.tuple_items()) {
        os << " ";
        rec(c);
      }
      os << ")";
      return;
    }
    case Term::Kind::Proj:
      os << "(proj " << t.proj_index() << " ";
      rec(t.proj_tuple());
      os << ")";
      return;
    case Term::Kind::Add:
    case Term::Kind::Sub:
    case Term::Kind::Mul: {
      const char* head = t.is(Term::Kind::Add)   ? "add"
                         : t.is(Term::Kind::Sub) ? "sub"
                                                 : "mul";
      os << "(" << head << " ";
      rec(t.lhs());
      os << " ";
      rec(t.rhs());
      os << ")";
      return;
    }
    case Term::Kind::Der:
      os << "(der ";
      rec(t.der_body());
      os << " " << t.der_var() << " ";
      rec(t.der_at());
      os << ")";
      return;
    case Term::Kind::Int:
      os << "(int ";
      rec(t.int_lo());
      os << " ";
      rec(t.int_hi());
      os << " ";
      rec(t.int_body());
      os << " " << t.int_var() << ")";
      return;
    case Term::Kind::Inl:
    case Term::Kind::Inr:
      os << (t.is(Term::Kind::Inl) ? "(inl " : "(inr ");
      rec(t.inj_payload());
      os << " ";
      type_to_sexpr(t.inj_annot(), os);
      os << ")";
      return;
    case Term::Kind::Case:
      os << "(case ";
      rec(t.case_scrutinee());
      os << " " << t.case_lvar() << " ";
      rec(t.case_lbranch());
      os << " " << t.case_rvar() << " ";
      rec(t.case_rbranch());
      os << ")";
      return;
    case Term::Kind::Fix:
      os << "(fix ";
      rec(t.fix_body());
      os << ")";
      return;
    case Term::Kind::DDer:
      os << "(dder ";
      rec(t.dder_body());
      os << " " << t.dder_var() << " ";
      rec(t.dder_at());
      os << " ";
      rec(t.dder_delta());
      os << ")";
      return;
  }
}

inline std::string term_to_sexpr(const Term& t) {
  std::ostringstream os;
  term_to_sexpr(t, os);
  return os.str();
}

namespace detail {

struct SexprTokens {
  std::vector<std::string> toks;
  std::size_t pos = 0;

  explicit SexprTokens(const std::string& text) {
    std::string cur;
    auto flush = [&] {
      if (!cur.empty()) {
        toks.push_back(cur);
        cur.clear();
      }
    };
    for (char c : text) {
      if (c == '(' || c == ')') {
        flush();
        toks.push_back(std::string(1, c));
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        flush();
      } else {
        cur += c;
      }
    }
    flush();
  }

  bool done() const { return pos >= toks.size(); }
  const std::string& peek() const {
    if (done()) throw SexprError("unexpected end of input");
    return toks[pos];
  }
  std::string next() {
    if (done()) throw SexprError("unexpected end of input");
    return toks[pos++];
  }
  void expect(const std::string& t) {
    if (next() != t) throw SexprError("expected '" + t + "'");
  }
};

inline Type parse_type_sexpr(SexprTokens& tk);
inline Term parse_term_sexpr(SexprTokens& tk);

inline Type parse_type_sexpr(SexprTokens& tk) {
  if (tk.peek() != "(") {
    std::string name = tk.next();
    if (name == ")") throw SexprError("expected type");
    return Type::base(name);
  }
  tk.expect("(");
  std::string head = tk.next();
  if (head == "prod") {
    std::vector<Type> comps;
    while (tk.peek() != ")") comps.push_back(parse_type_sexpr(tk));
    tk.expect(")");
    return Type::product(std::move(comps));
  }
  if (head == "arrow") {
    Type d = parse_type_sexpr(tk);
    Type c = parse_type_sexpr(tk);
    tk.expect(")");
    return Type::arrow(d, c);
  }
  if (head == "sum") {
    Type l = parse_type_sexpr(tk);
    Type r = parse_type_sexpr(tk);
    tk.expect(")");
    return Type::sum(l, r);
  }
  throw SexprError("unknown type head '" + head + "'");
}

inline Term parse_term_sexpr(SexprTokens& tk) {
  tk.expect("(");
  std::string head = tk.next();
  if (head == "const") {
    std::string name = tk.next();
    Type ty = parse_type_sexpr(tk);
    tk.expect(")");
    return Term::constant(name, ty);
  }
  if (head == "var") {
    std::string name = tk.next();
    tk.expect(")");
    return Term::var(name);
  }
  if (head == "lam") {
    std::string v = tk.next();
    Type ty = parse_type_sexpr(tk);
    Term body = parse_term_sexpr(tk);
    tk.expect(")");
    return Term::lam(v, ty, body);
  }
  if (head == "app") {
    Term f = parse_term_sexpr(tk);
    Term a = parse_term_sexpr(tk);
    tk.expect(")");
    return Term::app(f, a);
  }
  if (head == "tuple") {
    std::vector<Term> items;
    while (tk.peek() != ")") items.push_back(parse_term_sexpr(tk));
    tk.expect(")");
    return Term::tuple(std::move(items));
  }
  if (head == "proj") {
    int j = std::stoi(tk.next());
    Term t = parse_term_sexpr(tk);
    tk.expect(")");
    return Term::proj(j, t);
  }
  if (head == "add" || head == "sub" || head == "mul") {
    Term l = parse_term_sexpr(tk);
    Term r = parse_term_sexpr(tk);
    tk.expect(")");
    if (head == "add") return Term::add(l, r);
    if (head == "sub") return Term::sub(l, r);
    return Term::mul(l, r);
  }
  if (head == "der") {
    Term body = parse_term_sexpr(tk);
    std::string v = tk.next();
    Term at = parse_term_sexpr(tk);
    tk.expect(")");
    return Term::der(body, v, at);
  }
  if (head == "int") {
    Term lo = parse_term_sexpr(tk);
    Term hi = parse_term_sexpr(tk);
    Term body = parse_term_sexpr(tk);
    std::string v = tk.next();
    tk.expect(")");
    return Term::integral(lo, hi, body, v);
  }
  if (head == "inl" || head == "inr") {
    Term payload = parse_term_sexpr(tk);
    Type ty = parse_type_sexpr(tk);
    tk.expect(")");
    return head == "inl" ? Term::inl(payload, ty) : Term::inr(payload, ty);
  }
  if (head == "case") {
    Term scrut = parse_term_sexpr(tk);
    std::string lv = tk.next();
    Term lb = parse_term_sexpr(tk);
    std::string rv = tk.next();
    Term rb = parse_term_sexpr(tk);
    tk.expect(")");
    return Term::case_of(scrut, lv, lb, rv, rb);
  }
  if (head == "fix") {
    Term f = parse_term_sexpr(tk);
    tk.expect(")");
    return Term::fix(f);
  }
  if (head == "dder") {
    Term body = parse_term_sexpr(tk);
    std::string v = tk.next();
    Term at = parse_term_sexpr(tk);
    Term delta = parse_term_sexpr(tk);
    tk.expect(")");
    return Term::dder(body, v, at, delta);
  }
  throw SexprError("unknown term head '" + head + "'");
}

}  // namespace detail

inline Type type_from_sexpr(const std::string& text) {
  detail::SexprTokens tk(text);
  Type t = detail::parse_type_sexpr(tk);
  if (!tk.done()) throw SexprError("trailing input");
  return t;
}

inline Term term_from_sexpr(const std::string& text) {
  detail::SexprTokens tk(text);
  Term t = detail::parse_term_sexpr(tk);
  if (!tk.done()) throw SexprError("trailing input");
  return t;
}

}  // namespace diffcalc
