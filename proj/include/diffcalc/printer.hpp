#pragma once

#include <sstream>
#include <string>

#include "diffcalc/syntax.hpp"

namespace diffcalc {

struct PrintStyle {
  bool unicode = false;

  const char* lambda() const { return unicode ? "λ" : "\\"; }
  const char* plus() const { return unicode ? " ⊕ " : " (+) "; }
  const char* minus() const { return unicode ? " ⊖ " : " (-) "; }
  const char* der_head() const { return unicode ? "∂" : "D"; }
  const char* int_head() const { return unicode ? "∫" : "Int"; }
};

inline std::string type_to_string(const Type& t);

namespace detail {

// Type precedence: arrow (lowest, right assoc) < sum < atom.
inline void print_type(const Type& t, int level, std::ostream& os) {
  switch (t.kind()) {
    case Type::Kind::Base:
      os << t.base_name();
      return;
    case Type::Kind::Product: {
      os << "(";
      bool first = true;
      for (const auto& c : t.components()) {
        if (!first) os << ",";
        first = false;
        print_type(c, 0, os);
      }
      os << ")";
      return;
    }
    case Type::Kind::Arrow: {
      bool parens = level > 0;
      if (parens) os << "(";
      print_type(t.domain(), 1, os);
      os << "->";
      print_type(t.codomain(), 0, os);
      if (parens) os << ")";
      return;
    }
    case Type::Kind::Sum: {
      bool parens = level > 1;
      if (parens) os << "(";
      print_type(t.left(), 1, os);
      os << "+";
      print_type(t.right(), 2, os);
      if (parens) os << ")";
      return;
    }
  }
}

// Term precedence levels, loosest to tightest:
//   0 lambda/case bodies, 1 add/sub, 2 mul, 3 application, 4 prefix, 5 atom.
inline void print_term(const Term& t, int level, const PrintStyle& st,
                       std::ostream& os) {
  auto parenthesize = [&](int mine, auto&& body) {
    bool parens = level > mine;
    if (parens) os << "(";
    body();
    if (parens) os << ")";
  };
  switch (t.kind()) {
    case Term::Kind::Const:
      os << t.const_name();
      return;
    case Term::Kind::Var:
      os << t.var_name();
      return;
    case Term::Kind::Lam:
      parenthesize(0, [&] {
        os << st.lambda() << t.lam_var() << ":";
        print_type(t.lam_annot(), 0, os);
        os << ". ";
        print_term(t.lam_body(), 0, st, os);
      });
      return;
    case Term::Kind::Case:
      parenthesize(0, [&] {
        os << "case ";
        print_term(t.case_scrutinee(), 1, st, os);
        os << " of inl " << t.case_lvar() << " => ";
        print_term(t.case_lbranch(), 1, st, os);
        os << " | inr " << t.case_rvar() << " => ";
        print_term(t.case_rbranch(), 1, st, os);
      });
      return;
    case Term::Kind::Add:
    case Term::Kind::Sub:
      parenthesize(1, [&] {
        print_term(t.lhs(), 1, st, os);
        os << (t.is(Term::Kind::Add) ? st.plus() : st.minus());
        print_term(t.rhs(), 2, st, os);
      });
      return;
    case Term::Kind::Mul:
      parenthesize(2, [&] {
        print_term(t.lhs(), 2, st, os);
        os << "*";
        print_term(t.rhs(), 3, st, os);
      });
      return;
    case Term::Kind::App:
      parenthesize(3, [&] {
        print_term(t.app_fun(), 3, st, os);
        os << " ";
        print_term(t.app_arg(), 4, st, os);
      });
      return;
    case Term::Kind::Proj:
      parenthesize(4, [&] {
        os << "pi" << t.proj_index() << " ";
        print_term(t.proj_tuple(), 4, st, os);
      });
      return;
    case Term::Kind::Fix:
      parenthesize(4, [&] {
        os << "fix ";
        print_term(t.fix_body(), 4, st, os);
      });
      return;
    case Term::Kind::Inl:
    case Term::Kind::Inr:
      parenthesize(4, [&] {
        os << (t.is(Term::Kind::Inl) ? "inl " : "inr ");
        print_term(t.inj_payload(), 4, st, os);
        os << " as ";
        print_type(t.inj_annot(), 0, os);
      });
      return;
    case Term::Kind::Tuple: {
      os << "(";
      bool first = true;
      for (const auto& c : t.tuple_items()) {
        if (!first) os << ", ";
        first = false;
        print_term(c, 0, st, os);
      }
      os << ")";
      return;
    }
    case Term::Kind::Der:
      os << st.der_head() << "{";
      print_term(t.der_body(), 0, st, os);
      os << " ; " << t.der_var() << " @ ";
      print_term(t.der_at(), 0, st, os);
      os << "}";
      return;
    case Term::Kind::Int:
      os << st.int_head() << "{";
      print_term(t.int_body(), 0, st, os);
      os << " d" << t.int_var() << " ; ";
      print_term(t.int_lo(), 0, st, os);
      os << " .. ";
      print_term(t.int_hi(), 0, st, os);
      os << "}";
      return;
    case Term::Kind::DDer:
      os << "DD{";
      print_term(t.dder_body(), 0, st, os);
      os << " ; " << t.dder_var() << " @ ";
      print_term(t.dder_at(), 0, st, os);
      os << ", ";
      print_term(t.dder_delta(), 0, st, os);
      os << "}";
      return;
  }
}

}  // namespace detail

inline std::string type_to_string(const Type& t) {
  std::ostringstream os;
  detail::print_type(t, 0, os);
  return os.str();
}

inline std::string term_to_string(const Term& t, PrintStyle st = {}) {
  std::ostringstream os;
  detail::print_term(t, 0, st, os);
  return os.str();
}

inline std::string term_excerpt(const Term& t, std::size_t limit = 60) {
  std::string s = term_to_string(t);
  if (s.size() > limit) s = s.substr(0, limit - 3) + "...";
  return s;
}

}  // namespace diffcalc
