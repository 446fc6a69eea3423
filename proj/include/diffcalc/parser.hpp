#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffcalc/builtins.hpp"
#include "diffcalc/syntax.hpp"
#include "diffcalc/typecheck.hpp"

namespace diffcalc {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error("parse error at offset " + std::to_string(pos) +
                           ": " + msg) {}
};

struct ParseOptions {
  bool resolve_builtins = false;
};

namespace parsedetail {

struct Token {
  enum class Kind { Ident, Number, Sym, End };
  Kind kind = Kind::End;
  std::string text;
  std::size_t pos = 0;
};

inline std::vector<Token> lex(const std::string& in) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto push = [&](Token::Kind k, std::string s, std::size_t p) {
    out.push_back({k, std::move(s), p});
  };
  auto starts_with = [&](const char* s) {
    return in.compare(i, std::char_traits<char>::length(s), s) == 0;
  };
  while (i < in.size()) {
    char c = in[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    // unicode aliases
    if (starts_with("λ")) {  // lambda
      push(Token::Kind::Sym, "\\", i);
      i += 2;
      continue;
    }
    if (starts_with("⊕")) {  // circled plus
      push(Token::Kind::Sym, "(+)", i);
      i += 3;
      continue;
    }
    if (starts_with("⊖")) {  // circled minus
      push(Token::Kind::Sym, "(-)", i);
      i += 3;
      continue;
    }
    if (starts_with("∂")) {  // partial
      push(Token::Kind::Ident, "D", i);
      i += 3;
      continue;
    }
    if (starts_with("∫")) {  // integral sign
      push(Token::Kind::Ident, "Int", i);
      i += 3;
      continue;
    }
    if (c == '(') {
      if (starts_with("(+)")) {
        push(Token::Kind::Sym, "(+)", i);
        i += 3;
        continue;
      }
      if (starts_with("(-)")) {
        push(Token::Kind::Sym, "(-)", i);
        i += 3;
        continue;
      }
      push(Token::Kind::Sym, "(", i);
      ++i;
      continue;
    }
    if (c == '-') {
      if (i + 1 < in.size() && in[i + 1] == '>') {
        push(Token::Kind::Sym, "->", i);
        i += 2;
        continue;
      }
      if (i + 1 < in.size() &&
          std::isdigit(static_cast<unsigned char>(in[i + 1]))) {
        std::size_t start = i;
        std::string num = "-";
        ++i;
        while (i < in.size() && std::isdigit(static_cast<unsigned char>(in[i])))
          num += in[i++];
        if (i + 1 < in.size() && in[i] == '/' &&
            std::isdigit(static_cast<unsigned char>(in[i + 1]))) {
          num += in[i++];
          while (i < in.size() &&
                 std::isdigit(static_cast<unsigned char>(in[i])))
            num += in[i++];
        }
        push(Token::Kind::Number, num, start);
        continue;
      }
      throw ParseError("stray '-' (use (-) for subtraction)", i);
    }
    if (c == '=') {
      if (i + 1 < in.size() && in[i + 1] == '>') {
        push(Token::Kind::Sym, "=>", i);
        i += 2;
        continue;
      }
      throw ParseError("stray '='", i);
    }
    if (c == '.') {
      if (i + 1 < in.size() && in[i + 1] == '.') {
        push(Token::Kind::Sym, "..", i);
        i += 2;
        continue;
      }
      push(Token::Kind::Sym, ".", i);
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = i;
      std::string num;
      while (i < in.size() && std::isdigit(static_cast<unsigned char>(in[i])))
        num += in[i++];
      if (i + 1 < in.size() && in[i] == '/' &&
          std::isdigit(static_cast<unsigned char>(in[i + 1]))) {
        num += in[i++];
        while (i < in.size() && std::isdigit(static_cast<unsigned char>(in[i])))
          num += in[i++];
      }
      push(Token::Kind::Number, num, start);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i;
      std::string id;
      while (i < in.size() &&
             (std::isalnum(static_cast<unsigned char>(in[i])) ||
              in[i] == '_'))
        id += in[i++];
      push(Token::Kind::Ident, id, start);
      continue;
    }
    switch (c) {
      case ')': case ',': case ';': case ':': case '@': case '|':
      case '{': case '}': case '*': case '\\': case '+':
        push(Token::Kind::Sym, std::string(1, c), i);
        ++i;
        continue;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", i);
    }
  }
  push(Token::Kind::End, "", in.size());
  return out;
}

class TermParser {
 public:
  TermParser(std::string text, ParseOptions opts)
      : toks_(lex(text)), opts_(opts) {}

  Term parse_term_all() {
    Term t = parse_term(false);
    expect_end();
    return t;
  }

  Type parse_type_all() {
    Type t = parse_type();
    expect_end();
    return t;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  ParseOptions opts_;
  std::vector<std::string> bound_;

  bool is_bound(const std::string& name) const {
    return std::find(bound_.rbegin(), bound_.rend(), name) != bound_.rend();
  }

  // Binders of the braced forms appear after the body; scan ahead so the
  // body parses with the binder in scope.
  std::optional<std::string> scan_brace_binder(bool integral) const {
    int depth = 0;
    for (std::size_t i = pos_; i < toks_.size(); ++i) {
      const Token& t = toks_[i];
      if (t.kind != Token::Kind::Sym) continue;
      if (t.text == "{") {
        ++depth;
      } else if (t.text == "}") {
        if (depth == 0) break;
        --depth;
      } else if (t.text == ";" && depth == 0) {
        if (integral) {
          if (i > pos_ && toks_[i - 1].kind == Token::Kind::Ident &&
              toks_[i - 1].text.size() >= 2 && toks_[i - 1].text[0] == 'd')
            return toks_[i - 1].text.substr(1);
          return std::nullopt;
        }
        if (i + 1 < toks_.size() && toks_[i + 1].kind == Token::Kind::Ident)
          return toks_[i + 1].text;
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t idx = pos_ + ahead;
    return idx < toks_.size() ? toks_[idx] : toks_.back();
  }
  Token next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  bool at_sym(const std::string& s, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Token::Kind::Sym && t.text == s;
  }
  bool at_ident(const std::string& s) const {
    const Token& t = peek();
    return t.kind == Token::Kind::Ident && t.text == s;
  }
  bool eat_sym(const std::string& s) {
    if (at_sym(s)) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_sym(const std::string& s) {
    if (!eat_sym(s))
      throw ParseError("expected '" + s + "', found '" + peek().text + "'",
                       peek().pos);
  }
  std::string expect_ident() {
    if (peek().kind != Token::Kind::Ident)
      throw ParseError("expected identifier, found '" + peek().text + "'",
                       peek().pos);
    return next().text;
  }
  void expect_end() {
    if (peek().kind != Token::Kind::End)
      throw ParseError("trailing input '" + peek().text + "'", peek().pos);
  }

  // ---- types ----

  Type parse_type() {
    Type lhs = parse_sum_type();
    if (eat_sym("->")) return Type::arrow(lhs, parse_type());
    return lhs;
  }

  Type parse_sum_type() {
    Type l = parse_type_atom();
    while (at_sym("+")) {
      ++pos_;
      Type r = parse_type_atom();
      l = Type::sum(l, r);
    }
    return l;
  }

  Type parse_type_atom() {
    if (peek().kind == Token::Kind::Ident) return Type::base(next().text);
    if (eat_sym("(")) {
      std::vector<Type> comps{parse_type()};
      while (eat_sym(",")) comps.push_back(parse_type());
      expect_sym(")");
      if (comps.size() == 1) return comps[0];
      return Type::product(std::move(comps));
    }
    throw ParseError("expected a type, found '" + peek().text + "'",
                     peek().pos);
  }

  // ---- terms ----

  Term parse_term(bool in_int_body) {
    if (at_sym("\\")) {
      ++pos_;
      std::string v = expect_ident();
      expect_sym(":");
      Type ty = parse_type();
      expect_sym(".");
      bound_.push_back(v);
      Term body = parse_term(in_int_body);
      bound_.pop_back();
      return Term::lam(v, ty, body);
    }
    if (at_ident("case")) {
      ++pos_;
      Term scrut = parse_term(false);
      if (!at_ident("of"))
        throw ParseError("expected 'of'", peek().pos);
      ++pos_;
      if (!at_ident("inl")) throw ParseError("expected 'inl'", peek().pos);
      ++pos_;
      std::string lv = expect_ident();
      expect_sym("=>");
      bound_.push_back(lv);
      Term lb = parse_term(in_int_body);
      bound_.pop_back();
      expect_sym("|");
      if (!at_ident("inr")) throw ParseError("expected 'inr'", peek().pos);
      ++pos_;
      std::string rv = expect_ident();
      expect_sym("=>");
      bound_.push_back(rv);
      Term rb = parse_term(in_int_body);
      bound_.pop_back();
      return Term::case_of(scrut, lv, lb, rv, rb);
    }
    return parse_addsub(in_int_body);
  }

  Term parse_addsub(bool in_int_body) {
    Term acc = parse_mul(in_int_body);
    for (;;) {
      if (at_sym("(+)")) {
        ++pos_;
        acc = Term::add(acc, parse_mul(in_int_body));
      } else if (at_sym("(-)")) {
        ++pos_;
        acc = Term::sub(acc, parse_mul(in_int_body));
      } else {
        return acc;
      }
    }
  }

  Term parse_mul(bool in_int_body) {
    Term acc = parse_app(in_int_body);
    while (at_sym("*")) {
      ++pos_;
      acc = Term::mul(acc, parse_app(in_int_body));
    }
    return acc;
  }

  bool starts_unit() const {
    const Token& t = peek();
    if (t.kind == Token::Kind::Number) return true;
    if (t.kind == Token::Kind::Sym) return t.text == "(";
    if (t.kind == Token::Kind::Ident)
      return t.text != "of" && t.text != "as" && t.text != "case";
    return false;
  }

  bool at_differential() const {
    const Token& t = peek();
    return t.kind == Token::Kind::Ident && t.text.size() >= 2 &&
           t.text[0] == 'd' && at_sym(";", 1);
  }

  Term parse_app(bool in_int_body) {
    Term acc = parse_prefix(in_int_body);
    while (starts_unit()) {
      if (in_int_body && at_differential()) break;
      acc = Term::app(acc, parse_prefix(in_int_body));
    }
    return acc;
  }

  Term parse_prefix(bool in_int_body) {
    if (at_sym("\\") || at_ident("case")) return parse_term(in_int_body);
    const Token& t = peek();
    if (t.kind == Token::Kind::Ident) {
      // projection: pi<digits>
      if (t.text.size() > 2 && t.text.rfind("pi", 0) == 0) {
        bool digits = true;
        for (std::size_t k = 2; k < t.text.size(); ++k)
          digits = digits && std::isdigit(static_cast<unsigned char>(t.text[k]));
        if (digits) {
          ++pos_;
          int idx = std::stoi(t.text.substr(2));
          return Term::proj(idx, parse_prefix(in_int_body));
        }
      }
      if (t.text == "fix") {
        ++pos_;
        return Term::fix(parse_prefix(in_int_body));
      }
      if (t.text == "inl" || t.text == "inr") {
        bool is_inl = t.text == "inl";
        ++pos_;
        Term payload = parse_prefix(in_int_body);
        if (!at_ident("as"))
          throw ParseError("expected 'as' after injection payload",
                           peek().pos);
        ++pos_;
        Type ty = parse_type();
        return is_inl ? Term::inl(payload, ty) : Term::inr(payload, ty);
      }
    }
    return parse_atom();
  }

  Term parse_atom() {
    const Token& t = peek();
    if (t.kind == Token::Kind::Number) {
      ++pos_;
      auto q = parse_rational(t.text);
      if (!q) throw ParseError("bad rational literal '" + t.text + "'", t.pos);
      return Term::rat(*q);
    }
    if (t.kind == Token::Kind::Ident) {
      if (t.text == "D" && at_sym("{", 1)) {
        pos_ += 2;
        auto binder = scan_brace_binder(false);
        if (binder) bound_.push_back(*binder);
        Term body = parse_term(false);
        if (binder) bound_.pop_back();
        expect_sym(";");
        std::string v = expect_ident();
        expect_sym("@");
        Term at = parse_term(false);
        expect_sym("}");
        return Term::der(body, v, at);
      }
      if (t.text == "Int" && at_sym("{", 1)) {
        pos_ += 2;
        auto binder = scan_brace_binder(true);
        if (binder) bound_.push_back(*binder);
        Term body = parse_term(true);
        if (binder) bound_.pop_back();
        std::string diff = expect_ident();
        if (diff.size() < 2 || diff[0] != 'd')
          throw ParseError("expected differential d<var>, found '" + diff + "'",
                           peek().pos);
        expect_sym(";");
        Term lo = parse_term(false);
        expect_sym("..");
        Term hi = parse_term(false);
        expect_sym("}");
        return Term::integral(lo, hi, body, diff.substr(1));
      }
      if (t.text == "DD" && at_sym("{", 1)) {
        pos_ += 2;
        auto binder = scan_brace_binder(false);
        if (binder) bound_.push_back(*binder);
        Term body = parse_term(false);
        if (binder) bound_.pop_back();
        expect_sym(";");
        std::string v = expect_ident();
        expect_sym("@");
        Term at = parse_term(false);
        expect_sym(",");
        Term delta = parse_term(false);
        expect_sym("}");
        return Term::dder(body, v, at, delta);
      }
      ++pos_;
      if (!is_bound(t.text)) {
        if (auto ct = constant_type(t.text))
          return Term::constant(t.text, *ct);
        if (opts_.resolve_builtins) {
          if (auto b = builtins::lookup(t.text)) return *b;
        }
      }
      return Term::var(t.text);
    }
    if (at_sym("(")) {
      ++pos_;
      std::vector<Term> items{parse_term(false)};
      while (eat_sym(",")) items.push_back(parse_term(false));
      expect_sym(")");
      if (items.size() == 1) return items[0];
      return Term::tuple(std::move(items));
    }
    throw ParseError("expected a term, found '" + t.text + "'", t.pos);
  }
};

}  // namespace parsedetail

inline Term parse_term(const std::string& text, ParseOptions opts = {}) {
  return parsedetail::TermParser(text, opts).parse_term_all();
}

inline Type parse_type(const std::string& text) {
  return parsedetail::TermParser(text, ParseOptions{}).parse_type_all();
}

}  // namespace diffcalc
