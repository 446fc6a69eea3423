#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffcalc/rational.hpp"

namespace diffcalc {

// ---------------------------------------------------------------------------
// Symbolic expressions over the real base type. Canonical form is a sum of
// rational-coefficient monomials over "atoms" (variables and irreducible
// function applications); two canonical expressions of the polynomial
// fragment are equal iff they are structurally identical.
// ---------------------------------------------------------------------------

class UnboundVariableError : public std::runtime_error {
 public:
  explicit UnboundVariableError(const std::string& name)
      : std::runtime_error("unbound variable '" + name + "'") {}
};

class UnsupportedPrimitiveError : public std::runtime_error {
 public:
  explicit UnsupportedPrimitiveError(const std::string& msg)
      : std::runtime_error("unsupported primitive: " + msg) {}
};

class IntegrationUnsupportedError : public std::runtime_error {
 public:
  explicit IntegrationUnsupportedError(const std::string& msg)
      : std::runtime_error("integration unsupported: " + msg) {}
};

class RealExpr {
 public:
  enum class Kind { Rat, Var, Sum, Neg, Prod, Pow, Sin, Cos, Exp, Prim };

  RealExpr() : RealExpr(rat(0)) {}

  static RealExpr rat(Rational q) {
    auto n = node(Kind::Rat);
    n->value = std::move(q);
    return RealExpr(std::move(n));
  }
  static RealExpr rat(long long v) { return rat(Rational(v)); }

  static RealExpr var(std::string name) {
    auto n = node(Kind::Var);
    n->name = std::move(name);
    return RealExpr(std::move(n));
  }

  static RealExpr sum(std::vector<RealExpr> terms) {
    auto n = node(Kind::Sum);
    n->children = std::move(terms);
    return RealExpr(std::move(n));
  }

  static RealExpr neg(RealExpr e) {
    auto n = node(Kind::Neg);
    n->children = {std::move(e)};
    return RealExpr(std::move(n));
  }

  static RealExpr prod(std::vector<RealExpr> factors) {
    auto n = node(Kind::Prod);
    n->children = std::move(factors);
    return RealExpr(std::move(n));
  }

  static RealExpr pow(RealExpr base, int exponent) {
    if (exponent < 1)
      throw std::invalid_argument("pow exponent must be positive");
    auto n = node(Kind::Pow);
    n->exponent = exponent;
    n->children = {std::move(base)};
    return RealExpr(std::move(n));
  }

  static RealExpr sin(RealExpr e) { return unary(Kind::Sin, std::move(e)); }
  static RealExpr cos(RealExpr e) { return unary(Kind::Cos, std::move(e)); }
  static RealExpr exp(RealExpr e) { return unary(Kind::Exp, std::move(e)); }

  static RealExpr prim(std::string name, std::vector<RealExpr> args) {
    auto n = node(Kind::Prim);
    n->name = std::move(name);
    n->children = std::move(args);
    return RealExpr(std::move(n));
  }

  Kind kind() const { return node_->kind; }
  bool is(Kind k) const { return node_->kind == k; }
  const Rational& rat_value() const { return node_->value; }
  const std::string& name() const { return node_->name; }
  int exponent() const { return node_->exponent; }
  const std::vector<RealExpr>& children() const { return node_->children; }
  const RealExpr& arg() const { return node_->children[0]; }

  bool is_rat(long long v) const {
    return is(Kind::Rat) && rat_value() == Rational(v);
  }

 private:
  struct Node {
    Kind kind;
    Rational value;
    std::string name;
    int exponent = 0;
    std::vector<RealExpr> children;
  };

  static std::shared_ptr<Node> node(Kind k) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    return n;
  }

  static RealExpr unary(Kind k, RealExpr e) {
    auto n = node(k);
    n->children = {std::move(e)};
    return RealExpr(std::move(n));
  }

  explicit RealExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  std::shared_ptr<const Node> node_;
};

// Total term order used for canonical sorting and map keys.
inline int real_cmp(const RealExpr& a, const RealExpr& b) {
  auto rank = [](RealExpr::Kind k) {
    switch (k) {
      case RealExpr::Kind::Rat: return 0;
      case RealExpr::Kind::Var: return 1;
      case RealExpr::Kind::Sin: return 2;
      case RealExpr::Kind::Cos: return 3;
      case RealExpr::Kind::Exp: return 4;
      case RealExpr::Kind::Prim: return 5;
      case RealExpr::Kind::Pow: return 6;
      case RealExpr::Kind::Prod: return 7;
      case RealExpr::Kind::Sum: return 8;
      case RealExpr::Kind::Neg: return 9;
    }
    return 10;
  };
  if (rank(a.kind()) != rank(b.kind()))
    return rank(a.kind()) < rank(b.kind()) ? -1 : 1;
  switch (a.kind()) {
    case RealExpr::Kind::Rat:
      if (a.rat_value() == b.rat_value()) return 0;
      return a.rat_value() < b.rat_value() ? -1 : 1;
    case RealExpr::Kind::Var:
      return a.name().compare(b.name()) < 0   ? -1
             : a.name() == b.name()           ? 0
                                              : 1;
    case RealExpr::Kind::Prim: {
      int c = a.name().compare(b.name());
      if (c != 0) return c < 0 ? -1 : 1;
      break;
    }
    case RealExpr::Kind::Pow:
      if (a.exponent() != b.exponent())
        return a.exponent() < b.exponent() ? -1 : 1;
      break;
    default:
      break;
  }
  const auto& ca = a.children();
  const auto& cb = b.children();
  if (ca.size() != cb.size()) return ca.size() < cb.size() ? -1 : 1;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    int c = real_cmp(ca[i], cb[i]);
    if (c != 0) return c;
  }
  return 0;
}

inline bool operator<(const RealExpr& a, const RealExpr& b) {
  return real_cmp(a, b) < 0;
}
inline bool operator==(const RealExpr& a, const RealExpr& b) {
  return real_cmp(a, b) == 0;
}
inline bool operator!=(const RealExpr& a, const RealExpr& b) {
  return real_cmp(a, b) != 0;
}

// ---------------------------------------------------------------------------
// Primitive signatures. Derivative/antiderivative rules are templates in the
// placeholder variable $1; sin/cos/exp ship by default and are handled by the
// dedicated node kinds.
// ---------------------------------------------------------------------------

struct PrimitiveSignature {
  enum class Builtin { None, Sin, Cos, Exp };

  std::string name;
  unsigned arity = 1;
  std::optional<RealExpr> derivative;      // in $1
  std::optional<RealExpr> antiderivative;  // in $1
  Builtin builtin = Builtin::None;
};

class PrimitiveTable {
 public:
  void register_primitive(PrimitiveSignature sig) {
    if (sig.builtin == PrimitiveSignature::Builtin::None) {
      if (sig.arity != 1)
        throw std::invalid_argument("only unary primitives are supported");
      if (!sig.derivative)
        throw std::invalid_argument("primitive '" + sig.name +
                                    "' needs a derivative rule");
    }
    sigs_[sig.name] = std::move(sig);
  }

  const PrimitiveSignature* find(const std::string& name) const {
    auto it = sigs_.find(name);
    return it == sigs_.end() ? nullptr : &it->second;
  }

  static const PrimitiveTable& defaults() {
    static const PrimitiveTable table = [] {
      PrimitiveTable t;
      RealExpr u = RealExpr::var("$1");
      t.register_primitive({"sin", 1, RealExpr::cos(u),
                            RealExpr::neg(RealExpr::cos(u)),
                            PrimitiveSignature::Builtin::Sin});
      t.register_primitive({"cos", 1, RealExpr::neg(RealExpr::sin(u)),
                            RealExpr::sin(u), PrimitiveSignature::Builtin::Cos});
      t.register_primitive({"exp", 1, RealExpr::exp(u), RealExpr::exp(u),
                            PrimitiveSignature::Builtin::Exp});
      return t;
    }();
    return table;
  }

 private:
  std::map<std::string, PrimitiveSignature> sigs_;
};

// ---------------------------------------------------------------------------
// Canonicalization via an internal polynomial representation:
//   Poly = map from monomial (atom -> exponent) to rational coefficient.
// Atoms are canonical Var/Sin/Cos/Exp/Prim expressions.
// ---------------------------------------------------------------------------

namespace realdetail {

using Monomial = std::map<RealExpr, int>;
using Poly = std::map<Monomial, Rational>;

inline Poly poly_rat(const Rational& q) {
  Poly p;
  if (q != 0) p[{}] = q;
  return p;
}

inline Poly poly_atom(const RealExpr& atom) {
  Poly p;
  p[{{atom, 1}}] = 1;
  return p;
}

inline void poly_add_in(Poly& out, const Poly& p, const Rational& scale = 1) {
  for (const auto& [m, c] : p) {
    Rational& dst = out[m];
    dst += c * scale;
    if (dst == 0) out.erase(m);
  }
}

inline Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [ma, ca] : a) {
    for (const auto& [mb, cb] : b) {
      Monomial m = ma;
      for (const auto& [atom, e] : mb) m[atom] += e;
      Rational& dst = out[m];
      dst += ca * cb;
      if (dst == 0) out.erase(m);
    }
  }
  return out;
}

inline Poly poly_pow(const Poly& a, int k) {
  Poly out = poly_rat(1);
  for (int i = 0; i < k; ++i) out = poly_mul(out, a);
  return out;
}

RealExpr from_poly(const Poly& p);
Poly to_poly(const RealExpr& e);

// sin/cos/exp with exact special values at 0.
inline Poly poly_func(RealExpr::Kind k, const Poly& argp) {
  RealExpr arg = from_poly(argp);
  if (arg.is(RealExpr::Kind::Rat) && arg.rat_value() == 0) {
    switch (k) {
      case RealExpr::Kind::Sin: return poly_rat(0);
      case RealExpr::Kind::Cos: return poly_rat(1);
      case RealExpr::Kind::Exp: return poly_rat(1);
      default: break;
    }
  }
  switch (k) {
    case RealExpr::Kind::Sin: return poly_atom(RealExpr::sin(arg));
    case RealExpr::Kind::Cos: return poly_atom(RealExpr::cos(arg));
    case RealExpr::Kind::Exp: return poly_atom(RealExpr::exp(arg));
    default: throw std::logic_error("poly_func: not a function kind");
  }
}

inline Poly to_poly(const RealExpr& e) {
  switch (e.kind()) {
    case RealExpr::Kind::Rat:
      return poly_rat(e.rat_value());
    case RealExpr::Kind::Var:
      return poly_atom(e);
    case RealExpr::Kind::Sum: {
      Poly out;
      for (const auto& c : e.children()) poly_add_in(out, to_poly(c));
      return out;
    }
    case RealExpr::Kind::Neg: {
      Poly out;
      poly_add_in(out, to_poly(e.arg()), Rational(-1));
      return out;
    }
    case RealExpr::Kind::Prod: {
      Poly out = poly_rat(1);
      for (const auto& c : e.children()) out = poly_mul(out, to_poly(c));
      return out;
    }
    case RealExpr::Kind::Pow:
      return poly_pow(to_poly(e.arg()), e.exponent());
    case RealExpr::Kind::Sin:
    case RealExpr::Kind::Cos:
    case RealExpr::Kind::Exp:
      return poly_func(e.kind(), to_poly(e.arg()));
    case RealExpr::Kind::Prim: {
      std::vector<RealExpr> args;
      args.reserve(e.children().size());
      for (const auto& a : e.children()) args.push_back(from_poly(to_poly(a)));
      return poly_atom(RealExpr::prim(e.name(), std::move(args)));
    }
  }
  throw std::logic_error("to_poly: unreachable");
}

inline RealExpr monomial_term(const Monomial& m, const Rational& coeff) {
  std::vector<RealExpr> factors;
  if (coeff != 1 || m.empty()) factors.push_back(RealExpr::rat(coeff));
  for (const auto& [atom, e] : m)
    factors.push_back(e == 1 ? atom : RealExpr::pow(atom, e));
  if (factors.size() == 1) return factors[0];
  return RealExpr::prod(std::move(factors));
}

inline RealExpr from_poly(const Poly& p) {
  if (p.empty()) return RealExpr::rat(0);
  std::vector<RealExpr> terms;
  terms.reserve(p.size());
  for (const auto& [m, c] : p) terms.push_back(monomial_term(m, c));
  if (terms.size() == 1) return terms[0];
  return RealExpr::sum(std::move(terms));
}

inline void atom_free_vars(const RealExpr& e, std::set<std::string>& out) {
  if (e.is(RealExpr::Kind::Var)) {
    out.insert(e.name());
    return;
  }
  for (const auto& c : e.children()) atom_free_vars(c, out);
}

inline bool mentions(const RealExpr& atom, const std::string& x) {
  std::set<std::string> vs;
  atom_free_vars(atom, vs);
  return vs.count(x) > 0;
}

inline RealExpr instantiate_template(const RealExpr& templ, const RealExpr& arg);

// d(atom)/dx as a Poly (chain rule included).
inline Poly diff_atom(const RealExpr& atom, const std::string& x,
                      const PrimitiveTable& table);

inline Poly diff_poly(const Poly& p, const std::string& x,
                      const PrimitiveTable& table) {
  Poly out;
  for (const auto& [m, c] : p) {
    for (const auto& [atom, k] : m) {
      if (!mentions(atom, x)) continue;
      Monomial rest = m;
      if (k == 1)
        rest.erase(atom);
      else
        rest[atom] = k - 1;
      Poly factor;
      factor[rest] = c * k;
      poly_add_in(out, poly_mul(factor, diff_atom(atom, x, table)));
    }
  }
  return out;
}

inline Poly diff_atom(const RealExpr& atom, const std::string& x,
                      const PrimitiveTable& table) {
  switch (atom.kind()) {
    case RealExpr::Kind::Var:
      return atom.name() == x ? poly_rat(1) : poly_rat(0);
    case RealExpr::Kind::Sin: {
      Poly inner = diff_poly(to_poly(atom.arg()), x, table);
      return poly_mul(poly_atom(RealExpr::cos(atom.arg())), inner);
    }
    case RealExpr::Kind::Cos: {
      Poly inner = diff_poly(to_poly(atom.arg()), x, table);
      Poly minus_sin;
      poly_add_in(minus_sin, poly_atom(RealExpr::sin(atom.arg())), Rational(-1));
      return poly_mul(minus_sin, inner);
    }
    case RealExpr::Kind::Exp: {
      Poly inner = diff_poly(to_poly(atom.arg()), x, table);
      return poly_mul(poly_atom(atom), inner);
    }
    case RealExpr::Kind::Prim: {
      const PrimitiveSignature* sig = table.find(atom.name());
      if (!sig || !sig->derivative)
        throw UnsupportedPrimitiveError("'" + atom.name() +
                                        "' has no derivative rule");
      if (atom.children().size() != 1)
        throw UnsupportedPrimitiveError("'" + atom.name() +
                                        "' is not a unary primitive");
      Poly dv = to_poly(instantiate_template(*sig->derivative, atom.arg()));
      Poly inner = diff_poly(to_poly(atom.arg()), x, table);
      return poly_mul(dv, inner);
    }
    default:
      throw std::logic_error("diff_atom: not an atom");
  }
}

inline RealExpr instantiate_template(const RealExpr& templ,
                                     const RealExpr& arg) {
  switch (templ.kind()) {
    case RealExpr::Kind::Var:
      return templ.name() == "$1" ? arg : templ;
    case RealExpr::Kind::Rat:
      return templ;
    default: {
      std::vector<RealExpr> cs;
      cs.reserve(templ.children().size());
      for (const auto& c : templ.children())
        cs.push_back(instantiate_template(c, arg));
      switch (templ.kind()) {
        case RealExpr::Kind::Sum: return RealExpr::sum(std::move(cs));
        case RealExpr::Kind::Neg: return RealExpr::neg(cs[0]);
        case RealExpr::Kind::Prod: return RealExpr::prod(std::move(cs));
        case RealExpr::Kind::Pow: return RealExpr::pow(cs[0], templ.exponent());
        case RealExpr::Kind::Sin: return RealExpr::sin(cs[0]);
        case RealExpr::Kind::Cos: return RealExpr::cos(cs[0]);
        case RealExpr::Kind::Exp: return RealExpr::exp(cs[0]);
        case RealExpr::Kind::Prim:
          return RealExpr::prim(templ.name(), std::move(cs));
        default:
          throw std::logic_error("instantiate_template: unreachable");
      }
    }
  }
}

inline Poly subst_poly(const Poly& p, const std::string& x, const Poly& v,
                       const PrimitiveTable& table);

inline Poly subst_atom(const RealExpr& atom, const std::string& x,
                       const Poly& v, const PrimitiveTable& table) {
  switch (atom.kind()) {
    case RealExpr::Kind::Var:
      return atom.name() == x ? v : poly_atom(atom);
    case RealExpr::Kind::Sin:
    case RealExpr::Kind::Cos:
    case RealExpr::Kind::Exp:
      return poly_func(atom.kind(),
                       subst_poly(to_poly(atom.arg()), x, v, table));
    case RealExpr::Kind::Prim: {
      std::vector<RealExpr> args;
      args.reserve(atom.children().size());
      for (const auto& a : atom.children())
        args.push_back(from_poly(subst_poly(to_poly(a), x, v, table)));
      return poly_atom(RealExpr::prim(atom.name(), std::move(args)));
    }
    default:
      throw std::logic_error("subst_atom: not an atom");
  }
}

inline Poly subst_poly(const Poly& p, const std::string& x, const Poly& v,
                       const PrimitiveTable& table) {
  Poly out;
  for (const auto& [m, c] : p) {
    Poly acc = poly_rat(c);
    for (const auto& [atom, k] : m)
      acc = poly_mul(acc, poly_pow(subst_atom(atom, x, v, table), k));
    poly_add_in(out, acc);
  }
  return out;
}

// u = a*x + b with rational a != 0 and b free of x.
inline std::optional<std::pair<Rational, Poly>> decompose_affine(
    const Poly& u, const std::string& x) {
  Rational slope = 0;
  Poly rest;
  for (const auto& [m, c] : u) {
    bool has_x = false;
    for (const auto& [atom, k] : m)
      if (mentions(atom, x)) has_x = true;
    if (!has_x) {
      rest[m] = c;
      continue;
    }
    Monomial pure_x{{RealExpr::var(x), 1}};
    if (m != pure_x) return std::nullopt;
    slope = c;
  }
  if (slope == 0) return std::nullopt;
  return std::make_pair(slope, rest);
}

}  // namespace realdetail

inline RealExpr canonical(const RealExpr& e) {
  return realdetail::from_poly(realdetail::to_poly(e));
}

inline std::set<std::string> real_free_vars(const RealExpr& e) {
  std::set<std::string> out;
  realdetail::atom_free_vars(e, out);
  return out;
}

inline RealExpr real_subst(const RealExpr& e, const std::string& x,
                           const RealExpr& v,
                           const PrimitiveTable& table = PrimitiveTable::defaults()) {
  return realdetail::from_poly(realdetail::subst_poly(
      realdetail::to_poly(e), x, realdetail::to_poly(v), table));
}

inline RealExpr sym_diff(const RealExpr& e, const std::string& x,
                         const PrimitiveTable& table = PrimitiveTable::defaults()) {
  return realdetail::from_poly(
      realdetail::diff_poly(realdetail::to_poly(e), x, table));
}

// Definite integral F(hi) - F(lo) for the supported class: polynomials in x,
// sin/cos/exp (and registered primitives with antiderivatives) of arguments
// affine in x, and linear combinations of those.
inline RealExpr sym_integrate(const RealExpr& e, const std::string& x,
                              const RealExpr& lo, const RealExpr& hi,
                              const PrimitiveTable& table = PrimitiveTable::defaults()) {
  using namespace realdetail;
  Poly body = to_poly(e);
  Poly lo_p = to_poly(lo);
  Poly hi_p = to_poly(hi);
  Poly out;

  auto eval_between = [&](const Poly& antideriv) {
    Poly at_hi = subst_poly(antideriv, x, hi_p, table);
    Poly at_lo = subst_poly(antideriv, x, lo_p, table);
    poly_add_in(out, at_hi);
    poly_add_in(out, at_lo, Rational(-1));
  };

  for (const auto& [m, c] : body) {
    std::vector<std::pair<RealExpr, int>> x_factors;
    Monomial rest;
    for (const auto& [atom, k] : m) {
      if (mentions(atom, x))
        x_factors.emplace_back(atom, k);
      else
        rest[atom] = k;
    }
    Poly rest_poly;
    rest_poly[rest] = c;

    if (x_factors.empty()) {
      // constant in x: contributes c*rest*(hi - lo)
      Poly diff;
      poly_add_in(diff, hi_p);
      poly_add_in(diff, lo_p, Rational(-1));
      poly_add_in(out, poly_mul(rest_poly, diff));
      continue;
    }
    if (x_factors.size() > 1)
      throw IntegrationUnsupportedError(
          "product of x-dependent factors in integrand");

    const auto& [atom, k] = x_factors[0];
    if (atom.is(RealExpr::Kind::Var)) {
      // atom is Var(x) itself; power rule.
      Poly antideriv;
      Monomial xa = rest;
      xa[RealExpr::var(x)] = k + 1;
      antideriv[xa] = c / Rational(k + 1);
      eval_between(antideriv);
      continue;
    }
    if (k != 1)
      throw IntegrationUnsupportedError("power of transcendental factor");

    Poly u = to_poly(atom.arg());
    auto affine = (atom.is(RealExpr::Kind::Sin) || atom.is(RealExpr::Kind::Cos) ||
                   atom.is(RealExpr::Kind::Exp) || atom.is(RealExpr::Kind::Prim))
                      ? decompose_affine(u, x)
                      : std::nullopt;
    if (!affine)
      throw IntegrationUnsupportedError("argument not affine in " + x);
    Rational slope = affine->first;

    Poly f_of_u;
    switch (atom.kind()) {
      case RealExpr::Kind::Sin: {
        Poly cos_u = poly_func(RealExpr::Kind::Cos, u);
        poly_add_in(f_of_u, cos_u, Rational(-1) / slope);
        break;
      }
      case RealExpr::Kind::Cos: {
        Poly sin_u = poly_func(RealExpr::Kind::Sin, u);
        poly_add_in(f_of_u, sin_u, Rational(1) / slope);
        break;
      }
      case RealExpr::Kind::Exp: {
        Poly exp_u = poly_func(RealExpr::Kind::Exp, u);
        poly_add_in(f_of_u, exp_u, Rational(1) / slope);
        break;
      }
      case RealExpr::Kind::Prim: {
        const PrimitiveSignature* sig = table.find(atom.name());
        if (!sig || !sig->antiderivative)
          throw IntegrationUnsupportedError("'" + atom.name() +
                                            "' has no antiderivative rule");
        RealExpr anti = instantiate_template(*sig->antiderivative,
                                             from_poly(u));
        poly_add_in(f_of_u, to_poly(anti), Rational(1) / slope);
        break;
      }
      default:
        throw IntegrationUnsupportedError("unsupported integrand factor");
    }
    poly_add_in(out, poly_mul(rest_poly, [&] {
                  Poly hi_v = subst_poly(f_of_u, x, hi_p, table);
                  Poly lo_v = subst_poly(f_of_u, x, lo_p, table);
                  poly_add_in(hi_v, lo_v, Rational(-1));
                  return hi_v;
                }()));
  }
  return from_poly(out);
}

// ---------------------------------------------------------------------------
// Numeric evaluation. Unknown primitives evaluate through a hook; the default
// hook rejects them.
// ---------------------------------------------------------------------------

using PrimEvaluator =
    std::function<double(const std::string&, const std::vector<double>&)>;

inline double reject_prim(const std::string& name,
                          const std::vector<double>&) {
  throw UnsupportedPrimitiveError("'" + name + "' has no numeric evaluation");
}

inline double eval(const RealExpr& e, const std::map<std::string, double>& env,
                   const PrimEvaluator& prim_eval = reject_prim) {
  switch (e.kind()) {
    case RealExpr::Kind::Rat:
      return rational_to_double(e.rat_value());
    case RealExpr::Kind::Var: {
      auto it = env.find(e.name());
      if (it == env.end()) throw UnboundVariableError(e.name());
      return it->second;
    }
    case RealExpr::Kind::Sum: {
      double s = 0;
      for (const auto& c : e.children()) s += eval(c, env, prim_eval);
      return s;
    }
    case RealExpr::Kind::Neg:
      return -eval(e.arg(), env, prim_eval);
    case RealExpr::Kind::Prod: {
      double p = 1;
      for (const auto& c : e.children()) p *= eval(c, env, prim_eval);
      return p;
    }
    case RealExpr::Kind::Pow:
      return std::pow(eval(e.arg(), env, prim_eval), e.exponent());
    case RealExpr::Kind::Sin:
      return std::sin(eval(e.arg(), env, prim_eval));
    case RealExpr::Kind::Cos:
      return std::cos(eval(e.arg(), env, prim_eval));
    case RealExpr::Kind::Exp:
      return std::exp(eval(e.arg(), env, prim_eval));
    case RealExpr::Kind::Prim: {
      std::vector<double> args;
      args.reserve(e.children().size());
      for (const auto& c : e.children())
        args.push_back(eval(c, env, prim_eval));
      return prim_eval(e.name(), args);
    }
  }
  throw std::logic_error("eval: unreachable");
}

// Deterministic smooth stand-in used when sampling expressions that contain
// opaque primitives (e.g. free function variables): a quadratic polynomial
// whose coefficients are derived from the primitive's name and a seed.
inline PrimEvaluator hashed_prim_evaluator(std::uint64_t seed) {
  return [seed](const std::string& name, const std::vector<double>& args) {
    auto mix = [](std::uint64_t h, std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      return h;
    };
    std::uint64_t h = mix(std::hash<std::string>{}(name), seed);
    auto coeff = [&](std::uint64_t salt) {
      std::uint64_t v = mix(h, salt);
      return static_cast<double>(v % 2000001) / 1000000.0 - 1.0;
    };
    double out = coeff(1);
    for (std::size_t i = 0; i < args.size(); ++i) {
      out += coeff(2 * i + 2) * args[i];
      out += coeff(2 * i + 3) * args[i] * args[i];
    }
    return out;
  };
}

// ---------------------------------------------------------------------------
// Equality: canonical forms decide the polynomial fragment exactly; when
// opaque or transcendental atoms block a decision, fall back to sampling at
// 16 seeded points in [-2,2]^k with relative tolerance 1e-9.
// ---------------------------------------------------------------------------

constexpr std::uint64_t kDefaultEqSeed = 0xD1FFCA1Cull;

struct ExprEqConfig {
  std::uint64_t seed = kDefaultEqSeed;
  int sample_points = 16;
  double rel_tol = 1e-9;
};

namespace realdetail {

inline bool pure_polynomial(const RealExpr& e) {
  switch (e.kind()) {
    case RealExpr::Kind::Sin:
    case RealExpr::Kind::Cos:
    case RealExpr::Kind::Exp:
    case RealExpr::Kind::Prim:
      return false;
    default:
      for (const auto& c : e.children())
        if (!pure_polynomial(c)) return false;
      return true;
  }
}

}  // namespace realdetail

inline bool expr_eq(const RealExpr& a, const RealExpr& b,
                    const ExprEqConfig& cfg = {}) {
  RealExpr ca = canonical(a);
  RealExpr cb = canonical(b);
  if (ca == cb) return true;
  if (realdetail::pure_polynomial(ca) && realdetail::pure_polynomial(cb))
    return false;

  std::set<std::string> vars = real_free_vars(ca);
  auto vb = real_free_vars(cb);
  vars.insert(vb.begin(), vb.end());

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  PrimEvaluator prims = hashed_prim_evaluator(cfg.seed);
  for (int i = 0; i < cfg.sample_points; ++i) {
    std::map<std::string, double> env;
    for (const auto& v : vars) env[v] = dist(rng);
    double va = eval(ca, env, prims);
    double vb2 = eval(cb, env, prims);
    if (std::abs(va - vb2) > cfg.rel_tol * std::max(1.0, std::abs(va)))
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Printing and parsing. Infix uses +, -, *, ^; S-expressions mirror the
// constructors.
// ---------------------------------------------------------------------------

namespace realdetail {

// Levels: 0 sum, 1 product, 2 power/atom.
inline void print_real(const RealExpr& e, int level, std::ostream& os) {
  auto wrap = [&](int mine, auto&& body) {
    bool parens = level > mine;
    if (parens) os << "(";
    body();
    if (parens) os << ")";
  };
  switch (e.kind()) {
    case RealExpr::Kind::Rat: {
      const Rational& q = e.rat_value();
      if (q < 0)
        wrap(1, [&] { os << rational_to_string(q); });
      else
        os << rational_to_string(q);
      return;
    }
    case RealExpr::Kind::Var:
      os << e.name();
      return;
    case RealExpr::Kind::Sum:
      wrap(0, [&] {
        bool first = true;
        for (const auto& t : e.children()) {
          // Fold a leading negative coefficient into the separator.
          bool negative = false;
          RealExpr shown = t;
          if (t.is(RealExpr::Kind::Neg)) {
            negative = true;
            shown = t.arg();
          } else if (t.is(RealExpr::Kind::Rat) && t.rat_value() < 0) {
            negative = true;
            shown = RealExpr::rat(-t.rat_value());
          } else if (t.is(RealExpr::Kind::Prod) && !t.children().empty() &&
                     t.children()[0].is(RealExpr::Kind::Rat) &&
                     t.children()[0].rat_value() < 0) {
            negative = true;
            auto cs = t.children();
            cs[0] = RealExpr::rat(-cs[0].rat_value());
            if (cs.size() == 2 && cs[0].is_rat(1))
              shown = cs[1];
            else
              shown = RealExpr::prod(std::move(cs));
          }
          if (first) {
            if (negative) os << "-";
            first = false;
          } else {
            os << (negative ? " - " : " + ");
          }
          print_real(shown, 1, os);
        }
      });
      return;
    case RealExpr::Kind::Neg:
      wrap(1, [&] {
        os << "-";
        print_real(e.arg(), 2, os);
      });
      return;
    case RealExpr::Kind::Prod:
      wrap(1, [&] {
        bool first = true;
        for (const auto& f : e.children()) {
          if (!first) os << "*";
          first = false;
          print_real(f, 2, os);
        }
      });
      return;
    case RealExpr::Kind::Pow:
      print_real(e.arg(), 3, os);
      os << "^" << e.exponent();
      return;
    case RealExpr::Kind::Sin:
    case RealExpr::Kind::Cos:
    case RealExpr::Kind::Exp: {
      const char* head = e.is(RealExpr::Kind::Sin)   ? "sin"
                         : e.is(RealExpr::Kind::Cos) ? "cos"
                                                     : "exp";
      os << head << "(";
      print_real(e.arg(), 0, os);
      os << ")";
      return;
    }
    case RealExpr::Kind::Prim: {
      os << e.name() << "(";
      bool first = true;
      for (const auto& a : e.children()) {
        if (!first) os << ", ";
        first = false;
        print_real(a, 0, os);
      }
      os << ")";
      return;
    }
  }
}

}  // namespace realdetail

inline std::string real_to_string(const RealExpr& e) {
  std::ostringstream os;
  realdetail::print_real(e, 0, os);
  return os.str();
}

inline void real_to_sexpr(const RealExpr& e, std::ostream& os) {
  switch (e.kind()) {
    case RealExpr::Kind::Rat:
      os << "(rat " << rational_to_string(e.rat_value()) << ")";
      return;
    case RealExpr::Kind::Var:
      os << "(var " << e.name() << ")";
      return;
    case RealExpr::Kind::Pow:
      os << "(pow ";
      real_to_sexpr(e.arg(), os);
      os << " " << e.exponent() << ")";
      return;
    case RealExpr::Kind::Prim: {
      os << "(prim " << e.name();
      for (const auto& a : e.children()) {
        os << " ";
        real_to_sexpr(a, os);
      }
      os << ")";
      return;
    }
    default: {
      const char* head = nullptr;
      switch (e.kind()) {
        case RealExpr::Kind::Sum: head = "sum"; break;
        case RealExpr::Kind::Neg: head = "neg"; break;
        case RealExpr::Kind::Prod: head = "prod"; break;
        case RealExpr::Kind::Sin: head = "sin"; break;
        case RealExpr::Kind::Cos: head = "cos"; break;
        case RealExpr::Kind::Exp: head = "exp"; break;
        default: throw std::logic_error("real_to_sexpr: unreachable");
      }
      os << "(" << head;
      for (const auto& c : e.children()) {
        os << " ";
        real_to_sexpr(c, os);
      }
      os << ")";
      return;
    }
  }
}

inline std::string real_to_sexpr(const RealExpr& e) {
  std::ostringstream os;
  real_to_sexpr(e, os);
  return os.str();
}

// --- infix parser ----------------------------------------------------------

class RealParseError : public std::runtime_error {
 public:
  explicit RealParseError(const std::string& msg)
      : std::runtime_error("real-expr parse: " + msg) {}
};

namespace realdetail {

struct RealLexer {
  std::string text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() &&
           std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= text.size();
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }
  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  std::string ident() {
    skip_ws();
    std::string out;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '_' || text[pos] == '$'))
      out += text[pos++];
    return out;
  }
  std::string number() {
    skip_ws();
    std::string out;
    while (pos < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[pos])))
      out += text[pos++];
    if (pos < text.size() && text[pos] == '/' && pos + 1 < text.size() &&
        std::isdigit(static_cast<unsigned char>(text[pos + 1]))) {
      out += text[pos++];
      while (pos < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[pos])))
        out += text[pos++];
    }
    return out;
  }
};

inline RealExpr parse_real_sum(RealLexer& lx);

inline RealExpr parse_real_base(RealLexer& lx) {
  char c = lx.peek();
  if (c == '(') {
    lx.eat('(');
    RealExpr e = parse_real_sum(lx);
    if (!lx.eat(')')) throw RealParseError("expected ')'");
    return e;
  }
  if (c == '-') {
    lx.eat('-');
    return RealExpr::neg(parse_real_base(lx));
  }
  if (std::isdigit(static_cast<unsigned char>(c))) {
    std::string num = lx.number();
    auto q = parse_rational(num);
    if (!q) throw RealParseError("bad number '" + num + "'");
    return RealExpr::rat(*q);
  }
  std::string id = lx.ident();
  if (id.empty()) throw RealParseError("expected expression");
  if (lx.peek() == '(') {
    lx.eat('(');
    std::vector<RealExpr> args;
    if (lx.peek() != ')') {
      args.push_back(parse_real_sum(lx));
      while (lx.eat(',')) args.push_back(parse_real_sum(lx));
    }
    if (!lx.eat(')')) throw RealParseError("expected ')'");
    if (id == "sin" && args.size() == 1) return RealExpr::sin(args[0]);
    if (id == "cos" && args.size() == 1) return RealExpr::cos(args[0]);
    if (id == "exp" && args.size() == 1) return RealExpr::exp(args[0]);
    return RealExpr::prim(id, std::move(args));
  }
  return RealExpr::var(id);
}

inline RealExpr parse_real_pow(RealLexer& lx) {
  RealExpr base = parse_real_base(lx);
  if (lx.eat('^')) {
    std::string num = lx.number();
    if (num.empty() || num.find('/') != std::string::npos)
      throw RealParseError("exponent must be a positive integer");
    return RealExpr::pow(base, std::stoi(num));
  }
  return base;
}

inline RealExpr parse_real_prod(RealLexer& lx) {
  std::vector<RealExpr> fs{parse_real_pow(lx)};
  while (lx.eat('*')) fs.push_back(parse_real_pow(lx));
  return fs.size() == 1 ? fs[0] : RealExpr::prod(std::move(fs));
}

inline RealExpr parse_real_sum(RealLexer& lx) {
  std::vector<RealExpr> ts{parse_real_prod(lx)};
  for (;;) {
    if (lx.eat('+')) {
      ts.push_back(parse_real_prod(lx));
    } else if (lx.peek() == '-') {
      lx.eat('-');
      ts.push_back(RealExpr::neg(parse_real_prod(lx)));
    } else {
      break;
    }
  }
  return ts.size() == 1 ? ts[0] : RealExpr::sum(std::move(ts));
}

}  // namespace realdetail

inline RealExpr real_from_string(const std::string& text) {
  realdetail::RealLexer lx{text};
  RealExpr e = realdetail::parse_real_sum(lx);
  if (!lx.done()) throw RealParseError("trailing input");
  return e;
}

inline RealExpr real_from_sexpr(const std::string& text) {
  // Reuses the infix lexer shell for tokens; S-expressions are simple enough.
  realdetail::RealLexer lx{text};
  std::function<RealExpr()> go = [&]() -> RealExpr {
    if (!lx.eat('(')) {
      // bare atom not allowed in this format
      throw RealParseError("expected '('");
    }
    std::string head = lx.ident();
    RealExpr out = RealExpr::rat(0);
    if (head == "rat") {
      bool negv = lx.peek() == '-' && (lx.eat('-'), true);
      std::string num = lx.number();
      auto q = parse_rational(num);
      if (!q) throw RealParseError("bad rational");
      out = RealExpr::rat(negv ? -*q : *q);
    } else if (head == "var") {
      out = RealExpr::var(lx.ident());
    } else if (head == "pow") {
      RealExpr b = go();
      std::string num = lx.number();
      out = RealExpr::pow(b, std::stoi(num));
    } else if (head == "prim") {
      std::string name = lx.ident();
      std::vector<RealExpr> args;
      while (lx.peek() == '(') args.push_back(go());
      out = RealExpr::prim(name, std::move(args));
    } else {
      std::vector<RealExpr> args;
      while (lx.peek() == '(') args.push_back(go());
      if (head == "sum") out = RealExpr::sum(std::move(args));
      else if (head == "neg") out = RealExpr::neg(args.at(0));
      else if (head == "prod") out = RealExpr::prod(std::move(args));
      else if (head == "sin") out = RealExpr::sin(args.at(0));
      else if (head == "cos") out = RealExpr::cos(args.at(0));
      else if (head == "exp") out = RealExpr::exp(args.at(0));
      else throw RealParseError("unknown head '" + head + "'");
    }
    if (!lx.eat(')')) throw RealParseError("expected ')'");
    return out;
  };
  RealExpr e = go();
  if (!lx.done()) throw RealParseError("trailing input");
  return e;
}

}  // namespace diffcalc
