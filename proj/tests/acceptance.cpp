// Acceptance gate: each numbered criterion prints one pass/fail line; the
// exit code is the number of failures.

#include <chrono>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "diffcalc/builtins.hpp"
#include "diffcalc/discrete.hpp"
#include "diffcalc/embed.hpp"
#include "diffcalc/equality.hpp"
#include "diffcalc/parser.hpp"
#include "diffcalc/printer.hpp"
#include "diffcalc/reduce.hpp"
#include "diffcalc/sexpr.hpp"
#include "diffcalc/testing/suites.hpp"
#include "diffcalc/theorems.hpp"

using namespace diffcalc;

namespace {

int failures = 0;

void criterion(int n, const std::string& desc, const std::function<bool()>& run) {
  bool ok = false;
  std::string note;
  try {
    ok = run();
  } catch (const std::exception& e) {
    note = std::string(" (") + e.what() + ")";
  }
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << n << ": " << desc
            << note << "\n";
  if (!ok) ++failures;
}

Term parse(const std::string& s) { return parse_term(s, ParseOptions{true}); }

TypingContext real_ctx(std::initializer_list<const char*> names) {
  TypingContext ctx;
  for (const char* n : names) ctx = ctx.extend(n, Type::real());
  return ctx;
}

// Exact structural equality through the canonical symbolic forms; no
// numeric sampling is involved.
bool exact_eq(const TypingContext& ctx, const Term& a, const Term& b) {
  Term na = normalize(ctx, a).term;
  Term nb = normalize(ctx, b).term;
  std::function<bool(const Term&, const Term&)> go =
      [&](const Term& x, const Term& y) {
        if (x.is(Term::Kind::Tuple) && y.is(Term::Kind::Tuple)) {
          if (x.tuple_items().size() != y.tuple_items().size()) return false;
          for (std::size_t i = 0; i < x.tuple_items().size(); ++i)
            if (!go(x.tuple_items()[i], y.tuple_items()[i])) return false;
          return true;
        }
        if (x.is(Term::Kind::Tuple) || y.is(Term::Kind::Tuple)) return false;
        return canonical(embed(ctx, x)) == canonical(embed(ctx, y));
      };
  return go(na, nb);
}

bool suites_pass(const std::vector<testing::SuiteResult>& results,
                 std::string& detail) {
  bool ok = true;
  for (const auto& r : results) {
    if (!r.ok()) {
      ok = false;
      detail += " " + r.name + ":" + std::to_string(r.failures) + "/" +
                std::to_string(r.total);
      for (const auto& m : r.messages) detail += " [" + m + "]";
    }
  }
  return ok;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;

  criterion(1, "fundamental identity on the pair-to-triple example", [] {
    auto start = clock::now();
    Term lhs = parse("Int{ D{ f y ; y @ x } dx ; (0,0) .. (2,3) }");
    Term nf = normalize(lhs).term;
    bool golden = nf_eq({}, nf, parse("(5,6,3)"));
    bool both_sides = nf_eq({}, nf, normalize(parse("f (2,3) (-) f (0,0)")).term);
    bool exact = exact_eq({}, lhs, parse("(5,6,3)"));
    double secs =
        std::chrono::duration<double>(clock::now() - start).count();
    return golden && both_sides && exact && secs < 1.0;
  });

  criterion(2, "matrix-style multiplication contracts to (50,122)", [] {
    return exact_eq({}, parse("((1,4),(2,5),(3,6)) * (7,8,9)"),
                    parse("(50,122)"));
  });

  criterion(3, "chain rule on the worked example, canonical forms equal", [] {
    TypingContext ctx = real_ctx({"r1", "r2", "r3", "r4"});
    Term at = parse("(r3,r4)");
    Term t = parse("(r1,r2)");
    auto rep = check_chain_rule(builtins::pair_f(), builtins::pair_g(), at, t,
                                EqConfig{}, ctx);
    Term lhs = Term::mul(
        Term::der(Term::app(builtins::pair_f(),
                            Term::app(builtins::pair_g(), Term::var("x"))),
                  "x", at),
        t);
    Term rhs = Term::mul(
        Term::der(Term::app(builtins::pair_f(), Term::var("y")), "y",
                  Term::app(builtins::pair_g(), at)),
        Term::mul(Term::der(Term::app(builtins::pair_g(), Term::var("z")), "z",
                            at),
                  t));
    Term shared = parse("(r1 (+) 2*r2, r4*r1 (+) (r3 (+) 2*r4)*r2, r2)");
    return rep.ok() && exact_eq(ctx, lhs, shared) && exact_eq(ctx, rhs, shared);
  });

  criterion(4, "gradient of the squared magnitude at a symbolic point", [] {
    TypingContext ctx = real_ctx({"a", "b"});
    Term grad = ad_gradient(builtins::mag_sqr(), parse("(a,b)"), ctx);
    return exact_eq(ctx, grad, parse("(2*a, 2*b)"));
  });

  criterion(5, "second-order expansions of the two worked functions", [] {
    TypingContext ctx = real_ctx({"C1", "C2", "dr", "dth"});
    Term f = builtins::taylorf();
    Term expansion = taylor_expand(f, parse("(0,0)"), parse("(C1,C2)"), 2, ctx);
    bool whole = exact_eq(ctx, expansion, Term::app(f, parse("(C1,C2)")));
    Term second = power_mul(
        Term::app(derive_n(f, 2, ctx), parse("(0,0)")), parse("(C1,C2)"), 2);
    bool second_ok = exact_eq(ctx, second, parse("(4*C1*C2, 6*C1*C1)"));

    Term p2c = builtins::polar2cartesian();
    Term expansion2 =
        taylor_expand(p2c, parse("(1,0)"), parse("(1 (+) dr, dth)"), 2, ctx);
    bool polar_ok =
        exact_eq(ctx, expansion2,
                 parse("(1 (+) dr (-) 1/2*dth*dth, dth (+) dr*dth)"));
    return whole && second_ok && polar_ok;
  });

  criterion(6, "incremental average over a first-component change", [] {
    TypingContext ctx = real_ctx({"x1", "x2", "d"});
    Term inc = derive_incremental(builtins::average(), parse("(x1,x2)"),
                                  parse("(d,0)"), ctx);
    return exact_eq(ctx, inc, parse("d * 1/2"));
  });

  criterion(7,
            "metatheory suites: preservation, progress, confluence, "
            "normalization, interpretability (200 cases each, < 60 s)",
            [] {
              auto start = clock::now();
              auto results = testing::run_metatheory_suites(200);
              double secs =
                  std::chrono::duration<double>(clock::now() - start).count();
              std::string detail;
              bool ok = suites_pass(results, detail);
              if (!detail.empty()) std::cout << "    details:" << detail << "\n";
              return ok && secs < 60.0;
            });

  criterion(8,
            "theorem suites: fundamental identity, chain rule, expansion "
            "exactness, derivative laws, distribution/telescoping (100 cases "
            "each with numeric cross-checks)",
            [] {
              std::vector<testing::SuiteResult> results{
                  testing::suite_newton_leibniz(100),
                  testing::suite_chain_rule(100),
                  testing::suite_taylor_exactness(100),
                  testing::suite_derivative_laws(100),
                  testing::suite_eq_lemmas(100),
                  testing::suite_incremental(100),
                  testing::suite_quadrature(100),
                  testing::suite_sym_diff_fd(100)};
              std::string detail;
              bool ok = suites_pass(results, detail);
              if (!detail.empty()) std::cout << "    details:" << detail << "\n";
              return ok;
            });

  criterion(9,
            "discrete correspondence on 100 randomized programs with numeric "
            "agreement",
            [] {
              std::string detail;
              bool ok = suites_pass({testing::suite_discrete(100)}, detail);
              if (!detail.empty()) std::cout << "    details:" << detail << "\n";
              return ok;
            });

  criterion(10, "print/parse identity on 500 randomized terms, both formats", [] {
    testing::TermGen gen(97);
    TypingContext ctx = gen.ambient_context();
    for (int i = 0; i < 500; ++i) {
      Term t = gen.random_term(ctx, gen.random_type(), 10);
      if (!(parse_term(term_to_string(t)) == t)) return false;
      std::string sexpr = term_to_sexpr(t);
      Term back = term_from_sexpr(sexpr);
      if (!(back == t) || term_to_sexpr(back) != sexpr) return false;
    }
    return true;
  });

  std::cout << (failures == 0 ? "all criteria passed"
                              : std::to_string(failures) + " criteria failed")
            << "\n";
  return failures;
}
