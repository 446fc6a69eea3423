#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>

#include "diffcalc/embed.hpp"
#include "diffcalc/equality.hpp"
#include "diffcalc/reduce.hpp"

// Numeric oracles used only by tests and the verify suites, never by the
// reduction semantics.

namespace diffcalc {
namespace testing {

using RealFn = std::function<double(double)>;

namespace oracle_detail {

inline double simpson(const RealFn& f, double a, double b, double fa,
                      double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_rec(const RealFn& f, double a, double b, double fa,
                           double fb, double fm, double whole, double tol,
                           int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = f(lm);
  double frm = f(rm);
  double left = simpson(f, a, m, fa, fm, flm);
  double right = simpson(f, m, b, fm, fb, frm);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_rec(f, a, m, fa, fm, flm, left, tol / 2.0, depth - 1) +
         adaptive_rec(f, m, b, fm, fb, frm, right, tol / 2.0, depth - 1);
}

}  // namespace oracle_detail

// Adaptive Simpson quadrature, default tolerance 1e-10.
inline double adaptive_simpson(const RealFn& f, double a, double b,
                               double tol = 1e-10, int max_depth = 40) {
  if (a == b) return 0.0;
  double fa = f(a);
  double fb = f(b);
  double fm = f(0.5 * (a + b));
  double whole = oracle_detail::simpson(f, a, b, fa, fb, fm);
  return oracle_detail::adaptive_rec(f, a, b, fa, fb, fm, whole, tol,
                                     max_depth);
}

// Central finite difference with step h.
inline double central_diff(const RealFn& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Normalize a base-typed term and embed it for numeric evaluation.
inline RealExpr embed_normalized(const TypingContext& ctx, const Term& t,
                                 Fuel fuel = {}) {
  auto r = normalize(ctx, t, fuel);
  if (!r.normalized())
    throw FuelExhaustedError("oracle could not normalize " + term_excerpt(t));
  return embed(ctx, r.term);
}

inline double eval_term(const TypingContext& ctx, const Term& t,
                        const std::map<std::string, double>& env,
                        Fuel fuel = {}) {
  return eval(embed_normalized(ctx, t, fuel), env);
}

}  // namespace testing
}  // namespace diffcalc
