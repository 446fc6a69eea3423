#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

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
#include "diffcalc/typecheck.hpp"

namespace {

using namespace diffcalc;

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 1;   // parse or type errors
constexpr int kExitFuel = 2;       // normalization ran out of fuel
constexpr int kExitUndefined = 3;  // equality undefined (unnormalizable input)

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DIFFCALC_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      std::cerr << "warning: ignoring unparsable DIFFCALC_SEED\n";
    }
  }
  return kDefaultEqSeed;
}

// Term arguments name a file, are "-" for stdin, or are literal text.
std::string read_source(const std::string& arg) {
  if (arg == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(arg);
  if (in.good()) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  return arg;
}

Term parse_input(const std::string& arg) {
  return parse_term(read_source(arg), ParseOptions{true});
}

// Unbound identifiers are treated as free real-valued variables.
TypingContext context_for(std::initializer_list<const Term*> terms) {
  TypingContext ctx;
  std::set<std::string> seen;
  for (const Term* t : terms)
    for (const auto& v : free_vars(*t))
      if (seen.insert(v).second) ctx = ctx.extend(v, Type::real());
  return ctx;
}

struct CommonFlags {
  std::uint64_t fuel = 100000;
  bool unicode = false;
  bool trace = false;
  std::string format = "text";
};

int run_check(const std::string& input) {
  Term t = parse_input(input);
  TypingContext ctx = context_for({&t});
  Type ty = typecheck(ctx, t);
  std::cout << type_to_string(ty) << "\n";
  return kExitOk;
}

int run_norm(const std::string& input, const CommonFlags& flags,
             CalculusMode mode) {
  Term t = parse_input(input);
  TypingContext ctx = context_for({&t});
  typecheck(ctx, t, PrimitiveTable::defaults(), mode);
  ReductionTrace trace;
  auto r = normalize(ctx, t, Fuel{flags.fuel}, flags.trace ? &trace : nullptr,
                     PrimitiveTable::defaults(), mode);
  PrintStyle style{flags.unicode};
  if (flags.trace) std::cout << render_trace(trace, style);
  if (!r.normalized()) {
    std::cerr << "fuel exhausted after " << r.steps_used
              << " steps; last term: " << term_excerpt(r.term, 120) << "\n";
    return kExitFuel;
  }
  Term interpreted = interpret_normal_form(ctx, r.term);
  if (flags.format == "sexpr") {
    std::cout << term_to_sexpr(r.term) << "\n";
  } else if (flags.format == "json") {
    nlohmann::json j{{"input", term_to_string(t, style)},
                     {"type", type_to_string(typecheck(ctx, t,
                                                       PrimitiveTable::defaults(),
                                                       mode))},
                     {"normal_form", term_to_string(interpreted, style)},
                     {"raw", term_to_string(r.term, style)},
                     {"sexpr", term_to_sexpr(r.term)},
                     {"steps", r.steps_used},
                     {"status", "normalized"}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << term_to_string(interpreted, style) << "\n";
  }
  return kExitOk;
}

int run_eq(const std::string& lhs, const std::string& rhs, int trials,
           std::uint64_t seed, std::uint64_t fuel) {
  Term a = parse_input(lhs);
  Term b = parse_input(rhs);
  TypingContext ctx = context_for({&a, &b});
  EqConfig cfg;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.fuel = Fuel{fuel};
  EqResult r = term_eq(ctx, a, b, cfg);
  if (r.equal) {
    std::cout << "equal\n";
  } else {
    std::cout << "not-equal\n";
    if (r.witness) {
      std::cout << "  position: " << r.witness->position << "\n";
      for (const auto& [name, term] : r.witness->substitution)
        std::cout << "  " << name << " := " << term_to_string(term) << "\n";
      std::cout << "  lhs normal form: " << term_to_string(r.witness->lhs_nf)
                << "\n";
      std::cout << "  rhs normal form: " << term_to_string(r.witness->rhs_nf)
                << "\n";
    }
  }
  return kExitOk;
}

void print_report(const TheoremReport& rep) {
  std::cout << rep.to_json().dump(2) << "\n";
}

int report_exit(const TheoremReport& rep) {
  if (rep.verdict == "inconclusive") return kExitFuel;
  return kExitOk;
}

int run_verify(const std::string& suite, int metatheory_cases,
               int theorem_cases) {
  using namespace diffcalc::testing;
  std::vector<SuiteResult> results;
  if (suite == "all") {
    results = run_all_suites(metatheory_cases, theorem_cases);
  } else if (suite == "metatheory") {
    results = run_metatheory_suites(metatheory_cases);
  } else if (suite == "theorems") {
    results = run_theorem_suites(theorem_cases);
  } else {
    auto all = run_all_suites(metatheory_cases, theorem_cases);
    for (auto& r : all)
      if (r.name == suite) results.push_back(r);
    if (results.empty()) {
      std::cerr << "unknown suite '" << suite << "'\n";
      return kExitBadInput;
    }
  }
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.ok() ? "[pass] " : "[FAIL] ") << r.name << " (" << r.total
              << " cases, " << r.failures << " failures)\n";
    for (const auto& m : r.messages) std::cout << "    " << m << "\n";
    ok = ok && r.ok();
  }
  return ok ? kExitOk : kExitBadInput;
}

int run_repl(const CommonFlags& flags) {
  std::string line;
  PrintStyle style{flags.unicode};
  std::cout << "term> " << std::flush;
  while (std::getline(std::cin, line)) {
    if (line == ":q" || line == ":quit") break;
    if (!line.empty()) {
      try {
        Term t = parse_term(line, ParseOptions{true});
        TypingContext ctx = context_for({&t});
        Type ty = typecheck(ctx, t);
        auto r = normalize(ctx, t, Fuel{flags.fuel});
        if (!r.normalized()) {
          std::cout << "fuel exhausted\n";
        } else {
          std::cout << term_to_string(interpret_normal_form(ctx, r.term), style)
                    << " : " << type_to_string(ty) << "\n";
        }
      } catch (const std::exception& e) {
        std::cout << "error: " << e.what() << "\n";
      }
    }
    std::cout << "term> " << std::flush;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "diffcalc: a typed lambda calculus with derivatives and integration"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::uint64_t seed = default_seed();

  std::string input, rhs_input;
  std::string f_arg, g_arg, t_arg, y_arg, from_arg, to_arg, at_arg, wrt_arg,
      x_arg, delta_arg;
  int trials = 8;
  unsigned order = 2;
  std::string suite = "all";
  int metatheory_cases = 200;
  int theorem_cases = 100;

  auto add_common = [&](CLI::App* cmd, bool with_format = true) {
    cmd->add_option("--fuel", flags.fuel, "reduction step budget");
    cmd->add_flag("--unicode", flags.unicode, "print with unicode operators");
    if (with_format)
      cmd->add_option("--format", flags.format,
                      "output format: text, sexpr, json");
  };

  auto* check = app.add_subcommand("check", "typecheck a term");
  check->add_option("term", input, "term text, a file name, or -")->required();

  auto* norm = app.add_subcommand("norm", "normalize a term");
  norm->add_option("term", input, "term text, a file name, or -")->required();
  norm->add_flag("--trace", flags.trace, "print the reduction trace");
  add_common(norm);

  auto* disc = app.add_subcommand(
      "discrete", "normalize a term of the discrete fragment");
  disc->add_option("term", input, "term text, a file name, or -")->required();
  disc->add_flag("--trace", flags.trace, "print the reduction trace");
  add_common(disc);

  auto* eq = app.add_subcommand("eq", "decide term equality");
  eq->add_option("lhs", input)->required();
  eq->add_option("rhs", rhs_input)->required();
  eq->add_option("--trials", trials, "open-term substitution samples");
  eq->add_option("--seed", seed, "rng seed");
  eq->add_option("--fuel", flags.fuel, "reduction step budget");

  auto* nl = app.add_subcommand("nl", "check the fundamental-theorem identity");
  nl->add_option("--t", t_arg, "body term with the bound name free")->required();
  nl->add_option("--y", y_arg, "name bound by the identity")->required();
  nl->add_option("--from", from_arg)->required();
  nl->add_option("--to", to_arg)->required();
  nl->add_option("--seed", seed);

  auto* chain = app.add_subcommand("chain", "check the chain-rule identity");
  chain->add_option("--f", f_arg)->required();
  chain->add_option("--g", g_arg)->required();
  chain->add_option("--at", at_arg)->required();
  chain->add_option("--t", t_arg)->required();
  chain->add_option("--seed", seed);

  auto* taylor = app.add_subcommand("taylor", "expand around a point");
  taylor->add_option("--f", f_arg)->required();
  taylor->add_option("--at", at_arg)->required();
  taylor->add_option("--order", order);
  taylor->add_option("--wrt", wrt_arg, "symbolic displacement tuple")
      ->required();

  auto* ad = app.add_subcommand("ad", "gradient via the derivative operator");
  ad->add_option("--f", f_arg)->required();
  ad->add_option("--at", at_arg)->required();

  auto* inc = app.add_subcommand("inc", "incremental change of a function");
  inc->add_option("--f", f_arg)->required();
  inc->add_option("--x", x_arg)->required();
  inc->add_option("--delta", delta_arg)->required();

  auto* verify = app.add_subcommand("verify", "run the property suites");
  verify->add_option("--suite", suite,
                     "all, metatheory, theorems, or a suite name");
  verify->add_option("--metatheory-cases", metatheory_cases);
  verify->add_option("--theorem-cases", theorem_cases);

  auto* repl = app.add_subcommand("repl", "interactive normalization loop");
  repl->add_option("--fuel", flags.fuel);
  repl->add_flag("--unicode", flags.unicode);

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return run_check(input);
    if (norm->parsed())
      return run_norm(input, flags, CalculusMode::Analytical);
    if (disc->parsed()) return run_norm(input, flags, CalculusMode::Discrete);
    if (eq->parsed())
      return run_eq(input, rhs_input, trials, seed, flags.fuel);
    if (nl->parsed()) {
      Term t = parse_input(t_arg);
      Term from = parse_input(from_arg);
      Term to = parse_input(to_arg);
      TypingContext ctx = context_for({&t, &from, &to});
      EqConfig cfg;
      cfg.seed = seed;
      auto rep = check_newton_leibniz(t, y_arg, from, to, cfg, ctx);
      print_report(rep);
      return report_exit(rep);
    }
    if (chain->parsed()) {
      Term f = parse_input(f_arg);
      Term g = parse_input(g_arg);
      Term at = parse_input(at_arg);
      Term t = parse_input(t_arg);
      TypingContext ctx = context_for({&f, &g, &at, &t});
      EqConfig cfg;
      cfg.seed = seed;
      auto rep = check_chain_rule(f, g, at, t, cfg, ctx);
      print_report(rep);
      return report_exit(rep);
    }
    if (taylor->parsed()) {
      Term f = parse_input(f_arg);
      Term at = parse_input(at_arg);
      Term wrt = parse_input(wrt_arg);
      Term t = Term::add(at, wrt);
      TypingContext ctx = context_for({&f, &at, &wrt});
      Term expansion = taylor_expand(f, at, t, order, ctx, Fuel{flags.fuel});
      auto r = normalize(ctx, expansion, Fuel{flags.fuel});
      if (!r.normalized()) return kExitFuel;
      nlohmann::json j{
          {"theorem", "taylor"},
          {"inputs",
           {{"f", term_to_string(f)},
            {"at", term_to_string(at)},
            {"order", order},
            {"wrt", term_to_string(wrt)}}},
          {"expansion", term_to_string(interpret_normal_form(ctx, r.term))},
          {"verdict", "expanded"}};
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }
    if (ad->parsed()) {
      Term f = parse_input(f_arg);
      Term at = parse_input(at_arg);
      TypingContext ctx = context_for({&f, &at});
      Term grad = ad_gradient(f, at, ctx, Fuel{flags.fuel});
      nlohmann::json j{
          {"theorem", "ad-gradient"},
          {"inputs", {{"f", term_to_string(f)}, {"at", term_to_string(at)}}},
          {"gradient", term_to_string(interpret_normal_form(ctx, grad))},
          {"verdict", "computed"}};
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }
    if (inc->parsed()) {
      Term f = parse_input(f_arg);
      Term x = parse_input(x_arg);
      Term delta = parse_input(delta_arg);
      TypingContext ctx = context_for({&f, &x, &delta});
      Term change = derive_incremental(f, x, delta, ctx, Fuel{flags.fuel});
      nlohmann::json j{{"theorem", "incremental"},
                       {"inputs",
                        {{"f", term_to_string(f)},
                         {"x", term_to_string(x)},
                         {"delta", term_to_string(delta)}}},
                       {"increment",
                        term_to_string(interpret_normal_form(ctx, change))},
                       {"verdict", "computed"}};
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }
    if (verify->parsed())
      return run_verify(suite, metatheory_cases, theorem_cases);
    if (repl->parsed()) return run_repl(flags);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const TypeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const SexprError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const FuelExhaustedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUndefined;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  return kExitOk;
}
