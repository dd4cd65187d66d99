#pragma once

// Command-line front end. `run` is the whole program minus process setup so
// the test suite can drive it in-process.
//
// Exit codes:
//   0  analysis ran (whatever the verdict)
//   1  internal error
//   2  malformed input or invalid parameters
//   3  face-enumeration limit exceeded
//   4  market not arbitrage-free where the command needs it
//   5  perturbation retry limit exhausted

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "martpoly/analysis.hpp"
#include "martpoly/geometry.hpp"
#include "martpoly/io.hpp"
#include "martpoly/market.hpp"
#include "martpoly/models.hpp"
#include "martpoly/multiperiod.hpp"

namespace martpoly::cli {

using nlohmann::json;

enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kInvalidInput = 2,
  kLimitExceeded = 3,
  kNotViable = 4,
  kRetryLimit = 5,
};

inline constexpr const char* kMaxOutcomesEnv = "MARTPOLY_MAX_OUTCOMES";

struct CommonFlags {
  bool json = false;
  std::optional<std::size_t> max_outcomes;
};

// --max-outcomes, then $MARTPOLY_MAX_OUTCOMES, then the library default.
inline EnumerationLimits limits_for(const CommonFlags& flags) {
  EnumerationLimits limits;
  if (flags.max_outcomes) {
    limits.max_outcomes = *flags.max_outcomes;
  } else if (const char* env = std::getenv(kMaxOutcomesEnv); env && *env) {
    const std::string text(env);
    if (text.find_first_not_of("0123456789") != std::string::npos)
      throw ParseError(std::string(kMaxOutcomesEnv) +
                       " must be a nonnegative integer");
    limits.max_outcomes = std::stoul(text);
  }
  return limits;
}

namespace detail {

inline std::string tuple(std::span<const Rational> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += to_string(v[i]);
  }
  return s + ")";
}

template <typename Indices>
inline json one_based(const Indices& idx) {
  json arr = json::array();
  for (auto i : idx) arr.push_back(i + 1);
  return arr;
}

inline std::string index_set(const std::vector<std::size_t>& idx) {
  std::string s = "{";
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(idx[i] + 1);
  }
  return s + "}";
}

inline long integer_flag(const std::string& text, const char* name) {
  const Rational v = parse_rational(text);
  if (denominator_of(v) != 1)
    throw InvalidInput(std::string("--") + name + " must be an integer");
  return numerator_of(v).convert_to<long>();
}

// "1,0,0;0,1,0" -> two rows.
inline std::vector<RationalVector> parse_rows(const std::string& text) {
  std::vector<RationalVector> rows;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto semi = text.find(';', start);
    const std::string part = text.substr(start, semi - start);
    if (!part.empty()) rows.push_back(parse_rational_list(part));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return rows;
}

inline void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Report builders. Keys are sorted (nlohmann's default object is ordered),
// indices are 1-based, numbers are rational strings.

inline json generators_json(const GeneratorSet& g) {
  json arr = json::array();
  for (const auto& v : g.generators) arr.push_back(io::to_json(v));
  return arr;
}

inline json analyze_report(const OnePeriodMarket& mkt,
                           const EnumerationLimits& limits) {
  const MartingaleSystem sys = build_system(mkt);
  const EmmCharacterization emm = characterize_system(sys, limits);
  const ArbitrageVerdict verdict = arbitrage_verdict(emm);
  json r;
  r["command"] = "analyze";
  r["outcomes"] = mkt.outcomes();
  r["assets"] = mkt.assets();
  r["rate"] = io::to_json(mkt.rate);
  r["viable"] = verdict.arbitrage_free;
  r["complete"] = verdict.arbitrage_free && spans_outcomes(sys);
  r["rank"] = rank(augmented_matrix(sys));
  r["generators"] = generators_json(emm.generators);
  json support = json::array();
  for (const auto& s : emm.outcome_support) support.push_back(detail::one_based(s));
  r["emm"] = {{"exists", emm.emm_exists}, {"outcome_support", support}};
  r["witness"] = verdict.witness ? io::to_json(*verdict.witness) : json(nullptr);
  json warnings = json::array();
  if (emm.generators.empty())
    warnings.push_back("no martingale measure: the simplex misses A");
  for (std::size_t i = 0; i < emm.outcome_support.size(); ++i)
    if (emm.outcome_support[i].empty())
      warnings.push_back("every martingale measure vanishes on outcome " +
                         std::to_string(i + 1));
  if (mkt.probabilities)
    warnings.push_back(
        "physical probabilities are validated but do not affect pricing");
  r["warnings"] = warnings;
  return r;
}

inline void print_analyze(std::ostream& out, const json& r) {
  out << "market: " << r["outcomes"].get<std::size_t>() << " outcomes, "
      << r["assets"].get<std::size_t>() << " assets, rate "
      << r["rate"].get<std::string>() << '\n';
  out << "viable:   " << (r["viable"].get<bool>() ? "yes" : "no") << '\n';
  out << "complete: " << (r["complete"].get<bool>() ? "yes" : "no")
      << "  (rank of augmented matrix " << r["rank"].get<std::size_t>()
      << ")\n";
  const auto& gens = r["generators"];
  out << "generators (" << gens.size() << "):\n";
  for (std::size_t j = 0; j < gens.size(); ++j) {
    out << "  p" << j + 1 << " = (";
    for (std::size_t i = 0; i < gens[j].size(); ++i)
      out << (i ? ", " : "") << gens[j][i].get<std::string>();
    out << ")\n";
  }
  if (!gens.empty()) {
    out << "equivalent measures: sum_j alpha_j p_j with alpha >= 0, "
           "sum alpha = 1, and\n";
    const auto& support = r["emm"]["outcome_support"];
    for (std::size_t i = 0; i < support.size(); ++i) {
      out << "  outcome " << i + 1 << ": ";
      if (support[i].empty()) {
        out << "impossible (no generator charges it)\n";
        continue;
      }
      out << "alpha_j > 0 for some j in {";
      for (std::size_t k = 0; k < support[i].size(); ++k)
        out << (k ? "," : "") << support[i][k].get<std::size_t>();
      out << "}\n";
    }
  }
  if (!r["witness"].is_null()) {
    out << "witness (uniform average): (";
    for (std::size_t i = 0; i < r["witness"].size(); ++i)
      out << (i ? ", " : "") << r["witness"][i].get<std::string>();
    out << ")\n";
  }
  for (const auto& w : r["warnings"])
    out << "warning: " << w.get<std::string>() << '\n';
}

inline json bounds_report(const OnePeriodMarket& mkt,
                          std::span<const Rational> payoff,
                          const EnumerationLimits& limits) {
  const PriceBounds b = price_bounds(mkt, payoff, limits);
  return {{"command", "bounds"},
          {"payoff", io::to_json(payoff)},
          {"low", io::to_json(b.low)},
          {"high", io::to_json(b.high)},
          {"low_attained_by_emm", b.low_attained_by_emm},
          {"high_attained_by_emm", b.high_attained_by_emm},
          {"unique", b.unique()}};
}

inline json plan_json(const CompletionPlan& plan) {
  json constraints = json::array();
  for (const auto& s : plan.alpha_constraints)
    constraints.push_back(detail::one_based(s));
  return {{"added_payoff_rows", io::to_json(plan.added_payoff_rows)},
          {"price_map", io::to_json(plan.price_map)},
          {"alpha_constraints", constraints},
          {"weights", io::to_json(plan.weights)},
          {"prices", io::to_json(plan.prices)}};
}

inline void print_plan(std::ostream& out, const CompletionPlan& plan,
                       const std::string& indent) {
  if (plan.empty()) {
    out << indent << "already complete; nothing to add\n";
    return;
  }
  out << indent << "weights over generators: "
      << detail::tuple(plan.weights) << '\n';
  for (std::size_t a = 0; a < plan.added_payoff_rows.rows(); ++a) {
    out << indent << "add payoff " << detail::tuple(plan.added_payoff_rows.row(a))
        << " at price " << to_string(plan.prices[a])
        << "  (generator prices " << detail::tuple(plan.price_map.row(a))
        << ")\n";
  }
}

// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"martpoly: martingale-measure polytopes for finite markets"};
  app.name("martpoly");
  app.require_subcommand(1);

  CommonFlags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_flag("--json", flags.json, "Machine-readable JSON output");
    sub->add_option("--max-outcomes", flags.max_outcomes,
                    "Face-enumeration guard (default 16, env " +
                        std::string(kMaxOutcomesEnv) + ")");
  };

  std::string path;
  auto* analyze = app.add_subcommand("analyze", "Verdicts, generators, EMMs");
  analyze->add_option("market", path, "Market JSON document")->required();
  add_common(analyze);

  bool oracle = false;
  auto* generators = app.add_subcommand("generators", "List generators only");
  generators->add_option("market", path, "Market JSON document")->required();
  generators->add_flag("--brute-force", oracle,
                       "Use the exhaustive support scan instead");
  add_common(generators);

  std::string payoff_text;
  auto* bounds = app.add_subcommand("bounds", "Price bounds for a payoff");
  bounds->add_option("market", path, "Market JSON document")->required();
  bounds->add_option("--payoff", payoff_text, "Comma-separated payoff")
      ->required();
  add_common(bounds);

  std::string weights_text, rows_text, apply_path;
  auto* complete = app.add_subcommand("complete", "Complete the market");
  complete->add_option("market", path, "Market JSON document")->required();
  complete->add_option("--weights", weights_text,
                       "Generator weights (default uniform)");
  complete->add_option("--rows", rows_text,
                       "Candidate payoff rows tried first, ';'-separated");
  complete->add_option("--apply", apply_path,
                       "Write the completed market JSON here");
  add_common(complete);

  auto* tree = app.add_subcommand("tree", "Multi-period tree markets");
  tree->require_subcommand(1);
  auto* tree_analyze = tree->add_subcommand("analyze", "Per-component verdicts");
  tree_analyze->add_option("tree", path, "Tree JSON document")->required();
  add_common(tree_analyze);
  auto* tree_complete = tree->add_subcommand("complete", "Completion plans");
  tree_complete->add_option("tree", path, "Tree JSON document")->required();
  tree_complete->add_option("--apply", apply_path,
                            "Write the completed tree JSON here");
  add_common(tree_complete);

  std::string s0 = "1", lambda, eta, rate = "0", horizon = "1", steps = "1",
              emm_p = "1/2", epsilon, seed_text = "0", csv_path;
  auto* kkl = app.add_subcommand("kkl", "Discrete Korn-Kreer-Lenssen grid");
  kkl->add_option("--s0", s0, "Initial integer price")->capture_default_str();
  kkl->add_option("--lambda", lambda, "Up intensity")->required();
  kkl->add_option("--eta", eta, "Down intensity")->required();
  kkl->add_option("--rate", rate, "Interest rate r")->capture_default_str();
  kkl->add_option("--horizon", horizon, "Maturity T")->capture_default_str();
  kkl->add_option("--steps", steps, "Number of steps n")->capture_default_str();
  kkl->add_option("--emm-p", emm_p, "Node EMM parameter in (0,1)")
      ->capture_default_str();
  kkl->add_option("--epsilon", epsilon,
                  "Perturb the put terminal by less than epsilon");
  kkl->add_option("--seed", seed_text, "Perturbation seed")
      ->capture_default_str();
  kkl->add_option("--out", csv_path, "Write the surface CSV here");
  kkl->add_flag("--json", flags.json, "Machine-readable JSON output");

  std::vector<const char*> argv{"martpoly"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }

  try {
    if (analyze->parsed()) {
      const auto mkt = io::market_from_json(io::parse_document(io::read_file(path)));
      const json r = analyze_report(mkt, limits_for(flags));
      flags.json ? detail::emit(out, r) : print_analyze(out, r);
    } else if (generators->parsed()) {
      const auto mkt = io::market_from_json(io::parse_document(io::read_file(path)));
      const auto sys = build_system(mkt);
      const auto limits = limits_for(flags);
      if (mkt.outcomes() > limits.max_outcomes)
        throw LimitExceeded("market has " + std::to_string(mkt.outcomes()) +
                            " outcomes; limit is " +
                            std::to_string(limits.max_outcomes));
      const GeneratorSet g =
          oracle ? brute_force_generators(sys) : enumerate_generators(sys, limits);
      json supports = json::array();
      for (const auto& s : g.support) supports.push_back(detail::one_based(s));
      const json r = {{"command", "generators"},
                      {"method", oracle ? "brute-force" : "staged"},
                      {"generators", generators_json(g)},
                      {"support", supports}};
      if (flags.json) {
        detail::emit(out, r);
      } else {
        for (std::size_t j = 0; j < g.size(); ++j)
          out << "p" << j + 1 << " = " << detail::tuple(g.generators[j])
              << "  support " << detail::index_set(g.support[j]) << '\n';
        if (g.empty()) out << "no generators\n";
      }
    } else if (bounds->parsed()) {
      const auto mkt = io::market_from_json(io::parse_document(io::read_file(path)));
      const RationalVector payoff = parse_rational_list(payoff_text);
      const json r = bounds_report(mkt, payoff, limits_for(flags));
      if (flags.json) {
        detail::emit(out, r);
      } else {
        const bool lo = r["low_attained_by_emm"].get<bool>();
        const bool hi = r["high_attained_by_emm"].get<bool>();
        out << "price interval: " << (lo ? "[" : "(")
            << r["low"].get<std::string>() << ", "
            << r["high"].get<std::string>() << (hi ? "]" : ")") << '\n';
        if (r["unique"].get<bool>()) out << "the payoff is priced uniquely\n";
      }
    } else if (complete->parsed()) {
      const auto mkt = io::market_from_json(io::parse_document(io::read_file(path)));
      CompletionOptions options;
      if (!weights_text.empty()) options.weights = parse_rational_list(weights_text);
      options.candidate_rows = detail::parse_rows(rows_text);
      const auto limits = limits_for(flags);
      const CompletionPlan plan = complete_market(mkt, options, limits);
      const OnePeriodMarket extended = apply_completion(mkt, plan);
      json r = plan_json(plan);
      r["command"] = "complete";
      r["already_complete"] = plan.empty();
      r["extended_complete"] = is_complete(extended, limits);
      if (!apply_path.empty())
        io::write_file(apply_path, io::market_to_json(extended).dump(2) + "\n");
      if (flags.json) {
        detail::emit(out, r);
      } else {
        print_plan(out, plan, "");
        out << "extended market complete: "
            << (r["extended_complete"].get<bool>() ? "yes" : "no") << '\n';
        if (!apply_path.empty()) out << "wrote " << apply_path << '\n';
      }
    } else if (tree_analyze->parsed()) {
      const auto tm = io::tree_from_json(io::parse_document(io::read_file(path)));
      const TreeReport report = analyze_tree(tm, limits_for(flags));
      json comps = json::array();
      for (const auto& c : report.per_component)
        comps.push_back({{"time", c.time},
                         {"node", c.node},
                         {"outcomes", c.emm.outcome_support.size()},
                         {"arbitrage_free", c.arbitrage_free},
                         {"complete", c.complete},
                         {"generators", generators_json(c.emm.generators)}});
      const json r = {{"command", "tree analyze"},
                      {"viable", report.viable},
                      {"complete", report.complete},
                      {"components", comps}};
      if (flags.json) {
        detail::emit(out, r);
      } else {
        out << "viable:   " << (report.viable ? "yes" : "no") << '\n'
            << "complete: " << (report.complete ? "yes" : "no") << '\n';
        for (const auto& c : report.per_component)
          out << "  (t=" << c.time << ", " << c.node << ") b="
              << c.emm.outcome_support.size()
              << " arbitrage-free=" << (c.arbitrage_free ? "yes" : "no")
              << " complete=" << (c.complete ? "yes" : "no")
              << " generators=" << c.emm.generators.size() << '\n';
      }
    } else if (tree_complete->parsed()) {
      const auto tm = io::tree_from_json(io::parse_document(io::read_file(path)));
      const auto limits = limits_for(flags);
      const auto plans = complete_tree(tm, limits);
      if (!apply_path.empty())
        io::write_file(apply_path,
                       io::tree_to_json(apply_tree_completion(tm, plans)).dump(2) +
                           "\n");
      json arr = json::array();
      for (const auto& p : plans) {
        json j = plan_json(p.plan);
        j["time"] = p.time;
        j["node"] = p.node;
        arr.push_back(std::move(j));
      }
      const json r = {{"command", "tree complete"}, {"plans", arr}};
      if (flags.json) {
        detail::emit(out, r);
      } else {
        if (plans.empty()) out << "tree market is already complete\n";
        for (const auto& p : plans) {
          out << "(t=" << p.time << ", " << p.node << "):\n";
          print_plan(out, p.plan, "  ");
        }
        if (!apply_path.empty()) out << "wrote " << apply_path << '\n';
      }
    } else if (kkl->parsed()) {
      KklParams params;
      params.s0 = detail::integer_flag(s0, "s0");
      params.lambda = parse_rational(lambda);
      params.eta = parse_rational(eta);
      params.rate = parse_rational(rate);
      params.horizon = parse_rational(horizon);
      params.steps = detail::integer_flag(steps, "steps");
      params.validate();
      const Rational p = parse_rational(emm_p);
      if (p <= 0 || p >= 1) throw InvalidInput("--emm-p must lie in (0, 1)");
      const long seed = detail::integer_flag(seed_text, "seed");
      std::optional<Rational> eps;
      if (!epsilon.empty()) {
        eps = parse_rational(epsilon);
        if (*eps <= 0) throw InvalidInput("--epsilon must be > 0");
      }

      json r;
      r["command"] = "kkl";
      r["params"] = {{"s0", params.s0},
                     {"lambda", io::to_json(params.lambda)},
                     {"eta", io::to_json(params.eta)},
                     {"rate", io::to_json(params.rate)},
                     {"horizon", io::to_json(params.horizon)},
                     {"steps", params.steps},
                     {"dt", io::to_json(params.dt())},
                     {"emm_p", io::to_json(p)}};
      const bool viable = kkl_viability(params);
      r["viable"] = viable;
      json warnings = json::array();
      std::optional<DerivativeSurface> written;
      if (viable) {
        const DerivativeSurface put =
            kkl_backward_induction(params, kkl_put_terminal(params), p);
        const auto bad = kkl_completion_check(put);
        json violations = json::array();
        for (const auto& [t, k] : bad) violations.push_back({t, k});
        r["put"] = {{"root_value", io::to_json(put.at(0, params.s0))},
                    {"violations", violations},
                    {"complete", bad.empty()}};
        written = put;
        if (eps) {
          const PerturbationResult pr = kkl_perturb_terminal(
              params, *eps, static_cast<std::uint64_t>(seed), p);
          const TerminalValues put_terminal = kkl_put_terminal(params);
          Rational deviation = 0;
          json terminal = json::object();
          for (const auto& [k, v] : pr.terminal) {
            deviation = std::max(deviation, Rational(abs(v - put_terminal.at(k))));
            terminal[std::to_string(k)] = io::to_json(v);
          }
          json still_bad = json::array();
          for (const auto& [t, k] : kkl_completion_check(pr.surface))
            still_bad.push_back({t, k});
          r["perturbation"] = {{"epsilon", io::to_json(*eps)},
                               {"seed", seed},
                               {"attempts", pr.attempts},
                               {"max_deviation", io::to_json(deviation)},
                               {"root_value",
                                io::to_json(pr.surface.at(0, params.s0))},
                               {"violations", still_bad},
                               {"terminal", terminal}};
          written = pr.surface;
        }
      } else {
        warnings.push_back(
            "T|r|(s0+n-1) >= n: some node admits arbitrage; no pricing done");
      }
      if (!csv_path.empty()) {
        if (written) {
          io::write_file(csv_path, io::surface_to_csv(*written));
          r["csv"] = csv_path;
        } else {
          warnings.push_back("no surface written");
        }
      }
      r["warnings"] = warnings;
      if (flags.json) {
        detail::emit(out, r);
      } else {
        out << "KKL grid: s0=" << params.s0 << " n=" << params.steps
            << " dt=" << to_string(params.dt()) << '\n';
        out << "viable: " << (viable ? "yes" : "no") << '\n';
        if (r.contains("put")) {
          out << "put F(0," << params.s0
              << ") = " << r["put"]["root_value"].get<std::string>() << '\n';
          out << "put completes the market: "
              << (r["put"]["complete"].get<bool>() ? "yes" : "no") << " ("
              << r["put"]["violations"].size() << " degenerate nodes)\n";
        }
        if (r.contains("perturbation")) {
          const auto& pj = r["perturbation"];
          out << "perturbed terminal: max deviation "
              << pj["max_deviation"].get<std::string>() << " < "
              << pj["epsilon"].get<std::string>() << ", "
              << pj["violations"].size() << " degenerate nodes, "
              << pj["attempts"].get<int>() << " attempt(s)\n";
          out << "perturbed F(0," << params.s0
              << ") = " << pj["root_value"].get<std::string>() << '\n';
        }
        if (r.contains("csv"))
          out << "wrote " << r["csv"].get<std::string>() << '\n';
        for (const auto& w : warnings) out << "warning: " << w.get<std::string>() << '\n';
      }
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const LimitExceeded& e) {
    err << "error: " << e.what() << '\n';
    return kLimitExceeded;
  } catch (const NotViable& e) {
    err << "error: " << e.what() << '\n';
    return kNotViable;
  } catch (const RetryLimitExhausted& e) {
    err << "error: " << e.what() << '\n';
    return kRetryLimit;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kOk;
}

}  // namespace martpoly::cli
