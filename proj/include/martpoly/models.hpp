#pragma once

// Closed forms for single-asset factor models and the discrete
// Korn-Kreer-Lenssen (KKL) birth-death model.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "martpoly/analysis.hpp"
#include "martpoly/exactmath.hpp"
#include "martpoly/market.hpp"
#include "martpoly/multiperiod.hpp"

namespace martpoly {

// One asset whose price is multiplied by one of f_1 < ... < f_b per period.
struct FactorModel {
  RationalVector factors;
  Rational rate = 0;
  Rational spot = 1;

  std::size_t branches() const { return factors.size(); }

  void validate() const {
    if (factors.empty()) throw InvalidInput("factor model needs factors");
    // f_1 = 0 is allowed: the KKL node at price 1 has factors (0, 1, 2).
    if (factors.front() < 0) throw InvalidInput("factors must be >= 0");
    for (std::size_t i = 1; i < factors.size(); ++i)
      if (factors[i] <= factors[i - 1])
        throw InvalidInput("factors must be strictly increasing");
    if (spot == 0) throw InvalidInput("spot must be nonzero");
    if (rate == -1) throw InvalidInput("1 + rate must be nonzero");
  }
};

inline OnePeriodMarket factor_market(const FactorModel& fm) {
  fm.validate();
  OnePeriodMarket mkt;
  mkt.rate = fm.rate;
  mkt.spot = {fm.spot};
  mkt.payoffs = RationalMatrix(1, fm.branches());
  for (std::size_t w = 0; w < fm.branches(); ++w)
    mkt.payoffs(0, w) = fm.factors[w] * fm.spot;
  return mkt;
}

// f_1 < 1 + r < f_b; with a single branch the only measure is (1), which is
// a martingale measure iff f_1 = 1 + r.
inline bool factor_viability(const FactorModel& fm) {
  fm.validate();
  const Rational growth = 1 + fm.rate;
  if (fm.branches() == 1) return fm.factors.front() == growth;
  return fm.factors.front() < growth && growth < fm.factors.back();
}

inline bool factor_completeness(const FactorModel& fm) {
  return factor_viability(fm) && fm.branches() <= 2;
}

enum class TrinomialCase { kMiddleAtGrowth, kMiddleBelowGrowth, kMiddleAboveGrowth };

inline const char* to_string(TrinomialCase c) {
  switch (c) {
    case TrinomialCase::kMiddleAtGrowth:
      return "f2_equal";
    case TrinomialCase::kMiddleBelowGrowth:
      return "f2_below";
    case TrinomialCase::kMiddleAboveGrowth:
      return "f2_above";
  }
  return "?";
}

// Martingale measures of a viable three-branch factor model: the segment
// between two endpoint measures. The open segment is the set of EMMs.
struct TrinomialEmmFamily {
  TrinomialCase kind;
  // endpoints[0] lives on the outer edge {1, 3}; endpoints[1] on {2},
  // {2, 3} or {1, 2} depending on `kind`.
  std::array<RationalVector, 2> endpoints;

  // p * endpoints[0] + (1 - p) * endpoints[1], p in (0, 1).
  RationalVector measure(const Rational& p) const {
    if (p <= 0 || p >= 1)
      throw InvalidInput("EMM parameter must lie in (0, 1), got " +
                         to_string(p));
    RationalVector q(3);
    for (std::size_t i = 0; i < 3; ++i)
      q[i] = p * endpoints[0][i] + (1 - p) * endpoints[1][i];
    return q;
  }
};

namespace detail {

inline void require_trinomial(const FactorModel& fm) {
  if (fm.branches() != 3)
    throw InvalidInput("expected a three-branch factor model, got " +
                       std::to_string(fm.branches()) + " branches");
}

}  // namespace detail

inline TrinomialEmmFamily trinomial_emms(const FactorModel& fm) {
  detail::require_trinomial(fm);
  if (!factor_viability(fm))
    throw NotViable("trinomial factor model is not arbitrage-free");
  const Rational& f1 = fm.factors[0];
  const Rational& f2 = fm.factors[1];
  const Rational& f3 = fm.factors[2];
  const Rational g = 1 + fm.rate;

  TrinomialEmmFamily fam;
  fam.endpoints[0] = {(f3 - g) / (f3 - f1), 0, (g - f1) / (f3 - f1)};
  if (f2 == g) {
    fam.kind = TrinomialCase::kMiddleAtGrowth;
    fam.endpoints[1] = {0, 1, 0};
  } else if (f2 < g) {
    fam.kind = TrinomialCase::kMiddleBelowGrowth;
    fam.endpoints[1] = {0, (f3 - g) / (f3 - f2), (g - f2) / (f3 - f2)};
  } else {
    fam.kind = TrinomialCase::kMiddleAboveGrowth;
    fam.endpoints[1] = {(f2 - g) / (f2 - f1), (g - f1) / (f2 - f1), 0};
  }
  return fam;
}

// c_1(f_3 - f_2) + c_2(f_1 - f_3) + c_3(f_2 - f_1); adding payoff c to the
// trinomial market gives rank 3 iff this is nonzero.
inline Rational trinomial_completion_determinant(std::span<const Rational> c,
                                                 const FactorModel& fm) {
  detail::require_trinomial(fm);
  if (c.size() != 3) throw DimensionMismatch("payoff must have 3 entries");
  const auto& f = fm.factors;
  return c[0] * (f[2] - f[1]) + c[1] * (f[0] - f[2]) + c[2] * (f[1] - f[0]);
}

inline bool trinomial_completion_condition(std::span<const Rational> c,
                                           const FactorModel& fm) {
  return trinomial_completion_determinant(c, fm) != 0;
}

inline PriceBounds trinomial_price_interval(std::span<const Rational> c,
                                            const FactorModel& fm) {
  detail::require_trinomial(fm);
  if (c.size() != 3) throw DimensionMismatch("payoff must have 3 entries");
  if (!factor_viability(fm))
    throw NotViable("trinomial factor model is not arbitrage-free");
  const Rational& f1 = fm.factors[0];
  const Rational& f2 = fm.factors[1];
  const Rational& f3 = fm.factors[2];
  const Rational g = 1 + fm.rate;

  const Rational outer = (c[0] * (f3 - g) + c[2] * (g - f1)) / ((f3 - f1) * g);
  Rational inner;
  if (f2 == g) {
    inner = c[1] / g;
  } else if (f2 < g) {
    inner = (c[1] * (f3 - g) + c[2] * (g - f2)) / ((f3 - f2) * g);
  } else {
    inner = (c[0] * (f2 - g) + c[1] * (g - f1)) / ((f2 - f1) * g);
  }
  PriceBounds out;
  out.low = std::min(outer, inner);
  out.high = std::max(outer, inner);
  // Each endpoint measure misses an outcome but the two together cover all
  // three, so an extreme is reachable by an EMM only when both coincide.
  out.low_attained_by_emm = out.high_attained_by_emm = outer == inner;
  return out;
}

// ---------------------------------------------------------------------------
// Discrete KKL model.

struct KklParams {
  long s0 = 1;
  Rational lambda;
  Rational eta;
  Rational rate = 0;
  Rational horizon = 1;
  long steps = 1;

  Rational dt() const { return horizon / steps; }
  long max_state() const { return s0 + steps; }

  // Every physical transition probability must lie strictly in (0, 1) at
  // each reachable state; the largest state that still branches is
  // s0 + n - 1.
  void validate() const {
    if (s0 < 1) throw InvalidInput("s0 must be a positive integer");
    if (steps < 1) throw InvalidInput("steps must be a positive integer");
    if (lambda <= 0 || eta <= 0)
      throw InvalidInput("lambda and eta must be > 0");
    if (horizon <= 0) throw InvalidInput("horizon must be > 0");
    if ((lambda + eta) * (s0 + steps - 1) * dt() >= 1)
      throw InvalidInput(
          "(lambda + eta) * (s0 + n - 1) * T / n must be < 1 so that every "
          "transition probability lies in (0, 1)");
    if (rate * dt() == -1) throw InvalidInput("1 + r * dt must be nonzero");
  }
};

// Reachable integer prices at step t, ascending.
inline std::vector<long> kkl_states(const KklParams& params, long t) {
  std::vector<long> ks;
  for (long k = std::max(0L, params.s0 - t); k <= params.s0 + t; ++k)
    ks.push_back(k);
  return ks;
}

inline std::string kkl_node_id(long t, long k) {
  return std::to_string(t) + ":" + std::to_string(k);
}

// The recombining grid as a tree market. State k > 0 moves to k - 1, k,
// k + 1 (in that child order) with probabilities eta k dt,
// 1 - (lambda + eta) k dt, lambda k dt; state 0 is absorbing.
inline TreeMarket kkl_build(const KklParams& params) {
  params.validate();
  const Rational dt = params.dt();
  TreeMarket tm;
  tm.assets = 1;
  tm.rates.assign(params.steps, params.rate * dt);
  for (long t = 0; t <= params.steps; ++t) {
    for (long k : kkl_states(params, t)) {
      TreeNode node{kkl_node_id(t, k), static_cast<int>(t), {}, {Rational(k)},
                    std::nullopt, {}};
      if (t < params.steps) {
        if (k == 0) {
          node.children = {kkl_node_id(t + 1, 0)};
          node.probabilities = RationalVector{1};
        } else {
          node.children = {kkl_node_id(t + 1, k - 1), kkl_node_id(t + 1, k),
                           kkl_node_id(t + 1, k + 1)};
          const Rational down = params.eta * k * dt;
          const Rational up = params.lambda * k * dt;
          node.probabilities = RationalVector{down, 1 - down - up, up};
        }
      }
      tm.nodes.push_back(std::move(node));
    }
  }
  return tm;
}

// T |r| (s0 + n - 1) < n.
inline bool kkl_viability(const KklParams& params) {
  params.validate();
  return params.horizon * abs(params.rate) * (params.s0 + params.steps - 1) <
         params.steps;
}

// The factor model of the node at price k > 0 over one step.
inline FactorModel kkl_node_model(const KklParams& params, long k) {
  const Rational inv(1, k);
  return FactorModel{{1 - inv, 1, 1 + inv}, params.rate * params.dt(),
                     Rational(k)};
}

// F(t, k) for every (t, k) on the grid.
struct DerivativeSurface {
  long s0 = 1;
  std::vector<std::map<long, Rational>> layers;  // layers[t][k]

  long steps() const { return static_cast<long>(layers.size()) - 1; }
  const Rational& at(long t, long k) const {
    auto it = layers.at(static_cast<std::size_t>(t)).find(k);
    if (it == layers[t].end())
      throw InvalidInput("(" + std::to_string(t) + ", " + std::to_string(k) +
                         ") is not on the grid");
    return it->second;
  }
};

using TerminalValues = std::map<long, Rational>;

// Picks the EMM (over children k-1, k, k+1) used at node (t, k).
using NodeEmmSelector =
    std::function<RationalVector(long t, long k, const TrinomialEmmFamily&)>;

inline NodeEmmSelector global_emm(const Rational& p) {
  // Validates p eagerly.
  (void)TrinomialEmmFamily{TrinomialCase::kMiddleAtGrowth,
                           {RationalVector(3), RationalVector(3)}}
      .measure(p);
  return [p](long, long, const TrinomialEmmFamily& fam) {
    return fam.measure(p);
  };
}

inline DerivativeSurface kkl_backward_induction(const KklParams& params,
                                                const TerminalValues& terminal,
                                                const NodeEmmSelector& select) {
  if (!kkl_viability(params))
    throw NotViable("KKL grid is not arbitrage-free: T|r|(s0+n-1) >= n");
  const long n = params.steps;
  DerivativeSurface s{params.s0, std::vector<std::map<long, Rational>>(n + 1)};
  for (long k : kkl_states(params, n)) {
    auto it = terminal.find(k);
    if (it == terminal.end())
      throw InvalidInput("missing terminal value for state " +
                         std::to_string(k));
    s.layers[n][k] = it->second;
  }

  const Rational discount = 1 / (1 + params.rate * params.dt());
  std::map<long, TrinomialEmmFamily> families;  // node EMMs depend on k only
  for (long t = n - 1; t >= 0; --t) {
    const auto& next = s.layers[t + 1];
    for (long k : kkl_states(params, t)) {
      if (k == 0) {
        s.layers[t][0] = discount * next.at(0);
        continue;
      }
      auto fam = families.find(k);
      if (fam == families.end())
        fam = families.emplace(k, trinomial_emms(kkl_node_model(params, k)))
                  .first;
      const RationalVector q = select(t, k, fam->second);
      const FactorModel fm = kkl_node_model(params, k);
      if (q.size() != 3 ||
          !verify_measure(factor_market(fm), q).is_equivalent)
        throw InvalidInput("node EMM at (" + std::to_string(t) + ", " +
                           std::to_string(k) +
                           ") is not an equivalent martingale measure");
      s.layers[t][k] = discount * (q[0] * next.at(k - 1) + q[1] * next.at(k) +
                                   q[2] * next.at(k + 1));
    }
  }
  return s;
}

inline DerivativeSurface kkl_backward_induction(const KklParams& params,
                                                const TerminalValues& terminal,
                                                const Rational& emm_p) {
  return kkl_backward_induction(params, terminal, global_emm(emm_p));
}

// Interior nodes (t < n, k >= 1) where F(t+1, k-1) - 2F(t+1, k) + F(t+1, k+1)
// vanishes; the stock plus the derivative complete the market iff none do.
inline std::vector<std::pair<long, long>> kkl_completion_check(
    const DerivativeSurface& surface) {
  std::vector<std::pair<long, long>> bad;
  for (long t = 0; t < surface.steps(); ++t) {
    const auto& next = surface.layers[t + 1];
    for (const auto& [k, value] : surface.layers[t]) {
      (void)value;
      if (k == 0) continue;
      if (next.at(k - 1) - 2 * next.at(k) + next.at(k + 1) == 0)
        bad.emplace_back(t, k);
    }
  }
  return bad;
}

// Put with strike 1 at maturity: 1 if k = 0, else 0.
inline TerminalValues kkl_put_terminal(const KklParams& params) {
  TerminalValues out;
  for (long k : kkl_states(params, params.steps)) out[k] = k == 0 ? 1 : 0;
  return out;
}

struct PerturbationResult {
  TerminalValues terminal;
  DerivativeSurface surface;
  int attempts = 0;
};

inline constexpr long kPerturbationDenominator = 1L << 16;
inline constexpr int kPerturbationAttempts = 64;

// Terminal values put(k) + epsilon * u_k / D with u_k uniform on 1..D-1,
// resampled until the completion check passes.
inline PerturbationResult kkl_perturb_terminal(const KklParams& params,
                                               const Rational& epsilon,
                                               std::uint64_t seed,
                                               const Rational& emm_p = Rational(1, 2)) {
  if (epsilon <= 0) throw InvalidInput("epsilon must be > 0");
  const TerminalValues put = kkl_put_terminal(params);
  const NodeEmmSelector select = global_emm(emm_p);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long> draw(1, kPerturbationDenominator - 1);
  for (int attempt = 1; attempt <= kPerturbationAttempts; ++attempt) {
    TerminalValues terminal;
    for (const auto& [k, v] : put)
      terminal[k] = v + epsilon * Rational(draw(rng), kPerturbationDenominator);
    DerivativeSurface surface = kkl_backward_induction(params, terminal, select);
    if (kkl_completion_check(surface).empty())
      return {std::move(terminal), std::move(surface), attempt};
  }
  throw RetryLimitExhausted("no completing terminal perturbation after " +
                            std::to_string(kPerturbationAttempts) +
                            " attempts");
}

}  // namespace martpoly
