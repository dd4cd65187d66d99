#pragma once

// Market verdicts built on the generator set: viability (an equivalent
// martingale measure exists), completeness, price bounds for new payoffs,
// and completion of incomplete markets.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "martpoly/exactmath.hpp"
#include "martpoly/geometry.hpp"
#include "martpoly/market.hpp"

namespace martpoly {

struct EmmCharacterization {
  GeneratorSet generators;
  // outcome_support[i] = {j : generators[j][i] > 0}. A convex combination
  // with weights alpha is equivalent iff every outcome has some j in its
  // support with alpha_j > 0.
  std::vector<std::vector<std::size_t>> outcome_support;
  bool emm_exists = false;

  // Whether `weights` (one per generator) yield an equivalent measure.
  bool admissible(std::span<const Rational> weights) const {
    if (weights.size() != generators.size()) return false;
    if (std::any_of(weights.begin(), weights.end(),
                    [](const Rational& a) { return a < 0; }))
      return false;
    if (sum(weights) != 1) return false;
    return std::all_of(outcome_support.begin(), outcome_support.end(),
                       [&](const std::vector<std::size_t>& s) {
                         return std::any_of(s.begin(), s.end(), [&](auto j) {
                           return weights[j] > 0;
                         });
                       });
  }

  RationalVector combine(std::span<const Rational> weights) const {
    if (weights.size() != generators.size())
      throw DimensionMismatch("expected one weight per generator");
    RationalVector q(outcome_support.size());
    for (std::size_t j = 0; j < generators.size(); ++j)
      for (std::size_t i = 0; i < q.size(); ++i)
        q[i] += weights[j] * generators.generators[j][i];
    return q;
  }
};

inline EmmCharacterization characterize_system(
    const MartingaleSystem& sys, const EnumerationLimits& limits = {}) {
  EmmCharacterization out;
  out.generators = enumerate_generators(sys, limits);
  out.outcome_support.resize(sys.outcomes());
  for (std::size_t j = 0; j < out.generators.size(); ++j)
    for (std::size_t i : out.generators.support[j])
      out.outcome_support[i].push_back(j);
  out.emm_exists = std::none_of(
      out.outcome_support.begin(), out.outcome_support.end(),
      [](const auto& s) { return s.empty(); });
  return out;
}

inline EmmCharacterization characterize(const OnePeriodMarket& mkt,
                                        const EnumerationLimits& limits = {}) {
  return characterize_system(build_system(mkt), limits);
}

inline RationalVector uniform_weights(std::size_t k) {
  return RationalVector(k, k ? Rational(1, static_cast<long>(k)) : Rational(0));
}

struct ArbitrageVerdict {
  bool arbitrage_free = false;
  // Uniform average of the generators; absent when there is no martingale
  // measure at all. It is equivalent exactly when arbitrage_free holds.
  std::optional<RationalVector> witness;
};

inline ArbitrageVerdict arbitrage_verdict(const EmmCharacterization& emm) {
  ArbitrageVerdict v{emm.emm_exists, std::nullopt};
  if (!emm.generators.empty())
    v.witness = emm.combine(uniform_weights(emm.generators.size()));
  return v;
}

inline ArbitrageVerdict is_arbitrage_free(const OnePeriodMarket& mkt,
                                          const EnumerationLimits& limits = {}) {
  return arbitrage_verdict(characterize(mkt, limits));
}

inline bool spans_outcomes(const MartingaleSystem& sys) {
  return rank(augmented_matrix(sys)) == sys.outcomes();
}

inline bool is_complete(const OnePeriodMarket& mkt,
                        const EnumerationLimits& limits = {}) {
  const MartingaleSystem sys = build_system(mkt);
  return characterize_system(sys, limits).emm_exists && spans_outcomes(sys);
}

struct MeasureCheck {
  bool is_martingale = false;
  bool is_equivalent = false;
};

inline MeasureCheck verify_measure(const OnePeriodMarket& mkt,
                                   std::span<const Rational> q) {
  if (q.size() != mkt.outcomes())
    throw DimensionMismatch("measure has " + std::to_string(q.size()) +
                            " entries, market has " +
                            std::to_string(mkt.outcomes()) + " outcomes");
  const MartingaleSystem sys = build_system(mkt);
  MeasureCheck out;
  out.is_martingale = std::all_of(q.begin(), q.end(),
                                  [](const Rational& x) { return x >= 0; }) &&
                      sum(q) == 1 && sys.matrix * q == sys.rhs;
  out.is_equivalent =
      out.is_martingale &&
      std::all_of(q.begin(), q.end(), [](const Rational& x) { return x > 0; });
  return out;
}

struct PriceBounds {
  Rational low;
  Rational high;
  bool low_attained_by_emm = false;
  bool high_attained_by_emm = false;

  bool unique() const { return low == high; }
  friend bool operator==(const PriceBounds&, const PriceBounds&) = default;
};

// Discounted prices <payoff, p^j> / (1 + r), one per generator.
inline RationalVector generator_prices(const GeneratorSet& gens,
                                       std::span<const Rational> payoff,
                                       const Rational& rate) {
  RationalVector prices;
  prices.reserve(gens.size());
  const Rational growth = 1 + rate;
  for (const auto& g : gens.generators) prices.push_back(dot(payoff, g) / growth);
  return prices;
}

namespace detail {

// An extreme price is reachable by an equivalent measure iff the generators
// attaining it jointly cover every outcome.
inline bool extreme_attained(const GeneratorSet& gens,
                             std::span<const Rational> prices,
                             const Rational& extreme, std::size_t outcomes) {
  std::vector<bool> covered(outcomes, false);
  for (std::size_t j = 0; j < prices.size(); ++j)
    if (prices[j] == extreme)
      for (std::size_t i : gens.support[j]) covered[i] = true;
  return std::all_of(covered.begin(), covered.end(), [](bool c) { return c; });
}

}  // namespace detail

inline PriceBounds bounds_from_generators(const GeneratorSet& gens,
                                          std::span<const Rational> payoff,
                                          const Rational& rate,
                                          std::size_t outcomes) {
  const RationalVector prices = generator_prices(gens, payoff, rate);
  if (prices.empty()) throw NotViable("no martingale measure; bounds undefined");
  PriceBounds out;
  out.low = *std::min_element(prices.begin(), prices.end());
  out.high = *std::max_element(prices.begin(), prices.end());
  out.low_attained_by_emm =
      detail::extreme_attained(gens, prices, out.low, outcomes);
  out.high_attained_by_emm =
      detail::extreme_attained(gens, prices, out.high, outcomes);
  return out;
}

inline PriceBounds price_bounds(const OnePeriodMarket& mkt,
                                std::span<const Rational> payoff,
                                const EnumerationLimits& limits = {}) {
  if (payoff.size() != mkt.outcomes())
    throw DimensionMismatch("payoff must have one entry per outcome");
  const EmmCharacterization emm = characterize(mkt, limits);
  if (!emm.emm_exists)
    throw NotViable("market is not arbitrage-free; price bounds undefined");
  return bounds_from_generators(emm.generators, payoff, mkt.rate,
                                mkt.outcomes());
}

struct CompletionPlan {
  RationalMatrix added_payoff_rows;  // m x b
  // price_map(a, j) = <added row a, p^j> / (1 + r).
  RationalMatrix price_map;  // m x k
  // Support conditions on the generator weights (see EmmCharacterization).
  std::vector<std::vector<std::size_t>> alpha_constraints;
  RationalVector weights;  // the admissible weights the prices come from
  RationalVector prices;   // S_k(0) for each added row

  bool empty() const { return added_payoff_rows.rows() == 0; }
};

struct CompletionOptions {
  // Weights over the generators; uniform when absent.
  std::optional<RationalVector> weights;
  // Candidate payoff rows tried (in order) before the standard basis rows.
  std::vector<RationalVector> candidate_rows;
};

// Adds rows that raise the rank of the augmented matrix until it reaches b.
// Candidates are taken greedily: user rows first, then e_0, e_1, ...
inline CompletionPlan complete_market(const OnePeriodMarket& mkt,
                                      const CompletionOptions& options = {},
                                      const EnumerationLimits& limits = {}) {
  const MartingaleSystem sys = build_system(mkt);
  const EmmCharacterization emm = characterize_system(sys, limits);
  if (!emm.emm_exists)
    throw NotViable("market is not arbitrage-free; it cannot be completed");

  const std::size_t b = mkt.outcomes();
  const std::size_t k = emm.generators.size();
  CompletionPlan plan;
  plan.alpha_constraints = emm.outcome_support;
  plan.weights = options.weights ? *options.weights : uniform_weights(k);
  if (!emm.admissible(plan.weights))
    throw InvalidInput(
        "weights must be nonnegative, sum to 1, and give every outcome a "
        "positive weight on some generator supporting it");

  std::vector<RationalVector> candidates = options.candidate_rows;
  for (std::size_t i = 0; i < b; ++i) {
    RationalVector e(b);
    e[i] = 1;
    candidates.push_back(std::move(e));
  }

  RationalMatrix current = augmented_matrix(sys);
  std::size_t current_rank = rank(current);
  std::vector<RationalVector> added;
  for (const auto& row : candidates) {
    if (current_rank == b) break;
    if (row.size() != b)
      throw DimensionMismatch("candidate completion row must have length b");
    RationalMatrix next = current.stacked(RationalMatrix::from_rows({row}, b));
    const std::size_t next_rank = rank(next);
    if (next_rank > current_rank) {
      current = std::move(next);
      current_rank = next_rank;
      added.push_back(row);
    }
  }

  plan.added_payoff_rows = RationalMatrix::from_rows(added, b);
  plan.price_map = RationalMatrix(added.size(), k);
  const RationalVector q = emm.combine(plan.weights);
  for (std::size_t a = 0; a < added.size(); ++a) {
    const RationalVector row_prices =
        generator_prices(emm.generators, added[a], mkt.rate);
    for (std::size_t j = 0; j < k; ++j) plan.price_map(a, j) = row_prices[j];
    plan.prices.push_back(dot(added[a], q) / (1 + mkt.rate));
  }
  return plan;
}

// The market with the plan's assets appended at the plan's prices.
inline OnePeriodMarket apply_completion(const OnePeriodMarket& mkt,
                                        const CompletionPlan& plan) {
  OnePeriodMarket out = mkt;
  for (std::size_t a = 0; a < plan.added_payoff_rows.rows(); ++a)
    out = out.with_asset(plan.prices[a], plan.added_payoff_rows.row(a));
  return out;
}

}  // namespace martpoly
