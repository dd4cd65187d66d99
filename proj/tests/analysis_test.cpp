#include "martpoly/analysis.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

namespace martpoly {
namespace {

using testing::market_of;
using testing::R;
using testing::V;

OnePeriodMarket three_generator_market() {
  return market_of(RationalMatrix{{2, 0, 0, 0}}, V({"1"}));
}
OnePeriodMarket single_vertex_market() {
  return market_of(RationalMatrix{{-3, 1, -15, 1}, {-3, 1, -7, 1}}, V({"-3", "-3"}));
}
OnePeriodMarket no_measure_market() {
  return market_of(RationalMatrix{{18, -6, -6, 75}, {99, -33, -33, 291}},
                   V({"15", "123"}));
}
OnePeriodMarket edge_market() {
  return market_of(RationalMatrix{{-1, -1, -3, 3}, {1, 1, -3, 3}}, V({"-1", "1"}));
}
OnePeriodMarket trinomial_market() {
  return market_of(RationalMatrix{{R("1/2"), 1, 2}}, V({"1"}));
}

TEST(CharacterizeTest, ThreeGenerators) {
  const auto emm = characterize(three_generator_market());
  EXPECT_TRUE(emm.emm_exists);
  ASSERT_EQ(emm.generators.size(), 3u);
  // Outcome 1 is charged by every generator, outcomes 2..4 by one each:
  // alpha_1 > 0, alpha_2 > 0, alpha_3 = 1 - alpha_1 - alpha_2 > 0.
  using S = std::vector<std::size_t>;
  EXPECT_EQ(emm.outcome_support[0], (S{0, 1, 2}));
  EXPECT_EQ(emm.outcome_support[1], (S{0}));
  EXPECT_EQ(emm.outcome_support[2], (S{1}));
  EXPECT_EQ(emm.outcome_support[3], (S{2}));
  EXPECT_TRUE(emm.admissible(V({"1/3", "1/3", "1/3"})));
  EXPECT_FALSE(emm.admissible(V({"1/2", "1/2", "0"})));
  EXPECT_FALSE(emm.admissible(V({"1/2", "1/2"})));
  EXPECT_FALSE(emm.admissible(V({"1", "1", "-1"})));
}

TEST(CharacterizeTest, EdgeHasUnchargedOutcomes) {
  const auto emm = characterize(edge_market());
  EXPECT_FALSE(emm.emm_exists);
  EXPECT_TRUE(emm.outcome_support[2].empty());
  EXPECT_TRUE(emm.outcome_support[3].empty());
  EXPECT_FALSE(emm.outcome_support[0].empty());
}

TEST(CharacterizeTest, SingleOutcome) {
  OnePeriodMarket mkt{R("1/5"), V({"5"}), RationalMatrix{{6}}, std::nullopt};
  const auto emm = characterize(mkt);
  ASSERT_EQ(emm.generators.size(), 1u);
  EXPECT_EQ(emm.generators.generators[0], V({"1"}));
  EXPECT_TRUE(emm.emm_exists);
  EXPECT_TRUE(is_complete(mkt));
}

TEST(ArbitrageTest, Verdicts) {
  EXPECT_FALSE(is_arbitrage_free(single_vertex_market()).arbitrage_free);
  EXPECT_FALSE(is_arbitrage_free(no_measure_market()).arbitrage_free);
  EXPECT_FALSE(is_arbitrage_free(no_measure_market()).witness.has_value());

  const auto v = is_arbitrage_free(three_generator_market());
  EXPECT_TRUE(v.arbitrage_free);
  // (1/3)[(1/2,1/2,0,0) + (1/2,0,1/2,0) + (1/2,0,0,1/2)]
  EXPECT_EQ(*v.witness, V({"1/2", "1/6", "1/6", "1/6"}));
}

TEST(CompleteTest, Verdicts) {
  OnePeriodMarket extended =
      market_of(RationalMatrix{{2, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}},
                V({"1", "1/6", "1/6"}));
  EXPECT_TRUE(is_complete(extended));
  EXPECT_FALSE(is_complete(trinomial_market()));
  EXPECT_TRUE(is_complete(market_of(RationalMatrix{{R("1/2"), 2}}, V({"1"}))));
  EXPECT_FALSE(is_complete(three_generator_market()));
  // Full rank but no EMM.
  EXPECT_FALSE(is_complete(market_of(RationalMatrix{{2, 3}}, V({"1"}))));
}

TEST(VerifyMeasureTest, Examples) {
  auto ok = verify_measure(three_generator_market(), V({"1/2", "1/6", "1/6", "1/6"}));
  EXPECT_TRUE(ok.is_martingale);
  EXPECT_TRUE(ok.is_equivalent);

  auto vertex = verify_measure(single_vertex_market(), V({"1", "0", "0", "0"}));
  EXPECT_TRUE(vertex.is_martingale);
  EXPECT_FALSE(vertex.is_equivalent);

  auto wrong = verify_measure(three_generator_market(), V({"1", "0", "0", "0"}));
  EXPECT_FALSE(wrong.is_martingale);
  EXPECT_FALSE(wrong.is_equivalent);

  auto negative = verify_measure(market_of(RationalMatrix(0, 2), {}), V({"2", "-1"}));
  EXPECT_FALSE(negative.is_martingale);

  EXPECT_THROW(verify_measure(three_generator_market(), V({"1"})), DimensionMismatch);
}

TEST(PriceBoundsTest, TrinomialDigital) {
  // Generators (2/3,0,1/3) and (0,1,0) price (0,0,1) at 1/3 and 0.
  const PriceBounds b = price_bounds(trinomial_market(), V({"0", "0", "1"}));
  EXPECT_EQ(b.low, 0);
  EXPECT_EQ(b.high, R("1/3"));
  EXPECT_FALSE(b.low_attained_by_emm);
  EXPECT_FALSE(b.high_attained_by_emm);
}

TEST(PriceBoundsTest, ReplicableClaimsAreUnique) {
  OnePeriodMarket mkt{R("1/4"), V({"2"}), RationalMatrix{{1, 2, 4}}, std::nullopt};
  const PriceBounds stock = price_bounds(mkt, V({"1", "2", "4"}));
  EXPECT_TRUE(stock.unique());
  EXPECT_EQ(stock.low, 2);
  EXPECT_TRUE(stock.low_attained_by_emm);

  const PriceBounds bond = price_bounds(mkt, V({"1", "1", "1"}));
  EXPECT_EQ(bond.low, R("4/5"));
  EXPECT_EQ(bond.high, R("4/5"));
}

TEST(PriceBoundsTest, Errors) {
  EXPECT_THROW(price_bounds(edge_market(), V({"1", "0", "0", "0"})), NotViable);
  EXPECT_THROW(price_bounds(trinomial_market(), V({"1"})), DimensionMismatch);
}

TEST(CompleteMarketTest, ThreeGenerators) {
  CompletionOptions opts;
  opts.weights = V({"1/3", "1/3", "1/3"});
  const CompletionPlan plan = complete_market(three_generator_market(), opts);
  EXPECT_EQ(plan.added_payoff_rows, (RationalMatrix{{0, 1, 0, 0}, {0, 0, 1, 0}}));
  EXPECT_EQ(plan.price_map,
            (RationalMatrix{{R("1/2"), 0, 0}, {0, R("1/2"), 0}}));
  EXPECT_EQ(plan.prices, V({"1/6", "1/6"}));

  const OnePeriodMarket ext = apply_completion(three_generator_market(), plan);
  EXPECT_TRUE(is_complete(ext));
  const auto emm = characterize(ext);
  ASSERT_EQ(emm.generators.size(), 1u);
  EXPECT_EQ(emm.generators.generators[0], V({"1/2", "1/6", "1/6", "1/6"}));
}

TEST(CompleteMarketTest, AlreadyComplete) {
  const auto plan = complete_market(market_of(RationalMatrix{{R("1/2"), 2}}, V({"1"})));
  EXPECT_TRUE(plan.empty());
  EXPECT_TRUE(plan.prices.empty());
}

TEST(CompleteMarketTest, Trinomial) {
  const auto plan = complete_market(trinomial_market());
  EXPECT_EQ(plan.added_payoff_rows.rows(), 1u);
  EXPECT_TRUE(is_complete(apply_completion(trinomial_market(), plan)));
}

TEST(CompleteMarketTest, CandidateRowsFirst) {
  CompletionOptions opts;
  opts.candidate_rows = {V({"0", "0", "1"}), V({"0", "0", "2"})};
  const auto plan = complete_market(trinomial_market(), opts);
  EXPECT_EQ(plan.added_payoff_rows, (RationalMatrix{{0, 0, 1}}));
}

TEST(CompleteMarketTest, Errors) {
  EXPECT_THROW(complete_market(edge_market()), NotViable);
  CompletionOptions bad;
  bad.weights = V({"1/2", "1/2", "0"});
  EXPECT_THROW(complete_market(three_generator_market(), bad), InvalidInput);
}

// ---------------------------------------------------------------------------
// Properties over random markets.

OnePeriodMarket random_market(std::mt19937_64& rng) {
  const MartingaleSystem sys = testing::random_system(rng, 6, 3);
  OnePeriodMarket mkt;
  mkt.rate = Rational(std::uniform_int_distribution<int>(-2, 4)(rng), 10);
  mkt.payoffs = sys.matrix;
  mkt.spot = sys.rhs;
  for (auto& s : mkt.spot) s /= 1 + mkt.rate;
  return mkt;
}

TEST(AnalysisPropertyTest, VerdictConsistency) {
  std::mt19937_64 rng(31);
  int viable = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const OnePeriodMarket mkt = random_market(rng);
    const auto verdict = is_arbitrage_free(mkt);
    const bool complete = is_complete(mkt);
    EXPECT_TRUE(!complete || verdict.arbitrage_free);
    if (verdict.witness) {
      EXPECT_EQ(verify_measure(mkt, *verdict.witness).is_equivalent,
                verdict.arbitrage_free);
    } else {
      EXPECT_FALSE(verdict.arbitrage_free);
    }
    const auto emm = characterize(mkt);
    EXPECT_EQ(complete, verdict.arbitrage_free && emm.generators.size() == 1);
    viable += verdict.arbitrage_free;
  }
  EXPECT_GT(viable, 40);
}

TEST(AnalysisPropertyTest, ScalingInvariance) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const OnePeriodMarket mkt = random_market(rng);
    if (mkt.assets() == 0) continue;
    OnePeriodMarket scaled = mkt;
    const std::size_t i =
        std::uniform_int_distribution<std::size_t>(0, mkt.assets() - 1)(rng);
    const Rational lambda(std::uniform_int_distribution<int>(1, 9)(rng),
                          std::uniform_int_distribution<int>(1, 9)(rng));
    scaled.spot[i] *= lambda;
    for (std::size_t j = 0; j < mkt.outcomes(); ++j) scaled.payoffs(i, j) *= lambda;
    const auto a = characterize(mkt);
    const auto b = characterize(scaled);
    EXPECT_TRUE(same_generators(a.generators, b.generators));
    EXPECT_EQ(a.emm_exists, b.emm_exists);
    EXPECT_EQ(is_complete(mkt), is_complete(scaled));
    if (a.emm_exists) {
      RationalVector payoff(mkt.outcomes());
      for (auto& x : payoff) x = std::uniform_int_distribution<int>(-5, 5)(rng);
      EXPECT_EQ(price_bounds(mkt, payoff), price_bounds(scaled, payoff));
    }
  }
}

TEST(AnalysisPropertyTest, RedundantAssetInvariance) {
  std::mt19937_64 rng(33);
  int checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const OnePeriodMarket mkt = random_market(rng);
    const auto emm = characterize(mkt);
    if (emm.generators.empty()) continue;
    // New payoff: a0 * ones + sum a_i * row_i, priced by one generator.
    std::uniform_int_distribution<int> coef(-3, 3);
    RationalVector row(mkt.outcomes(), Rational(coef(rng)));
    for (std::size_t i = 0; i < mkt.assets(); ++i) {
      const Rational a = coef(rng);
      for (std::size_t j = 0; j < mkt.outcomes(); ++j) row[j] += a * mkt.payoffs(i, j);
    }
    const std::size_t pick =
        std::uniform_int_distribution<std::size_t>(0, emm.generators.size() - 1)(rng);
    const Rational price = dot(row, emm.generators.generators[pick]) / (1 + mkt.rate);
    const auto extended = characterize(mkt.with_asset(price, row));
    EXPECT_TRUE(same_generators(emm.generators, extended.generators));
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(AnalysisPropertyTest, CompletionSoundness) {
  std::mt19937_64 rng(34);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const OnePeriodMarket mkt = random_market(rng);
    const auto emm = characterize(mkt);
    if (!emm.emm_exists) continue;
    // Random admissible weights: strictly positive, normalized.
    RationalVector w(emm.generators.size());
    Rational total = 0;
    for (auto& x : w) {
      x = std::uniform_int_distribution<int>(1, 5)(rng);
      total += x;
    }
    for (auto& x : w) x /= total;
    CompletionOptions opts;
    opts.weights = w;
    const auto ext = apply_completion(mkt, complete_market(mkt, opts));
    EXPECT_TRUE(is_arbitrage_free(ext).arbitrage_free);
    EXPECT_TRUE(is_complete(ext));
    const auto unique = characterize(ext);
    ASSERT_EQ(unique.generators.size(), 1u);
    EXPECT_EQ(unique.generators.generators[0], emm.combine(w));
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

// Brute-force oracle for endpoint attainability: restrict the polytope to
// the level set <payoff, q> = value and ask whether it holds a strictly
// positive point (its vertices jointly charge every outcome).
bool level_set_has_emm(const OnePeriodMarket& mkt, std::span<const Rational> payoff,
                       const Rational& value) {
  MartingaleSystem sys = build_system(mkt);
  RationalMatrix row(1, mkt.outcomes());
  for (std::size_t j = 0; j < mkt.outcomes(); ++j) row(0, j) = payoff[j];
  sys.matrix = sys.matrix.stacked(row);
  sys.rhs.push_back(value * (1 + mkt.rate));
  const GeneratorSet g = brute_force_generators(sys);
  std::vector<bool> covered(mkt.outcomes(), false);
  for (const auto& s : g.support)
    for (auto i : s) covered[i] = true;
  return !g.empty() && std::all_of(covered.begin(), covered.end(), [](bool c) { return c; });
}

TEST(AnalysisPropertyTest, BoundsSandwichAndAttainability) {
  std::mt19937_64 rng(35);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const OnePeriodMarket mkt = random_market(rng);
    const auto emm = characterize(mkt);
    if (!emm.emm_exists) continue;
    RationalVector payoff(mkt.outcomes());
    for (auto& x : payoff) x = std::uniform_int_distribution<int>(-5, 5)(rng);
    const PriceBounds b = price_bounds(mkt, payoff);
    bool low_hit = false, high_hit = false;
    for (const auto& p : generator_prices(emm.generators, payoff, mkt.rate)) {
      EXPECT_LE(b.low, p);
      EXPECT_LE(p, b.high);
      low_hit = low_hit || p == b.low;
      high_hit = high_hit || p == b.high;
    }
    EXPECT_TRUE(low_hit);
    EXPECT_TRUE(high_hit);
    EXPECT_EQ(b.low_attained_by_emm, level_set_has_emm(mkt, payoff, b.low));
    EXPECT_EQ(b.high_attained_by_emm, level_set_has_emm(mkt, payoff, b.high));
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

}  // namespace
}  // namespace martpoly
