#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include "martpoly/exactmath.hpp"

namespace martpoly {

// Single-period market: n risky assets and a bond paying `rate` over b
// outcomes. Entry (i, w) of `payoffs` is the price of asset i in outcome w.
struct OnePeriodMarket {
  Rational rate = 0;
  RationalVector spot;
  RationalMatrix payoffs;
  std::optional<RationalVector> probabilities;

  std::size_t outcomes() const { return payoffs.cols(); }
  std::size_t assets() const { return payoffs.rows(); }

  // Throws InvalidInput if the fields are inconsistent.
  void validate() const {
    if (outcomes() == 0)
      throw InvalidInput("market must have at least one outcome");
    if (spot.size() != assets())
      throw DimensionMismatch("spot has " + std::to_string(spot.size()) +
                              " entries but payoffs has " +
                              std::to_string(assets()) + " rows");
    if (rate == -1) throw InvalidInput("1 + rate must be nonzero");
    if (probabilities) {
      if (probabilities->size() != outcomes())
        throw DimensionMismatch("probabilities must have one entry per outcome");
      for (const auto& p : *probabilities)
        if (p <= 0) throw InvalidInput("physical probabilities must be > 0");
      if (sum(*probabilities) != 1)
        throw InvalidInput("physical probabilities must sum to 1");
    }
  }

  // Copy with one more asset appended.
  OnePeriodMarket with_asset(const Rational& price,
                             std::span<const Rational> payoff) const {
    if (payoff.size() != outcomes())
      throw DimensionMismatch("new asset payoff must have one entry per outcome");
    RationalMatrix row(1, outcomes());
    for (std::size_t j = 0; j < outcomes(); ++j) row(0, j) = payoff[j];
    OnePeriodMarket out = *this;
    out.payoffs = payoffs.stacked(row);
    out.spot.push_back(price);
    return out;
  }
};

// Linear part of the martingale conditions: matrix * q = rhs.
struct MartingaleSystem {
  RationalMatrix matrix;
  RationalVector rhs;

  std::size_t outcomes() const { return matrix.cols(); }
};

inline MartingaleSystem build_system(const OnePeriodMarket& mkt) {
  mkt.validate();
  MartingaleSystem sys{mkt.payoffs, RationalVector(mkt.assets())};
  const Rational growth = 1 + mkt.rate;
  for (std::size_t i = 0; i < mkt.assets(); ++i)
    sys.rhs[i] = growth * mkt.spot[i];
  return sys;
}

// (n+1) x b matrix: a row of ones above the payoff rows.
inline RationalMatrix augmented_matrix(const MartingaleSystem& sys) {
  RationalMatrix ones(1, sys.outcomes());
  for (std::size_t j = 0; j < sys.outcomes(); ++j) ones(0, j) = 1;
  return ones.stacked(sys.matrix);
}

}  // namespace martpoly
