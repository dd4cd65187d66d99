#pragma once

// Exact rational scalars, vectors and matrices, plus the Gauss-Jordan
// machinery (rref, rank, affine solution spaces) every other module uses.
//
// Rationals are GMP mpq values with expression templates disabled, so
// `auto x = a + b;` always yields a canonical Rational and never a lazy
// expression object.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/gmp.hpp>

#include "martpoly/errors.hpp"

namespace martpoly {

using Integer = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                              boost::multiprecision::et_off>;
using Rational =
    boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                  boost::multiprecision::et_off>;
using RationalVector = std::vector<Rational>;

inline Integer numerator_of(const Rational& q) {
  return boost::multiprecision::numerator(q);
}
inline Integer denominator_of(const Rational& q) {
  return boost::multiprecision::denominator(q);
}

// Canonical serialization: "p/q", or "p" when q = 1.
inline std::string to_string(const Rational& q) { return q.str(); }

inline std::vector<std::string> to_strings(std::span<const Rational> v) {
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(to_string(x));
  return out;
}

namespace detail {

inline bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) != 0;
  });
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

// Decimal digit string to Integer. Leading zeros are stripped because the
// string constructor treats a leading 0 as an octal prefix.
inline Integer decimal_integer(std::string_view digits) {
  auto first = digits.find_first_not_of('0');
  if (first == std::string_view::npos) return Integer(0);
  return Integer{std::string(digits.substr(first))};
}

}  // namespace detail

// Accepts "p/q", a signed integer, or a finite decimal ("-0.75", "1.", ".5").
// Decimals are converted digit by digit, never through binary floating point.
inline Rational parse_rational(std::string_view text) {
  const std::string_view original = text;
  text = detail::trim(text);
  auto fail = [&](const char* why) {
    return ParseError("invalid rational '" + std::string(original) +
                      "': " + why);
  };
  if (text.empty()) throw fail("empty");

  bool negative = false;
  if (text.front() == '+' || text.front() == '-') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }

  Rational value;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::string_view num = text.substr(0, slash);
    std::string_view den = text.substr(slash + 1);
    if (!detail::all_digits(num) || !detail::all_digits(den))
      throw fail("expected digits around '/'");
    const Integer d = detail::decimal_integer(den);
    if (d == 0) throw fail("zero denominator");
    value = Rational(detail::decimal_integer(num), d);
  } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    if (whole.empty() && frac.empty()) throw fail("no digits");
    if ((!whole.empty() && !detail::all_digits(whole)) ||
        (!frac.empty() && !detail::all_digits(frac)))
      throw fail("expected a decimal number");
    std::string digits = std::string(whole) + std::string(frac);
    Integer scale = boost::multiprecision::pow(Integer(10),
                                               static_cast<unsigned>(frac.size()));
    value = Rational(detail::decimal_integer(digits), scale);
  } else {
    if (!detail::all_digits(text)) throw fail("expected an integer");
    value = Rational(detail::decimal_integer(text));
  }
  return negative ? Rational(-value) : value;
}

inline RationalVector parse_rational_list(std::string_view text) {
  RationalVector out;
  if (detail::trim(text).empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto comma = text.find(',', start);
    out.push_back(parse_rational(text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline Rational dot(std::span<const Rational> a, std::span<const Rational> b) {
  if (a.size() != b.size())
    throw DimensionMismatch("dot: vectors of length " +
                            std::to_string(a.size()) + " and " +
                            std::to_string(b.size()));
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Rational sum(std::span<const Rational> v) {
  Rational s = 0;
  for (const auto& x : v) s += x;
  return s;
}

// Dense row-major matrix with immutable dimensions. A matrix may have zero
// rows and still carry a column count (the martingale system of a market
// with no risky assets).
class RationalMatrix {
 public:
  RationalMatrix() = default;
  RationalMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}
  RationalMatrix(std::initializer_list<std::initializer_list<Rational>> rows)
      : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_)
        throw DimensionMismatch("RationalMatrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static RationalMatrix from_rows(const std::vector<RationalVector>& rows,
                                  std::size_t cols) {
    RationalMatrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != cols)
        throw DimensionMismatch("row " + std::to_string(i) + " has length " +
                                std::to_string(rows[i].size()) +
                                ", expected " + std::to_string(cols));
      std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + i * cols);
    }
    return m;
  }

  static RationalMatrix identity(std::size_t n) {
    RationalMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Rational& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  const Rational& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<const Rational> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  RationalVector row_vector(std::size_t i) const {
    auto r = row(i);
    return {r.begin(), r.end()};
  }
  RationalVector column(std::size_t j) const {
    RationalVector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  RationalMatrix transpose() const {
    RationalMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  RationalVector operator*(std::span<const Rational> v) const {
    if (v.size() != cols_)
      throw DimensionMismatch("matrix-vector product: " +
                              std::to_string(cols_) + " columns, vector of " +
                              std::to_string(v.size()));
    RationalVector out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = dot(row(i), v);
    return out;
  }

  // New matrix with `extra` appended below this one.
  RationalMatrix stacked(const RationalMatrix& extra) const {
    if (extra.rows_ > 0 && extra.cols_ != cols_)
      throw DimensionMismatch("stacked: column counts differ");
    RationalMatrix m(rows_ + extra.rows_, cols_);
    std::copy(data_.begin(), data_.end(), m.data_.begin());
    std::copy(extra.data_.begin(), extra.data_.end(),
              m.data_.begin() + data_.size());
    return m;
  }

  // Columns `cols` of this matrix, in the given order.
  RationalMatrix select_columns(std::span<const std::size_t> cols) const {
    RationalMatrix m(rows_, cols.size());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        m(i, j) = (*this)(i, cols[j]);
    return m;
  }

  friend bool operator==(const RationalMatrix&, const RationalMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Rational> data_;
};

struct RrefResult {
  RationalMatrix matrix;
  std::vector<std::size_t> pivot_columns;
  std::size_t rank = 0;
};

// Gauss-Jordan elimination to the unique reduced row echelon form.
inline RrefResult rref(RationalMatrix m) {
  std::vector<std::size_t> pivots;
  std::size_t lead_row = 0;
  for (std::size_t col = 0; col < m.cols() && lead_row < m.rows(); ++col) {
    std::size_t pivot = lead_row;
    while (pivot < m.rows() && m(pivot, col) == 0) ++pivot;
    if (pivot == m.rows()) continue;
    if (pivot != lead_row)
      for (std::size_t j = 0; j < m.cols(); ++j)
        std::swap(m(pivot, j), m(lead_row, j));
    const Rational inv = 1 / m(lead_row, col);
    for (std::size_t j = col; j < m.cols(); ++j) m(lead_row, j) *= inv;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == lead_row || m(i, col) == 0) continue;
      const Rational factor = m(i, col);
      for (std::size_t j = col; j < m.cols(); ++j)
        m(i, j) -= factor * m(lead_row, j);
    }
    pivots.push_back(col);
    ++lead_row;
  }
  const std::size_t rank = pivots.size();
  return {std::move(m), std::move(pivots), rank};
}

inline std::size_t rank(const RationalMatrix& m) { return rref(m).rank; }

// Solution set of m x = c over the rationals.
struct SolutionSpace {
  enum class Kind { kInconsistent, kUnique, kAffine };

  Kind kind = Kind::kInconsistent;
  std::optional<RationalVector> particular;
  std::vector<RationalVector> basis;

  bool consistent() const { return kind != Kind::kInconsistent; }
  std::size_t dimension() const { return basis.size(); }
};

inline SolutionSpace solve(const RationalMatrix& m,
                           std::span<const Rational> c) {
  if (c.size() != m.rows())
    throw DimensionMismatch("solve: " + std::to_string(m.rows()) +
                            " equations, right-hand side of length " +
                            std::to_string(c.size()));
  const std::size_t n = m.cols();
  RationalMatrix aug(m.rows(), n + 1);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < n; ++j) aug(i, j) = m(i, j);
    aug(i, n) = c[i];
  }
  auto [r, pivots, rk] = rref(std::move(aug));

  SolutionSpace out;
  if (!pivots.empty() && pivots.back() == n) return out;  // 0 = 1 row

  std::vector<bool> is_pivot(n, false);
  for (auto p : pivots) is_pivot[p] = true;

  RationalVector particular(n);
  for (std::size_t i = 0; i < pivots.size(); ++i)
    particular[pivots[i]] = r(i, n);
  out.particular = std::move(particular);

  for (std::size_t f = 0; f < n; ++f) {
    if (is_pivot[f]) continue;
    RationalVector v(n);
    v[f] = 1;
    for (std::size_t i = 0; i < pivots.size(); ++i) v[pivots[i]] = -r(i, f);
    out.basis.push_back(std::move(v));
  }
  out.kind = out.basis.empty() ? SolutionSpace::Kind::kUnique
                               : SolutionSpace::Kind::kAffine;
  return out;
}

}  // namespace martpoly
