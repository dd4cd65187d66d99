#pragma once

// Vertices of the martingale-measure polytope {p >= 0, sum p = 1, M p = c}.
//
// The staged enumerator walks the face lattice of the standard simplex by
// increasing cardinality. A face is only examined once all of its facets
// are known to miss the affine space A = {M p = c}; such a face meets A in
// at most one point, and that point lies in the relative interior of the
// face. Those points are exactly the polytope's vertices.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "martpoly/exactmath.hpp"
#include "martpoly/market.hpp"

namespace martpoly {

// Sorted, nonempty set of outcome indices J; stands for conv{e_j : j in J}.
using FaceIndexSet = std::vector<std::size_t>;

struct GeneratorSet {
  std::vector<RationalVector> generators;
  // support[j] = {i : generators[j][i] > 0}, ascending.
  std::vector<FaceIndexSet> support;

  std::size_t size() const { return generators.size(); }
  bool empty() const { return generators.empty(); }

  bool contains(const RationalVector& v) const {
    return std::find(generators.begin(), generators.end(), v) !=
           generators.end();
  }

  void add(RationalVector g) {
    FaceIndexSet s;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g[i] > 0) s.push_back(i);
    support.push_back(std::move(s));
    generators.push_back(std::move(g));
  }
};

// Set equality, ignoring order.
inline bool same_generators(const GeneratorSet& a, const GeneratorSet& b) {
  if (a.size() != b.size()) return false;
  return std::all_of(a.generators.begin(), a.generators.end(),
                     [&](const RationalVector& g) { return b.contains(g); });
}

struct EnumerationLimits {
  std::size_t max_outcomes = 16;
  // Skip stages whose faces have b + 2 - dim(A) or more vertices. Turning
  // this off never changes the result, only the amount of work.
  bool prune_by_dimension = true;
};

namespace detail {

// Solves {M_J x = c, sum x = 1} restricted to the columns in `face`.
inline SolutionSpace solve_on_face(const MartingaleSystem& sys,
                                   const FaceIndexSet& face) {
  RationalMatrix m(sys.matrix.rows() + 1, face.size());
  for (std::size_t j = 0; j < face.size(); ++j) {
    m(0, j) = 1;
    for (std::size_t i = 0; i < sys.matrix.rows(); ++i)
      m(i + 1, j) = sys.matrix(i, face[j]);
  }
  RationalVector rhs;
  rhs.reserve(sys.rhs.size() + 1);
  rhs.push_back(1);
  rhs.insert(rhs.end(), sys.rhs.begin(), sys.rhs.end());
  return solve(m, rhs);
}

inline std::string face_name(const FaceIndexSet& face) {
  std::string s = "{";
  for (std::size_t i = 0; i < face.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(face[i] + 1);
  }
  return s + "}";
}

inline void check_system(const MartingaleSystem& sys) {
  if (sys.rhs.size() != sys.matrix.rows())
    throw DimensionMismatch("martingale system: rhs length " +
                            std::to_string(sys.rhs.size()) + " vs " +
                            std::to_string(sys.matrix.rows()) + " rows");
  if (sys.outcomes() == 0)
    throw InvalidInput("martingale system needs at least one outcome");
}

}  // namespace detail

// Intersection of A with the relative interior of the face, assuming no
// proper subface meets A. Under that assumption the intersection is empty
// or a single point; the point is returned padded with zeros to length b.
//
// An underdetermined linear part means A meets the face's affine hull in a
// line or more; if that set touched the closed face it would also touch the
// boundary, so under the precondition it misses the face entirely.
inline std::optional<RationalVector> face_intersection(
    const MartingaleSystem& sys, const FaceIndexSet& face) {
  detail::check_system(sys);
  if (face.empty()) throw InvalidInput("face_intersection: empty face");
  for (std::size_t k = 0; k < face.size(); ++k)
    if (face[k] >= sys.outcomes() || (k > 0 && face[k] <= face[k - 1]))
      throw InvalidInput("face_intersection: face must be sorted indices < b");

  const SolutionSpace s = detail::solve_on_face(sys, face);
  if (s.kind != SolutionSpace::Kind::kUnique) return std::nullopt;

  const RationalVector& x = *s.particular;
  for (const auto& xj : x) {
    if (xj < 0) return std::nullopt;
  }
  for (const auto& xj : x) {
    if (xj == 0)
      throw ContractViolation("face " + detail::face_name(face) +
                              " meets A on its boundary; a subface should "
                              "have been reported first");
  }
  RationalVector full(sys.outcomes());
  for (std::size_t j = 0; j < face.size(); ++j) full[face[j]] = x[j];
  return full;
}

// Staged enumeration: cardinality ascending, lexicographic within a stage.
inline GeneratorSet enumerate_generators(const MartingaleSystem& sys,
                                         const EnumerationLimits& limits = {}) {
  detail::check_system(sys);
  const std::size_t b = sys.outcomes();
  if (b > limits.max_outcomes)
    throw LimitExceeded("market has " + std::to_string(b) +
                        " outcomes; face enumeration is limited to " +
                        std::to_string(limits.max_outcomes));

  GeneratorSet out;
  const SolutionSpace affine = solve(sys.matrix, sys.rhs);
  if (!affine.consistent()) return out;

  std::size_t last_stage = b;
  if (limits.prune_by_dimension)
    last_stage = std::min(b, b + 1 - affine.dimension());

  std::set<FaceIndexSet> missed;  // previous stage's faces that miss A
  for (std::size_t k = 1; k <= last_stage; ++k) {
    std::vector<FaceIndexSet> candidates;
    if (k == 1) {
      for (std::size_t i = 0; i < b; ++i) candidates.push_back({i});
    } else {
      for (const auto& base : missed) {
        for (std::size_t j = base.back() + 1; j < b; ++j) {
          FaceIndexSet face = base;
          face.push_back(j);
          bool all_facets_missed = true;
          FaceIndexSet facet(k - 1);
          for (std::size_t drop = 0; drop + 1 < k && all_facets_missed;
               ++drop) {
            std::size_t w = 0;
            for (std::size_t t = 0; t < k; ++t)
              if (t != drop) facet[w++] = face[t];
            all_facets_missed = missed.count(facet) > 0;
          }
          if (all_facets_missed) candidates.push_back(std::move(face));
        }
      }
    }

    std::set<FaceIndexSet> next;
    for (auto& face : candidates) {
      if (auto point = face_intersection(sys, face)) {
        out.add(std::move(*point));
      } else {
        next.insert(std::move(face));
      }
    }
    if (next.empty()) break;
    missed = std::move(next);
  }
  return out;
}

// Independent oracle: every support J, keep the points that are the unique
// solution on J and strictly positive there. Exponential; meant for b <= 10.
inline GeneratorSet brute_force_generators(const MartingaleSystem& sys) {
  detail::check_system(sys);
  const std::size_t b = sys.outcomes();
  if (b > 20) throw LimitExceeded("brute_force_generators: b > 20");

  GeneratorSet out;
  for (std::size_t k = 1; k <= b; ++k) {
    // Lexicographic k-combinations of {0..b-1}.
    FaceIndexSet face(k);
    for (std::size_t i = 0; i < k; ++i) face[i] = i;
    while (true) {
      const SolutionSpace s = detail::solve_on_face(sys, face);
      if (s.kind == SolutionSpace::Kind::kUnique &&
          std::all_of(s.particular->begin(), s.particular->end(),
                      [](const Rational& x) { return x > 0; })) {
        RationalVector full(b);
        for (std::size_t j = 0; j < k; ++j) full[face[j]] = (*s.particular)[j];
        if (!out.contains(full)) out.add(std::move(full));
      }
      std::size_t pos = k;
      while (pos > 0 && face[pos - 1] == b - k + pos - 1) --pos;
      if (pos == 0) break;
      ++face[pos - 1];
      for (std::size_t i = pos; i < k; ++i) face[i] = face[i - 1] + 1;
    }
  }
  return out;
}

// Whether `point` is a convex combination of `points` (exact).
inline bool in_convex_hull(const RationalVector& point,
                           const std::vector<RationalVector>& points) {
  if (points.empty()) return false;
  RationalMatrix h(point.size(), points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (points[j].size() != point.size())
      throw DimensionMismatch("in_convex_hull: dimension mismatch");
    for (std::size_t i = 0; i < point.size(); ++i) h(i, j) = points[j][i];
  }
  return !brute_force_generators(MartingaleSystem{h, point}).empty();
}

}  // namespace martpoly
