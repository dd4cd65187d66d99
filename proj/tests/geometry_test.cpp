#include "martpoly/geometry.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

namespace martpoly {
namespace {

using testing::set_of;
using testing::V;

TEST(FaceIntersectionTest, Examples) {
  const auto sys = testing::three_generator_system();
  EXPECT_EQ(face_intersection(sys, {0, 1}), V({"1/2", "1/2", "0", "0"}));
  EXPECT_FALSE(face_intersection(sys, {1, 2}).has_value());
  EXPECT_FALSE(face_intersection(sys, {0}).has_value());
}

TEST(FaceIntersectionTest, BoundaryPointIsContractViolation) {
  // x1 = 1 on the edge {1,2} lands on the vertex e_1.
  const MartingaleSystem sys{RationalMatrix{{1, 0}}, V({"1"})};
  EXPECT_THROW(face_intersection(sys, {0, 1}), ContractViolation);
}

TEST(FaceIntersectionTest, LineMissingTriangle) {
  // A meets the plane of the triangle {1,2,3} in the line x1 = -1: no vertex
  // or edge is hit, and neither is the triangle.
  const MartingaleSystem sys{RationalMatrix{{1, 0, 0}}, V({"-1"})};
  EXPECT_FALSE(face_intersection(sys, {0, 1, 2}).has_value());
}

TEST(FaceIntersectionTest, RejectsBadFaces) {
  const auto sys = testing::three_generator_system();
  EXPECT_THROW(face_intersection(sys, {}), InvalidInput);
  EXPECT_THROW(face_intersection(sys, {1, 0}), InvalidInput);
  EXPECT_THROW(face_intersection(sys, {4}), InvalidInput);
}

TEST(EnumerateGeneratorsTest, NoMeasure) {
  EXPECT_TRUE(enumerate_generators(testing::no_measure_system()).empty());
}

TEST(EnumerateGeneratorsTest, SingleVertex) {
  const auto g = enumerate_generators(testing::single_vertex_system());
  EXPECT_TRUE(same_generators(g, set_of({V({"1", "0", "0", "0"})})));
}

TEST(EnumerateGeneratorsTest, DependentGenerators) {
  const auto g = enumerate_generators(testing::dependent_generator_system());
  EXPECT_TRUE(same_generators(g, set_of(testing::dependent_generators())));
}

TEST(EnumerateGeneratorsTest, Edge) {
  const auto g = enumerate_generators(testing::edge_system());
  EXPECT_TRUE(same_generators(
      g, set_of({V({"1", "0", "0", "0"}), V({"0", "1", "0", "0"})})));
}

TEST(EnumerateGeneratorsTest, DeterministicOrder) {
  const auto g = enumerate_generators(testing::three_generator_system());
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g.generators[0], V({"1/2", "1/2", "0", "0"}));
  EXPECT_EQ(g.generators[1], V({"1/2", "0", "1/2", "0"}));
  EXPECT_EQ(g.generators[2], V({"1/2", "0", "0", "1/2"}));
  EXPECT_EQ(g.support[1], (FaceIndexSet{0, 2}));
}

TEST(EnumerateGeneratorsTest, LimitGuard) {
  const MartingaleSystem sys{RationalMatrix(0, 17), {}};
  EXPECT_THROW(enumerate_generators(sys), LimitExceeded);
  EnumerationLimits wide;
  wide.max_outcomes = 17;
  EXPECT_EQ(enumerate_generators(sys, wide).size(), 17u);
}

TEST(EnumerateGeneratorsTest, InconsistentLinearPart) {
  const MartingaleSystem sys{RationalMatrix{{1, 1}, {1, 1}}, V({"0", "1"})};
  EXPECT_TRUE(enumerate_generators(sys).empty());
}

TEST(BruteForceGeneratorsTest, Examples) {
  EXPECT_TRUE(same_generators(
      brute_force_generators(testing::three_generator_system()),
      set_of({V({"1/2", "1/2", "0", "0"}), V({"1/2", "0", "1/2", "0"}),
              V({"1/2", "0", "0", "1/2"})})));
  EXPECT_TRUE(same_generators(brute_force_generators({RationalMatrix(0, 2), {}}),
                              set_of({V({"1", "0"}), V({"0", "1"})})));
  EXPECT_TRUE(same_generators(brute_force_generators(testing::single_vertex_system()),
                              set_of({V({"1", "0", "0", "0"})})));
}

bool pairwise_distinct(const GeneratorSet& g) {
  for (std::size_t a = 0; a < g.size(); ++a)
    for (std::size_t b = a + 1; b < g.size(); ++b)
      if (g.generators[a] == g.generators[b]) return false;
  return true;
}

// Oracle equivalence, soundness, distinctness and pruning safety on random
// systems.
TEST(EnumerateGeneratorsTest, MatchesBruteForceOnRandomSystems) {
  std::mt19937_64 rng(2024);
  EnumerationLimits unpruned;
  unpruned.prune_by_dimension = false;
  int nonempty = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const MartingaleSystem sys = testing::random_system(rng, 7, 4);
    const GeneratorSet staged = enumerate_generators(sys);
    const GeneratorSet oracle = brute_force_generators(sys);
    ASSERT_TRUE(same_generators(staged, oracle)) << "trial " << trial;
    ASSERT_TRUE(same_generators(staged, enumerate_generators(sys, unpruned)));
    EXPECT_TRUE(pairwise_distinct(staged));
    for (const auto& g : staged.generators) {
      EXPECT_EQ(sys.matrix * g, sys.rhs);
      EXPECT_EQ(sum(g), 1);
      for (const auto& x : g) EXPECT_GE(x, 0);
    }
    nonempty += !staged.empty();
  }
  EXPECT_GT(nonempty, 150);
}

// No generator is a convex combination of the others.
TEST(EnumerateGeneratorsTest, Minimality) {
  std::mt19937_64 rng(99);
  auto check = [](const GeneratorSet& g) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      std::vector<RationalVector> others;
      for (std::size_t k = 0; k < g.size(); ++k)
        if (k != j) others.push_back(g.generators[k]);
      EXPECT_FALSE(in_convex_hull(g.generators[j], others));
    }
  };
  check(enumerate_generators(testing::dependent_generator_system()));
  for (int trial = 0; trial < 60; ++trial)
    check(enumerate_generators(testing::random_system(rng, 6, 3)));
}

// Any point of the polytope, sampled independently, is in the hull.
TEST(EnumerateGeneratorsTest, ConvexHullCompleteness) {
  std::mt19937_64 rng(7);
  int sampled = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const MartingaleSystem sys = testing::random_system(rng, 6, 3);
    const std::size_t b = sys.outcomes();
    const GeneratorSet gens = enumerate_generators(sys);
    for (int attempt = 0; attempt < 5; ++attempt) {
      FaceIndexSet face;
      for (std::size_t i = 0; i < b; ++i)
        if (std::uniform_int_distribution<int>(0, 2)(rng)) face.push_back(i);
      if (face.empty()) continue;
      const SolutionSpace s = detail::solve_on_face(sys, face);
      if (!s.consistent()) continue;
      RationalVector x = *s.particular;
      for (const auto& v : s.basis) {
        const Rational t(std::uniform_int_distribution<int>(-3, 3)(rng), 7);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += t * v[i];
      }
      if (std::any_of(x.begin(), x.end(), [](const Rational& q) { return q < 0; }))
        continue;
      RationalVector p(b);
      for (std::size_t j = 0; j < face.size(); ++j) p[face[j]] = x[j];
      ASSERT_FALSE(gens.empty());
      EXPECT_TRUE(in_convex_hull(p, gens.generators));
      ++sampled;
    }
  }
  EXPECT_GT(sampled, 100);
}

TEST(InConvexHullTest, Basics) {
  EXPECT_TRUE(in_convex_hull(V({"1/2", "1/2"}), {V({"1", "0"}), V({"0", "1"})}));
  EXPECT_FALSE(in_convex_hull(V({"2", "-1"}), {V({"1", "0"}), V({"0", "1"})}));
  EXPECT_FALSE(in_convex_hull(V({"1", "0"}), {}));
}

}  // namespace
}  // namespace martpoly
