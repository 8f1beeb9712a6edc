#include <gtest/gtest.h>

#include <sstream>

#include "dagbench/errors.hpp"
#include "dagbench/graph.hpp"
#include "support.hpp"

namespace dagbench {
namespace {

Dag chain3() { return Dag::from_edges(3, {{0, 1}, {1, 2}}); }
Dag collider3() { return Dag::from_edges(3, {{0, 2}, {1, 2}}); }

TEST(DagTest, RejectsCyclesAndSelfLoops) {
  EXPECT_THROW(Dag::from_edges(2, {{0, 1}, {1, 0}}), ParameterError);
  EXPECT_THROW(Dag::from_edges(2, {{1, 1}}), ParameterError);
  EXPECT_THROW(Dag(BoolMatrix::Constant(2, 3, false)), ShapeError);
}

TEST(DagTest, ParentsChildrenAndOrder) {
  const Dag g = Dag::from_edges(4, {{2, 0}, {2, 1}, {0, 3}, {1, 3}});
  EXPECT_EQ(g.parents(3), (NodeSet{0, 1}));
  EXPECT_EQ(g.children(2), (NodeSet{0, 1}));
  EXPECT_EQ(g.topological_order(), (std::vector<int>{2, 0, 1, 3}));
  EXPECT_EQ(g.num_edges(), 4);
}

TEST(IsAcyclicTest, SmallCases) {
  EXPECT_TRUE(is_acyclic(chain3().adjacency()));
  BoolMatrix two_cycle = BoolMatrix::Constant(2, 2, false);
  two_cycle(0, 1) = two_cycle(1, 0) = true;
  EXPECT_FALSE(is_acyclic(two_cycle));
  EXPECT_TRUE(is_acyclic(BoolMatrix::Constant(5, 5, false)));
}

TEST(IsAcyclicTest, MatchesPeelingOnAllFourNodeMatrices) {
  for (std::uint32_t mask = 0; mask < (1U << 12); ++mask) {
    const BoolMatrix adj = testing::adjacency_from_mask(4, mask);
    ASSERT_EQ(is_acyclic(adj), testing::acyclic_by_peeling(adj)) << mask;
  }
}

TEST(EnumerationTest, LabeledDagCounts) {
  // OEIS A003024.
  EXPECT_EQ(testing::all_dags(3).size(), 25U);
  EXPECT_EQ(testing::all_dags(4).size(), 543U);
}

TEST(GenErTest, ExactEdgeCount) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Dag g = gen_er(10, 2, seed);
    ASSERT_EQ(g.num_edges(), 10);
    ASSERT_TRUE(is_acyclic(g.adjacency()));
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) ASSERT_EQ(gen_er(20, 4, seed).num_edges(), 40);
}

TEST(GenErTest, ZeroDegreeAndCompleteTriangle) {
  EXPECT_EQ(gen_er(2, 0, 1).num_edges(), 0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) EXPECT_EQ(gen_er(3, 2, seed).num_edges(), 3);
}

TEST(GenErTest, Deterministic) {
  EXPECT_EQ(gen_er(15, 4, 7), gen_er(15, 4, 7));
  EXPECT_EQ(gen_sf(15, 4, 7), gen_sf(15, 4, 7));
  EXPECT_EQ(gen_grp(15, 6, 7), gen_grp(15, 6, 7));
}

TEST(GenSfTest, OneEdgePerNewNodeAtDegreeTwo) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Dag g = gen_sf(10, 2, seed);
    ASSERT_EQ(g.num_edges(), 9);
    ASSERT_TRUE(is_acyclic(g.adjacency()));
  }
  const Dag tiny = gen_sf(3, 2, 3);
  EXPECT_EQ(tiny.num_edges(), 2);
}

TEST(GenSfTest, OutDegreeBoundedByAttachments) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dag g = gen_sf(50, 4, seed);
    for (int i = 0; i < 50; ++i) ASSERT_LE(g.children(i).size(), 2U);
  }
}

TEST(GenGrpTest, MeanDegreeNearTarget) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Dag g = gen_grp(20, 6, seed);
    ASSERT_TRUE(is_acyclic(g.adjacency()));
    total += 2.0 * g.num_edges() / 20.0;
  }
  const double mean = total / 100.0;
  EXPECT_GE(mean, 5.0);
  EXPECT_LE(mean, 7.0);
  EXPECT_EQ(gen_grp(4, 0, 1).num_edges(), 0);
}

TEST(GraphKindTest, LabelRoundTrip) {
  for (const char* label : {"ER-2", "ER-4", "SF-6", "GRP-6"}) EXPECT_EQ(GraphKind::parse(label).label(), label);
  EXPECT_THROW(GraphKind::parse("XY-2"), ParameterError);
}

TEST(DescendantsTest, ChainAndCollider) {
  EXPECT_EQ(descendants(chain3(), 0), (NodeSet{1, 2}));
  EXPECT_TRUE(descendants(chain3(), 2).empty());
  EXPECT_EQ(descendants(collider3(), 1), (NodeSet{2}));
  EXPECT_EQ(ancestors(collider3(), 2), (NodeSet{0, 1}));
}

TEST(DSeparationTest, TextbookCases) {
  EXPECT_TRUE(d_separated(collider3(), 0, 1, {}));
  EXPECT_FALSE(d_separated(collider3(), 0, 1, {2}));
  EXPECT_TRUE(d_separated(chain3(), 0, 2, {1}));
  EXPECT_FALSE(d_separated(chain3(), 0, 2, {}));
  // Conditioning on a descendant of a collider opens it.
  const Dag g = Dag::from_edges(4, {{0, 2}, {1, 2}, {2, 3}});
  EXPECT_FALSE(d_separated(g, 0, 1, {3}));
}

void check_all_queries(const Dag& g) {
  const int d = g.size();
  for (int x = 0; x < d; ++x) {
    for (int y = x + 1; y < d; ++y) {
      std::vector<int> rest;
      for (int v = 0; v < d; ++v) {
        if (v != x && v != y) rest.push_back(v);
      }
      for (std::uint32_t sub = 0; sub < (1U << rest.size()); ++sub) {
        NodeSet z;
        for (std::size_t b = 0; b < rest.size(); ++b) {
          if ((sub >> b) & 1U) z.push_back(rest[b]);
        }
        ASSERT_EQ(d_separated(g, x, y, z), testing::d_separated_brute_force(g, x, y, z))
            << "x=" << x << " y=" << y << " |z|=" << z.size();
      }
    }
  }
}

TEST(DSeparationProperty, MatchesPathEnumerationOnAllSmallDags) {
  for (int d = 2; d <= 5; ++d) {
    for (const Dag& g : testing::all_dags(d)) {
      check_all_queries(g);
      if (HasFatalFailure()) return;
    }
  }
}

TEST(TotalEffectTest, PathSums) {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(3, 3);
  W(0, 1) = 0.8;
  EXPECT_DOUBLE_EQ(total_effect(Dag::from_edges(3, {{0, 1}}), W, 0, 1), 0.8);
  const double a = 1.3;
  const double b = -0.7;
  W(0, 1) = a;
  W(1, 2) = b;
  EXPECT_NEAR(total_effect(chain3(), W, 0, 2), a * b, 1e-15);
  W(0, 2) = -a * b;
  EXPECT_NEAR(total_effect(Dag::from_edges(3, {{0, 1}, {1, 2}, {0, 2}}), W, 0, 2), 0.0, 1e-15);
}

TEST(TotalEffectProperty, ZeroOutsideDescendantsAndMatchesInverse) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Dag g = testing::random_dag(7, 0.4, rng);
    const Eigen::MatrixXd W = testing::random_weights(g, rng);
    const Eigen::MatrixXd T = total_effect_matrix(W);
    for (int i = 0; i < 7; ++i) {
      const NodeSet de = descendants(g, i);
      for (int j = 0; j < 7; ++j) {
        if (i == j) continue;
        const double e = total_effect(g, W, i, j);
        if (std::find(de.begin(), de.end(), j) == de.end()) {
          ASSERT_EQ(e, 0.0);
        }
        ASSERT_NEAR(e, T(i, j), 1e-9 * (1.0 + std::abs(e)));
      }
    }
  }
}

TEST(EdgeListTest, RoundTripAndErrors) {
  const Dag g = gen_er(8, 2, 3);
  std::stringstream buf;
  write_edge_list(buf, g);
  EXPECT_EQ(read_edge_list(buf), g);
  std::stringstream cyclic("# dag d=2\n0 1\n1 0\n");
  EXPECT_THROW(read_edge_list(cyclic), std::exception);
  std::stringstream garbage("# dag d=3\n0 x\n");
  EXPECT_THROW(read_edge_list(garbage), FormatError);
}

TEST(RelabelTest, PreservesStructure) {
  const Dag g = chain3();
  const Dag r = relabel(g, {2, 0, 1});
  EXPECT_TRUE(r.has_edge(2, 0));
  EXPECT_TRUE(r.has_edge(0, 1));
  EXPECT_EQ(r.num_edges(), 2);
}

}  // namespace
}  // namespace dagbench
