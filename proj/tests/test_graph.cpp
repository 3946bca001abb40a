#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "commsim/generators.hpp"
#include "commsim/graph.hpp"

using namespace commsim;

namespace {
struct Quiet {
  Quiet() { set_quiet(true); }
} quiet;
}  // namespace

TEST(EdgeList, ReadsNumericLabels) {
  auto g = parse_edge_list("0 1\n1 2");
  EXPECT_EQ(g.n_nodes(), 3u);
  ASSERT_EQ(g.n_edges(), 2u);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(1, 2));
  EXPECT_FALSE(g.has_edge(0, 2));
}

TEST(EdgeList, CollapsesReversedDuplicate) {
  EdgeListStats st;
  auto g = parse_edge_list("a b\nb a", &st);
  EXPECT_EQ(g.n_nodes(), 2u);
  EXPECT_EQ(g.n_edges(), 1u);
  EXPECT_EQ(st.duplicates, 1u);
  EXPECT_EQ(g.label(0), "a");
  EXPECT_EQ(g.label(1), "b");
}

TEST(EdgeList, DropsSelfLoops) {
  EdgeListStats st;
  auto g = parse_edge_list("0 0\n0 1", &st);
  EXPECT_EQ(g.n_nodes(), 2u);
  EXPECT_EQ(g.n_edges(), 1u);
  EXPECT_EQ(st.self_loops, 1u);
}

TEST(EdgeList, LabelsMapInFirstSeenOrder) {
  auto g = parse_edge_list("# birds\nzeta alpha\n\nalpha mu\n");
  ASSERT_EQ(g.n_nodes(), 3u);
  EXPECT_EQ(g.label(0), "zeta");
  EXPECT_EQ(g.label(1), "alpha");
  EXPECT_EQ(g.label(2), "mu");
  EXPECT_TRUE(g.has_edge(1, 2));
}

TEST(EdgeList, MalformedLineReportsLineNumber) {
  try {
    parse_edge_list("0 1\n1 2 3\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_edge_list("0 1\nlonely\n"), ParseError);
}

TEST(EdgeList, EmptyInputIsAnError) {
  EXPECT_THROW(parse_edge_list(""), ParseError);
  EXPECT_THROW(parse_edge_list("# nothing here\n"), ParseError);
}

TEST(EdgeList, RoundTrip) {
  auto g = parse_edge_list("a b\nb c\nc a\nc d");
  std::stringstream s;
  write_edge_list(s, g);
  auto h = load_edge_list(s);
  EXPECT_EQ(h.n_nodes(), g.n_nodes());
  EXPECT_EQ(h.edges(), g.edges());
}

TEST(Graph, RejectsSelfLoopAndOutOfRange) {
  EXPECT_THROW(Graph(3, {{1, 1}}), DomainError);
  EXPECT_THROW(Graph(3, {{0, 3}}), DomainError);
}

TEST(Graph, NeighborsAndDegree) {
  Graph g(4, {{0, 1}, {0, 2}, {0, 3}, {2, 3}});
  EXPECT_EQ(g.degree(0), 3u);
  EXPECT_EQ(g.degree(1), 1u);
  auto nb = g.neighbors(2);
  ASSERT_EQ(nb.size(), 2u);
  EXPECT_EQ(nb[0], 0u);
  EXPECT_EQ(nb[1], 3u);
  DenseAdjacency a(g);
  EXPECT_TRUE(a(3, 2));
  EXPECT_TRUE(a(2, 3));
  EXPECT_FALSE(a(1, 2));
  EXPECT_FALSE(a(0, 0));
}

TEST(Planted, FullBlocksGiveDisjointCliques) {
  std::vector<std::size_t> sizes{3, 3};
  auto gp = planted_partition_graph(sizes, 1.0, 0.0, 11);
  EXPECT_EQ(gp.graph.n_edges(), 6u);
  for (NodeId u = 0; u < 6; ++u)
    for (NodeId v = 0; v < 6; ++v)
      if (u != v) {
        EXPECT_EQ(gp.graph.has_edge(u, v), (u < 3) == (v < 3));
      }
  EXPECT_EQ(gp.partition.n_communities(), 2u);
}

TEST(Planted, SingleFullBlockIsComplete) {
  std::vector<std::size_t> sizes{4};
  auto gp = planted_partition_graph(sizes, 1.0, 0.37, 1);
  EXPECT_EQ(gp.graph.n_edges(), 6u);
}

TEST(Planted, IntraEdgeCountWithinFiveSigma) {
  std::vector<std::size_t> sizes{50, 50};
  auto gp = planted_partition_graph(sizes, 0.9, 0.01, 7);
  std::size_t intra = 0;
  for (const auto& e : gp.graph.edges())
    if ((e.u < 50) == (e.v < 50)) ++intra;
  const double pairs = 2 * 50 * 49 / 2.0;
  const double mean = 0.9 * pairs;  // 2205
  const double sd = std::sqrt(pairs * 0.9 * 0.1);
  EXPECT_NEAR(static_cast<double>(intra), mean, 5 * sd);
}

TEST(Planted, DeterministicPerSeed) {
  std::vector<std::size_t> sizes{20, 30};
  auto a = planted_partition_graph(sizes, 0.5, 0.1, 3);
  auto b = planted_partition_graph(sizes, 0.5, 0.1, 3);
  auto c = planted_partition_graph(sizes, 0.5, 0.1, 4);
  EXPECT_EQ(a.graph.edges(), b.graph.edges());
  EXPECT_NE(a.graph.edges(), c.graph.edges());
}

TEST(Planted, RejectsBadInput) {
  std::vector<std::size_t> zero{3, 0};
  EXPECT_THROW(planted_partition_graph(zero, 0.5, 0.1, 1), DomainError);
  std::vector<std::size_t> ok{3};
  EXPECT_THROW(planted_partition_graph(ok, 1.5, 0.1, 1), DomainError);
  EXPECT_THROW(planted_partition_graph(std::span<const std::size_t>{}, 0.5, 0.1, 1), DomainError);
}
