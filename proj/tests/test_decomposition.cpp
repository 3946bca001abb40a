#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "commsim/decomposition.hpp"
#include "commsim/generators.hpp"
#include "oracles.hpp"

using namespace commsim;

namespace {

// Permuted adjacency P A P^T built straight from the graph.
std::vector<int> permuted_adjacency(const Graph& g, const Partition& p) {
  const auto n = g.n_nodes();
  auto a = oracle::adjacency(g);
  std::vector<int> b(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b[i * n + j] = a[p.node_at(i)][p.node_at(j)];
  return b;
}

Partition random_partition(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(-1, static_cast<int>(k) - 1);
  std::vector<std::int32_t> a(n);
  for (auto& v : a) v = pick(rng);
  return Partition::from_assignment(a);
}

}  // namespace

TEST(Decompose, DisjointCliquesNeedNoCorrection) {
  std::vector<std::size_t> sizes{3, 3};
  auto gp = planted_partition_graph(sizes, 1.0, 0.0, 5);
  auto d = decompose(gp.graph, gp.partition);
  EXPECT_TRUE(d.correction().empty());
  EXPECT_EQ(d.diagonal_count(), 6u);
  EXPECT_EQ(d.n_edges(), 6u);
}

TEST(Decompose, CrossEdgeBecomesPlusOne) {
  Graph g(6, {{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}, {0, 3}});
  std::vector<std::size_t> sizes{3, 3};
  auto d = decompose(g, Partition::blocks(sizes));
  ASSERT_EQ(d.correction().stored(), 1u);
  const auto& e = d.correction().entries()[0];
  EXPECT_EQ(e.row, 0u);
  EXPECT_EQ(e.col, 3u);
  EXPECT_EQ(e.sign, 1);
  EXPECT_EQ(d.correction().nnz(), 2u);
}

TEST(Decompose, MissingPairBecomesMinusOne) {
  Graph g(4, {{0, 1}, {0, 2}, {0, 3}, {1, 3}, {2, 3}});  // K4 without (1,2)
  auto d = decompose(g, Partition::single(4));
  ASSERT_EQ(d.correction().stored(), 1u);
  const auto& e = d.correction().entries()[0];
  EXPECT_EQ(e.row, 1u);
  EXPECT_EQ(e.col, 2u);
  EXPECT_EQ(e.sign, -1);
}

TEST(Decompose, ReconstructionMatchesPermutedAdjacency) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto g = oracle::random_graph(40 + seed, 0.2, seed);
    auto p = random_partition(g.n_nodes(), 4, 100 + seed);
    auto d = decompose(g, p);
    EXPECT_EQ(reconstruct_dense(d), permuted_adjacency(g, p));
    EXPECT_TRUE(check_reconstruction(g, d));
    EXPECT_EQ(d.n_edges(), g.n_edges());
  }
}

TEST(Decompose, PoolNodesLiveEntirelyInCorrection) {
  Graph g(4, {{0, 1}, {1, 2}, {2, 3}});
  auto p = Partition::from_assignment({kNoCommunity, 0, 0, kNoCommunity});
  auto d = decompose(g, p);
  EXPECT_EQ(d.diagonal_count(), 2u);
  EXPECT_EQ(d.correction().count(1), 2u);
  EXPECT_EQ(d.correction().count(-1), 0u);
  EXPECT_TRUE(check_reconstruction(g, d));
}

TEST(Decompose, RoundTripToGraph) {
  auto g = oracle::random_graph(60, 0.15, 9);
  auto d = decompose(g, random_partition(60, 3, 2));
  auto h = to_graph(d);
  EXPECT_EQ(h.edges(), g.edges());
  auto a = to_dense_adjacency(d);
  for (NodeId u = 0; u < 60; ++u)
    for (NodeId v = 0; v < 60; ++v) EXPECT_EQ(a(u, v), g.has_edge(u, v));
}

TEST(SparseCorrection, ValidatesEntries) {
  EXPECT_THROW(SparseCorrection({{1, 1, -1}}), DomainError);
  EXPECT_THROW(SparseCorrection({{0, 1, 1}, {0, 1, 1}}), DomainError);
  EXPECT_THROW(SparseCorrection({{0, 1, 2}}), DomainError);
  SparseCorrection s({{2, 0, 1}, {0, 1, -1}});
  EXPECT_EQ(s.entries()[0].row, 0u);  // stored sorted, row < col
  EXPECT_EQ(s.entries()[1].row, 0u);
  EXPECT_EQ(s.entries()[1].col, 2u);
}

TEST(Decomposition, RejectsMisplacedSigns) {
  std::vector<std::size_t> sizes{2, 2};
  auto p = Partition::blocks(sizes);
  EXPECT_THROW(Decomposition(p, SparseCorrection({{0, 2, -1}})), DomainError);
  EXPECT_THROW(Decomposition(p, SparseCorrection({{0, 1, 1}})), DomainError);
  EXPECT_NO_THROW(Decomposition(p, SparseCorrection({{0, 1, -1}, {1, 3, 1}})));
}

TEST(Decomposition, CorrectionCsv) {
  Graph g(4, {{0, 1}, {0, 2}, {0, 3}, {1, 3}, {2, 3}});
  std::ostringstream s;
  write_correction_csv(s, decompose(g, Partition::single(4)));
  EXPECT_EQ(s.str(), "m,l,sign\n1,2,-1\n");
}
