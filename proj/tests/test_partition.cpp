#include <gtest/gtest.h>

#include <sstream>

#include "commsim/graph.hpp"
#include "commsim/partition.hpp"

using namespace commsim;

namespace {
struct Quiet {
  Quiet() { set_quiet(true); }
} quiet;
}  // namespace

TEST(Partition, CommunitiesAreContiguousWithPoolLast) {
  auto p = Partition::from_assignment({7, kNoCommunity, 3, 7, 3, kNoCommunity, 7});
  ASSERT_EQ(p.n_communities(), 2u);
  EXPECT_EQ(p.size(0), 3u);  // id 7 seen first
  EXPECT_EQ(p.size(1), 2u);
  EXPECT_EQ(p.pool_start(), 5u);
  EXPECT_EQ(p.pool_size(), 2u);
  for (std::size_t pos = 0; pos < 7; ++pos) {
    auto node = p.node_at(pos);
    EXPECT_EQ(p.position_of(node), pos);
    auto c = p.community_of(node);
    if (pos < 3) EXPECT_EQ(c, 0);
    else if (pos < 5) EXPECT_EQ(c, 1);
    else EXPECT_EQ(c, kNoCommunity);
    EXPECT_EQ(p.community_at(pos), c);
  }
}

TEST(Partition, PermutationComposesToIdentity) {
  auto p = Partition::from_assignment({2, 0, 1, 0, 2, 1, 1, kNoCommunity, 0});
  for (NodeId m = 0; m < 9; ++m) EXPECT_EQ(p.node_at(p.position_of(m)), m);
  std::size_t total = p.pool_size();
  for (auto s : p.sizes()) total += s;
  EXPECT_EQ(total, 9u);
}

TEST(Partition, BlocksAndSingle) {
  std::vector<std::size_t> sizes{2, 3};
  auto p = Partition::blocks(sizes);
  EXPECT_EQ(p.n_nodes(), 5u);
  EXPECT_EQ(p.start(1), 2u);
  EXPECT_EQ(p.node_at(3), 3u);
  auto s = Partition::single(4);
  EXPECT_EQ(s.n_communities(), 1u);
  EXPECT_EQ(s.size(0), 4u);
  std::vector<std::size_t> bad{2, 0};
  EXPECT_THROW(Partition::blocks(bad), DomainError);
}

TEST(Partition, RejectsNegativeIds) {
  EXPECT_THROW(Partition::from_assignment({0, -5}), DomainError);
}

TEST(PartitionFile, ReadsLabelsAndPool) {
  auto g = parse_edge_list("a b\nb c\nc d\n");
  std::istringstream in("a 1\nb 1\nc -\n# comment\nd 2\n");
  auto p = load_partition(in, g);
  EXPECT_EQ(p.n_communities(), 2u);
  EXPECT_EQ(p.community_of(0), p.community_of(1));
  EXPECT_EQ(p.community_of(2), kNoCommunity);
  EXPECT_NE(p.community_of(3), p.community_of(0));
}

TEST(PartitionFile, MissingNodesGoToPool) {
  auto g = parse_edge_list("a b\nb c\n");
  std::istringstream in("a 0\nb 0\n");
  auto p = load_partition(in, g);
  EXPECT_EQ(p.community_of(2), kNoCommunity);
  EXPECT_EQ(p.size(0), 2u);
}

TEST(PartitionFile, UnknownLabelIsAnError) {
  auto g = parse_edge_list("a b\n");
  std::istringstream in("a 0\nz 0\n");
  EXPECT_THROW(load_partition(in, g), ParseError);
}

TEST(PartitionFile, RoundTrip) {
  auto g = parse_edge_list("x y\ny z\nz w\n");
  auto p = Partition::from_assignment({0, 0, kNoCommunity, 1});
  std::stringstream s;
  write_partition(s, g, p);
  auto q = load_partition(s, g);
  EXPECT_EQ(q.assignment(), p.assignment());
}
