#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "commsim/decomposition.hpp"
#include "commsim/error.hpp"
#include "commsim/graph.hpp"
#include "commsim/partition.hpp"

namespace commsim {

struct GraphWithPartition {
  Graph graph;
  Partition partition;
};

/// Planted partition (stochastic block) graph: every intra-community pair is
/// linked with probability p_in, every inter-community pair with p_out.
/// Nodes are numbered block by block.
inline GraphWithPartition planted_partition_graph(std::span<const std::size_t> sizes,
                                                  double p_in, double p_out,
                                                  std::uint64_t seed) {
  if (sizes.empty()) throw DomainError("planted partition: no communities");
  if (!(p_in >= 0 && p_in <= 1 && p_out >= 0 && p_out <= 1))
    throw DomainError("planted partition: probabilities must lie in [0, 1]");
  auto partition = Partition::blocks(sizes);
  const std::size_t n = partition.n_nodes();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) {
      double prob = partition.community_of(u) == partition.community_of(v) ? p_in : p_out;
      // always draw so the stream does not depend on the probabilities
      double r = unif(rng);
      if (r < prob) edges.push_back({u, v});
    }
  return {Graph(n, std::move(edges)), std::move(partition)};
}

namespace detail {

inline std::uint64_t pair_key(NodeId a, NodeId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace detail

/// Grows a community-structured network by an integer factor while keeping
/// the number of deviating entries linear in N.
///
/// Each community (and the unassigned pool) becomes `factor` times larger.
/// Every block of the result is a clique minus `factor` times as many
/// missing pairs as the original block had, so per-node deviation counts are
/// preserved. Each extra edge is replicated `factor` times with endpoints
/// drawn from the corresponding scaled blocks; pool nodes map to their own
/// copies. Works on the decomposition directly so that large blocks never
/// have to be materialized as edge lists.
inline Decomposition scale_decomposition(const Decomposition& d, std::size_t factor,
                                         std::uint64_t seed) {
  if (factor == 0) throw DomainError("scale: factor must be positive");
  const auto& p = d.partition();
  const std::size_t m = p.n_communities();
  std::mt19937_64 rng(seed);

  std::vector<std::size_t> new_start(m + 1, 0);
  for (std::size_t c = 0; c < m; ++c) new_start[c + 1] = new_start[c] + p.size(c) * factor;
  const std::size_t pool_start = new_start[m];
  const std::size_t n_new = pool_start + p.pool_size() * factor;

  std::vector<std::int32_t> assignment(n_new, kNoCommunity);
  for (std::size_t c = 0; c < m; ++c)
    std::fill(assignment.begin() + static_cast<std::ptrdiff_t>(new_start[c]),
              assignment.begin() + static_cast<std::ptrdiff_t>(new_start[c + 1]),
              static_cast<std::int32_t>(c));

  std::vector<std::size_t> missing(m, 0);
  for (const auto& e : d.correction().entries())
    if (e.sign == -1) ++missing[static_cast<std::size_t>(p.community_at(e.row))];

  std::vector<SparseEntry> entries;
  std::unordered_set<std::uint64_t> taken;

  for (std::size_t c = 0; c < m; ++c) {
    const std::size_t lo = new_start[c];
    const std::size_t size = new_start[c + 1] - lo;
    const std::size_t total = size * (size - 1) / 2;
    const std::size_t target = std::min(total, missing[c] * factor);
    if (target == 0) continue;
    if (2 * target > total) {
      std::vector<std::pair<NodeId, NodeId>> all;
      all.reserve(total);
      for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = i + 1; j < size; ++j)
          all.emplace_back(static_cast<NodeId>(lo + i), static_cast<NodeId>(lo + j));
      std::shuffle(all.begin(), all.end(), rng);
      for (std::size_t k = 0; k < target; ++k)
        entries.push_back({all[k].first, all[k].second, -1});
    } else {
      std::uniform_int_distribution<std::size_t> pick(lo, lo + size - 1);
      std::unordered_set<std::uint64_t> chosen;
      chosen.reserve(2 * target);
      std::size_t made = 0;
      while (made < target) {
        auto a = static_cast<NodeId>(pick(rng));
        auto b = static_cast<NodeId>(pick(rng));
        if (a == b || !chosen.insert(detail::pair_key(a, b)).second) continue;
        entries.push_back({std::min(a, b), std::max(a, b), -1});
        ++made;
      }
    }
  }

  auto endpoint = [&](NodeId pos, std::size_t copy) -> std::pair<NodeId, bool> {
    auto c = p.community_at(pos);
    if (c == kNoCommunity) {
      std::size_t t = pos - p.pool_start();
      return {static_cast<NodeId>(pool_start + t * factor + copy), false};
    }
    auto cc = static_cast<std::size_t>(c);
    std::uniform_int_distribution<std::size_t> pick(new_start[cc], new_start[cc + 1] - 1);
    return {static_cast<NodeId>(pick(rng)), true};
  };

  std::size_t dropped = 0;
  for (const auto& e : d.correction().entries()) {
    if (e.sign != 1) continue;
    for (std::size_t k = 0; k < factor; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
        auto [a, ra] = endpoint(e.row, k);
        auto [b, rb] = endpoint(e.col, k);
        if (a != b && taken.insert(detail::pair_key(a, b)).second) {
          entries.push_back({std::min(a, b), std::max(a, b), 1});
          placed = true;
        } else if (!ra && !rb) {
          break;
        }
      }
      if (!placed) ++dropped;
    }
  }
  if (dropped > 0)
    detail::warn("scale: " + std::to_string(dropped) +
                 " replicated edge(s) collided and were dropped");

  return Decomposition(Partition::from_assignment(std::move(assignment)),
                       SparseCorrection(std::move(entries)));
}

/// Graph-level wrapper of scale_decomposition.
inline GraphWithPartition scale_network(const Graph& g, const Partition& p,
                                        std::size_t factor, std::uint64_t seed) {
  if (factor == 0) throw DomainError("scale: factor must be positive");
  auto scaled = scale_decomposition(decompose(g, p), factor, seed);
  return {to_graph(scaled), scaled.partition()};
}

}  // namespace commsim
