#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "commsim/error.hpp"
#include "commsim/graph.hpp"
#include "commsim/partition.hpp"

namespace commsim {

/// One off-diagonal entry of the sparse correction, in position space,
/// stored once per unordered pair with row < col.
struct SparseEntry {
  NodeId row = 0;
  NodeId col = 0;
  std::int8_t sign = 0;  // +1 extra inter-community edge, -1 missing intra edge

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Sorted list of off-diagonal corrections S.
///
/// The dense part D carries an implicit 1 on the diagonal of every
/// community block while the graph has no self-loops, so each community
/// member also owns a diagonal -1. Those are not stored here; evaluators
/// apply them per member (see `Decomposition::diagonal_count`).
class SparseCorrection {
public:
  SparseCorrection() = default;
  explicit SparseCorrection(std::vector<SparseEntry> entries) : entries_(std::move(entries)) {
    for (auto& e : entries_) {
      if (e.row == e.col) throw DomainError("sparse correction: diagonal entry");
      if (e.sign != 1 && e.sign != -1) throw DomainError("sparse correction: sign not +-1");
      if (e.row > e.col) std::swap(e.row, e.col);
    }
    std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (std::size_t i = 1; i < entries_.size(); ++i)
      if (entries_[i].row == entries_[i - 1].row && entries_[i].col == entries_[i - 1].col)
        throw DomainError("sparse correction: duplicate entry");
  }

  const std::vector<SparseEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  /// Unordered pairs stored.
  std::size_t stored() const noexcept { return entries_.size(); }
  /// Off-diagonal nonzeros of the symmetric matrix.
  std::size_t nnz() const noexcept { return 2 * entries_.size(); }
  std::size_t count(std::int8_t sign) const noexcept {
    return static_cast<std::size_t>(std::count_if(
        entries_.begin(), entries_.end(), [sign](const auto& e) { return e.sign == sign; }));
  }

private:
  std::vector<SparseEntry> entries_;
};

/// Permuted adjacency split B = P A P^T = D + S.
class Decomposition {
public:
  Decomposition() = default;

  /// Validates sign placement against the partition: -1 only inside one
  /// community block, +1 only between blocks or touching the pool.
  Decomposition(Partition partition, SparseCorrection correction)
      : partition_(std::move(partition)), correction_(std::move(correction)) {
    const auto n = partition_.n_nodes();
    for (const auto& e : correction_.entries()) {
      if (e.col >= n) throw DomainError("decomposition: entry outside node range");
      auto cr = partition_.community_at(e.row);
      auto cc = partition_.community_at(e.col);
      bool same = cr != kNoCommunity && cr == cc;
      if (e.sign == -1 && !same)
        throw DomainError("decomposition: -1 entry outside a community block");
      if (e.sign == 1 && same)
        throw DomainError("decomposition: +1 entry inside a community block");
    }
  }

  std::size_t n_nodes() const noexcept { return partition_.n_nodes(); }
  const Partition& partition() const noexcept { return partition_; }
  const SparseCorrection& correction() const noexcept { return correction_; }

  /// Implicit diagonal -1 corrections, one per community member.
  std::size_t diagonal_count() const noexcept { return partition_.pool_start(); }

  /// Number of edges of the represented graph.
  std::size_t n_edges() const noexcept {
    std::size_t dense = 0;
    for (std::size_t c = 0; c < partition_.n_communities(); ++c) {
      auto s = partition_.size(c);
      dense += s * (s - 1) / 2;
    }
    return dense + correction_.count(1) - correction_.count(-1);
  }

private:
  Partition partition_;
  SparseCorrection correction_;
};

/// Builds the sparse correction for `g` under `p`: -1 for every missing
/// pair inside a community, +1 for every edge between communities or
/// touching the unassigned pool.
inline Decomposition decompose(const Graph& g, const Partition& p) {
  if (g.n_nodes() != p.n_nodes())
    throw DomainError("decompose: partition size does not match graph");
  std::vector<SparseEntry> entries;

  std::vector<std::uint8_t> mark(g.n_nodes(), 0);
  for (std::size_t c = 0; c < p.n_communities(); ++c) {
    auto members = p.members(c);
    const std::size_t base = p.start(c);
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (auto nb : g.neighbors(members[i])) mark[nb] = 1;
      for (std::size_t j = i + 1; j < members.size(); ++j)
        if (!mark[members[j]])
          entries.push_back({static_cast<NodeId>(base + i), static_cast<NodeId>(base + j), -1});
      for (auto nb : g.neighbors(members[i])) mark[nb] = 0;
    }
  }
  for (const auto& e : g.edges()) {
    auto cu = p.community_of(e.u);
    auto cv = p.community_of(e.v);
    if (cu == kNoCommunity || cu != cv)
      entries.push_back({p.position_of(e.u), p.position_of(e.v), 1});
  }
  return Decomposition(p, SparseCorrection(std::move(entries)));
}

/// Dense reconstruction D + S (diagonal corrections included) in position
/// space, row-major. Brute force; intended for small N.
inline std::vector<int> reconstruct_dense(const Decomposition& d) {
  const auto n = d.n_nodes();
  const auto& p = d.partition();
  std::vector<int> b(n * n, 0);
  for (std::size_t c = 0; c < p.n_communities(); ++c)
    for (std::size_t i = p.start(c); i < p.start(c) + p.size(c); ++i) {
      for (std::size_t j = p.start(c); j < p.start(c) + p.size(c); ++j) b[i * n + j] = 1;
      b[i * n + i] -= 1;
    }
  for (const auto& e : d.correction().entries()) {
    b[e.row * n + e.col] += e.sign;
    b[e.col * n + e.row] += e.sign;
  }
  return b;
}

/// Checks D + S == P A P^T entrywise against the source graph.
inline bool check_reconstruction(const Graph& g, const Decomposition& d) {
  const auto n = g.n_nodes();
  if (d.n_nodes() != n) return false;
  auto b = reconstruct_dense(d);
  const auto& p = d.partition();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      int a = i != j && g.has_edge(p.node_at(i), p.node_at(j)) ? 1 : 0;
      if (b[i * n + j] != a) return false;
    }
  return true;
}

/// Edge list of the graph represented by a decomposition (original ids).
inline std::vector<Edge> represented_edges(const Decomposition& d) {
  const auto& p = d.partition();
  std::vector<Edge> edges;
  edges.reserve(d.n_edges());
  const auto& entries = d.correction().entries();
  // -1 entries sorted by (row, col); walk them alongside the block pairs.
  std::size_t k = 0;
  for (std::size_t c = 0; c < p.n_communities(); ++c) {
    const std::size_t lo = p.start(c), hi = lo + p.size(c);
    for (std::size_t i = lo; i < hi; ++i)
      for (std::size_t j = i + 1; j < hi; ++j) {
        while (k < entries.size() &&
               (entries[k].row < i || (entries[k].row == i && entries[k].col < j)))
          ++k;
        if (k < entries.size() && entries[k].row == i && entries[k].col == j &&
            entries[k].sign == -1)
          continue;
        NodeId u = p.node_at(i), v = p.node_at(j);
        edges.push_back({std::min(u, v), std::max(u, v)});
      }
  }
  for (const auto& e : entries)
    if (e.sign == 1) {
      NodeId u = p.node_at(e.row), v = p.node_at(e.col);
      edges.push_back({std::min(u, v), std::max(u, v)});
    }
  return edges;
}

inline Graph to_graph(const Decomposition& d) {
  return Graph(d.n_nodes(), represented_edges(d));
}

inline DenseAdjacency to_dense_adjacency(const Decomposition& d) {
  DenseAdjacency a(d.n_nodes());
  for (const auto& e : represented_edges(d)) a.set(e.u, e.v);
  return a;
}

/// Debug dump: `m,l,sign` per stored pair, position indices.
inline void write_correction_csv(std::ostream& out, const Decomposition& d) {
  out << "m,l,sign\n";
  for (const auto& e : d.correction().entries())
    out << e.row << ',' << e.col << ',' << static_cast<int>(e.sign) << '\n';
}

}  // namespace commsim
