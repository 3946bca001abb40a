#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "commsim/error.hpp"
#include "commsim/graph.hpp"

namespace commsim {

inline constexpr std::int32_t kNoCommunity = -1;

/// Community assignment plus the permutation that lays every community out
/// as a consecutive index block.
///
/// Position space: communities 0..M-1 in order, each block sorted by node id,
/// followed by the pool of unassigned nodes. `node_at(i)` maps a position to
/// the original node (the forward permutation), `position_of(m)` inverts it.
class Partition {
public:
  Partition() = default;

  /// Community ids may be any non-negative integers; they are relabeled
  /// 0..M-1 in order of first appearance. kNoCommunity marks the pool.
  static Partition from_assignment(std::vector<std::int32_t> assignment) {
    Partition p;
    const std::size_t n = assignment.size();
    std::unordered_map<std::int32_t, std::int32_t> relabel;
    for (auto& a : assignment) {
      if (a == kNoCommunity) continue;
      if (a < 0) throw DomainError("partition: negative community id");
      auto [it, _] = relabel.try_emplace(a, static_cast<std::int32_t>(relabel.size()));
      a = it->second;
    }
    const std::size_t m = relabel.size();
    p.assignment_ = std::move(assignment);
    p.starts_.assign(m + 2, 0);
    for (auto a : p.assignment_) {
      std::size_t slot = a == kNoCommunity ? m : static_cast<std::size_t>(a);
      ++p.starts_[slot + 1];
    }
    for (std::size_t c = 0; c <= m; ++c) p.starts_[c + 1] += p.starts_[c];
    p.forward_.resize(n);
    p.inverse_.resize(n);
    std::vector<std::size_t> fill(p.starts_.begin(), p.starts_.end() - 1);
    for (std::size_t node = 0; node < n; ++node) {
      auto a = p.assignment_[node];
      std::size_t slot = a == kNoCommunity ? m : static_cast<std::size_t>(a);
      std::size_t pos = fill[slot]++;
      p.forward_[pos] = static_cast<NodeId>(node);
      p.inverse_[node] = static_cast<NodeId>(pos);
    }
    return p;
  }

  /// Every node in one community.
  static Partition single(std::size_t n) {
    return from_assignment(std::vector<std::int32_t>(n, 0));
  }

  /// Consecutive blocks of the given sizes.
  static Partition blocks(std::span<const std::size_t> sizes) {
    std::vector<std::int32_t> a;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      if (sizes[c] == 0) throw DomainError("partition: zero-size community");
      a.insert(a.end(), sizes[c], static_cast<std::int32_t>(c));
    }
    return from_assignment(std::move(a));
  }

  std::size_t n_nodes() const noexcept { return assignment_.size(); }
  std::size_t n_communities() const noexcept {
    return starts_.empty() ? 0 : starts_.size() - 2;
  }
  std::size_t size(std::size_t c) const noexcept { return starts_[c + 1] - starts_[c]; }
  std::size_t start(std::size_t c) const noexcept { return starts_[c]; }
  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(n_communities());
    for (std::size_t c = 0; c < s.size(); ++c) s[c] = size(c);
    return s;
  }

  /// First position of the unassigned pool (== sum of community sizes).
  std::size_t pool_start() const noexcept { return starts_[n_communities()]; }
  std::size_t pool_size() const noexcept { return n_nodes() - pool_start(); }

  std::int32_t community_of(NodeId node) const noexcept { return assignment_[node]; }
  const std::vector<std::int32_t>& assignment() const noexcept { return assignment_; }

  NodeId node_at(std::size_t pos) const noexcept { return forward_[pos]; }
  NodeId position_of(NodeId node) const noexcept { return inverse_[node]; }
  const std::vector<NodeId>& forward() const noexcept { return forward_; }
  const std::vector<NodeId>& inverse() const noexcept { return inverse_; }

  std::span<const NodeId> members(std::size_t c) const noexcept {
    return {forward_.data() + starts_[c], size(c)};
  }
  std::span<const NodeId> pool() const noexcept {
    return {forward_.data() + pool_start(), pool_size()};
  }

  /// Community of the node at a position, kNoCommunity for the pool.
  std::int32_t community_at(std::size_t pos) const noexcept {
    return assignment_[forward_[pos]];
  }

private:
  std::vector<std::int32_t> assignment_;
  std::vector<std::size_t> starts_;
  std::vector<NodeId> forward_;
  std::vector<NodeId> inverse_;
};

/// Reads `node_label community_id` lines; id `-` puts the node in the pool.
/// Nodes of the graph that the file does not mention go to the pool.
inline Partition load_partition(std::istream& in, const Graph& g) {
  std::unordered_map<std::string, NodeId> ids;
  for (NodeId m = 0; m < g.n_nodes(); ++m) ids.emplace(g.label(m), m);
  std::vector<std::int32_t> a(g.n_nodes(), kNoCommunity);
  std::vector<bool> seen(g.n_nodes(), false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream tokens(line);
    std::string label, cid, extra;
    if (!(tokens >> label >> cid) || (tokens >> extra))
      throw ParseError("expected `node_label community_id`", lineno);
    auto it = ids.find(label);
    if (it == ids.end()) throw ParseError("unknown node label '" + label + "'", lineno);
    if (cid != "-") {
      try {
        std::size_t used = 0;
        int v = std::stoi(cid, &used);
        if (used != cid.size() || v < 0) throw std::invalid_argument(cid);
        a[it->second] = v;
      } catch (const std::exception&) {
        throw ParseError("bad community id '" + cid + "'", lineno);
      }
    }
    seen[it->second] = true;
  }
  auto missing = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), false));
  if (missing > 0)
    detail::warn(std::to_string(missing) + " node(s) missing from partition file; "
                 "assigned to the unassigned pool");
  return Partition::from_assignment(std::move(a));
}

inline void write_partition(std::ostream& out, const Graph& g, const Partition& p) {
  for (NodeId m = 0; m < p.n_nodes(); ++m) {
    out << g.label(m) << ' ';
    if (p.community_of(m) == kNoCommunity)
      out << '-';
    else
      out << p.community_of(m);
    out << '\n';
  }
}

}  // namespace commsim
