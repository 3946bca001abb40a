#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "commsim/error.hpp"

namespace commsim {

using NodeId = std::uint32_t;

/// Undirected edge, always stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected, unweighted simple graph on nodes 0..n-1.
///
/// Edges are normalized on construction (u < v, sorted, deduplicated) and a
/// CSR neighbor index is built so that adjacency queries are O(log deg).
class Graph {
public:
  Graph() = default;

  /// Throws DomainError on self-loops or out-of-range endpoints.
  Graph(std::size_t n_nodes, std::vector<Edge> edges,
        std::vector<std::string> labels = {})
      : n_(n_nodes), edges_(std::move(edges)), labels_(std::move(labels)) {
    if (!labels_.empty() && labels_.size() != n_)
      throw DomainError("graph: label count does not match node count");
    for (auto& e : edges_) {
      if (e.u == e.v)
        throw DomainError("graph: self-loop at node " + std::to_string(e.u));
      if (e.u >= n_ || e.v >= n_)
        throw DomainError("graph: edge endpoint out of range");
      if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    build_index();
  }

  std::size_t n_nodes() const noexcept { return n_; }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  std::span<const NodeId> neighbors(NodeId m) const noexcept {
    return {adj_.data() + offsets_[m], adj_.data() + offsets_[m + 1]};
  }
  std::size_t degree(NodeId m) const noexcept {
    return offsets_[m + 1] - offsets_[m];
  }
  bool has_edge(NodeId m, NodeId l) const noexcept {
    auto nb = neighbors(m);
    return std::binary_search(nb.begin(), nb.end(), l);
  }

  bool has_labels() const noexcept { return !labels_.empty(); }
  std::string label(NodeId m) const {
    return labels_.empty() ? std::to_string(m) : labels_[m];
  }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

private:
  void build_index() {
    offsets_.assign(n_ + 1, 0);
    for (const auto& e : edges_) {
      ++offsets_[e.u + 1];
      ++offsets_[e.v + 1];
    }
    for (std::size_t i = 0; i < n_; ++i) offsets_[i + 1] += offsets_[i];
    adj_.resize(offsets_[n_]);
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const auto& e : edges_) {
      adj_[fill[e.u]++] = e.v;
      adj_[fill[e.v]++] = e.u;
    }
    for (std::size_t i = 0; i < n_; ++i)
      std::sort(adj_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                adj_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
  }

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::string> labels_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adj_;
};

struct EdgeListStats {
  std::size_t self_loops = 0;
  std::size_t duplicates = 0;
};

/// Reads a whitespace-separated edge list. Lines starting with '#' and blank
/// lines are skipped; labels become dense ids in first-seen order.
inline Graph load_edge_list(std::istream& in, EdgeListStats* stats = nullptr) {
  std::unordered_map<std::string, NodeId> ids;
  std::vector<std::string> labels;
  std::vector<Edge> edges;
  EdgeListStats local;

  auto id_of = [&](const std::string& label) {
    auto [it, inserted] = ids.try_emplace(label, static_cast<NodeId>(labels.size()));
    if (inserted) labels.push_back(label);
    return it->second;
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream tokens(line);
    std::vector<std::string> tok;
    for (std::string t; tokens >> t;) tok.push_back(t);
    if (tok.size() != 2)
      throw ParseError("expected 2 node labels, found " + std::to_string(tok.size()),
                       lineno);
    NodeId a = id_of(tok[0]);
    NodeId b = id_of(tok[1]);
    if (a == b) {
      ++local.self_loops;
      continue;
    }
    edges.push_back({std::min(a, b), std::max(a, b)});
  }
  if (labels.empty()) throw ParseError("edge list is empty");

  const std::size_t before = edges.size();
  const std::size_t n = labels.size();
  Graph g(n, std::move(edges), std::move(labels));
  local.duplicates = before - g.n_edges();
  if (local.self_loops > 0)
    detail::warn("dropped " + std::to_string(local.self_loops) + " self-loop(s)");
  if (stats) *stats = local;
  return g;
}

inline Graph parse_edge_list(const std::string& text, EdgeListStats* stats = nullptr) {
  std::istringstream in(text);
  return load_edge_list(in, stats);
}

inline void write_edge_list(std::ostream& out, const Graph& g) {
  for (const auto& e : g.edges()) out << g.label(e.u) << ' ' << g.label(e.v) << '\n';
}

/// Row-major N x N 0/1 matrix; the literal adjacency used by the naive
/// evaluators. Memory is N^2 bytes.
class DenseAdjacency {
public:
  DenseAdjacency() = default;
  explicit DenseAdjacency(std::size_t n) : n_(n), a_(n * n, 0) {}

  explicit DenseAdjacency(const Graph& g) : DenseAdjacency(g.n_nodes()) {
    for (const auto& e : g.edges()) set(e.u, e.v);
  }

  std::size_t n_nodes() const noexcept { return n_; }
  bool operator()(std::size_t m, std::size_t l) const noexcept {
    return a_[m * n_ + l] != 0;
  }
  void set(std::size_t m, std::size_t l) noexcept {
    a_[m * n_ + l] = 1;
    a_[l * n_ + m] = 1;
  }
  std::span<const std::uint8_t> row(std::size_t m) const noexcept {
    return {a_.data() + m * n_, n_};
  }

private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> a_;
};

}  // namespace commsim
