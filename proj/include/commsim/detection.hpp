#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "commsim/error.hpp"
#include "commsim/graph.hpp"
#include "commsim/partition.hpp"

namespace commsim {

/// Null model p_{ml} of the Potts Hamiltonian.
enum class NullModel {
  uniform,  // p = |E| / (N (N - 1))
  degree,   // p = k_m k_l / (2 |E|)
};

/// Potts-model partition quality
///   H = - sum_{m != l} (a_{ml} - gamma p_{ml}) delta(sigma_m, sigma_l)
/// over ordered pairs. Pool nodes count as singletons.
inline double rb_hamiltonian(const Graph& g, const Partition& p, double gamma,
                             NullModel null_model = NullModel::uniform) {
  if (g.n_nodes() != p.n_nodes()) throw DomainError("hamiltonian: size mismatch");
  const double n = static_cast<double>(g.n_nodes());
  const double e = static_cast<double>(g.n_edges());
  if (null_model == NullModel::degree && g.n_edges() == 0)
    throw DomainError("hamiltonian: degree null model needs at least one edge");

  double intra = 0;
  for (const auto& ed : g.edges()) {
    auto c = p.community_of(ed.u);
    if (c != kNoCommunity && c == p.community_of(ed.v)) intra += 2;
  }

  double expected = 0;
  for (std::size_t c = 0; c < p.n_communities(); ++c) {
    auto members = p.members(c);
    if (null_model == NullModel::uniform) {
      double s = static_cast<double>(members.size());
      double prob = n > 1 ? e / (n * (n - 1)) : 0.0;
      expected += s * (s - 1) * prob;
    } else {
      double sum = 0, sq = 0;
      for (auto m : members) {
        double k = static_cast<double>(g.degree(m));
        sum += k;
        sq += k * k;
      }
      expected += (sum * sum - sq) / (2 * e);
    }
  }
  return -(intra - gamma * expected);
}

struct DetectionOptions {
  double gamma = 1.0;
  std::size_t min_size = 2;
  std::uint64_t seed = 0;
  std::size_t max_sweeps = 100;
  NullModel null_model = NullModel::uniform;
};

/// Greedy single-node-move descent on the Potts Hamiltonian.
///
/// Starts from singletons and visits nodes in a seeded shuffled order (drawn
/// once). Each node moves to the neighboring community, or to a fresh one,
/// that lowers H the most; ties keep the current assignment. Sweeps repeat
/// until nothing moves or `max_sweeps` is hit, then any community pair whose
/// union lowers H is merged and the sweeps resume. Communities smaller than
/// `min_size` are then dissolved into the unassigned pool.
///
/// If `history` is given it receives H after every sweep (before
/// dissolution), starting with the singleton partition.
inline Partition detect_communities(const Graph& g, const DetectionOptions& opt = {},
                                    std::vector<double>* history = nullptr) {
  const std::size_t n = g.n_nodes();
  if (n == 0) throw DomainError("detect: empty graph");
  if (opt.null_model == NullModel::degree && g.n_edges() == 0)
    throw DomainError("detect: degree null model needs at least one edge");

  const double edges = static_cast<double>(g.n_edges());
  const double two_e = 2 * edges;
  const double p_uniform =
      n > 1 ? edges / (static_cast<double>(n) * static_cast<double>(n - 1)) : 0.0;
  const bool uniform = opt.null_model == NullModel::uniform;

  std::vector<std::int32_t> comm(n);
  std::iota(comm.begin(), comm.end(), 0);
  std::vector<double> size(n, 1.0);
  std::vector<double> degsum(n);
  for (NodeId m = 0; m < n; ++m) degsum[m] = static_cast<double>(g.degree(m));
  std::vector<std::int32_t> empty_ids;

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(opt.seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> links(n, 0.0);
  std::vector<std::int32_t> touched;

  auto current_h = [&] {
    return rb_hamiltonian(g, Partition::from_assignment(comm), opt.gamma, opt.null_model);
  };
  if (history) history->push_back(current_h());

  std::size_t sweeps_left = opt.max_sweeps;
  auto run_sweeps = [&] {
    while (sweeps_left > 0) {
      --sweeps_left;
      std::size_t moves = 0;
      for (NodeId m : order) {
        const double k = static_cast<double>(g.degree(m));
        const auto cur = comm[m];
        touched.clear();
        for (auto nb : g.neighbors(m)) {
          auto c = comm[nb];
          if (links[static_cast<std::size_t>(c)] == 0.0) touched.push_back(c);
          links[static_cast<std::size_t>(c)] += 1.0;
        }
        size[static_cast<std::size_t>(cur)] -= 1.0;
        degsum[static_cast<std::size_t>(cur)] -= k;

        // benefit of joining c: links to c minus gamma times expected links
        auto benefit = [&](std::int32_t c) {
          auto ci = static_cast<std::size_t>(c);
          double expected = uniform ? p_uniform * size[ci] : k * degsum[ci] / two_e;
          return links[ci] - opt.gamma * expected;
        };

        std::int32_t best = cur;
        double best_benefit = benefit(cur);
        for (auto c : touched) {
          double b = benefit(c);
          if (b > best_benefit + 1e-12) {
            best = c;
            best_benefit = b;
          }
        }
        if (best_benefit < -1e-12 && size[static_cast<std::size_t>(cur)] > 0) {
          // leaving for a fresh singleton has benefit 0
          best = empty_ids.empty() ? -1 : empty_ids.back();
          best_benefit = 0.0;
        }
        if (best == -1) best = cur;  // no free id; staying is the only option

        for (auto c : touched) links[static_cast<std::size_t>(c)] = 0.0;

        if (best != cur) {
          if (!empty_ids.empty() && best == empty_ids.back()) empty_ids.pop_back();
          ++moves;
          if (size[static_cast<std::size_t>(cur)] == 0.0) empty_ids.push_back(cur);
        }
        comm[m] = best;
        size[static_cast<std::size_t>(best)] += 1.0;
        degsum[static_cast<std::size_t>(best)] += k;
      }
      if (history) history->push_back(current_h());
      if (moves == 0) break;
    }
  };

  // Node moves cannot join two communities that are each locally stable, so
  // alternate with rounds that merge community pairs whenever that lowers H.
  auto merge_round = [&] {
    std::map<std::pair<std::int32_t, std::int32_t>, double> between;
    for (const auto& e : g.edges()) {
      auto a = comm[e.u], b = comm[e.v];
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      between[{a, b}] += 1.0;
    }
    std::vector<std::pair<double, std::pair<std::int32_t, std::int32_t>>> gains;
    for (const auto& [ab, links_ab] : between) {
      auto a = static_cast<std::size_t>(ab.first), b = static_cast<std::size_t>(ab.second);
      double expected = uniform ? p_uniform * size[a] * size[b] : degsum[a] * degsum[b] / two_e;
      double gain = links_ab - opt.gamma * expected;
      if (gain > 1e-12) gains.push_back({gain, ab});
    }
    std::stable_sort(gains.begin(), gains.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    std::vector<bool> merged(n, false);
    std::vector<std::int32_t> target(n);
    std::iota(target.begin(), target.end(), 0);
    std::size_t count = 0;
    for (const auto& [gain, ab] : gains) {
      auto a = static_cast<std::size_t>(ab.first), b = static_cast<std::size_t>(ab.second);
      if (merged[a] || merged[b]) continue;
      merged[a] = merged[b] = true;
      target[b] = ab.first;
      size[a] += size[b];
      degsum[a] += degsum[b];
      size[b] = 0;
      degsum[b] = 0;
      empty_ids.push_back(ab.second);
      ++count;
    }
    for (auto& c : comm) c = target[static_cast<std::size_t>(c)];
    if (count > 0 && history) history->push_back(current_h());
    return count > 0;
  };

  for (;;) {
    run_sweeps();
    if (!merge_round()) break;
  }

  std::vector<std::size_t> counts(n, 0);
  for (auto c : comm) ++counts[static_cast<std::size_t>(c)];
  for (auto& c : comm)
    if (counts[static_cast<std::size_t>(c)] < opt.min_size) c = kNoCommunity;
  return Partition::from_assignment(std::move(comm));
}

/// Fraction of nodes whose detected community matches the reference after
/// pairing communities greedily by largest overlap. Pool nodes never match.
inline double label_agreement(const Partition& truth, const Partition& found) {
  if (truth.n_nodes() != found.n_nodes()) throw DomainError("label agreement: size mismatch");
  const std::size_t n = truth.n_nodes();
  if (n == 0) return 1.0;
  const std::size_t a = truth.n_communities(), b = found.n_communities();
  std::vector<std::size_t> overlap(a * b, 0);
  for (NodeId m = 0; m < n; ++m) {
    auto ct = truth.community_of(m), cf = found.community_of(m);
    if (ct != kNoCommunity && cf != kNoCommunity)
      ++overlap[static_cast<std::size_t>(ct) * b + static_cast<std::size_t>(cf)];
  }
  std::vector<std::size_t> cells(a * b);
  std::iota(cells.begin(), cells.end(), 0);
  std::stable_sort(cells.begin(), cells.end(),
                   [&](std::size_t x, std::size_t y) { return overlap[x] > overlap[y]; });
  std::vector<bool> used_t(a, false), used_f(b, false);
  std::size_t matched = 0;
  for (auto cell : cells) {
    const std::size_t i = cell / b, j = cell % b;
    if (overlap[cell] == 0) break;
    if (used_t[i] || used_f[j]) continue;
    used_t[i] = used_f[j] = true;
    matched += overlap[cell];
  }
  return static_cast<double>(matched) / static_cast<double>(n);
}

}  // namespace commsim
