#pragma once
// Independent reference computations shared by the tests. Everything here is
// written directly from the model definitions, without going through the
// library's fast paths.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "commsim/graph.hpp"

namespace oracle {

using cplx = std::complex<double>;

inline std::vector<double> uniform(std::size_t n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

inline std::vector<double> phases(std::size_t n, std::uint64_t seed) {
  return uniform(n, -std::numbers::pi, std::numbers::pi, seed);
}

/// Erdos-Renyi graph.
inline commsim::Graph random_graph(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<commsim::Edge> e;
  for (commsim::NodeId u = 0; u < n; ++u)
    for (commsim::NodeId v = u + 1; v < n; ++v)
      if (coin(rng)) e.push_back({u, v});
  return commsim::Graph(n, std::move(e));
}

inline std::vector<std::vector<int>> adjacency(const commsim::Graph& g) {
  const auto n = g.n_nodes();
  std::vector<std::vector<int>> a(n, std::vector<int>(n, 0));
  for (const auto& e : g.edges()) a[e.u][e.v] = a[e.v][e.u] = 1;
  return a;
}

/// (1/N) sum_l a_ml g(x_l, x_m) + f(m, x_m)
template <class G, class F>
std::vector<double> network_rhs(const commsim::Graph& graph, const std::vector<double>& x, G g, F f) {
  const auto a = adjacency(graph);
  const std::size_t n = x.size();
  std::vector<double> out(n);
  for (std::size_t m = 0; m < n; ++m) {
    double s = 0;
    for (std::size_t l = 0; l < n; ++l)
      if (a[m][l]) s += g(x[l], x[m]);
    out[m] = s / static_cast<double>(n) + f(m, x[m]);
  }
  return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace oracle
