#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <ostream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "commsim/decomposition.hpp"
#include "commsim/error.hpp"
#include "commsim/expansion.hpp"
#include "commsim/observables.hpp"

namespace commsim {

/// Buffers reused across right-hand-side evaluations.
struct RhsWorkspace {
  std::vector<double> x;   // state in position order, node-major
  std::vector<double> dx;  // derivative in position order
  std::vector<double> column;
  std::vector<double> column_out;
  std::vector<cplx> r;
  std::vector<cplx> t;
  std::vector<double> w;
  std::vector<double> pos, vel;
  std::vector<cplx> axis, prod;
  KernelCounter counter;
};

namespace detail {

inline std::string fmt(double v) { return fmt_point(v); }

/// Differences inside one block must stay within [-L, L] for a
/// non-periodic difference expansion to be valid.
inline void check_spread(std::span<const double> xs, double L, std::size_t first_pos,
                         const Partition* part) {
  if (xs.empty()) return;
  auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (*hi - *lo > L) {
    auto pos = first_pos + static_cast<std::size_t>(hi - xs.begin());
    auto node = part ? part->node_at(pos) : static_cast<NodeId>(pos);
    throw DomainError("state of node " + std::to_string(node) + " (" + fmt(*hi) +
                      ") differs from a community peer by " + fmt(*hi - *lo) +
                      ", outside the expansion half width " + fmt(L));
  }
}

inline void check_bounds(std::span<const double> xs, double lo, double hi,
                         std::size_t first_pos, const Partition* part) {
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (xs[i] < lo || xs[i] > hi) {
      auto node = part ? part->node_at(first_pos + i) : static_cast<NodeId>(first_pos + i);
      throw DomainError("state of node " + std::to_string(node) + " = " + fmt(xs[i]) +
                        " lies outside the expansion domain [" + fmt(lo) + ", " + fmt(hi) + "]");
    }
}

}  // namespace detail

/// Adds the dense all-to-all block contribution (1/norm) sum_l h(x_l - x_m)
/// of a Fourier difference series to `out`, for every m in the block.
inline void dense_block_fourier_diff(const Expansion& e, std::span<const double> xs,
                                     std::span<double> out, double norm, RhsWorkspace& ws) {
  const int p = e.order;
  const double L = e.half_width;
  const double w = std::numbers::pi / L;
  const auto q = static_cast<std::size_t>(2 * p + 1);
  const auto pp = static_cast<std::size_t>(p);
  ws.r.resize(q);
  complex_order_params(xs, p, L, norm, ws.r);
  ws.counter.add(2 * xs.size());

  if (e.kind == ExpansionKind::complex_fourier_diff) {
    ws.t.resize(q);
    for (std::size_t a = 0; a < q; ++a) ws.t[a] = e.coeffs[a] * ws.r[a];
    for (std::size_t m = 0; m < xs.size(); ++m) {
      const cplx zinv = std::polar(1.0, -w * xs[m]);
      cplx acc = ws.t[pp];
      cplx zn = 1.0;
      for (std::size_t a = 1; a <= pp; ++a) {
        zn *= zinv;  // exp(-i a w x)
        acc += ws.t[pp + a] * zn + ws.t[pp - a] * std::conj(zn);
      }
      out[m] += detail::checked_real(acc);
    }
    return;
  }
  if (e.kind != ExpansionKind::real_fourier_diff)
    throw DomainError("dense_block_fourier_diff: wrong expansion kind " + to_string(e.kind));
  // d0cos r0cos + sum_a [dsin (rsin cos - rcos sin) + dcos (rsin sin + rcos cos)]
  for (std::size_t m = 0; m < xs.size(); ++m) {
    const cplx z = std::polar(1.0, w * xs[m]);
    double acc = e.dcos(0) * ws.r[pp].real();
    cplx zn = 1.0;
    for (int a = 1; a <= p; ++a) {
      zn *= z;
      const double c = zn.real(), s = zn.imag();
      const double rc = ws.r[pp + static_cast<std::size_t>(a)].real();
      const double rs = ws.r[pp + static_cast<std::size_t>(a)].imag();
      acc += e.dsin(a) * (rs * c - rc * s) + e.dcos(a) * (rs * s + rc * c);
    }
    out[m] += acc;
  }
}

/// Dense block contribution (1/norm) sum_l g(x_l, x_m) of a two-argument
/// Fourier series.
inline void dense_block_fourier_2d(const Expansion& e, std::span<const double> xs,
                                   std::span<double> out, double norm, RhsWorkspace& ws) {
  const int p = e.order;
  const double w = std::numbers::pi / e.half_width;
  const auto q = static_cast<std::size_t>(2 * p + 1);
  const auto pp = static_cast<std::size_t>(p);
  ws.r.resize(q);
  complex_order_params(xs, p, e.half_width, norm, ws.r);
  ws.counter.add(2 * xs.size());
  ws.t.assign(q, 0.0);

  if (e.kind == ExpansionKind::complex_fourier_2d) {
    // t_b = sum_a c_{a,b} r_a
    for (int a = -p; a <= p; ++a)
      for (int b = -p; b <= p; ++b)
        ws.t[static_cast<std::size_t>(b + p)] += e.at(a, b) * ws.r[static_cast<std::size_t>(a + p)];
    for (std::size_t m = 0; m < xs.size(); ++m) {
      const cplx z = std::polar(1.0, w * xs[m]);
      cplx acc = ws.t[pp];
      cplx zn = 1.0;
      for (std::size_t b = 1; b <= pp; ++b) {
        zn *= z;
        acc += ws.t[pp + b] * zn + ws.t[pp - b] * std::conj(zn);
      }
      out[m] += detail::checked_real(acc);
    }
    return;
  }
  if (e.kind != ExpansionKind::real_fourier_2d)
    throw DomainError("dense_block_fourier_2d: wrong expansion kind " + to_string(e.kind));
  // signed observable: a >= 0 -> r^cos_a, a < 0 -> r^sin_|a|
  for (int a = -p; a <= p; ++a) {
    const cplx ra = ws.r[pp + static_cast<std::size_t>(std::abs(a))];
    const double o = a >= 0 ? ra.real() : ra.imag();
    for (int b = -p; b <= p; ++b)
      ws.t[static_cast<std::size_t>(b + p)] += e.at(a, b).real() * o;
  }
  for (std::size_t m = 0; m < xs.size(); ++m) {
    const cplx z = std::polar(1.0, w * xs[m]);
    double acc = ws.t[pp].real();
    cplx zn = 1.0;
    for (std::size_t b = 1; b <= pp; ++b) {
      zn *= z;
      acc += ws.t[pp + b].real() * zn.real() + ws.t[pp - b].real() * zn.imag();
    }
    out[m] += acc;
  }
}

/// Dense block contribution of a polynomial series, from moments.
///  poly_diff: sum_a c_a sum_k C(a,k) w_k (-(x_m + x0))^(a-k), w_k raw moments
///  poly_2d:   sum_{a,b} c_{a,b} w_a (x_m - x0)^b, w_a moments about x0
inline void dense_block_poly(const Expansion& e, std::span<const double> xs,
                             std::span<double> out, double norm, RhsWorkspace& ws) {
  const int p = e.order;
  const auto s = static_cast<std::size_t>(p + 1);
  ws.w.resize(s);
  ws.counter.add(2 * xs.size());
  if (e.kind == ExpansionKind::poly_diff) {
    moments(xs, p, norm, 0.0, ws.w);
    // binomial table row by row
    std::vector<double> binom(s * s, 0.0);
    for (std::size_t a = 0; a < s; ++a) {
      binom[a * s] = 1.0;
      for (std::size_t k = 1; k <= a; ++k)
        binom[a * s + k] = binom[(a - 1) * s + k - 1] + (k < a ? binom[(a - 1) * s + k] : 0.0);
    }
    std::vector<double> powers(s);
    for (std::size_t m = 0; m < xs.size(); ++m) {
      const double y = -(xs[m] + e.shift);
      powers[0] = 1.0;
      for (std::size_t j = 1; j < s; ++j) powers[j] = powers[j - 1] * y;
      double acc = 0;
      for (std::size_t a = 0; a < s; ++a) {
        const double c = e.coeffs[a].real();
        if (c == 0.0) continue;
        double inner = 0;
        for (std::size_t k = 0; k <= a; ++k) inner += binom[a * s + k] * ws.w[k] * powers[a - k];
        acc += c * inner;
      }
      out[m] += acc;
    }
    return;
  }
  if (e.kind != ExpansionKind::poly_2d)
    throw DomainError("dense_block_poly: wrong expansion kind " + to_string(e.kind));
  moments(xs, p, norm, e.shift, ws.w);
  std::vector<double> tb(s, 0.0);
  for (int a = 0; a <= p; ++a)
    for (int b = 0; b <= p; ++b)
      tb[static_cast<std::size_t>(b)] += e.at(a, b).real() * ws.w[static_cast<std::size_t>(a)];
  for (std::size_t m = 0; m < xs.size(); ++m) {
    double acc = 0;
    for (std::size_t b = s; b-- > 0;) acc = acc * (xs[m] - e.shift) + tb[b];
    out[m] += acc;
  }
}

/// Dispatch on the expansion kind for scalar blocks.
inline void dense_block(const Expansion& e, std::span<const double> xs, std::span<double> out,
                        double norm, RhsWorkspace& ws) {
  switch (e.kind) {
    case ExpansionKind::complex_fourier_diff:
    case ExpansionKind::real_fourier_diff:
      dense_block_fourier_diff(e, xs, out, norm, ws);
      break;
    case ExpansionKind::complex_fourier_2d:
    case ExpansionKind::real_fourier_2d:
      dense_block_fourier_2d(e, xs, out, norm, ws);
      break;
    case ExpansionKind::poly_diff:
    case ExpansionKind::poly_2d:
      dense_block_poly(e, xs, out, norm, ws);
      break;
    case ExpansionKind::cs_radial:
      throw DomainError("dense_block: cs_radial needs position/velocity state");
  }
}

/// Flocking velocity contribution for one block:
///   v_m' += sum_a c_a exp(-i pi <a, s_m> / L) (h_a - u_a v_m)
/// `pos` and `vel` hold `dim` components per bird; `out` receives the
/// velocity derivative with the same layout.
inline void dense_block_flocking(const Expansion& e, std::span<const double> pos,
                                 std::span<const double> vel, std::span<double> out,
                                 double norm, RhsWorkspace& ws) {
  const auto n = static_cast<std::size_t>(e.dim);
  const int p = e.order;
  auto obs = cs_observables(pos, vel, e.dim, p, e.half_width, norm);
  const std::size_t birds = pos.size() / n;
  ws.counter.add(2 * birds);
  const auto q = static_cast<std::size_t>(2 * p + 1);
  const std::size_t total = e.coeffs.size();
  ws.axis.resize(n * q);
  ws.prod.resize(total);
  std::vector<cplx> acc(n);
  for (std::size_t m = 0; m < birds; ++m) {
    detail::multi_phase(pos.subspan(m * n, n), p, e.half_width, ws.axis, ws.prod, -1.0);
    std::fill(acc.begin(), acc.end(), cplx{});
    const double* v = &vel[m * n];
    for (std::size_t idx = 0; idx < total; ++idx) {
      const cplx k = e.coeffs[idx] * ws.prod[idx];
      for (std::size_t d = 0; d < n; ++d) acc[d] += k * (obs.h[idx * n + d] - obs.u[idx] * v[d]);
    }
    for (std::size_t d = 0; d < n; ++d) out[m * n + d] += detail::checked_real(acc[d]);
  }
}

/// Adds (1/norm) sum_l s_{ml} g(x_l, x_m) over the stored corrections and
/// subtracts the implicit diagonal term (1/norm) g(x_m, x_m) of every
/// community member. `x` and `out` are in position order with `dim`
/// components per node; `coupling(xl, xm, out, weight)` must add
/// weight * g(xl, xm) to `out`.
template <class Coupling>
void add_sparse_correction(const Decomposition& d, std::span<const double> x,
                           std::span<double> out, std::size_t dim, double norm,
                           Coupling&& coupling, KernelCounter& counter) {
  const double inv = 1.0 / norm;
  for (const auto& e : d.correction().entries()) {
    const double wgt = e.sign * inv;
    auto xr = x.subspan(e.row * dim, dim);
    auto xc = x.subspan(e.col * dim, dim);
    coupling(xc, xr, out.subspan(e.row * dim, dim), wgt);
    coupling(xr, xc, out.subspan(e.col * dim, dim), wgt);
  }
  counter.add(d.correction().nnz());
  const std::size_t members = d.diagonal_count();
  for (std::size_t i = 0; i < members; ++i) {
    auto xi = x.subspan(i * dim, dim);
    coupling(xi, xi, out.subspan(i * dim, dim), -inv);
  }
  counter.add(members);
}

// ---------------------------------------------------------------------------
// Whole-vector operations in original node order (scalar states).

namespace detail {

inline void gather(const Partition& p, std::span<const double> x, std::size_t dim,
                   std::vector<double>& out) {
  out.resize(x.size());
  for (std::size_t i = 0; i < p.n_nodes(); ++i)
    std::copy_n(&x[p.node_at(i) * dim], dim, &out[i * dim]);
}

inline void scatter(const Partition& p, std::span<const double> xp, std::size_t dim,
                    std::span<double> out) {
  for (std::size_t i = 0; i < p.n_nodes(); ++i)
    std::copy_n(&xp[i * dim], dim, &out[p.node_at(i) * dim]);
}

template <class Block>
std::vector<double> dense_over_blocks(const Decomposition& d, std::span<const double> state,
                                      Block&& block) {
  const auto& p = d.partition();
  if (state.size() != p.n_nodes()) throw DomainError("dense rhs: state size mismatch");
  RhsWorkspace ws;
  gather(p, state, 1, ws.x);
  ws.dx.assign(ws.x.size(), 0.0);
  const double norm = static_cast<double>(p.n_nodes());
  for (std::size_t c = 0; c < p.n_communities(); ++c) {
    std::span<const double> xs(&ws.x[p.start(c)], p.size(c));
    std::span<double> out(&ws.dx[p.start(c)], p.size(c));
    block(c, xs, out, norm, ws);
  }
  std::vector<double> result(state.size());
  scatter(p, ws.dx, 1, result);
  return result;
}

}  // namespace detail

/// Dense part H^dense for a Fourier difference expansion. With
/// `check_domain`, every block must satisfy max - min <= L.
inline std::vector<double> dense_rhs_fourier_diff(const Decomposition& d, const Expansion& e,
                                                  std::span<const double> state,
                                                  bool check_domain = false) {
  return detail::dense_over_blocks(d, state, [&](std::size_t c, auto xs, auto out, double norm,
                                                 RhsWorkspace& ws) {
    if (check_domain) detail::check_spread(xs, e.half_width, d.partition().start(c), &d.partition());
    dense_block_fourier_diff(e, xs, out, norm, ws);
  });
}

/// Dense part for a two-argument Fourier expansion; with `check_domain`
/// states must lie in [-L, L].
inline std::vector<double> dense_rhs_fourier_2d(const Decomposition& d, const Expansion& e,
                                                std::span<const double> state,
                                                bool check_domain = false) {
  return detail::dense_over_blocks(d, state, [&](std::size_t c, auto xs, auto out, double norm,
                                                 RhsWorkspace& ws) {
    if (check_domain)
      detail::check_bounds(xs, -e.half_width, e.half_width, d.partition().start(c),
                           &d.partition());
    dense_block_fourier_2d(e, xs, out, norm, ws);
  });
}

inline std::vector<double> dense_rhs_poly(const Decomposition& d, const Expansion& e,
                                          std::span<const double> state) {
  return detail::dense_over_blocks(
      d, state, [&](std::size_t, auto xs, auto out, double norm, RhsWorkspace& ws) {
        dense_block_poly(e, xs, out, norm, ws);
      });
}

/// H^sparse for scalar states: f(node, x_m) + (1/N) sum_l s_{ml} g(x_l, x_m),
/// diagonal corrections included. Uses the exact coupling.
template <class G, class F>
std::vector<double> sparse_rhs(const Decomposition& d, G&& g, std::span<const double> state,
                               F&& f, KernelCounter* counter = nullptr) {
  const auto& p = d.partition();
  if (state.size() != p.n_nodes()) throw DomainError("sparse rhs: state size mismatch");
  std::vector<double> x, dx(state.size(), 0.0);
  detail::gather(p, state, 1, x);
  KernelCounter local;
  add_sparse_correction(
      d, x, dx, 1, static_cast<double>(p.n_nodes()),
      [&](std::span<const double> xl, std::span<const double> xm, std::span<double> o,
          double wgt) { o[0] += wgt * g(xl[0], xm[0]); },
      counter ? *counter : local);
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += f(p.node_at(i), x[i]);
  std::vector<double> result(state.size());
  detail::scatter(p, dx, 1, result);
  return result;
}

// ---------------------------------------------------------------------------
// Couplings beyond block structure.

/// Rank-one coupling (1/N) sum_l alpha_m beta_l exp(i pi (x_l - x_m) / L),
/// evaluated as alpha_m r exp(-i pi x_m / L) with r = (1/N) sum beta_l exp(i pi x_l / L).
inline std::vector<cplx> rank_one_rhs(std::span<const double> alpha,
                                      std::span<const double> beta,
                                      std::span<const double> state,
                                      double L = std::numbers::pi,
                                      KernelCounter* counter = nullptr) {
  const std::size_t n = state.size();
  if (alpha.size() != n || beta.size() != n)
    throw DomainError("rank-one rhs: vector sizes do not match the state");
  const double w = std::numbers::pi / L;
  std::vector<cplx> z(n);
  cplx r = 0;
  for (std::size_t l = 0; l < n; ++l) {
    z[l] = std::polar(1.0, w * state[l]);
    r += beta[l] * z[l];
  }
  r /= static_cast<double>(n);
  std::vector<cplx> out(n);
  for (std::size_t m = 0; m < n; ++m) out[m] = alpha[m] * r * std::conj(z[m]);
  if (counter) counter->add(n);
  return out;
}

/// Ring coupling (1/N) sum_{l = m-k}^{m+k} exp(i (x_l - x_m)), indices mod N,
/// via the sliding-window recurrence F_{m+1} = F_m - (e_{m-k} - e_{m+k+1}) / N.
/// A window covering the whole ring (2k + 1 >= N) is all-to-all. The running
/// sum is recomputed directly every `reanchor` steps.
inline std::vector<cplx> nearest_neighbor_rhs(std::size_t k, std::span<const double> state,
                                              KernelCounter* counter = nullptr,
                                              std::size_t reanchor = 1024) {
  const std::size_t n = state.size();
  if (n == 0) return {};
  if (k < 1) throw DomainError("nearest-neighbor rhs: k must be at least 1");
  std::vector<cplx> z(n);
  for (std::size_t l = 0; l < n; ++l) z[l] = std::polar(1.0, state[l]);
  if (counter) counter->add(n);
  const double inv = 1.0 / static_cast<double>(n);
  std::vector<cplx> out(n);

  if (2 * k + 1 >= n) {
    cplx r = 0;
    for (const auto& v : z) r += v;
    r *= inv;
    for (std::size_t m = 0; m < n; ++m) out[m] = r * std::conj(z[m]);
    return out;
  }
  auto wrap = [n](std::ptrdiff_t i) {
    auto nn = static_cast<std::ptrdiff_t>(n);
    return static_cast<std::size_t>(((i % nn) + nn) % nn);
  };
  const auto kk = static_cast<std::ptrdiff_t>(k);
  auto direct = [&](std::size_t m) {
    cplx s = 0;
    for (std::ptrdiff_t l = static_cast<std::ptrdiff_t>(m) - kk;
         l <= static_cast<std::ptrdiff_t>(m) + kk; ++l)
      s += z[wrap(l)];
    return s * inv;
  };
  cplx f = direct(0);
  for (std::size_t m = 0; m < n; ++m) {
    if (m > 0) {
      if (reanchor > 0 && m % reanchor == 0) {
        f = direct(m);
      } else {
        auto mm = static_cast<std::ptrdiff_t>(m) - 1;
        f -= (z[wrap(mm - kk)] - z[wrap(mm + kk + 1)]) * inv;
      }
    }
    out[m] = f * std::conj(z[m]);
  }
  return out;
}

/// Debug dump `node,component,value` of a derivative in original order.
inline void write_derivative_csv(std::ostream& out, std::span<const double> dx, std::size_t dim = 1) {
  out << "node,component,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < dx.size(); ++i) out << i / dim << ',' << i % dim << ',' << dx[i] << '\n';
}

}  // namespace commsim
