#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "commsim/decomposition.hpp"
#include "commsim/error.hpp"
#include "commsim/evaluator.hpp"
#include "commsim/expansion.hpp"
#include "commsim/graph.hpp"
#include "commsim/observables.hpp"

namespace commsim {

/// theta_m' = omega_m + (1/N) sum_l a_ml sin(theta_l - theta_m)
struct Kuramoto {
  std::vector<double> omega;  // empty means all zero
};

/// Coupling h(x) = d0cos + sum_a dcos_a cos(a x) + dsin_a sin(a x).
/// `expansion` is the exact real Fourier difference series of h on [-pi, pi).
struct HigherHarmonicsKuramoto {
  std::vector<double> omega;
  Expansion expansion;
};

/// x_m' = -V'(x_m) + (1/N) sum_l a_ml (x_l - x_m)
struct DesaiZwanzig {
  std::function<double(double)> vprime = [](double x) { return x * x * x - x; };
};

/// Flocking with state (s_m, v_m) in R^{2n}, stored as n positions then n
/// velocities per bird. Velocity coupling eta(|s_l - s_m|)(v_l - v_m).
/// Within a community, per-axis position spread must not exceed
/// `valid_half_width`, the box on which the expansion error was measured.
struct CuckerSmale {
  FlockingKernel kernel;
  int dim = 2;
  Expansion expansion;
  double valid_half_width = 0;
};

/// theta_m' = (1/lambda_c^3) sum_{j,k,l in c} sin(l1 th_j + l2 th_k + l3 th_l + l4 th_m)
/// for m in community c; unassigned nodes are at rest.
struct HigherOrderKuramoto {
  std::array<int, 4> lambda{1, 1, -1, -1};
};

/// theta_m' = (1/N) sum_l alpha_m beta_l sin(theta_l - theta_m), graph ignored.
struct RankOneKuramoto {
  std::vector<double> alpha, beta;
};

/// Ring: theta_m' = (1/N) sum_{|l - m| <= k mod N} sin(theta_l - theta_m), graph ignored.
struct RingKuramoto {
  std::size_t k = 1;
};

/// Any model with per-node intrinsic dynamics and a scalar coupling applied
/// componentwise: x_m' = f(m, x_m) + (1/N) sum_l a_ml g(x_l[i], x_m[i]) for
/// every coupled component i. `expansion` approximates g (or h for the
/// difference kinds, with g(x, y) = h(x - y)).
struct GenericModel {
  std::size_t dim = 1;
  std::function<void(std::size_t, std::span<const double>, std::span<double>)> intrinsic;
  std::function<double(double, double)> coupling;
  Expansion expansion;
  std::vector<bool> coupled;  // empty: every component
  bool periodic = false;      // states live on a circle of length 2L
};

using ModelSpec = std::variant<Kuramoto, HigherHarmonicsKuramoto, DesaiZwanzig, CuckerSmale,
                               HigherOrderKuramoto, RankOneKuramoto, RingKuramoto, GenericModel>;

inline std::string model_name(const ModelSpec& m) {
  static const char* names[] = {"kuramoto",     "higher_harmonics", "desai_zwanzig",
                                "cucker_smale", "higher_order",     "rank_one",
                                "ring",         "generic"};
  return names[m.index()];
}

inline std::size_t state_dim(const ModelSpec& m) {
  return std::visit(
      [](const auto& x) -> std::size_t {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, CuckerSmale>) return 2 * static_cast<std::size_t>(x.dim);
        else if constexpr (std::is_same_v<T, GenericModel>) return x.dim;
        else return 1;
      },
      m);
}

inline bool is_circular(const ModelSpec& m) {
  if (auto* g = std::get_if<GenericModel>(&m)) return g->periodic;
  return !std::holds_alternative<DesaiZwanzig>(m) && !std::holds_alternative<CuckerSmale>(m);
}

/// Maps angles to (-pi, pi].
inline double wrap_phase(double x) {
  constexpr double two_pi = 2 * std::numbers::pi;
  double y = std::remainder(x, two_pi);
  if (y <= -std::numbers::pi) y += two_pi;
  return y;
}

inline Expansion higher_harmonics_expansion(std::span<const double> dsin,
                                            std::span<const double> dcos) {
  // dsin[a-1] multiplies sin(a x), dcos[a] multiplies cos(a x)
  const int p = static_cast<int>(std::max(dsin.size(), dcos.size() ? dcos.size() - 1 : 0));
  Expansion e;
  e.kind = ExpansionKind::real_fourier_diff;
  e.order = p;
  e.half_width = std::numbers::pi;
  e.lo = -std::numbers::pi;
  e.hi = std::numbers::pi;
  e.coeffs.assign(e.expected_size(), 0.0);
  for (std::size_t a = 0; a < dcos.size(); ++a) e.at(static_cast<int>(a)) = dcos[a];
  for (std::size_t a = 0; a < dsin.size(); ++a) e.at(-static_cast<int>(a + 1)) = dsin[a];
  return e;
}

inline HigherHarmonicsKuramoto make_higher_harmonics(std::span<const double> dsin,
                                                     std::span<const double> dcos,
                                                     std::vector<double> omega = {}) {
  return {std::move(omega), higher_harmonics_expansion(dsin, dcos)};
}

/// Chooses the expansion order (doubling 1..64) so that the sup error of the
/// flocking kernel on the difference box [-D, D]^dim is at most `tol`, with
/// periodization half width L (default 2D).
inline CuckerSmale make_cucker_smale(FlockingKernel kernel, int dim, double valid_half_width,
                                     double tol, double L = 0, int* order = nullptr,
                                     double* achieved = nullptr) {
  if (dim < 1 || dim > 3) throw DomainError("cucker-smale: dimension must be 1, 2 or 3");
  if (!(valid_half_width > 0)) throw DomainError("cucker-smale: validity box must be positive");
  if (L == 0) L = 2 * valid_half_width;
  if (L < valid_half_width) throw DomainError("cucker-smale: L smaller than the validity box");
  auto eta = [kernel](std::span<const double> y) {
    double d2 = 0;
    for (double v : y) d2 += v * v;
    return kernel(d2);
  };
  // fewer check points in 3D to keep the search cheap
  const std::size_t pts = dim == 1 ? 401 : (dim == 2 ? 61 : 17);
  CuckerSmale cs;
  cs.kernel = kernel;
  cs.dim = dim;
  cs.valid_half_width = valid_half_width;
  cs.expansion = fit_auto_order([&](int p) { return fit_cs_radial(kernel, dim, p, L); }, eta,
                                tol, pts, Interval{-valid_half_width, valid_half_width},
                                achieved);
  if (order) *order = cs.expansion.order;
  return cs;
}

/// Sup error of the flocking expansion on [-D, D]^dim.
inline double cucker_smale_sup_error(const CuckerSmale& cs, std::size_t points = 0) {
  if (points == 0) points = cs.dim == 1 ? 401 : (cs.dim == 2 ? 61 : 17);
  auto eta = [k = cs.kernel](std::span<const double> y) {
    double d2 = 0;
    for (double v : y) d2 += v * v;
    return k(d2);
  };
  return expansion_sup_error(cs.expansion, eta, points,
                             Interval{-cs.valid_half_width, cs.valid_half_width});
}

namespace detail {

inline Expansion kuramoto_expansion() {
  const double one[] = {1.0};
  return higher_harmonics_expansion(one, {});
}

inline double frequency(const std::vector<double>& omega, std::size_t node) {
  return omega.empty() ? 0.0 : omega[node];
}

inline void check_frequencies(const std::vector<double>& omega, std::size_t n) {
  if (!omega.empty() && omega.size() != n)
    throw DomainError("frequency vector has " + std::to_string(omega.size()) +
                      " entries for " + std::to_string(n) + " nodes");
}

inline double h_of(const Expansion& e, double y) { return eval_expansion(e, y); }

inline double ho_term(const std::array<int, 4>& lam, double a, double b, double c, double m) {
  return std::sin(lam[0] * a + lam[1] * b + lam[2] * c + lam[3] * m);
}

inline void check_ho(const HigherOrderKuramoto& ho) {
  if (ho.lambda[0] + ho.lambda[1] + ho.lambda[2] + ho.lambda[3] != 0)
    warn("higher-order Kuramoto exponents do not sum to zero; dynamics are not phase-shift invariant");
}

/// Guard for generic scalar blocks.
inline void check_generic_block(const Expansion& e, std::span<const double> xs, std::size_t first,
                                const Partition& part) {
  switch (e.kind) {
    case ExpansionKind::complex_fourier_diff:
    case ExpansionKind::real_fourier_diff:
      check_spread(xs, e.half_width, first, &part);
      break;
    case ExpansionKind::poly_diff:
      check_spread(xs, std::min(-e.lo, e.hi), first, &part);
      break;
    case ExpansionKind::complex_fourier_2d:
    case ExpansionKind::real_fourier_2d:
      check_bounds(xs, -e.half_width, e.half_width, first, &part);
      break;
    case ExpansionKind::poly_2d:
      check_bounds(xs, e.lo, e.hi, first, &part);
      break;
    case ExpansionKind::cs_radial:
      break;
  }
}

}  // namespace detail

/// Community-integration right-hand side. `state` and `out` are in original
/// node order with state_dim(model) entries per node.
inline void eval_rhs_cia(const ModelSpec& model, const Decomposition& d,
                         std::span<const double> state, std::span<double> out, RhsWorkspace& ws) {
  const auto& part = d.partition();
  const std::size_t n = part.n_nodes();
  const std::size_t dim = state_dim(model);
  if (state.size() != n * dim || out.size() != n * dim)
    throw DomainError("rhs: state has " + std::to_string(state.size()) + " entries, expected " +
                      std::to_string(n * dim));
  const double norm = static_cast<double>(n);

  // graph-free couplings
  if (auto* r1 = std::get_if<RankOneKuramoto>(&model)) {
    auto z = rank_one_rhs(r1->alpha, r1->beta, state, std::numbers::pi, &ws.counter);
    for (std::size_t m = 0; m < n; ++m) out[m] = z[m].imag();
    return;
  }
  if (auto* ring = std::get_if<RingKuramoto>(&model)) {
    auto z = nearest_neighbor_rhs(ring->k, state, &ws.counter);
    for (std::size_t m = 0; m < n; ++m) out[m] = z[m].imag();
    return;
  }

  detail::gather(part, state, dim, ws.x);
  ws.dx.assign(ws.x.size(), 0.0);
  auto block_x = [&](std::size_t c) {
    return std::span<const double>(&ws.x[part.start(c)], part.size(c));
  };
  auto block_dx = [&](std::size_t c) { return std::span<double>(&ws.dx[part.start(c)], part.size(c)); };
  auto scalar = [](auto g) {
    return [g](std::span<const double> xl, std::span<const double> xm, std::span<double> o,
               double w) { o[0] += w * g(xl[0], xm[0]); };
  };

  std::visit(
      [&](const auto& mdl) {
        using T = std::decay_t<decltype(mdl)>;
        if constexpr (std::is_same_v<T, Kuramoto> || std::is_same_v<T, HigherHarmonicsKuramoto>) {
          detail::check_frequencies(mdl.omega, n);
          static const Expansion kur = detail::kuramoto_expansion();
          const Expansion* e = &kur;
          if constexpr (std::is_same_v<T, HigherHarmonicsKuramoto>) e = &mdl.expansion;
          for (std::size_t c = 0; c < part.n_communities(); ++c)
            dense_block_fourier_diff(*e, block_x(c), block_dx(c), norm, ws);
          if constexpr (std::is_same_v<T, Kuramoto>)
            add_sparse_correction(d, ws.x, ws.dx, 1, norm,
                                  scalar([](double a, double b) { return std::sin(a - b); }),
                                  ws.counter);
          else
            add_sparse_correction(d, ws.x, ws.dx, 1, norm,
                                  scalar([e](double a, double b) { return detail::h_of(*e, a - b); }),
                                  ws.counter);
          if (!mdl.omega.empty())
            for (std::size_t i = 0; i < n; ++i) ws.dx[i] += mdl.omega[part.node_at(i)];
        } else if constexpr (std::is_same_v<T, DesaiZwanzig>) {
          Expansion lin;
          lin.kind = ExpansionKind::poly_diff;
          lin.order = 1;
          lin.coeffs = {0.0, 1.0};
          for (std::size_t c = 0; c < part.n_communities(); ++c)
            dense_block_poly(lin, block_x(c), block_dx(c), norm, ws);
          add_sparse_correction(d, ws.x, ws.dx, 1, norm,
                                scalar([](double a, double b) { return a - b; }), ws.counter);
          for (std::size_t i = 0; i < n; ++i) ws.dx[i] -= mdl.vprime(ws.x[i]);
        } else if constexpr (std::is_same_v<T, CuckerSmale>) {
          const auto nd = static_cast<std::size_t>(mdl.dim);
          for (std::size_t c = 0; c < part.n_communities(); ++c) {
            const std::size_t lo = part.start(c), sz = part.size(c);
            ws.pos.resize(sz * nd);
            ws.vel.resize(sz * nd);
            for (std::size_t i = 0; i < sz; ++i)
              for (std::size_t k = 0; k < nd; ++k) {
                ws.pos[i * nd + k] = ws.x[(lo + i) * dim + k];
                ws.vel[i * nd + k] = ws.x[(lo + i) * dim + nd + k];
              }
            for (std::size_t k = 0; k < nd; ++k) {
              double mn = ws.pos[k], mx = ws.pos[k];
              std::size_t arg = 0;
              for (std::size_t i = 0; i < sz; ++i) {
                double v = ws.pos[i * nd + k];
                if (v < mn) mn = v;
                if (v > mx) { mx = v; arg = i; }
              }
              if (mx - mn > mdl.valid_half_width)
                throw DomainError("position of bird " + std::to_string(part.node_at(lo + arg)) +
                                  " along axis " + std::to_string(k) + " (" + detail::fmt(mx) +
                                  ") is " + detail::fmt(mx - mn) +
                                  " away from a community peer, beyond the validity box " +
                                  detail::fmt(mdl.valid_half_width));
            }
            std::vector<double> acc(sz * nd, 0.0);
            dense_block_flocking(mdl.expansion, ws.pos, ws.vel, acc, norm, ws);
            for (std::size_t i = 0; i < sz; ++i)
              for (std::size_t k = 0; k < nd; ++k) ws.dx[(lo + i) * dim + nd + k] += acc[i * nd + k];
          }
          auto kern = mdl.kernel;
          add_sparse_correction(
              d, ws.x, ws.dx, dim, norm,
              [kern, nd](std::span<const double> xl, std::span<const double> xm,
                         std::span<double> o, double w) {
                double d2 = 0;
                for (std::size_t k = 0; k < nd; ++k) d2 += (xl[k] - xm[k]) * (xl[k] - xm[k]);
                const double eta = w * kern(d2);
                for (std::size_t k = 0; k < nd; ++k) o[nd + k] += eta * (xl[nd + k] - xm[nd + k]);
              },
              ws.counter);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < nd; ++k) ws.dx[i * dim + k] += ws.x[i * dim + nd + k];
        } else if constexpr (std::is_same_v<T, HigherOrderKuramoto>) {
          detail::check_ho(mdl);
          int pmax = 0;
          for (int l : mdl.lambda) pmax = std::max(pmax, std::abs(l));
          ws.r.resize(static_cast<std::size_t>(2 * pmax + 1));
          for (std::size_t c = 0; c < part.n_communities(); ++c) {
            auto xs = block_x(c);
            auto o = block_dx(c);
            complex_order_params(xs, pmax, std::numbers::pi, static_cast<double>(xs.size()), ws.r);
            auto at = [&](int l) { return ws.r[static_cast<std::size_t>(pmax + l)]; };
            const cplx prod = at(mdl.lambda[0]) * at(mdl.lambda[1]) * at(mdl.lambda[2]);
            for (std::size_t i = 0; i < xs.size(); ++i)
              o[i] += (prod * std::polar(1.0, mdl.lambda[3] * xs[i])).imag();
            ws.counter.add(2 * xs.size());
          }
        } else if constexpr (std::is_same_v<T, GenericModel>) {
          if (!mdl.coupling) throw DomainError("generic model: missing coupling");
          const bool guard = !mdl.periodic;
          for (std::size_t k = 0; k < dim; ++k) {
            if (!mdl.coupled.empty() && !mdl.coupled[k]) continue;
            ws.column.resize(n);
            ws.column_out.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) ws.column[i] = ws.x[i * dim + k];
            for (std::size_t c = 0; c < part.n_communities(); ++c) {
              std::span<const double> xs(&ws.column[part.start(c)], part.size(c));
              std::span<double> o(&ws.column_out[part.start(c)], part.size(c));
              if (guard) detail::check_generic_block(mdl.expansion, xs, part.start(c), part);
              dense_block(mdl.expansion, xs, o, norm, ws);
            }
            add_sparse_correction(d, ws.column, ws.column_out, 1, norm, scalar(mdl.coupling),
                                  ws.counter);
            for (std::size_t i = 0; i < n; ++i) ws.dx[i * dim + k] += ws.column_out[i];
          }
          if (mdl.intrinsic) {
            std::vector<double> f(dim);
            for (std::size_t i = 0; i < n; ++i) {
              std::fill(f.begin(), f.end(), 0.0);
              mdl.intrinsic(part.node_at(i), std::span<const double>(&ws.x[i * dim], dim), f);
              for (std::size_t k = 0; k < dim; ++k) ws.dx[i * dim + k] += f[k];
            }
          }
        }
      },
      model);
  detail::scatter(part, ws.dx, dim, out);
}

inline std::vector<double> eval_rhs_cia(const ModelSpec& model, const Decomposition& d,
                                        std::span<const double> state,
                                        KernelCounter* counter = nullptr) {
  RhsWorkspace ws;
  std::vector<double> out(state.size());
  eval_rhs_cia(model, d, state, out, ws);
  if (counter) counter->add(ws.counter.evals);
  return out;
}

/// Literal double-loop evaluation on the adjacency matrix with the exact
/// coupling. The higher-order model needs the partition (its hyperedges are
/// all triples inside one community); with none given the whole network is
/// one community.
inline void eval_rhs_naive(const ModelSpec& model, const DenseAdjacency& a,
                           std::span<const double> state, std::span<double> out,
                           KernelCounter* counter = nullptr, const Partition* part = nullptr) {
  const std::size_t n = a.n_nodes();
  const std::size_t dim = state_dim(model);
  if (state.size() != n * dim || out.size() != n * dim)
    throw DomainError("rhs: state has " + std::to_string(state.size()) + " entries, expected " +
                      std::to_string(n * dim));
  const double inv = 1.0 / static_cast<double>(n);
  std::uint64_t evals = 0;

  auto pairwise = [&](auto g) {
    for (std::size_t m = 0; m < n; ++m) {
      auto row = a.row(m);
      double acc = 0;
      for (std::size_t l = 0; l < n; ++l)
        if (row[l]) {
          acc += g(state[l], state[m]);
          ++evals;
        }
      out[m] = acc * inv;
    }
  };

  std::visit(
      [&](const auto& mdl) {
        using T = std::decay_t<decltype(mdl)>;
        if constexpr (std::is_same_v<T, Kuramoto>) {
          detail::check_frequencies(mdl.omega, n);
          pairwise([](double xl, double xm) { return std::sin(xl - xm); });
          for (std::size_t m = 0; m < n; ++m) out[m] += detail::frequency(mdl.omega, m);
        } else if constexpr (std::is_same_v<T, HigherHarmonicsKuramoto>) {
          detail::check_frequencies(mdl.omega, n);
          const Expansion& e = mdl.expansion;
          const int p = e.order;
          pairwise([&](double xl, double xm) {
            const double y = xl - xm;
            double h = e.dcos(0);
            for (int k = 1; k <= p; ++k) h += e.dcos(k) * std::cos(k * y) + e.dsin(k) * std::sin(k * y);
            return h;
          });
          for (std::size_t m = 0; m < n; ++m) out[m] += detail::frequency(mdl.omega, m);
        } else if constexpr (std::is_same_v<T, DesaiZwanzig>) {
          pairwise([](double xl, double xm) { return xl - xm; });
          for (std::size_t m = 0; m < n; ++m) out[m] -= mdl.vprime(state[m]);
        } else if constexpr (std::is_same_v<T, CuckerSmale>) {
          const auto nd = static_cast<std::size_t>(mdl.dim);
          std::vector<double> acc(nd);
          for (std::size_t m = 0; m < n; ++m) {
            const double* xm = &state[m * dim];
            std::fill(acc.begin(), acc.end(), 0.0);
            auto row = a.row(m);
            for (std::size_t l = 0; l < n; ++l) {
              if (!row[l]) continue;
              const double* xl = &state[l * dim];
              double d2 = 0;
              for (std::size_t k = 0; k < nd; ++k) d2 += (xl[k] - xm[k]) * (xl[k] - xm[k]);
              const double eta = mdl.kernel(d2);
              for (std::size_t k = 0; k < nd; ++k) acc[k] += eta * (xl[nd + k] - xm[nd + k]);
              ++evals;
            }
            for (std::size_t k = 0; k < nd; ++k) {
              out[m * dim + k] = xm[nd + k];
              out[m * dim + nd + k] = acc[k] * inv;
            }
          }
        } else if constexpr (std::is_same_v<T, HigherOrderKuramoto>) {
          detail::check_ho(mdl);
          const Partition whole = Partition::single(n);
          const Partition& p = part ? *part : whole;
          std::fill(out.begin(), out.end(), 0.0);
          for (std::size_t c = 0; c < p.n_communities(); ++c) {
            auto mem = p.members(c);
            const double lc = static_cast<double>(mem.size());
            const double scale = 1.0 / (lc * lc * lc);
            for (NodeId m : mem) {
              double acc = 0;
              for (NodeId j : mem)
                for (NodeId k : mem)
                  for (NodeId l : mem)
                    acc += detail::ho_term(mdl.lambda, state[j], state[k], state[l], state[m]);
              evals += mem.size() * mem.size() * mem.size();
              out[m] = acc * scale;
            }
          }
        } else if constexpr (std::is_same_v<T, RankOneKuramoto>) {
          if (mdl.alpha.size() != n || mdl.beta.size() != n)
            throw DomainError("rank-one rhs: vector sizes do not match the state");
          for (std::size_t m = 0; m < n; ++m) {
            double acc = 0;
            for (std::size_t l = 0; l < n; ++l)
              acc += mdl.alpha[m] * mdl.beta[l] * std::sin(state[l] - state[m]);
            out[m] = acc * inv;
          }
          evals += n * n;
        } else if constexpr (std::is_same_v<T, RingKuramoto>) {
          const auto nn = static_cast<std::ptrdiff_t>(n);
          const auto k = static_cast<std::ptrdiff_t>(mdl.k);
          for (std::size_t m = 0; m < n; ++m) {
            double acc = 0;
            if (2 * k + 1 >= nn) {
              for (std::size_t l = 0; l < n; ++l) acc += std::sin(state[l] - state[m]);
              evals += n;
            } else {
              for (std::ptrdiff_t l = static_cast<std::ptrdiff_t>(m) - k;
                   l <= static_cast<std::ptrdiff_t>(m) + k; ++l)
                acc += std::sin(state[static_cast<std::size_t>(((l % nn) + nn) % nn)] - state[m]);
              evals += static_cast<std::uint64_t>(2 * k + 1);
            }
            out[m] = acc * inv;
          }
        } else if constexpr (std::is_same_v<T, GenericModel>) {
          if (!mdl.coupling) throw DomainError("generic model: missing coupling");
          std::fill(out.begin(), out.end(), 0.0);
          for (std::size_t k = 0; k < dim; ++k) {
            if (!mdl.coupled.empty() && !mdl.coupled[k]) continue;
            for (std::size_t m = 0; m < n; ++m) {
              auto row = a.row(m);
              double acc = 0;
              for (std::size_t l = 0; l < n; ++l)
                if (row[l]) {
                  acc += mdl.coupling(state[l * dim + k], state[m * dim + k]);
                  ++evals;
                }
              out[m * dim + k] = acc * inv;
            }
          }
          if (mdl.intrinsic) {
            std::vector<double> f(dim);
            for (std::size_t m = 0; m < n; ++m) {
              std::fill(f.begin(), f.end(), 0.0);
              mdl.intrinsic(m, state.subspan(m * dim, dim), f);
              for (std::size_t k = 0; k < dim; ++k) out[m * dim + k] += f[k];
            }
          }
        }
      },
      model);
  if (counter) counter->add(evals);
}

inline std::vector<double> eval_rhs_naive(const ModelSpec& model, const DenseAdjacency& a,
                                          std::span<const double> state,
                                          KernelCounter* counter = nullptr,
                                          const Partition* part = nullptr) {
  std::vector<double> out(state.size());
  eval_rhs_naive(model, a, state, out, counter, part);
  return out;
}

// ---------------------------------------------------------------------------
// Bornholdt-Rohlf spin map: f_m = sum_l a_ml v_l + mu v_m + sigma r_m,
// v_m <- sgn(f_m) with sgn(0) = +1. The all-to-all form sums over every l,
// the node itself included.

struct BornholdtRohlf {
  double mu = 0;
  double noise = 0;
};

namespace detail {

inline std::vector<double> draw_noise(std::size_t n, double sigma, std::mt19937_64& rng) {
  std::vector<double> r(n, 0.0);
  if (sigma != 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& x : r) x = normal(rng);
  }
  return r;
}

inline double sgn(double f) { return f >= 0 ? 1.0 : -1.0; }

inline void check_spins(std::span<const double> v) {
  for (std::size_t m = 0; m < v.size(); ++m)
    if (v[m] != 1.0 && v[m] != -1.0)
      throw DomainError("spin of node " + std::to_string(m) + " is " + fmt(v[m]) +
                        ", expected -1 or +1");
}

}  // namespace detail

/// All-to-all step with the global sum computed once.
inline std::vector<double> bornholdt_rohlf_step(const BornholdtRohlf& br,
                                                std::span<const double> v,
                                                std::mt19937_64& rng,
                                                KernelCounter* counter = nullptr) {
  detail::check_spins(v);
  auto r = detail::draw_noise(v.size(), br.noise, rng);
  long long total = 0;
  for (double s : v) total += static_cast<long long>(s);
  std::vector<double> out(v.size());
  for (std::size_t m = 0; m < v.size(); ++m)
    out[m] = detail::sgn(static_cast<double>(total) + br.mu * v[m] + br.noise * r[m]);
  if (counter) counter->add(v.size());
  return out;
}

/// All-to-all step as a literal double loop.
inline std::vector<double> bornholdt_rohlf_step_naive(const BornholdtRohlf& br,
                                                      std::span<const double> v,
                                                      std::mt19937_64& rng,
                                                      KernelCounter* counter = nullptr) {
  detail::check_spins(v);
  auto r = detail::draw_noise(v.size(), br.noise, rng);
  std::vector<double> out(v.size());
  for (std::size_t m = 0; m < v.size(); ++m) {
    long long s = 0;
    for (std::size_t l = 0; l < v.size(); ++l) s += static_cast<long long>(v[l]);
    out[m] = detail::sgn(static_cast<double>(s) + br.mu * v[m] + br.noise * r[m]);
  }
  if (counter) counter->add(v.size() * v.size());
  return out;
}

/// Network step through the decomposition: community sums, minus the node
/// itself, plus the sparse corrections. Integer exact.
inline std::vector<double> bornholdt_rohlf_step(const BornholdtRohlf& br, const Decomposition& d,
                                                std::span<const double> v,
                                                std::mt19937_64& rng,
                                                KernelCounter* counter = nullptr) {
  detail::check_spins(v);
  const auto& p = d.partition();
  if (v.size() != p.n_nodes()) throw DomainError("spin vector size does not match the network");
  auto r = detail::draw_noise(v.size(), br.noise, rng);
  std::vector<long long> field(v.size(), 0);
  for (std::size_t c = 0; c < p.n_communities(); ++c) {
    long long s = 0;
    for (NodeId m : p.members(c)) s += static_cast<long long>(v[m]);
    for (NodeId m : p.members(c)) field[m] = s - static_cast<long long>(v[m]);
  }
  for (const auto& e : d.correction().entries()) {
    const NodeId a = p.node_at(e.row), b = p.node_at(e.col);
    field[a] += e.sign * static_cast<long long>(v[b]);
    field[b] += e.sign * static_cast<long long>(v[a]);
  }
  std::vector<double> out(v.size());
  for (std::size_t m = 0; m < v.size(); ++m)
    out[m] = detail::sgn(static_cast<double>(field[m]) + br.mu * v[m] + br.noise * r[m]);
  if (counter) counter->add(v.size() + d.correction().nnz() + d.diagonal_count());
  return out;
}

/// Network step as a literal loop over the adjacency matrix.
inline std::vector<double> bornholdt_rohlf_step_naive(const BornholdtRohlf& br,
                                                      const DenseAdjacency& a,
                                                      std::span<const double> v,
                                                      std::mt19937_64& rng,
                                                      KernelCounter* counter = nullptr) {
  detail::check_spins(v);
  if (v.size() != a.n_nodes()) throw DomainError("spin vector size does not match the network");
  auto r = detail::draw_noise(v.size(), br.noise, rng);
  std::vector<double> out(v.size());
  std::uint64_t evals = 0;
  for (std::size_t m = 0; m < v.size(); ++m) {
    long long s = 0;
    auto row = a.row(m);
    for (std::size_t l = 0; l < v.size(); ++l)
      if (row[l]) {
        s += static_cast<long long>(v[l]);
        ++evals;
      }
    out[m] = detail::sgn(static_cast<double>(s) + br.mu * v[m] + br.noise * r[m]);
  }
  if (counter) counter->add(evals);
  return out;
}

}  // namespace commsim
