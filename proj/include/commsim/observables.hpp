#pragma once

#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "commsim/error.hpp"

namespace commsim {

using cplx = std::complex<double>;

/// Generalized order parameters r_a = (1/norm) sum_l exp(i pi a x_l / L),
/// a = -p..p, written to `out[a + p]`.
///
/// One transcendental call per state; higher harmonics come from repeated
/// multiplication. Summation runs over the slice in order.
inline void complex_order_params(std::span<const double> states, int p, double L,
                                 double norm, std::span<cplx> out) {
  const auto q = static_cast<std::size_t>(p);
  for (auto& v : out) v = 0.0;
  const double w = std::numbers::pi / L;
  for (double x : states) {
    const cplx z = std::polar(1.0, w * x);
    cplx zp = 1.0;
    for (std::size_t a = 1; a <= q; ++a) {
      zp *= z;
      out[q + a] += zp;
    }
  }
  const double inv = 1.0 / norm;
  out[q] = static_cast<double>(states.size()) * inv;
  for (std::size_t a = 1; a <= q; ++a) {
    out[q + a] *= inv;
    out[q - a] = std::conj(out[q + a]);
  }
}

inline std::vector<cplx> complex_order_params(std::span<const double> states, int p, double L,
                                              double norm) {
  if (p < 0) throw DomainError("order parameters: negative order");
  if (!(L > 0)) throw DomainError("order parameters: half width must be positive");
  if (norm < static_cast<double>(states.size()))
    throw DomainError("order parameters: normalization smaller than the slice");
  std::vector<cplx> r(static_cast<std::size_t>(2 * p + 1));
  complex_order_params(states, p, L, norm, r);
  return r;
}

struct RealOrderParams {
  std::vector<double> cos;  // a = 0..p
  std::vector<double> sin;
};

/// r^cos_a and r^sin_a for a = 0..p.
inline RealOrderParams real_order_params(std::span<const double> states, int p, double L,
                                         double norm) {
  auto r = complex_order_params(states, p, L, norm);
  RealOrderParams out;
  out.cos.resize(static_cast<std::size_t>(p + 1));
  out.sin.resize(static_cast<std::size_t>(p + 1));
  for (int a = 0; a <= p; ++a) {
    out.cos[static_cast<std::size_t>(a)] = r[static_cast<std::size_t>(p + a)].real();
    out.sin[static_cast<std::size_t>(a)] = r[static_cast<std::size_t>(p + a)].imag();
  }
  return out;
}

/// Moments w_a = (1/norm) sum_l (x_l - x0)^a, a = 0..p, into `out`.
inline void moments(std::span<const double> states, int p, double norm, double x0,
                    std::span<double> out) {
  for (auto& v : out) v = 0.0;
  for (double x : states) {
    const double d = x - x0;
    double pw = 1.0;
    for (int a = 0; a <= p; ++a) {
      out[static_cast<std::size_t>(a)] += pw;
      pw *= d;
    }
  }
  for (auto& v : out) v /= norm;
}

inline std::vector<double> moments(std::span<const double> states, int p, double norm,
                                   double x0 = 0.0) {
  if (p < 0) throw DomainError("moments: negative order");
  if (norm < static_cast<double>(states.size()))
    throw DomainError("moments: normalization smaller than the slice");
  std::vector<double> w(static_cast<std::size_t>(p + 1));
  moments(states, p, norm, x0, w);
  return w;
}

/// Flocking observables over the multi-index cube {-p..p}^dim:
///   u_a = (1/norm) sum_l exp(i pi <a, s_l> / L)
///   h_a = (1/norm) sum_l exp(i pi <a, s_l> / L) v_l
/// `u[idx]` and `h[idx * dim + d]` with idx the row-major flattened index,
/// first axis most significant.
struct FlockingObservables {
  int dim = 0;
  int order = 0;
  std::vector<cplx> u;
  std::vector<cplx> h;
};

namespace detail {

/// exp(i pi <a, s> / L) for every a in {-p..p}^dim, row-major, into `prod`.
/// `axis` is scratch of size dim * (2p+1).
inline void multi_phase(std::span<const double> s, int p, double L, std::span<cplx> axis,
                        std::span<cplx> prod, double sign = 1.0) {
  const auto q = static_cast<std::size_t>(2 * p + 1);
  const auto pp = static_cast<std::size_t>(p);
  const double w = sign * std::numbers::pi / L;
  for (std::size_t d = 0; d < s.size(); ++d) {
    cplx* ax = &axis[d * q];
    const cplx z = std::polar(1.0, w * s[d]);
    ax[pp] = 1.0;
    cplx zp = 1.0;
    for (std::size_t a = 1; a <= pp; ++a) {
      zp *= z;
      ax[pp + a] = zp;
      ax[pp - a] = std::conj(zp);
    }
  }
  std::size_t len = 1;
  prod[0] = 1.0;
  for (std::size_t d = 0; d < s.size(); ++d) {
    const cplx* ax = &axis[d * q];
    // expand in place from the back so earlier entries stay readable
    for (std::size_t i = len; i-- > 0;) {
      const cplx base = prod[i];
      for (std::size_t a = q; a-- > 0;) prod[i * q + a] = base * ax[a];
    }
    len *= q;
  }
}

}  // namespace detail

/// `positions` and `velocities` are flat arrays of `dim` components per bird.
inline FlockingObservables cs_observables(std::span<const double> positions,
                                          std::span<const double> velocities, int dim, int p,
                                          double L, double norm) {
  if (dim < 1) throw DomainError("flocking observables: dimension must be positive");
  if (positions.size() != velocities.size() || positions.size() % static_cast<std::size_t>(dim))
    throw DomainError("flocking observables: position/velocity dimension mismatch");
  if (p < 0) throw DomainError("flocking observables: negative order");
  const auto n = static_cast<std::size_t>(dim);
  const auto q = static_cast<std::size_t>(2 * p + 1);
  std::size_t total = 1;
  for (std::size_t d = 0; d < n; ++d) total *= q;

  FlockingObservables obs;
  obs.dim = dim;
  obs.order = p;
  obs.u.assign(total, 0.0);
  obs.h.assign(total * n, 0.0);
  std::vector<cplx> axis(n * q), prod(total);
  const std::size_t birds = positions.size() / n;
  for (std::size_t l = 0; l < birds; ++l) {
    detail::multi_phase(positions.subspan(l * n, n), p, L, axis, prod);
    const double* v = &velocities[l * n];
    for (std::size_t idx = 0; idx < total; ++idx) {
      obs.u[idx] += prod[idx];
      for (std::size_t d = 0; d < n; ++d) obs.h[idx * n + d] += prod[idx] * v[d];
    }
  }
  const double inv = 1.0 / norm;
  for (auto& x : obs.u) x *= inv;
  for (auto& x : obs.h) x *= inv;
  return obs;
}

}  // namespace commsim
