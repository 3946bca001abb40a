#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "commsim/error.hpp"

namespace commsim {

using cplx = std::complex<double>;

enum class ExpansionKind {
  complex_fourier_2d,
  real_fourier_2d,
  complex_fourier_diff,
  real_fourier_diff,
  poly_2d,
  poly_diff,
  cs_radial,
};

inline std::string to_string(ExpansionKind k) {
  switch (k) {
    case ExpansionKind::complex_fourier_2d: return "complex_fourier_2d";
    case ExpansionKind::real_fourier_2d: return "real_fourier_2d";
    case ExpansionKind::complex_fourier_diff: return "complex_fourier_diff";
    case ExpansionKind::real_fourier_diff: return "real_fourier_diff";
    case ExpansionKind::poly_2d: return "poly_2d";
    case ExpansionKind::poly_diff: return "poly_diff";
    case ExpansionKind::cs_radial: return "cs_radial";
  }
  return "?";
}

inline ExpansionKind expansion_kind_from_string(const std::string& s) {
  for (auto k : {ExpansionKind::complex_fourier_2d, ExpansionKind::real_fourier_2d,
                 ExpansionKind::complex_fourier_diff, ExpansionKind::real_fourier_diff,
                 ExpansionKind::poly_2d, ExpansionKind::poly_diff, ExpansionKind::cs_radial})
    if (to_string(k) == s) return k;
  throw ParseError("unknown expansion kind '" + s + "'");
}

inline bool is_fourier(ExpansionKind k) {
  return k != ExpansionKind::poly_2d && k != ExpansionKind::poly_diff;
}
inline bool is_difference(ExpansionKind k) {
  return k == ExpansionKind::complex_fourier_diff || k == ExpansionKind::real_fourier_diff ||
         k == ExpansionKind::poly_diff;
}
inline bool is_two_argument(ExpansionKind k) {
  return k == ExpansionKind::complex_fourier_2d || k == ExpansionKind::real_fourier_2d ||
         k == ExpansionKind::poly_2d;
}

/// Truncated series representation of a coupling function.
///
/// Coefficient layout (p = order):
///  - complex Fourier kinds: index alpha (and beta) in -p..p, row-major;
///    the basis is exp(i pi alpha x / L).
///  - real Fourier kinds: same index range, the sign selects the basis
///    function: alpha >= 0 is cos(alpha pi x / L), alpha < 0 is
///    sin(|alpha| pi x / L). So c^{11}_{a,b} sits at (a, b), c^{12}_{a,b} at
///    (a, -b), c^{21}_{a,b} at (-a, b) and c^{22}_{a,b} at (-a, -b).
///  - polynomial kinds: alpha (and beta) in 0..p, basis (x - x0)^alpha.
///  - cs_radial: multi-index in {-p..p}^dim, first axis most significant.
/// Real kinds keep a zero imaginary part.
struct Expansion {
  ExpansionKind kind = ExpansionKind::complex_fourier_diff;
  int order = 0;
  double half_width = std::numbers::pi;  // L
  double shift = 0.0;                    // x0, polynomial kinds
  double lo = -std::numbers::pi;         // fitting domain
  double hi = std::numbers::pi;
  int dim = 1;  // cs_radial only
  std::vector<cplx> coeffs;

  std::size_t side() const noexcept {
    return is_fourier(kind) ? static_cast<std::size_t>(2 * order + 1)
                            : static_cast<std::size_t>(order + 1);
  }
  std::size_t expected_size() const noexcept {
    std::size_t s = side();
    if (is_two_argument(kind)) return s * s;
    if (kind == ExpansionKind::cs_radial) {
      std::size_t t = 1;
      for (int d = 0; d < dim; ++d) t *= s;
      return t;
    }
    return s;
  }
  int min_index() const noexcept { return is_fourier(kind) ? -order : 0; }

  std::size_t index(int a) const noexcept {
    return static_cast<std::size_t>(a - min_index());
  }
  std::size_t index(int a, int b) const noexcept { return index(a) * side() + index(b); }

  cplx& at(int a) { return coeffs[index(a)]; }
  cplx at(int a) const { return coeffs[index(a)]; }
  cplx& at(int a, int b) { return coeffs[index(a, b)]; }
  cplx at(int a, int b) const { return coeffs[index(a, b)]; }

  // Named accessors for the real difference series.
  double dcos(int a) const { return at(a).real(); }
  double dsin(int a) const { return a == 0 ? 0.0 : at(-a).real(); }
  // And for the real two-argument series.
  double c11(int a, int b) const { return at(a, b).real(); }
  double c12(int a, int b) const { return b == 0 ? 0.0 : at(a, -b).real(); }
  double c21(int a, int b) const { return a == 0 ? 0.0 : at(-a, b).real(); }
  double c22(int a, int b) const { return a == 0 || b == 0 ? 0.0 : at(-a, -b).real(); }

  /// Flattened cs_radial index of a multi-index.
  std::size_t multi_index(std::span<const int> alpha) const noexcept {
    std::size_t idx = 0;
    for (int a : alpha) idx = idx * side() + static_cast<std::size_t>(a + order);
    return idx;
  }

  void validate() const {
    if (order < 0) throw DomainError("expansion: negative order");
    if (coeffs.size() != expected_size())
      throw DomainError("expansion: coefficient table does not match kind and order");
    if (is_fourier(kind) && !(half_width > 0))
      throw DomainError("expansion: half width must be positive");
  }
};

namespace detail {

inline void check_sample(double v, const std::string& where) {
  if (!std::isfinite(v)) throw NumericError("non-finite sample of fitted function at " + where);
}

inline std::vector<double> periodic_grid(double L, std::size_t m) {
  std::vector<double> x(m);
  for (std::size_t j = 0; j < m; ++j)
    x[j] = -L + 2.0 * L * static_cast<double>(j) / static_cast<double>(m);
  return x;
}

inline std::size_t grid_points(int p) { return 4 * static_cast<std::size_t>(2 * p + 1); }

/// Real Fourier basis with the signed index convention.
inline double real_basis(int a, double x, double L) {
  double w = std::numbers::pi * std::abs(a) * x / L;
  return a >= 0 ? std::cos(w) : std::sin(w);
}

/// Separable trapezoidal transform of tensor-grid samples on [-L, L)^n:
/// c_alpha = M^{-n} sum_j f(x_j) exp(-i pi <alpha, x_j> / L), alpha in {-p..p}^n.
inline std::vector<cplx> fourier_transform_nd(std::vector<cplx> data, std::size_t m,
                                              int n, int p, double L) {
  const auto q = static_cast<std::size_t>(2 * p + 1);
  auto grid = periodic_grid(L, m);
  std::vector<cplx> kernel(q * m);
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t j = 0; j < m; ++j) {
      double alpha = static_cast<double>(static_cast<int>(a) - p);
      kernel[a * m + j] =
          std::polar(1.0 / static_cast<double>(m), -std::numbers::pi * alpha * grid[j] / L);
    }
  std::vector<std::size_t> dims(static_cast<std::size_t>(n), m);
  for (int axis = 0; axis < n; ++axis) {
    std::size_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= dims[static_cast<std::size_t>(d)];
    for (int d = axis + 1; d < n; ++d) inner *= dims[static_cast<std::size_t>(d)];
    const std::size_t len = dims[static_cast<std::size_t>(axis)];
    std::vector<cplx> out(outer * q * inner);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t a = 0; a < q; ++a)
        for (std::size_t j = 0; j < len; ++j) {
          const cplx k = kernel[a * m + j];
          const cplx* src = &data[(o * len + j) * inner];
          cplx* dst = &out[(o * q + a) * inner];
          for (std::size_t i = 0; i < inner; ++i) dst[i] += k * src[i];
        }
    data = std::move(out);
    dims[static_cast<std::size_t>(axis)] = q;
  }
  return data;
}

/// Enforces c_alpha = conj(c_{-alpha}) on a full {-p..p}^n table.
inline void symmetrize(std::vector<cplx>& c) {
  const std::size_t total = c.size();
  // reversing the flattened index negates every component of the multi-index
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t j = total - 1 - i;
    if (j < i) break;
    cplx avg = 0.5 * (c[i] + std::conj(c[j]));
    c[i] = avg;
    c[j] = std::conj(avg);
  }
}

inline std::vector<double> chebyshev_nodes(double lo, double hi, std::size_t k) {
  std::vector<double> x(k);
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (std::size_t i = 0; i < k; ++i)
    x[i] = mid + half * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) /
                                 (2.0 * static_cast<double>(k)));
  return x;
}

inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols())
    throw NumericError("polynomial fit: rank-deficient least-squares system");
  return qr.solve(b);
}

inline std::string fmt_point(double x) {
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}

}  // namespace detail

/// Complex Fourier series of a difference coupling h on [-L, L].
template <class H>
Expansion fit_fourier_diff(H&& h, int p, double L) {
  if (p < 0) throw DomainError("fit: negative order");
  if (!(L > 0)) throw DomainError("fit: half width must be positive");
  const auto m = detail::grid_points(p);
  auto grid = detail::periodic_grid(L, m);
  std::vector<cplx> samples(m);
  for (std::size_t j = 0; j < m; ++j) {
    double v = h(grid[j]);
    detail::check_sample(v, "x=" + detail::fmt_point(grid[j]));
    samples[j] = v;
  }
  Expansion e;
  e.kind = ExpansionKind::complex_fourier_diff;
  e.order = p;
  e.half_width = L;
  e.lo = -L;
  e.hi = L;
  e.coeffs = detail::fourier_transform_nd(std::move(samples), m, 1, p, L);
  detail::symmetrize(e.coeffs);
  return e;
}

/// Real Fourier series d0cos + sum (dsin sin + dcos cos) of a difference coupling.
template <class H>
Expansion fit_real_fourier_diff(H&& h, int p, double L) {
  if (p < 0) throw DomainError("fit: negative order");
  if (!(L > 0)) throw DomainError("fit: half width must be positive");
  const auto m = detail::grid_points(p);
  auto grid = detail::periodic_grid(L, m);
  std::vector<double> samples(m);
  for (std::size_t j = 0; j < m; ++j) {
    samples[j] = h(grid[j]);
    detail::check_sample(samples[j], "x=" + detail::fmt_point(grid[j]));
  }
  Expansion e;
  e.kind = ExpansionKind::real_fourier_diff;
  e.order = p;
  e.half_width = L;
  e.lo = -L;
  e.hi = L;
  e.coeffs.assign(e.expected_size(), 0.0);
  for (int a = -p; a <= p; ++a) {
    double acc = 0;
    for (std::size_t j = 0; j < m; ++j) acc += samples[j] * detail::real_basis(a, grid[j], L);
    double weight = a == 0 ? 1.0 : 2.0;
    e.at(a) = weight * acc / static_cast<double>(m);
  }
  return e;
}

/// Two-argument Fourier series of g(x, y) on [-L, L]^2, x the source state
/// and y the target state. `real` selects the four-table cos/sin form.
template <class G>
Expansion fit_fourier_2d(G&& g, int p, double L, bool real = false) {
  if (p < 0) throw DomainError("fit: negative order");
  if (!(L > 0)) throw DomainError("fit: half width must be positive");
  const auto m = detail::grid_points(p);
  auto grid = detail::periodic_grid(L, m);
  std::vector<double> samples(m * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k) {
      double v = g(grid[j], grid[k]);
      detail::check_sample(v, "(x, y)=(" + detail::fmt_point(grid[j]) + ", " +
                                  detail::fmt_point(grid[k]) + ")");
      samples[j * m + k] = v;
    }
  Expansion e;
  e.order = p;
  e.half_width = L;
  e.lo = -L;
  e.hi = L;
  if (!real) {
    e.kind = ExpansionKind::complex_fourier_2d;
    e.coeffs = detail::fourier_transform_nd(
        std::vector<cplx>(samples.begin(), samples.end()), m, 2, p, L);
    detail::symmetrize(e.coeffs);
    return e;
  }
  e.kind = ExpansionKind::real_fourier_2d;
  const auto q = static_cast<std::size_t>(2 * p + 1);
  std::vector<double> basis(q * m);
  for (int a = -p; a <= p; ++a)
    for (std::size_t j = 0; j < m; ++j)
      basis[static_cast<std::size_t>(a + p) * m + j] = detail::real_basis(a, grid[j], L);
  // contract over y first, then x
  std::vector<double> partial(m * q, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t b = 0; b < q; ++b) {
      double acc = 0;
      for (std::size_t k = 0; k < m; ++k) acc += samples[j * m + k] * basis[b * m + k];
      partial[j * q + b] = acc;
    }
  e.coeffs.assign(q * q, 0.0);
  const double mm = static_cast<double>(m) * static_cast<double>(m);
  for (int a = -p; a <= p; ++a)
    for (int b = -p; b <= p; ++b) {
      double acc = 0;
      for (std::size_t j = 0; j < m; ++j)
        acc += basis[static_cast<std::size_t>(a + p) * m + j] *
               partial[j * q + static_cast<std::size_t>(b + p)];
      double weight = (a == 0 ? 1.0 : 2.0) * (b == 0 ? 1.0 : 2.0);
      e.at(a, b) = weight * acc / mm;
    }
  return e;
}

/// Least-squares polynomial sum c_a (x - x0)^a of a difference coupling on
/// [lo, hi], sampled at 2(p+1) Chebyshev nodes. x0 defaults to the midpoint.
template <class H>
Expansion fit_poly_diff(H&& h, int p, double lo, double hi,
                        double x0 = std::numeric_limits<double>::quiet_NaN()) {
  if (p < 0) throw DomainError("fit: negative order");
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
    throw DomainError("fit: polynomial interval must be finite with lo < hi");
  if (std::isnan(x0)) x0 = 0.5 * (lo + hi);
  const auto k = 2 * static_cast<std::size_t>(p + 1);
  auto nodes = detail::chebyshev_nodes(lo, hi, k);
  Eigen::MatrixXd v(static_cast<Eigen::Index>(k), p + 1);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    auto row = static_cast<Eigen::Index>(i);
    rhs(row) = h(nodes[i]);
    detail::check_sample(rhs(row), "x=" + detail::fmt_point(nodes[i]));
    double pw = 1.0;
    for (int a = 0; a <= p; ++a) {
      v(row, a) = pw;
      pw *= nodes[i] - x0;
    }
  }
  auto sol = detail::least_squares(v, rhs);
  Expansion e;
  e.kind = ExpansionKind::poly_diff;
  e.order = p;
  e.half_width = 0.5 * (hi - lo);
  e.shift = x0;
  e.lo = lo;
  e.hi = hi;
  e.coeffs.resize(static_cast<std::size_t>(p + 1));
  for (int a = 0; a <= p; ++a) e.coeffs[static_cast<std::size_t>(a)] = sol(a);
  return e;
}

/// Least-squares polynomial sum c_{a,b} (x - x0)^a (y - x0)^b on [lo, hi]^2.
template <class G>
Expansion fit_poly_2d(G&& g, int p, double lo, double hi,
                      double x0 = std::numeric_limits<double>::quiet_NaN()) {
  if (p < 0) throw DomainError("fit: negative order");
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
    throw DomainError("fit: polynomial domain must be finite with lo < hi");
  if (std::isnan(x0)) x0 = 0.5 * (lo + hi);
  const auto k = 2 * static_cast<std::size_t>(p + 1);
  const auto s = static_cast<Eigen::Index>(p + 1);
  auto nodes = detail::chebyshev_nodes(lo, hi, k);
  Eigen::MatrixXd v(static_cast<Eigen::Index>(k * k), s * s);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(k * k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      auto row = static_cast<Eigen::Index>(i * k + j);
      rhs(row) = g(nodes[i], nodes[j]);
      detail::check_sample(rhs(row), "(x, y)=(" + detail::fmt_point(nodes[i]) + ", " +
                                         detail::fmt_point(nodes[j]) + ")");
      double px = 1.0;
      for (Eigen::Index a = 0; a < s; ++a) {
        double py = 1.0;
        for (Eigen::Index b = 0; b < s; ++b) {
          v(row, a * s + b) = px * py;
          py *= nodes[j] - x0;
        }
        px *= nodes[i] - x0;
      }
    }
  auto sol = detail::least_squares(v, rhs);
  Expansion e;
  e.kind = ExpansionKind::poly_2d;
  e.order = p;
  e.half_width = 0.5 * (hi - lo);
  e.shift = x0;
  e.lo = lo;
  e.hi = hi;
  e.coeffs.resize(static_cast<std::size_t>(s * s));
  for (Eigen::Index i = 0; i < s * s; ++i) e.coeffs[static_cast<std::size_t>(i)] = sol(i);
  return e;
}

/// Flocking kernel eta(y) = K / (sigma^2 + |y|^2)^beta.
struct FlockingKernel {
  double K = 1.0;
  double sigma = 1.0;
  double beta = 0.4;

  double operator()(double dist2) const { return K / std::pow(sigma * sigma + dist2, beta); }
};

/// Multi-dimensional Fourier series of y -> eta(|y|^2) on [-L, L]^n.
inline Expansion fit_cs_radial(const FlockingKernel& eta, int n, int p, double L) {
  if (n < 1 || n > 3) throw DomainError("fit: flocking dimension must be 1, 2 or 3");
  if (p < 0) throw DomainError("fit: negative order");
  if (!(L > 0)) throw DomainError("fit: half width must be positive");
  if (eta.sigma == 0.0 && eta.beta > 0)
    throw DomainError("fit: flocking kernel is singular at the origin (sigma = 0)");
  const auto m = detail::grid_points(p);
  auto grid = detail::periodic_grid(L, m);
  std::size_t total = 1;
  for (int d = 0; d < n; ++d) total *= m;
  std::vector<cplx> samples(total);
  std::vector<double> sq(m);
  for (std::size_t j = 0; j < m; ++j) sq[j] = grid[j] * grid[j];
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    double r2 = 0;
    for (int d = 0; d < n; ++d) {
      r2 += sq[rest % m];
      rest /= m;
    }
    double v = eta(r2);
    detail::check_sample(v, "|y|^2=" + detail::fmt_point(r2));
    samples[idx] = v;
  }
  Expansion e;
  e.kind = ExpansionKind::cs_radial;
  e.order = p;
  e.half_width = L;
  e.lo = -L;
  e.hi = L;
  e.dim = n;
  e.coeffs = detail::fourier_transform_nd(std::move(samples), m, n, p, L);
  detail::symmetrize(e.coeffs);
  return e;
}

namespace detail {

inline double checked_real(cplx v) {
  if (std::abs(v.imag()) > 1e-9 * (1.0 + std::abs(v.real())))
    throw NumericError("expansion: imaginary residue " + fmt_point(v.imag()) +
                       " exceeds guard; coefficients are not conjugate-symmetric");
  return v.real();
}

}  // namespace detail

/// Value of a one-argument (difference or polynomial-difference) series.
inline double eval_expansion(const Expansion& e, double x) {
  const int p = e.order;
  const double L = e.half_width;
  switch (e.kind) {
    case ExpansionKind::complex_fourier_diff: {
      cplx acc = 0;
      for (int a = -p; a <= p; ++a)
        acc += e.at(a) * std::polar(1.0, std::numbers::pi * a * x / L);
      return detail::checked_real(acc);
    }
    case ExpansionKind::real_fourier_diff: {
      double acc = 0;
      for (int a = -p; a <= p; ++a) acc += e.at(a).real() * detail::real_basis(a, x, L);
      return acc;
    }
    case ExpansionKind::poly_diff: {
      double acc = 0;
      for (int a = p; a >= 0; --a) acc = acc * (x - e.shift) + e.at(a).real();
      return acc;
    }
    default:
      throw DomainError("eval_expansion: " + to_string(e.kind) + " does not take one argument");
  }
}

/// Value of a two-argument series g(x, y).
inline double eval_expansion(const Expansion& e, double x, double y) {
  const int p = e.order;
  const double L = e.half_width;
  switch (e.kind) {
    case ExpansionKind::complex_fourier_2d: {
      cplx acc = 0;
      for (int a = -p; a <= p; ++a) {
        cplx inner = 0;
        for (int b = -p; b <= p; ++b)
          inner += e.at(a, b) * std::polar(1.0, std::numbers::pi * b * y / L);
        acc += inner * std::polar(1.0, std::numbers::pi * a * x / L);
      }
      return detail::checked_real(acc);
    }
    case ExpansionKind::real_fourier_2d: {
      double acc = 0;
      for (int a = -p; a <= p; ++a)
        for (int b = -p; b <= p; ++b)
          acc += e.at(a, b).real() * detail::real_basis(a, x, L) * detail::real_basis(b, y, L);
      return acc;
    }
    case ExpansionKind::poly_2d: {
      double acc = 0;
      for (int a = p; a >= 0; --a) {
        double inner = 0;
        for (int b = p; b >= 0; --b) inner = inner * (y - e.shift) + e.at(a, b).real();
        acc = acc * (x - e.shift) + inner;
      }
      return acc;
    }
    default:
      throw DomainError("eval_expansion: " + to_string(e.kind) + " does not take two arguments");
  }
}

/// Value of a cs_radial series at a point of R^dim.
inline double eval_expansion(const Expansion& e, std::span<const double> y) {
  if (e.kind != ExpansionKind::cs_radial)
    throw DomainError("eval_expansion: " + to_string(e.kind) + " does not take a vector");
  if (static_cast<int>(y.size()) != e.dim)
    throw DomainError("eval_expansion: point dimension does not match expansion");
  const int p = e.order;
  const auto q = e.side();
  std::vector<cplx> phase(static_cast<std::size_t>(e.dim) * q);
  for (int d = 0; d < e.dim; ++d)
    for (int a = -p; a <= p; ++a)
      phase[static_cast<std::size_t>(d) * q + static_cast<std::size_t>(a + p)] =
          std::polar(1.0, std::numbers::pi * a * y[static_cast<std::size_t>(d)] / e.half_width);
  cplx acc = 0;
  for (std::size_t idx = 0; idx < e.coeffs.size(); ++idx) {
    std::size_t rest = idx;
    cplx term = e.coeffs[idx];
    for (int d = e.dim - 1; d >= 0; --d) {
      term *= phase[static_cast<std::size_t>(d) * q + rest % q];
      rest /= q;
    }
    acc += term;
  }
  return detail::checked_real(acc);
}

/// Closed interval used for error measurement.
struct Interval {
  double lo;
  double hi;
};

/// Largest |eval_expansion - f| over a uniform grid with `points` per axis
/// on `domain` (the expansion's fitting domain by default). `f` takes one
/// double, two doubles, or a span of doubles according to the kind.
template <class F>
double expansion_sup_error(const Expansion& e, F&& f, std::size_t points,
                           std::optional<Interval> domain = std::nullopt) {
  if (points < 2) throw DomainError("sup error: need at least two grid points per axis");
  Interval dom = domain.value_or(Interval{e.lo, e.hi});
  auto node = [&](std::size_t i) {
    return dom.lo + (dom.hi - dom.lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  };
  double worst = 0;
  if constexpr (std::is_invocable_r_v<double, F, double>) {
    for (std::size_t i = 0; i < points; ++i)
      worst = std::max(worst, std::abs(eval_expansion(e, node(i)) - f(node(i))));
  } else if constexpr (std::is_invocable_r_v<double, F, double, double>) {
    for (std::size_t i = 0; i < points; ++i)
      for (std::size_t j = 0; j < points; ++j)
        worst = std::max(worst, std::abs(eval_expansion(e, node(i), node(j)) -
                                         f(node(i), node(j))));
  } else {
    static_assert(std::is_invocable_r_v<double, F, std::span<const double>>,
                  "sup error: callable must take double, (double, double) or a span");
    const auto n = static_cast<std::size_t>(e.dim);
    std::size_t total = 1;
    for (std::size_t d = 0; d < n; ++d) total *= points;
    std::vector<double> y(n);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rest = idx;
      for (std::size_t d = 0; d < n; ++d) {
        y[d] = node(rest % points);
        rest /= points;
      }
      std::span<const double> ys(y);
      worst = std::max(worst, std::abs(eval_expansion(e, ys) - f(ys)));
    }
  }
  return worst;
}

/// Doubles the order from 1 until `fit(p)` reaches sup error <= tol on
/// `domain`, failing past p = 64.
template <class Fit, class F>
Expansion fit_auto_order(Fit&& fit, F&& f, double tol, std::size_t points,
                         std::optional<Interval> domain = std::nullopt,
                         double* achieved = nullptr) {
  double err = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= 64; p *= 2) {
    Expansion e = fit(p);
    err = expansion_sup_error(e, f, points, domain);
    if (err <= tol) {
      if (achieved) *achieved = err;
      return e;
    }
  }
  throw NumericError("auto order: sup error " + detail::fmt_point(err) +
                     " still above tolerance " + detail::fmt_point(tol) + " at p = 64");
}

/// CSV dump: a `kind,p,L,x0` header and its values, then a column header
/// and one row per coefficient `alpha[,beta...],re,im`.
inline void write_expansion_csv(std::ostream& out, const Expansion& e) {
  out << std::setprecision(17);
  out << "kind,p,L,x0\n"
      << to_string(e.kind) << ',' << e.order << ',' << e.half_width << ',' << e.shift << '\n';
  int n_idx = e.kind == ExpansionKind::cs_radial ? e.dim : (is_two_argument(e.kind) ? 2 : 1);
  static const char* names[] = {"alpha", "beta", "gamma"};
  if (e.kind == ExpansionKind::cs_radial) {
    for (int d = 0; d < n_idx; ++d) out << "alpha" << (d + 1) << ',';
  } else {
    for (int d = 0; d < n_idx; ++d) out << names[d] << ',';
  }
  out << "re,im\n";
  const auto q = e.side();
  for (std::size_t idx = 0; idx < e.coeffs.size(); ++idx) {
    std::vector<int> alpha(static_cast<std::size_t>(n_idx));
    std::size_t rest = idx;
    for (int d = n_idx - 1; d >= 0; --d) {
      alpha[static_cast<std::size_t>(d)] = static_cast<int>(rest % q) + e.min_index();
      rest /= q;
    }
    for (int a : alpha) out << a << ',';
    out << e.coeffs[idx].real() << ',' << e.coeffs[idx].imag() << '\n';
  }
}

inline Expansion read_expansion_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    return cells;
  };
  auto to_d = [](const std::string& s, std::size_t line) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError("bad number '" + s + "'", line);
    }
  };
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  if (!next() || line != "kind,p,L,x0") throw ParseError("missing `kind,p,L,x0` header", lineno);
  if (!next()) throw ParseError("missing expansion parameters", lineno);
  auto head = split(line);
  if (head.size() != 4) throw ParseError("expected kind,p,L,x0 values", lineno);
  Expansion e;
  e.kind = expansion_kind_from_string(head[0]);
  e.order = static_cast<int>(to_d(head[1], lineno));
  e.half_width = to_d(head[2], lineno);
  e.shift = to_d(head[3], lineno);
  if (is_fourier(e.kind)) {
    e.lo = -e.half_width;
    e.hi = e.half_width;
  } else {
    e.lo = e.shift - e.half_width;
    e.hi = e.shift + e.half_width;
  }
  if (!next()) throw ParseError("missing coefficient header", lineno);
  auto cols = split(line);
  if (cols.size() < 3) throw ParseError("coefficient header too short", lineno);
  const int n_idx = static_cast<int>(cols.size()) - 2;
  if (e.kind == ExpansionKind::cs_radial) e.dim = n_idx;
  e.coeffs.assign(e.expected_size(), 0.0);
  std::vector<bool> filled(e.coeffs.size(), false);
  while (next()) {
    auto cells = split(line);
    if (static_cast<int>(cells.size()) != n_idx + 2)
      throw ParseError("wrong number of columns", lineno);
    std::size_t idx = 0;
    for (int d = 0; d < n_idx; ++d) {
      int a = static_cast<int>(to_d(cells[static_cast<std::size_t>(d)], lineno));
      if (a < e.min_index() || a > e.min_index() + static_cast<int>(e.side()) - 1)
        throw ParseError("coefficient index out of range", lineno);
      idx = idx * e.side() + static_cast<std::size_t>(a - e.min_index());
    }
    if (idx >= e.coeffs.size()) throw ParseError("coefficient index out of range", lineno);
    e.coeffs[idx] = cplx(to_d(cells[static_cast<std::size_t>(n_idx)], lineno),
                         to_d(cells[static_cast<std::size_t>(n_idx) + 1], lineno));
    filled[idx] = true;
  }
  for (bool f : filled)
    if (!f) throw ParseError("coefficient table incomplete");
  e.validate();
  return e;
}

}  // namespace commsim
