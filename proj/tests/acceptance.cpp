// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "commsim/commsim.hpp"
#include "oracles.hpp"

using namespace commsim;
constexpr double pi = std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Graph complete(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) e.push_back({u, v});
  return Graph(n, std::move(e));
}

GraphWithPartition planted4(std::size_t block, double p_in, double p_out, std::uint64_t seed) {
  return planted_partition_graph(std::vector<std::size_t>(4, block), p_in, p_out, seed);
}

// Higher-order oracle for large blocks: the triple sum over (j, k, l) is done
// literally once per block, then each member applies its own phase.
std::vector<double> ho_block_oracle(const Partition& p, const std::vector<double>& x,
                                    const std::array<int, 4>& lam) {
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t c = 0; c < p.n_communities(); ++c) {
    auto mem = p.members(c);
    std::vector<oracle::cplx> e1, e2, e3;
    for (NodeId m : mem) {
      e1.push_back(std::exp(oracle::cplx(0, lam[0] * x[m])));
      e2.push_back(std::exp(oracle::cplx(0, lam[1] * x[m])));
      e3.push_back(std::exp(oracle::cplx(0, lam[2] * x[m])));
    }
    oracle::cplx s = 0;
    for (const auto& a : e1)
      for (const auto& b : e2) {
        const auto ab = a * b;
        for (const auto& c3 : e3) s += ab * c3;
      }
    const double lc = static_cast<double>(mem.size());
    s /= lc * lc * lc;
    for (NodeId m : mem) out[m] = (s * std::exp(oracle::cplx(0, lam[3] * x[m]))).imag();
  }
  return out;
}

BenchResult bench(const std::string& text, unsigned jobs = 1) {
  detail::RunContext ctx;
  ctx.cfg = ConfigFile::parse_string(text);
  ctx.base_dir = ".";
  ctx.out_dir = ".";
  ctx.seed = 1;
  return run_bench(ctx, jobs);
}

const BenchSlope* slope(const BenchResult& r, const std::string& model, const std::string& mode) {
  for (const auto& s : r.slopes)
    if (s.model == model && s.mode == mode) return &s;
  return nullptr;
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

// 1 ---------------------------------------------------------------------
Outcome oracle_equivalence() {
  auto gen = planted4(125, 0.9, 0.01, 11);
  auto d = decompose(gen.graph, gen.partition);
  DenseAdjacency a(gen.graph);
  auto omega = oracle::uniform(500, -1, 1, 1);
  auto dsin = oracle::uniform(4, -1, 1, 2);
  auto dcos = oracle::uniform(5, -1, 1, 3);
  auto hh = make_higher_harmonics(dsin, dcos, omega);
  auto h = [&](double y) {
    double s = dcos[0];
    for (int k = 1; k <= 4; ++k) s += dsin[k - 1] * std::sin(k * y) + dcos[k] * std::cos(k * y);
    return s;
  };
  HigherOrderKuramoto ho;
  double worst[4] = {0, 0, 0, 0};
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto th = oracle::phases(500, 100 + s);
    auto x = oracle::uniform(500, -2, 2, 300 + s);
    auto f_omega = [&](std::size_t m, double) { return omega[m]; };
    worst[0] = std::max(worst[0], oracle::max_abs_diff(
        eval_rhs_cia(Kuramoto{omega}, d, th),
        oracle::network_rhs(gen.graph, th, [](double l, double m) { return std::sin(l - m); }, f_omega)));
    worst[1] = std::max(worst[1], oracle::max_abs_diff(
        eval_rhs_cia(hh, d, th),
        oracle::network_rhs(gen.graph, th, [&](double l, double m) { return h(l - m); }, f_omega)));
    worst[2] = std::max(worst[2], oracle::max_abs_diff(
        eval_rhs_cia(DesaiZwanzig{}, d, x),
        oracle::network_rhs(gen.graph, x, [](double l, double m) { return l - m; },
                            [](std::size_t, double v) { return v - v * v * v; })));
    worst[3] = std::max(worst[3], oracle::max_abs_diff(eval_rhs_cia(ho, d, th),
                                                       ho_block_oracle(gen.partition, th, ho.lambda)));
    if (s < 3) {  // library naive path agrees with the test oracle too
      worst[0] = std::max(worst[0], oracle::max_abs_diff(eval_rhs_naive(Kuramoto{omega}, a, th),
                                                         eval_rhs_cia(Kuramoto{omega}, d, th)));
    }
  }
  Outcome o;
  const char* names[] = {"kuramoto", "higher_harmonics", "desai_zwanzig", "higher_order"};
  for (int i = 0; i < 4; ++i) {
    o.pass = o.pass && worst[i] <= 1e-10;
    o.detail += std::string(i ? ", " : "") + names[i] + " " + sci(worst[i]);
  }
  o.detail += " (limit 1e-10)";
  return o;
}

// 2 ---------------------------------------------------------------------
Outcome trajectory_equivalence() {
  auto gen = planted4(250, 0.9, 0.01, 12);
  auto d = decompose(gen.graph, gen.partition);
  DenseAdjacency a(gen.graph);
  System sys{&d, &a, nullptr};
  std::normal_distribution<double> normal;
  std::mt19937_64 rng(5);
  std::vector<double> omega(1000);
  for (auto& w : omega) w = normal(rng);
  ModelSpec model = Kuramoto{omega};
  auto x0 = oracle::phases(1000, 6);
  IntegrationPlan plan;  // Euler, T = 20, dt = 0.1
  auto cia = integrate(model, sys, x0, plan);
  plan.mode = RhsMode::naive;
  auto naive = integrate(model, sys, x0, plan);
  double dev = 0;
  for (std::size_t i = 0; i < 1000; ++i)
    dev = std::max(dev, std::abs(wrap_phase(cia.states.back()[i] - naive.states.back()[i])));
  return {dev <= 1e-8, "final-state deviation " + sci(dev) + " (limit 1e-8), " +
                           std::to_string(cia.step_evals.size()) + " steps"};
}

// 3 ---------------------------------------------------------------------
Outcome linear_scaling() {
  auto r = bench(
      "bench.models = kuramoto\nbench.modes = cia, naive\n"
      "bench.n_list = 1024, 2048, 4096, 8192, 16384, 32768, 65536, 131072\n"
      "bench.naive_cap = 8192\nbench.repeats = 3\n");
  auto* c = slope(r, "kuramoto", "cia");
  auto* n = slope(r, "kuramoto", "naive");
  if (!c || !n) return {false, "missing benchmark cells"};
  bool ok = within(c->count_slope, 0.95, 1.05) && within(c->time_slope, 0.8, 1.3) &&
            within(n->count_slope, 1.95, 2.05) && within(n->time_slope, 1.7, 2.3);
  return {ok, "cia count " + sci(c->count_slope) + " time " + sci(c->time_slope) + "; naive count " +
                  sci(n->count_slope) + " time " + sci(n->time_slope)};
}

// 4 ---------------------------------------------------------------------
Outcome quartic_to_linear() {
  auto naive = bench(
      "bench.models = higher_order\nbench.modes = naive\nbench.graph = complete\n"
      "bench.n_list = 25, 50, 100, 200\nbench.steps = 1\nbench.repeats = 1\n");
  auto cia = bench(
      "bench.models = higher_order\nbench.modes = cia\nbench.graph = complete\n"
      "bench.n_list = 100, 1000, 10000, 100000\nbench.steps = 1\nbench.repeats = 1\n");
  auto* n = slope(naive, "higher_order", "naive");
  auto* c = slope(cia, "higher_order", "cia");
  if (!n || !c) return {false, "missing benchmark cells"};
  double worst = 0;
  for (std::size_t size : {20ul, 40ul, 60ul}) {
    auto x = oracle::phases(size, size);
    std::array<int, 4> lam{1, 1, -1, -1};
    std::vector<double> ref(size);
    for (std::size_t m = 0; m < size; ++m) {
      double s = 0;
      for (std::size_t j = 0; j < size; ++j)
        for (std::size_t k = 0; k < size; ++k)
          for (std::size_t l = 0; l < size; ++l)
            s += std::sin(lam[0] * x[j] + lam[1] * x[k] + lam[2] * x[l] + lam[3] * x[m]);
      ref[m] = s / static_cast<double>(size * size * size);
    }
    Decomposition d(Partition::single(size), SparseCorrection{});
    worst = std::max(worst, oracle::max_abs_diff(eval_rhs_cia(HigherOrderKuramoto{lam}, d, x), ref));
  }
  bool ok = within(n->count_slope, 3.9, 4.1) && within(c->count_slope, 0.95, 1.05) && worst <= 1e-9;
  return {ok, "naive count slope " + sci(n->count_slope) + ", cia count slope " + sci(c->count_slope) +
                  ", pointwise " + sci(worst) + " (limit 1e-9)"};
}

// 5 ---------------------------------------------------------------------
Outcome flocking_bound() {
  auto gen = planted4(50, 0.9, 0.01, 13);
  auto d = decompose(gen.graph, gen.partition);
  DenseAdjacency a(gen.graph);
  auto pos = oracle::uniform(400, -1, 1, 7);
  auto vel = oracle::uniform(400, -0.5, 0.5, 8);
  const double box = 2.0;  // per-axis position spread
  int order = 0;
  double achieved = 1;
  auto cs = make_cucker_smale({1.0, 1.0, 0.4}, 2, box, 1e-3, 0, &order, &achieved);
  std::vector<double> x;
  double speed = 0;
  for (std::size_t m = 0; m < 200; ++m) {
    x.insert(x.end(), {pos[2 * m], pos[2 * m + 1], vel[2 * m], vel[2 * m + 1]});
    for (std::size_t l = 0; l < 200; ++l)
      speed = std::max(speed, std::hypot(vel[2 * l] - vel[2 * m], vel[2 * l + 1] - vel[2 * m + 1]));
  }
  auto cia = eval_rhs_cia(cs, d, x);
  auto naive = eval_rhs_naive(cs, a, x);
  double dev = 0;
  for (std::size_t m = 0; m < 200; ++m)
    for (std::size_t k = 2; k < 4; ++k) dev = std::max(dev, std::abs(cia[4 * m + k] - naive[4 * m + k]));
  const double bound = 1e-3 * speed + 1e-9;
  return {achieved <= 1e-3 && dev <= bound,
          "p = " + std::to_string(order) + ", sup error " + sci(achieved) + ", deviation " + sci(dev) +
              " (bound " + sci(bound) + ")"};
}

// 6 ---------------------------------------------------------------------
Outcome decomposition_exactness() {
  std::mt19937_64 rng(14);
  std::size_t mismatches = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 20 + rng() % 181;
    auto g = oracle::random_graph(n, 0.02 + 0.3 * static_cast<double>(rng() % 100) / 100.0, rng());
    const std::size_t k = 1 + rng() % 6;
    std::vector<std::int32_t> assign(n);
    for (auto& c : assign) c = rng() % 8 == 0 ? kNoCommunity : static_cast<std::int32_t>(rng() % k);
    auto part = Partition::from_assignment(assign);
    auto d = decompose(g, part);
    auto a = oracle::adjacency(g);
    // D: ones on every community block (diagonal included); S: stored entries
    // plus a -1 on the diagonal of each community member.
    std::vector<int> b(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        auto ci = part.community_of(part.node_at(i)), cj = part.community_of(part.node_at(j));
        if (ci != kNoCommunity && ci == cj) b[i * n + j] = 1;
      }
    for (std::size_t i = 0; i < n; ++i)
      if (part.community_of(part.node_at(i)) != kNoCommunity) b[i * n + i] -= 1;
    for (const auto& e : d.correction().entries()) {
      b[e.row * n + e.col] += e.sign;
      b[e.col * n + e.row] += e.sign;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (b[i * n + j] != a[part.node_at(i)][part.node_at(j)]) ++mismatches;
  }
  return {mismatches == 0, "50 graphs, " + std::to_string(mismatches) + " mismatched entries"};
}

// 7 ---------------------------------------------------------------------
Outcome detection_recovery() {
  auto gen = planted4(250, 0.9, 0.01, 15);
  DetectionOptions opt;
  opt.seed = 3;
  auto found = detect_communities(gen.graph, opt);
  const double agree = label_agreement(gen.partition, found);
  // disjoint cliques of unequal size
  std::vector<std::size_t> sizes{8, 12, 20, 30};
  auto cliques = planted_partition_graph(sizes, 1.0, 0.0, 1);
  auto exact = detect_communities(cliques.graph, opt);
  auto d = decompose(cliques.graph, exact);
  const double exact_agree = label_agreement(cliques.partition, exact);
  bool ok = agree >= 0.95 && exact_agree == 1.0 && d.correction().empty() &&
            exact.n_communities() == sizes.size() && exact.pool_size() == 0;
  return {ok, "planted agreement " + sci(agree) + " (limit 0.95), cliques agreement " + sci(exact_agree) +
                  ", cliques S entries " + std::to_string(d.correction().stored())};
}

// 8 ---------------------------------------------------------------------
Outcome appendix_paths() {
  const std::size_t n = 500;
  auto x = oracle::phases(n, 16);
  auto alpha = oracle::uniform(n, -1, 1, 17), beta = oracle::uniform(n, -1, 1, 18);
  auto z = rank_one_rhs(alpha, beta, x);
  double r1 = 0;
  for (std::size_t m = 0; m < n; ++m) {
    oracle::cplx s = 0;
    for (std::size_t l = 0; l < n; ++l) s += alpha[m] * beta[l] * std::exp(oracle::cplx(0, x[l] - x[m]));
    r1 = std::max(r1, std::abs(z[m] - s / static_cast<double>(n)));
  }
  double nn = 0;
  std::uint64_t counts[3];
  const std::size_t ks[3] = {1, n / 10, n / 4};
  for (int i = 0; i < 3; ++i) {
    KernelCounter kc;
    auto f = nearest_neighbor_rhs(ks[i], x, &kc);
    counts[i] = kc.evals;
    const auto k = static_cast<std::ptrdiff_t>(ks[i]);
    const auto nn_ = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t m = 0; m < nn_; ++m) {
      oracle::cplx s = 0;
      for (std::ptrdiff_t l = m - k; l <= m + k; ++l)
        s += std::exp(oracle::cplx(0, x[static_cast<std::size_t>(((l % nn_) + nn_) % nn_)] - x[static_cast<std::size_t>(m)]));
      nn = std::max(nn, std::abs(f[static_cast<std::size_t>(m)] - s / static_cast<double>(n)));
    }
  }
  bool ok = r1 <= 1e-12 && nn <= 1e-12 && counts[0] == counts[1] && counts[1] == counts[2];
  return {ok, "rank-one " + sci(r1) + ", nearest-neighbor " + sci(nn) + " (limit 1e-12), counts " +
                  std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + "/" + std::to_string(counts[2])};
}

// 9 ---------------------------------------------------------------------
Outcome properties() {
  std::vector<std::string> failed;
  // conjugate symmetry
  auto sym = [](const Expansion& e) {
    const std::size_t n = e.coeffs.size();
    double w = 0;
    for (std::size_t i = 0; i < n; ++i) w = std::max(w, std::abs(e.coeffs[i] - std::conj(e.coeffs[n - 1 - i])));
    return w;
  };
  double s = std::max({sym(fit_fourier_diff([](double y) { return std::exp(std::sin(y)) + y * y; }, 8, 2.0)),
                       sym(fit_fourier_2d([](double a, double b) { return std::cos(a) * std::exp(std::sin(b)); }, 4, pi)),
                       sym(fit_cs_radial({1.0, 0.5, 0.7}, 2, 6, 3.0)),
                       sym(fit_cs_radial({1.0, 1.0, 0.4}, 3, 3, 3.0))});
  if (s > 1e-12) failed.push_back("conjugate symmetry " + sci(s));
  // momentum
  CuckerSmale cs;
  cs.kernel = {1.0, 1.0, 0.4};
  cs.dim = 2;
  cs.expansion = fit_cs_radial(cs.kernel, 2, 4, 4.0);
  cs.valid_half_width = 2.0;
  auto x = oracle::uniform(4 * 60, -1, 1, 19);
  auto dv = eval_rhs_naive(cs, DenseAdjacency(complete(60)), x);
  double px = 0, py = 0;
  for (std::size_t m = 0; m < 60; ++m) {
    px += dv[4 * m + 2];
    py += dv[4 * m + 3];
  }
  if (std::max(std::abs(px), std::abs(py)) > 1e-12) failed.push_back("momentum " + sci(std::max(std::abs(px), std::abs(py))));
  // phase shift
  auto gen = planted4(30, 0.8, 0.05, 20);
  auto d = decompose(gen.graph, gen.partition);
  Kuramoto k{oracle::uniform(120, -1, 1, 21)};
  auto th = oracle::phases(120, 22);
  auto base = eval_rhs_cia(k, d, th);
  for (double& v : th) v = wrap_phase(v + 1.234);
  double shift = oracle::max_abs_diff(base, eval_rhs_cia(k, d, th));
  if (shift > 1e-12) failed.push_back("phase shift " + sci(shift));
  // integrator orders on x' = -x over [0, 1]
  auto err = [](Scheme sc, double dt) {
    IntegrationPlan p{1.0, dt, sc};
    auto tr = integrate([](std::span<const double> y, std::span<double> dy) -> std::uint64_t {
      dy[0] = -y[0];
      return 1;
    }, {1.0}, p);
    return std::abs(tr.states.back()[0] - std::exp(-1.0));
  };
  double eu = err(Scheme::euler, 0.1) / err(Scheme::euler, 0.05);
  double rk = err(Scheme::rk4, 0.1) / err(Scheme::rk4, 0.05);
  if (!within(eu, 1.7, 2.3) || !within(rk, 12, 20)) failed.push_back("order ratios " + sci(eu) + "/" + sci(rk));
  // spin map
  BornholdtRohlf br{0.5, 2.0};
  std::vector<double> v(200);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i * 13) % 5 < 2 ? -1.0 : 1.0;
  DenseAdjacency a(gen.graph);
  System sys{&d, &a, nullptr};
  std::vector<double> v120(v.begin(), v.begin() + 120);
  bool spins = iterate_map(br, v, 50, 23).states == iterate_map(br, v, 50, 23, RhsMode::naive).states &&
               iterate_map(br, v120, 50, 24, RhsMode::cia, sys).states ==
                   iterate_map(br, v120, 50, 24, RhsMode::naive, sys).states;
  if (!spins) failed.push_back("spin map paths differ");
  std::string detail = "symmetry " + sci(s) + ", momentum " + sci(std::max(std::abs(px), std::abs(py))) +
                       ", shift " + sci(shift) + ", euler " + sci(eu) + ", rk4 " + sci(rk) +
                       ", spin paths " + (spins ? "equal" : "differ");
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  set_quiet(true);
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion all[] = {
      {1, "oracle equivalence", oracle_equivalence},
      {2, "trajectory equivalence", trajectory_equivalence},
      {3, "linear scaling", linear_scaling},
      {4, "quartic to linear", quartic_to_linear},
      {5, "flocking error bound", flocking_bound},
      {6, "decomposition exactness", decomposition_exactness},
      {7, "detection recovery", detection_recovery},
      {8, "rank-one and ring paths", appendix_paths},
      {9, "property suites", properties},
  };
  int failures = 0;
  for (const auto& c : all) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("criterion %d %s: %s - %s [%.1f s]\n", c.id, o.pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
