#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "commsim/config.hpp"
#include "commsim/decomposition.hpp"
#include "commsim/detection.hpp"
#include "commsim/error.hpp"
#include "commsim/generators.hpp"
#include "commsim/graph.hpp"
#include "commsim/integrator.hpp"
#include "commsim/models.hpp"
#include "commsim/partition.hpp"

namespace commsim {

struct CommandOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // overrides the config's `seed`
  unsigned jobs = 1;
  std::string out_dir = ".";
  std::ostream* report = &std::cout;
};

namespace detail {

namespace fs = std::filesystem;

/// splitmix64 mixing of (seed, tag) into an independent stream seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct RunContext {
  ConfigFile cfg;
  fs::path base_dir;
  fs::path out_dir;
  std::uint64_t seed = 0;

  fs::path input(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }

  fs::path output(const std::string& key, const std::string& fallback) const {
    return out_dir / cfg.str(key, fallback);
  }
};

inline RunContext load_context(const CommandOptions& o) {
  RunContext ctx;
  if (o.config_path.empty()) throw ConfigError("no config file given (--config PATH)");
  ctx.cfg = ConfigFile::load(o.config_path);
  ctx.base_dir = fs::path(o.config_path).parent_path();
  const long long s = ctx.cfg.integer("seed", 0);
  ctx.seed = o.seed ? *o.seed : static_cast<std::uint64_t>(s);
  ctx.out_dir = o.out_dir.empty() ? fs::path(".") : fs::path(o.out_dir);
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + ctx.out_dir.string() + "': " + ec.message());
  return ctx;
}

inline std::ofstream open_output(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  return out;
}

// ---------------------------------------------------------------------------
// network

struct Network {
  std::optional<Graph> graph;  // absent for scaled networks
  std::optional<Partition> truth;
  std::optional<Decomposition> decomposition;

  std::size_t n_nodes() const { return decomposition->n_nodes(); }
};

inline std::vector<std::size_t> sizes_of(const ConfigFile& cfg, const std::string& key,
                                         std::vector<long long> fallback) {
  std::vector<std::size_t> out;
  for (long long v : cfg.integers(key, fallback)) {
    if (v <= 0) throw ConfigError("key '" + key + "': community sizes must be positive");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError("key '" + key + "' is empty");
  return out;
}

inline double probability(const ConfigFile& cfg, const std::string& key, double fallback) {
  double p = cfg.real(key, fallback);
  if (!(p >= 0 && p <= 1)) throw ConfigError("key '" + key + "' must lie in [0, 1]");
  return p;
}

inline Graph load_graph_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open edge list '" + path.string() + "'");
  return load_edge_list(in);
}

/// Graph (with planted truth when generated) before any partition is chosen.
inline GraphWithPartition source_graph(const RunContext& ctx, const std::string& source,
                                       std::optional<Partition>& truth) {
  const auto& cfg = ctx.cfg;
  if (source == "edges") {
    Graph g = load_graph_file(ctx.input(cfg.require("graph.path")));
    auto n = g.n_nodes();
    return {std::move(g), Partition::single(n)};
  }
  if (source == "planted") {
    auto sizes = sizes_of(cfg, "graph.sizes", {250, 250, 250, 250});
    auto gp = planted_partition_graph(sizes, probability(cfg, "graph.p_in", 0.9),
                                      probability(cfg, "graph.p_out", 0.01),
                                      derive_seed(ctx.seed, 1));
    truth = gp.partition;
    return gp;
  }
  throw ConfigError("unknown graph source '" + source + "' (expected edges, planted, complete or scaled)");
}

inline Partition choose_partition(const RunContext& ctx, const Graph& g,
                                  const std::optional<Partition>& truth) {
  const auto& cfg = ctx.cfg;
  const std::string source = cfg.str("partition.source", truth ? "planted" : "detect");
  if (source == "planted") {
    if (!truth) throw ConfigError("partition.source = planted needs a generated graph");
    return *truth;
  }
  if (source == "detect") {
    DetectionOptions opt;
    opt.gamma = cfg.real("partition.gamma", 1.0);
    long long min_size = cfg.integer("partition.min_size", 2);
    if (min_size < 1) throw ConfigError("partition.min_size must be at least 1");
    opt.min_size = static_cast<std::size_t>(min_size);
    opt.seed = static_cast<std::uint64_t>(
        cfg.integer("partition.seed", static_cast<long long>(derive_seed(ctx.seed, 2) >> 1)));
    opt.max_sweeps = static_cast<std::size_t>(cfg.integer("partition.max_sweeps", 100));
    const std::string nm = cfg.str("partition.null_model", "uniform");
    if (nm == "uniform") opt.null_model = NullModel::uniform;
    else if (nm == "degree") opt.null_model = NullModel::degree;
    else throw ConfigError("unknown null model '" + nm + "' (expected uniform or degree)");
    return detect_communities(g, opt);
  }
  if (source == "file") {
    auto path = ctx.input(cfg.require("partition.path"));
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open partition file '" + path.string() + "'");
    return load_partition(in, g);
  }
  if (source == "single") return Partition::single(g.n_nodes());
  if (source == "none")
    return Partition::from_assignment(std::vector<std::int32_t>(g.n_nodes(), kNoCommunity));
  throw ConfigError("unknown partition source '" + source +
                    "' (expected planted, detect, file, single or none)");
}

inline Network build_network(const RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  const std::string source = cfg.str("graph.source", "planted");
  Network net;
  if (source == "complete") {
    long long n = cfg.integer("graph.n", 100);
    if (n < 1) throw ConfigError("graph.n must be positive");
    net.decomposition = Decomposition(Partition::single(static_cast<std::size_t>(n)), SparseCorrection{});
    return net;
  }
  if (source == "scaled") {
    const std::string base = cfg.str("graph.base", "planted");
    auto gp = source_graph(ctx, base, net.truth);
    Partition p = choose_partition(ctx, gp.graph, net.truth);
    long long factor = cfg.integer("graph.factor", 1);
    if (factor < 1) throw ConfigError("graph.factor must be positive");
    net.decomposition = scale_decomposition(decompose(gp.graph, p), static_cast<std::size_t>(factor),
                                            derive_seed(ctx.seed, 3));
    net.truth.reset();
    return net;
  }
  auto gp = source_graph(ctx, source, net.truth);
  Partition p = choose_partition(ctx, gp.graph, net.truth);
  net.decomposition = decompose(gp.graph, p);
  net.graph = std::move(gp.graph);
  return net;
}

inline DenseAdjacency naive_adjacency(const Network& net, std::size_t cap) {
  const std::size_t n = net.n_nodes();
  if (n > cap) {
    const double mib = static_cast<double>(n) * static_cast<double>(n) / (1024.0 * 1024.0);
    std::ostringstream s;
    s << "naive mode refuses N = " << n << ": the dense adjacency matrix would take "
      << std::fixed << std::setprecision(1) << mib << " MiB (cap N = " << cap << ")";
    throw ConfigError(s.str());
  }
  return net.graph ? DenseAdjacency(*net.graph) : to_dense_adjacency(*net.decomposition);
}

// ---------------------------------------------------------------------------
// models and initial states

inline bool kind_is_map(const std::string& kind) { return kind == "bornholdt_rohlf"; }

inline std::size_t kind_dim(const std::string& kind, const ConfigFile& cfg) {
  if (kind == "cucker_smale") return 2 * static_cast<std::size_t>(cfg.integer("model.dim", 2));
  return 1;
}

inline std::vector<double> initial_state(const std::string& kind, const ConfigFile& cfg,
                                         std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> x;
  if (kind == "bornholdt_rohlf") {
    std::bernoulli_distribution coin(0.5);
    for (std::size_t m = 0; m < n; ++m) x.push_back(coin(rng) ? 1.0 : -1.0);
    return x;
  }
  if (kind == "desai_zwanzig") {
    std::normal_distribution<double> normal(0.0, cfg.real("init.scale", 1.0));
    for (std::size_t m = 0; m < n; ++m) x.push_back(normal(rng));
    return x;
  }
  if (kind == "cucker_smale") {
    const auto nd = static_cast<std::size_t>(cfg.integer("model.dim", 2));
    const double a = cfg.real("init.scale", 1.0);
    std::uniform_real_distribution<double> pos(-a, a);
    std::normal_distribution<double> vel(0.0, cfg.real("init.velocity_scale", 0.1));
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t k = 0; k < nd; ++k) x.push_back(pos(rng));
      for (std::size_t k = 0; k < nd; ++k) x.push_back(vel(rng));
    }
    return x;
  }
  // phases
  const double a = cfg.real("init.scale", 1.0) * std::numbers::pi;
  std::uniform_real_distribution<double> unif(-a, a);
  for (std::size_t m = 0; m < n; ++m) x.push_back(unif(rng));
  return x;
}

inline std::vector<double> frequencies(const ConfigFile& cfg, std::size_t n, std::uint64_t seed) {
  const std::string spec = cfg.str("model.omega", "normal");
  if (spec == "zero") return {};
  if (spec == "normal") {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> w(n);
    for (auto& v : w) v = normal(rng);
    return w;
  }
  try {
    std::size_t used = 0;
    double c = std::stod(spec, &used);
    if (used == spec.size()) return std::vector<double>(n, c);
  } catch (const std::exception&) {
  }
  throw ConfigError("model.omega must be normal, zero or a number, got '" + spec + "'");
}

inline std::vector<double> weights(const ConfigFile& cfg, const std::string& key, std::size_t n,
                                   std::uint64_t seed) {
  const std::string spec = cfg.str(key, "ones");
  if (spec == "ones") return std::vector<double>(n, 1.0);
  if (spec == "uniform") {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> w(n);
    for (auto& v : w) v = u(rng);
    return w;
  }
  throw ConfigError(key + " must be ones or uniform, got '" + spec + "'");
}

/// Largest per-axis position spread plus the drift a velocity spread can add
/// over `horizon`.
inline double flocking_box(std::span<const std::vector<double>> states, std::size_t nd,
                           double horizon) {
  double box = 0;
  for (const auto& x : states) {
    const std::size_t n = x.size() / (2 * nd);
    for (std::size_t k = 0; k < nd; ++k) {
      double plo = INFINITY, phi = -INFINITY, vlo = INFINITY, vhi = -INFINITY;
      for (std::size_t m = 0; m < n; ++m) {
        plo = std::min(plo, x[m * 2 * nd + k]);
        phi = std::max(phi, x[m * 2 * nd + k]);
        vlo = std::min(vlo, x[m * 2 * nd + nd + k]);
        vhi = std::max(vhi, x[m * 2 * nd + nd + k]);
      }
      if (n > 0) box = std::max(box, (phi - plo) + horizon * (vhi - vlo));
    }
  }
  return 1.05 * std::max(box, 1e-6);
}

struct BuiltModel {
  std::string kind;
  std::optional<ModelSpec> spec;
  std::optional<BornholdtRohlf> map;
  double sup_error = 0;  // flocking expansion error on its validity box
};

inline BuiltModel build_model(const std::string& kind, const ConfigFile& cfg, std::size_t n,
                              std::uint64_t seed, std::span<const std::vector<double>> states,
                              double horizon) {
  BuiltModel bm;
  bm.kind = kind;
  if (kind == "kuramoto") {
    bm.spec = Kuramoto{frequencies(cfg, n, derive_seed(seed, 10))};
  } else if (kind == "higher_harmonics") {
    auto dsin = cfg.reals("model.dsin", {1.0});
    auto dcos = cfg.reals("model.dcos", {});
    bm.spec = make_higher_harmonics(dsin, dcos, frequencies(cfg, n, derive_seed(seed, 10)));
  } else if (kind == "desai_zwanzig") {
    const std::string pot = cfg.str("model.potential", "double_well");
    DesaiZwanzig dz;
    if (pot == "harmonic") dz.vprime = [](double x) { return x; };
    else if (pot == "none") dz.vprime = [](double) { return 0.0; };
    else if (pot != "double_well")
      throw ConfigError("model.potential must be double_well, harmonic or none");
    bm.spec = dz;
  } else if (kind == "cucker_smale") {
    FlockingKernel k{cfg.real("model.K", 1.0), cfg.real("model.sigma", 1.0), cfg.real("model.beta", 0.4)};
    const long long dim = cfg.integer("model.dim", 2);
    if (dim < 1 || dim > 3) throw ConfigError("model.dim must be 1, 2 or 3");
    double box = cfg.real("model.box", 0.0);
    if (box <= 0) box = flocking_box(states, static_cast<std::size_t>(dim), horizon);
    const double L = cfg.real("expansion.L", 2 * box);
    if (L < box) throw ConfigError("expansion.L must not be smaller than the validity box");
    if (cfg.has("expansion.p")) {
      CuckerSmale cs;
      cs.kernel = k;
      cs.dim = static_cast<int>(dim);
      cs.valid_half_width = box;
      cs.expansion = fit_cs_radial(k, cs.dim, static_cast<int>(cfg.integer("expansion.p", 8)), L);
      bm.sup_error = cucker_smale_sup_error(cs);
      bm.spec = cs;
    } else {
      const double tol = cfg.real("expansion.tolerance", 1e-3);
      bm.spec = make_cucker_smale(k, static_cast<int>(dim), box, tol, L, nullptr, &bm.sup_error);
    }
  } else if (kind == "higher_order") {
    auto lam = cfg.integers("model.lambda", {1, 1, -1, -1});
    if (lam.size() != 4) throw ConfigError("model.lambda needs four integers");
    HigherOrderKuramoto ho;
    for (std::size_t i = 0; i < 4; ++i) ho.lambda[i] = static_cast<int>(lam[i]);
    bm.spec = ho;
  } else if (kind == "rank_one") {
    bm.spec = RankOneKuramoto{weights(cfg, "model.alpha", n, derive_seed(seed, 11)),
                              weights(cfg, "model.beta", n, derive_seed(seed, 12))};
  } else if (kind == "ring") {
    long long k = cfg.integer("model.k", 1);
    if (k < 1) throw ConfigError("model.k must be at least 1");
    bm.spec = RingKuramoto{static_cast<std::size_t>(k)};
  } else if (kind == "bornholdt_rohlf") {
    bm.map = BornholdtRohlf{cfg.real("model.mu", 0.0), cfg.real("model.noise", 1.0)};
  } else {
    throw ConfigError("unknown model kind '" + kind + "'");
  }
  return bm;
}

inline IntegrationPlan read_plan(const ConfigFile& cfg) {
  IntegrationPlan plan;
  plan.t_end = cfg.real("plan.t_end", 20.0);
  plan.dt = cfg.real("plan.dt", 0.1);
  if (!(plan.dt > 0)) throw ConfigError("plan.dt must be positive");
  if (!(plan.t_end >= 0)) throw ConfigError("plan.t_end must be non-negative");
  plan.scheme = scheme_from_string(cfg.str("plan.scheme", "euler"));
  long long stride = cfg.integer("plan.record_every", 1);
  if (stride < 1) throw ConfigError("plan.record_every must be at least 1");
  plan.record_every = static_cast<std::size_t>(stride);
  return plan;
}

inline std::vector<RhsMode> read_modes(const std::string& spec) {
  if (spec == "both") return {RhsMode::cia, RhsMode::naive};
  return {mode_from_string(spec)};
}

/// Max-norm distance; circular states compare modulo 2 pi.
inline double distance(std::span<const double> a, std::span<const double> b, bool circular) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    if (circular) diff = wrap_phase(diff);
    d = std::max(d, std::abs(diff));
  }
  return d;
}

inline double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return NAN;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

inline std::uint64_t total_evals(const Trajectory& t) {
  std::uint64_t s = 0;
  for (auto e : t.step_evals) s += e;
  return s;
}

inline double total_seconds(const Trajectory& t) {
  double s = 0;
  for (auto e : t.step_seconds) s += e;
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Runs one simulation; writes the trajectory CSV(s) and a summary.
inline int cmd_simulate(const CommandOptions& o) {
  using namespace detail;
  auto ctx = load_context(o);
  const auto& cfg = ctx.cfg;
  auto net = build_network(ctx);
  const std::size_t n = net.n_nodes();
  const std::string kind = cfg.str("model.kind", "kuramoto");
  auto x0 = initial_state(kind, cfg, n, derive_seed(ctx.seed, 20));
  auto plan = read_plan(cfg);
  const std::vector<std::vector<double>> states{x0};
  auto bm = build_model(kind, cfg, n, ctx.seed, states, plan.t_end);
  auto modes = read_modes(cfg.str("plan.mode", "cia"));
  const long long map_steps = cfg.integer("plan.map_steps", 100);
  const auto cap = static_cast<std::size_t>(cfg.integer("plan.naive_cap", 1LL << 15));
  const auto traj_path = ctx.output("output.trajectory", "trajectory.csv");
  const auto summary_path = ctx.output("output.summary", "summary.txt");
  cfg.check_all_used();

  std::optional<DenseAdjacency> adj;
  for (auto m : modes)
    if (m == RhsMode::naive) adj = naive_adjacency(net, cap);
  System sys{&*net.decomposition, adj ? &*adj : nullptr, nullptr};

  std::vector<Trajectory> runs;
  for (auto m : modes) {
    if (bm.map) {
      if (map_steps < 0) throw ConfigError("plan.map_steps must be non-negative");
      runs.push_back(iterate_map(*bm.map, x0, static_cast<std::size_t>(map_steps),
                                 derive_seed(ctx.seed, 30), m, sys, plan.record_every));
    } else {
      IntegrationPlan p = plan;
      p.mode = m;
      runs.push_back(integrate(*bm.spec, sys, x0, p));
    }
  }

  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto path = traj_path;
    if (i > 0) path.replace_filename(path.stem().string() + "_" + to_string(modes[i]) + path.extension().string());
    auto out = open_output(path);
    write_trajectory_csv(out, runs[i]);
  }

  std::ostringstream s;
  s << "model " << kind << '\n'
    << "nodes " << n << '\n'
    << "communities " << net.decomposition->partition().n_communities() << '\n'
    << "unassigned " << net.decomposition->partition().pool_size() << '\n'
    << "sparse_nnz " << net.decomposition->correction().nnz() << '\n'
    << "steps " << runs[0].step_evals.size() << '\n'
    << "snapshots " << runs[0].states.size() << '\n';
  if (bm.spec && std::holds_alternative<CuckerSmale>(*bm.spec)) {
    const auto& cs = std::get<CuckerSmale>(*bm.spec);
    s << "expansion_order " << cs.expansion.order << '\n'
      << "expansion_sup_error " << std::setprecision(6) << bm.sup_error << '\n';
  }
  for (std::size_t i = 0; i < runs.size(); ++i)
    s << "kernel_evals_" << to_string(modes[i]) << ' ' << total_evals(runs[i]) << '\n';
  if (runs.size() == 2) {
    const bool circ = bm.spec ? is_circular(*bm.spec) : false;
    double dev = 0;
    for (std::size_t k = 0; k < runs[0].states.size(); ++k)
      dev = std::max(dev, distance(runs[0].states[k], runs[1].states[k], circ));
    s << "max_deviation " << std::setprecision(6) << std::scientific << dev << std::defaultfloat << '\n';
  }
  for (std::size_t i = 0; i < runs.size(); ++i)
    s << "wall_seconds_" << to_string(modes[i]) << ' ' << std::setprecision(6) << total_seconds(runs[i]) << '\n';
  s << "\nstep,mode,seconds,kernel_evals\n";
  for (std::size_t i = 0; i < runs.size(); ++i)
    for (std::size_t k = 0; k < runs[i].step_seconds.size(); ++k)
      s << k + 1 << ',' << to_string(modes[i]) << ',' << std::setprecision(6)
        << runs[i].step_seconds[k] << ',' << runs[i].step_evals[k] << '\n';
  auto out = open_output(summary_path);
  out << s.str();
  // the per-step block is long; the console gets the header part only
  auto text = s.str();
  *o.report << text.substr(0, text.find("\nstep,")) << '\n';
  return 0;
}

struct BenchRow {
  std::string model;
  std::string mode;
  std::size_t n = 0;
  double median_seconds = 0;
  std::uint64_t kernel_evals = 0;
};

struct BenchSlope {
  std::string model;
  std::string mode;
  double time_slope = NAN;
  double count_slope = NAN;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<BenchSlope> slopes;
};

inline void write_bench_csv(std::ostream& out, const BenchResult& r) {
  out << "model,mode,N,median_seconds,kernel_evals\n";
  for (const auto& row : r.rows)
    out << row.model << ',' << row.mode << ',' << row.n << ',' << std::setprecision(6)
        << row.median_seconds << ',' << row.kernel_evals << '\n';
  out << "\nmodel,mode,time_slope,count_slope\n";
  for (const auto& s : r.slopes)
    out << s.model << ',' << s.mode << ',' << std::setprecision(4) << std::fixed << s.time_slope
        << ',' << s.count_slope << std::defaultfloat << '\n';
}

/// Scaling benchmark over bench.n_list for every (model, mode) cell.
inline BenchResult run_bench(const detail::RunContext& ctx, unsigned jobs) {
  using namespace detail;
  const auto& cfg = ctx.cfg;
  auto models = cfg.strings("bench.models", {"kuramoto"});
  std::vector<RhsMode> modes;
  for (const auto& m : cfg.strings("bench.modes", {"cia", "naive"})) modes.push_back(mode_from_string(m));
  std::vector<std::size_t> ns;
  for (long long v : cfg.integers("bench.n_list", {1024, 2048, 4096, 8192})) {
    if (v < 1) throw ConfigError("bench.n_list entries must be positive");
    ns.push_back(static_cast<std::size_t>(v));
  }
  const auto repeats = static_cast<std::size_t>(std::max(1LL, cfg.integer("bench.repeats", 3)));
  const auto naive_cap = static_cast<std::size_t>(cfg.integer("bench.naive_cap", 1LL << 15));
  const auto cia_cap = static_cast<std::size_t>(cfg.integer("bench.cia_cap", 1LL << 40));
  const long long steps = cfg.integer("bench.steps", 10);
  if (steps < 1) throw ConfigError("bench.steps must be positive");
  const double dt = cfg.real("bench.dt", 0.01);
  const std::string graph = cfg.str("bench.graph", "scaled");
  std::optional<Decomposition> base;
  if (graph == "scaled") {
    auto sizes = sizes_of(cfg, "graph.sizes", {256, 256, 256, 256});
    auto gp = planted_partition_graph(sizes, probability(cfg, "graph.p_in", 0.95),
                                      probability(cfg, "graph.p_out", 0.01), derive_seed(ctx.seed, 1));
    base = decompose(gp.graph, gp.partition);
    for (auto n : ns)
      if (n % base->n_nodes() != 0)
        throw ConfigError("bench.n_list entry " + std::to_string(n) +
                          " is not a multiple of the base network size " + std::to_string(base->n_nodes()));
  } else if (graph != "complete") {
    throw ConfigError("bench.graph must be scaled or complete");
  }
  // model parameters are read once here so unknown-key checking sees them
  for (const auto& kind : models) {
    std::vector<std::vector<double>> probe{initial_state(kind, cfg, 2, 0)};
    build_model(kind, cfg, 2, ctx.seed, probe, 0.0);
  }
  cfg.check_all_used();

  struct Cell {
    std::string model;
    RhsMode mode;
    std::size_t n;
  };
  std::vector<Cell> cells;
  for (const auto& kind : models)
    for (auto mode : modes)
      for (auto n : ns) {
        if (mode == RhsMode::naive && n > naive_cap) continue;
        if (mode == RhsMode::cia && n > cia_cap) continue;
        cells.push_back({kind, mode, n});
      }

  std::vector<BenchRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= cells.size()) return;
      try {
        const auto& cell = cells[i];
        const std::uint64_t cell_seed = derive_seed(ctx.seed, 100 + cell.n);
        Decomposition d = graph == "scaled"
                              ? scale_decomposition(*base, cell.n / base->n_nodes(), cell_seed)
                              : Decomposition(Partition::single(cell.n), SparseCorrection{});
        std::optional<DenseAdjacency> adj;
        if (cell.mode == RhsMode::naive) adj = to_dense_adjacency(d);
        System sys{&d, adj ? &*adj : nullptr, nullptr};
        auto x0 = initial_state(cell.model, cfg, cell.n, derive_seed(cell_seed, 20));
        std::vector<std::vector<double>> st{x0};
        IntegrationPlan plan;
        plan.dt = dt;
        plan.t_end = dt * static_cast<double>(steps);
        plan.record_every = static_cast<std::size_t>(steps);
        plan.mode = cell.mode;
        auto bm = build_model(cell.model, cfg, cell.n, cell_seed, st, plan.t_end);
        std::vector<double> times;
        std::uint64_t evals = 0;
        for (std::size_t r = 0; r < repeats; ++r) {
          auto t0 = std::chrono::steady_clock::now();
          Trajectory tr = bm.map ? iterate_map(*bm.map, x0, static_cast<std::size_t>(steps),
                                               derive_seed(cell_seed, 30), cell.mode, sys)
                                 : integrate(*bm.spec, sys, x0, plan);
          times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
          evals = total_evals(tr);
        }
        std::sort(times.begin(), times.end());
        rows[i] = {cell.model, to_string(cell.mode), cell.n, times[times.size() / 2], evals};
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!failure) failure = std::current_exception();
        next = cells.size();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  BenchResult result;
  result.rows = rows;
  for (const auto& kind : models)
    for (auto mode : modes) {
      std::vector<double> x, t, c;
      for (const auto& r : rows)
        if (r.model == kind && r.mode == to_string(mode)) {
          x.push_back(static_cast<double>(r.n));
          t.push_back(std::max(r.median_seconds, 1e-9));
          c.push_back(static_cast<double>(std::max<std::uint64_t>(r.kernel_evals, 1)));
        }
      if (x.size() >= 2) result.slopes.push_back({kind, to_string(mode), log_slope(x, t), log_slope(x, c)});
    }
  return result;
}

inline int cmd_bench_scaling(const CommandOptions& o) {
  auto ctx = detail::load_context(o);
  const auto path = ctx.output("output.bench", "bench.csv");
  auto result = run_bench(ctx, o.jobs);
  auto out = detail::open_output(path);
  write_bench_csv(out, result);
  write_bench_csv(*o.report, result);
  return 0;
}

struct CompareReport {
  std::string model;
  std::size_t nodes = 0;
  std::size_t states = 0;
  double max_deviation = 0;
  double mean_deviation = 0;
  double sup_error = NAN;        // flocking only
  double max_speed_diff = NAN;   // flocking only
  double worst_bound_ratio = NAN;
  bool within_bound = true;
};

inline CompareReport run_compare(const detail::RunContext& ctx) {
  using namespace detail;
  const auto& cfg = ctx.cfg;
  auto net = build_network(ctx);
  const std::size_t n = net.n_nodes();
  const std::string kind = cfg.str("model.kind", "kuramoto");
  const long long count = cfg.integer("compare.n_states", 100);
  if (count < 1) throw ConfigError("compare.n_states must be positive");
  auto modes = cfg.strings("compare.modes", {"cia", "naive"});
  if (modes.size() != 2) throw ConfigError("compare.modes needs exactly two modes");
  const RhsMode a_mode = mode_from_string(modes[0]), b_mode = mode_from_string(modes[1]);
  const auto cap = static_cast<std::size_t>(cfg.integer("plan.naive_cap", 1LL << 15));
  std::vector<std::vector<double>> states;
  for (long long s = 0; s < count; ++s)
    states.push_back(initial_state(kind, cfg, n, derive_seed(ctx.seed, 1000 + static_cast<std::uint64_t>(s))));
  auto bm = build_model(kind, cfg, n, ctx.seed, states, 0.0);
  cfg.check_all_used();

  std::optional<DenseAdjacency> adj;
  if (a_mode == RhsMode::naive || b_mode == RhsMode::naive) adj = naive_adjacency(net, cap);
  System sys{&*net.decomposition, adj ? &*adj : nullptr, nullptr};

  CompareReport rep;
  rep.model = kind;
  rep.nodes = n;
  rep.states = states.size();
  const bool flocking = bm.spec && std::holds_alternative<CuckerSmale>(*bm.spec);
  if (flocking) {
    rep.sup_error = bm.sup_error;
    rep.max_speed_diff = 0;
    rep.worst_bound_ratio = 0;
  }
  double sum = 0;
  for (std::size_t s = 0; s < states.size(); ++s) {
    std::vector<double> da, db;
    if (bm.map) {
      std::mt19937_64 ra(derive_seed(ctx.seed, 2000 + s)), rb(derive_seed(ctx.seed, 2000 + s));
      auto step = [&](RhsMode m, std::mt19937_64& rng) {
        return m == RhsMode::cia ? bornholdt_rohlf_step(*bm.map, *sys.decomposition, states[s], rng)
                                 : bornholdt_rohlf_step_naive(*bm.map, *sys.adjacency, states[s], rng);
      };
      da = step(a_mode, ra);
      db = step(b_mode, rb);
    } else {
      auto fa = make_rhs(*bm.spec, sys, a_mode), fb = make_rhs(*bm.spec, sys, b_mode);
      da.resize(states[s].size());
      db.resize(states[s].size());
      fa(states[s], da);
      fb(states[s], db);
    }
    const double dev = distance(da, db, false);
    rep.max_deviation = std::max(rep.max_deviation, dev);
    sum += dev;
    if (flocking) {
      const auto& cs = std::get<CuckerSmale>(*bm.spec);
      const auto nd = static_cast<std::size_t>(cs.dim);
      double speed = 0;
      const auto& x = states[s];
      for (std::size_t k = 0; k < nd; ++k) {
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t m = 0; m < n; ++m) {
          lo = std::min(lo, x[m * 2 * nd + nd + k]);
          hi = std::max(hi, x[m * 2 * nd + nd + k]);
        }
        speed = std::max(speed, (hi - lo) * std::sqrt(static_cast<double>(nd)));
      }
      rep.max_speed_diff = std::max(rep.max_speed_diff, speed);
      const double bound = bm.sup_error * speed + 1e-9;
      rep.worst_bound_ratio = std::max(rep.worst_bound_ratio, dev / bound);
      if (dev > bound) rep.within_bound = false;
    }
  }
  rep.mean_deviation = sum / static_cast<double>(states.size());
  return rep;
}

inline int cmd_compare(const CommandOptions& o) {
  auto ctx = detail::load_context(o);
  const auto path = ctx.output("output.report", "compare.txt");
  const double tol = ctx.cfg.real("compare.tolerance", -1.0);
  auto rep = run_compare(ctx);
  std::ostringstream s;
  s << std::setprecision(6) << "model " << rep.model << '\n'
    << "nodes " << rep.nodes << '\n'
    << "states " << rep.states << '\n'
    << "max_deviation " << std::scientific << rep.max_deviation << '\n'
    << "mean_deviation " << rep.mean_deviation << '\n';
  if (!std::isnan(rep.sup_error))
    s << "expansion_sup_error " << rep.sup_error << '\n'
      << "max_speed_difference " << rep.max_speed_diff << '\n'
      << "worst_deviation_to_bound " << rep.worst_bound_ratio << '\n'
      << "within_bound " << (rep.within_bound ? "yes" : "no") << '\n';
  bool ok = rep.within_bound;
  if (tol >= 0) {
    s << "tolerance " << tol << '\n';
    ok = ok && rep.max_deviation <= tol;
  }
  s << "result " << (ok ? "pass" : "fail") << '\n';
  auto out = detail::open_output(path);
  out << s.str();
  *o.report << s.str();
  return ok ? 0 : 1;
}

inline int cmd_detect(const CommandOptions& o) {
  using namespace detail;
  auto ctx = load_context(o);
  const auto& cfg = ctx.cfg;
  const std::string source = cfg.str("graph.source", "edges");
  if (source != "edges" && source != "planted")
    throw ConfigError("detect needs graph.source = edges or planted");
  std::optional<Partition> truth;
  auto gp = source_graph(ctx, source, truth);
  if (!cfg.has("partition.source")) ctx.cfg.set("partition.source", "detect");
  const double gamma = cfg.real("partition.gamma", 1.0);
  const std::string nm = cfg.str("partition.null_model", "uniform");
  Partition p = choose_partition(ctx, gp.graph, truth);
  const auto part_path = ctx.output("output.partition", "partition.txt");
  const auto report_path = ctx.output("output.report", "detect.txt");
  cfg.check_all_used();

  auto d = decompose(gp.graph, p);
  const double n = static_cast<double>(gp.graph.n_nodes());
  std::ostringstream s;
  s << "nodes " << gp.graph.n_nodes() << '\n'
    << "edges " << gp.graph.n_edges() << '\n'
    << "communities " << p.n_communities() << '\n'
    << "sizes";
  for (auto sz : p.sizes()) s << ' ' << sz;
  s << '\n' << "unassigned " << p.pool_size() << '\n';
  if (!(nm == "degree" && gp.graph.n_edges() == 0))
    s << "hamiltonian " << std::setprecision(10)
      << rb_hamiltonian(gp.graph, p, gamma, nm == "degree" ? NullModel::degree : NullModel::uniform) << '\n';
  s << "sparse_stored " << d.correction().stored() << '\n'
    << "sparse_nnz " << d.correction().nnz() << '\n'
    << "sparse_fraction " << std::setprecision(6) << static_cast<double>(d.correction().nnz()) / (n * n) << '\n';
  if (truth) s << "label_agreement " << label_agreement(*truth, p) << '\n';
  {
    auto out = open_output(part_path);
    write_partition(out, gp.graph, p);
  }
  auto out = open_output(report_path);
  out << s.str();
  *o.report << s.str();
  return 0;
}

/// Runs a subcommand and maps failures to exit codes: 1 for numeric or
/// domain failures, 2 for configuration and I/O problems.
inline int run_command(const std::string& name, const CommandOptions& o,
                       std::ostream& err = std::cerr) {
  try {
    if (name == "simulate") return cmd_simulate(o);
    if (name == "bench-scaling") return cmd_bench_scaling(o);
    if (name == "compare") return cmd_compare(o);
    if (name == "detect") return cmd_detect(o);
    err << "commsim: unknown command '" << name << "'\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "commsim: config error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "commsim: parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::ios_base::failure& e) {
    err << "commsim: i/o error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "commsim: i/o error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "commsim: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace commsim
