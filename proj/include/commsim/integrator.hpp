#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "commsim/decomposition.hpp"
#include "commsim/error.hpp"
#include "commsim/graph.hpp"
#include "commsim/models.hpp"

namespace commsim {

enum class Scheme { euler, rk4 };
enum class RhsMode { cia, naive };

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "euler") return Scheme::euler;
  if (s == "rk4") return Scheme::rk4;
  throw ConfigError("unknown scheme '" + s + "' (expected euler or rk4)");
}

inline RhsMode mode_from_string(const std::string& s) {
  if (s == "cia") return RhsMode::cia;
  if (s == "naive") return RhsMode::naive;
  throw ConfigError("unknown rhs mode '" + s + "' (expected cia or naive)");
}

inline std::string to_string(RhsMode m) { return m == RhsMode::cia ? "cia" : "naive"; }

struct IntegrationPlan {
  double t_end = 20.0;
  double dt = 0.1;
  Scheme scheme = Scheme::euler;
  std::size_t record_every = 1;
  RhsMode mode = RhsMode::cia;

  std::size_t steps() const {
    if (!(dt > 0) || !std::isfinite(dt)) throw DomainError("plan: dt must be positive");
    if (!(t_end >= 0) || !std::isfinite(t_end)) throw DomainError("plan: t_end must be non-negative");
    // tolerate T/dt landing a rounding error above an integer
    return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  }
};

struct Trajectory {
  std::size_t dim = 1;  // components per node
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::vector<double> step_seconds;
  std::vector<std::uint64_t> step_evals;
};

/// Right-hand side callback; the returned value is the number of kernel
/// evaluations it performed.
using RhsFn = std::function<std::uint64_t(std::span<const double>, std::span<double>)>;

/// Fixed-step Euler or RK4 over [0, T]. `post_step` runs after each full
/// step (phase wrapping).
inline Trajectory integrate(const RhsFn& rhs, std::vector<double> x, const IntegrationPlan& plan,
                            std::size_t dim = 1,
                            const std::function<void(std::span<double>)>& post_step = {}) {
  const std::size_t steps = plan.steps();
  const std::size_t stride = plan.record_every == 0 ? 1 : plan.record_every;
  const std::size_t len = x.size();
  Trajectory tr;
  tr.dim = dim;
  tr.times.push_back(0.0);
  tr.states.push_back(x);
  std::vector<double> k1(len), k2, k3, k4, tmp;
  if (plan.scheme == Scheme::rk4) {
    k2.resize(len);
    k3.resize(len);
    k4.resize(len);
    tmp.resize(len);
  }
  using clock = std::chrono::steady_clock;
  for (std::size_t step = 1; step <= steps; ++step) {
    const double t0 = plan.dt * static_cast<double>(step - 1);
    const double t1 = step == steps ? plan.t_end : plan.dt * static_cast<double>(step);
    const double h = t1 - t0;
    const auto start = clock::now();
    std::uint64_t evals = rhs(x, k1);
    if (plan.scheme == Scheme::euler) {
      for (std::size_t i = 0; i < len; ++i) x[i] += h * k1[i];
    } else {
      for (std::size_t i = 0; i < len; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
      evals += rhs(tmp, k2);
      for (std::size_t i = 0; i < len; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
      evals += rhs(tmp, k3);
      for (std::size_t i = 0; i < len; ++i) tmp[i] = x[i] + h * k3[i];
      evals += rhs(tmp, k4);
      for (std::size_t i = 0; i < len; ++i)
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (post_step) post_step(x);
    tr.step_seconds.push_back(std::chrono::duration<double>(clock::now() - start).count());
    tr.step_evals.push_back(evals);
    for (std::size_t i = 0; i < len; ++i)
      if (!std::isfinite(x[i]))
        throw NumericError("state became non-finite at step " + std::to_string(step) + " (t = " +
                           detail::fmt(t1) + ", node " + std::to_string(i / dim) + ")");
    if (step % stride == 0 || step == steps) {
      tr.times.push_back(t1);
      tr.states.push_back(x);
    }
  }
  return tr;
}

/// The network a model runs on. CIA mode needs the decomposition, naive mode
/// the adjacency matrix (plus the partition for the higher-order model).
struct System {
  const Decomposition* decomposition = nullptr;
  const DenseAdjacency* adjacency = nullptr;
  const Partition* partition = nullptr;
};

inline RhsFn make_rhs(const ModelSpec& model, const System& sys, RhsMode mode) {
  if (mode == RhsMode::cia) {
    if (!sys.decomposition) throw ConfigError("cia mode needs a decomposition");
    auto ws = std::make_shared<RhsWorkspace>();
    return [&model, d = sys.decomposition, ws](std::span<const double> x, std::span<double> dx) {
      ws->counter.reset();
      eval_rhs_cia(model, *d, x, dx, *ws);
      return ws->counter.evals;
    };
  }
  if (!sys.adjacency) throw ConfigError("naive mode needs an adjacency matrix");
  const Partition* part = sys.partition;
  if (!part && sys.decomposition) part = &sys.decomposition->partition();
  return [&model, a = sys.adjacency, part](std::span<const double> x, std::span<double> dx) {
    KernelCounter c;
    eval_rhs_naive(model, *a, x, dx, &c, part);
    return c.evals;
  };
}

inline Trajectory integrate(const ModelSpec& model, const System& sys, std::vector<double> x0,
                            const IntegrationPlan& plan) {
  const std::size_t dim = state_dim(model);
  if (x0.size() % dim) throw DomainError("initial state size is not a multiple of the state dimension");
  std::function<void(std::span<double>)> wrap;
  if (is_circular(model)) {
    const auto* g = std::get_if<GenericModel>(&model);
    const double L = g ? g->expansion.half_width : std::numbers::pi;
    wrap = [L](std::span<double> x) {
      for (auto& v : x) v = wrap_phase(v * std::numbers::pi / L) * L / std::numbers::pi;
    };
  }
  return integrate(make_rhs(model, sys, plan.mode), std::move(x0), plan, dim, wrap);
}

/// Iterates the spin map for `steps` steps. With no decomposition and no
/// adjacency the coupling is all-to-all.
inline Trajectory iterate_map(const BornholdtRohlf& br, std::vector<double> v0, std::size_t steps,
                              std::uint64_t seed, RhsMode mode = RhsMode::cia,
                              const System& sys = {}, std::size_t record_every = 1) {
  std::mt19937_64 rng(seed);
  Trajectory tr;
  tr.times.push_back(0.0);
  tr.states.push_back(v0);
  if (record_every == 0) record_every = 1;
  using clock = std::chrono::steady_clock;
  for (std::size_t step = 1; step <= steps; ++step) {
    KernelCounter c;
    const auto start = clock::now();
    if (mode == RhsMode::cia) {
      v0 = sys.decomposition ? bornholdt_rohlf_step(br, *sys.decomposition, v0, rng, &c)
                             : bornholdt_rohlf_step(br, v0, rng, &c);
    } else {
      v0 = sys.adjacency ? bornholdt_rohlf_step_naive(br, *sys.adjacency, v0, rng, &c)
                         : bornholdt_rohlf_step_naive(br, v0, rng, &c);
    }
    tr.step_seconds.push_back(std::chrono::duration<double>(clock::now() - start).count());
    tr.step_evals.push_back(c.evals);
    if (step % record_every == 0 || step == steps) {
      tr.times.push_back(static_cast<double>(step));
      tr.states.push_back(v0);
    }
  }
  return tr;
}

/// Long-form CSV `t,node,component,value`.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
  out << "t,node,component,value\n" << std::setprecision(17);
  for (std::size_t s = 0; s < tr.states.size(); ++s) {
    const auto& x = tr.states[s];
    for (std::size_t i = 0; i < x.size(); ++i)
      out << tr.times[s] << ',' << i / tr.dim << ',' << i % tr.dim << ',' << x[i] << '\n';
  }
}

/// Per-step timing block `step,seconds,kernel_evals`.
inline void write_timing_csv(std::ostream& out, const Trajectory& tr) {
  out << "step,seconds,kernel_evals\n" << std::setprecision(9);
  for (std::size_t s = 0; s < tr.step_seconds.size(); ++s)
    out << s + 1 << ',' << tr.step_seconds[s] << ',' << tr.step_evals[s] << '\n';
}

}  // namespace commsim
