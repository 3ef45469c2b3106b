#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsuq/csv.hpp"
#include "gsuq/error.hpp"
#include "gsuq/log.hpp"
#include "gsuq/metaspace.hpp"
#include "gsuq/parallel.hpp"
#include "gsuq/rng.hpp"

namespace gsuq {

/// Swarm member. Coordinates are normalized to the unit box of the prior.
struct Particle {
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> best_position;
  double M = std::numeric_limits<double>::infinity();
  double best_M = std::numeric_limits<double>::infinity();
};

struct GlobalBest {
  std::vector<double> position;
  double M = std::numeric_limits<double>::infinity();
};

/// One evaluated point of the metaparameter space, in original units.
struct SampledModel {
  std::size_t id = 0;
  std::vector<double> position;
  double M = 0.0;
  double log_likelihood = 0.0;
  std::size_t iteration = 0;  // 1-based
};

struct PsoConfig {
  std::size_t swarm_size = 20;
  std::size_t n_iterations = 10;
  double inertia = 0.72;
  double c1 = 1.49;
  double c2 = 1.49;
  std::vector<std::size_t> restart_at;  // 1-based iteration numbers
  double restart_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (swarm_size < 1) throw ConfigError("pso swarm_size must be >= 1");
    if (n_iterations < 1) throw ConfigError("pso n_iterations must be >= 1");
    if (!(inertia >= 0.0 && inertia < 1.0)) throw ConfigError("pso inertia must lie in [0, 1)");
    if (!(c1 > 0.0) || !(c2 > 0.0)) throw ConfigError("pso c1 and c2 must be positive");
    if (!(restart_fraction > 0.0 && restart_fraction <= 1.0)) throw ConfigError("pso restart_fraction must lie in (0, 1]");
    for (auto it : restart_at)
      if (it < 2) throw ConfigError("pso restart iterations must be >= 2");
  }
};

namespace detail {

// Folds x into [0, 1] by mirror reflection; returns true when the number of
// reflections is odd, i.e. the velocity must change sign.
inline bool reflect_unit(double& x) {
  if (x >= 0.0 && x <= 1.0) return false;
  double t = std::fmod(x, 2.0);
  if (t < 0.0) t += 2.0;
  if (t <= 1.0) {
    x = t;
    return false;
  }
  x = 2.0 - t;
  return true;
}

}  // namespace detail

inline Particle random_particle(std::size_t dims, Rng& rng) {
  Particle p;
  p.position.resize(dims);
  for (auto& x : p.position) x = uniform01(rng);
  p.velocity.assign(dims, 0.0);
  p.best_position = p.position;
  return p;
}

/// Velocity and position update; personal and global bests are left to
/// record_evaluation and update_global_best.
inline void step(std::vector<Particle>& swarm, const GlobalBest& gbest, const PsoConfig& cfg, Rng& rng) {
  for (auto& p : swarm) {
    for (std::size_t d = 0; d < p.position.size(); ++d) {
      const double u1 = uniform01(rng), u2 = uniform01(rng);
      const double g = gbest.position.empty() ? p.best_position[d] : gbest.position[d];
      double v = cfg.inertia * p.velocity[d] + cfg.c1 * u1 * (p.best_position[d] - p.position[d]) +
                 cfg.c2 * u2 * (g - p.position[d]);
      double x = p.position[d] + v;
      if (detail::reflect_unit(x)) v = -v;
      p.position[d] = x;
      p.velocity[d] = v;
    }
  }
}

inline void record_evaluation(Particle& p, double M) {
  p.M = M;
  if (M < p.best_M) {
    p.best_M = M;
    p.best_position = p.position;
  }
}

inline void update_global_best(const std::vector<Particle>& swarm, GlobalBest& gbest) {
  for (const auto& p : swarm)
    if (p.best_M < gbest.M) {
      gbest.M = p.best_M;
      gbest.position = p.best_position;
    }
}

inline double mean_pairwise_distance(const std::vector<Particle>& swarm) {
  if (swarm.size() < 2) return 0.0;
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t a = 0; a < swarm.size(); ++a)
    for (std::size_t b = a + 1; b < swarm.size(); ++b, ++n) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < swarm[a].position.size(); ++d) {
        const double e = swarm[a].position[d] - swarm[b].position[d];
        d2 += e * e;
      }
      s += std::sqrt(d2);
    }
  return s / static_cast<double>(n);
}

/// Replaces the worst `fraction` of the swarm (by current misfit, ties to the
/// lower index) with fresh uniform particles. Returns the replaced indices.
inline std::vector<std::size_t> inject_particles(std::vector<Particle>& swarm, double fraction, Rng& rng) {
  const auto n = std::min(swarm.size(),
                          static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(swarm.size()) - 1e-9)));
  std::vector<std::size_t> order(swarm.size());
  for (std::size_t q = 0; q < order.size(); ++q) order[q] = q;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return swarm[a].M > swarm[b].M; });
  order.resize(n);
  std::sort(order.begin(), order.end());
  for (auto q : order) swarm[q] = random_particle(swarm[q].position.size(), rng);
  return order;
}

/// Misfit of one metaparameter vector (original units). The id is the
/// history id the evaluation will be stored under.
using Evaluator = std::function<double(const std::vector<double>& position, std::size_t id)>;

/// Called after each iteration with the evaluated swarm.
using SwarmObserver = std::function<void(std::size_t iteration, const std::vector<Particle>& swarm, bool restarted)>;

/// PSO over the prior box; returns every evaluation in order.
inline std::vector<SampledModel> run_sampling(const PriorBox& prior, const Evaluator& evaluate, const PsoConfig& cfg,
                                              const SwarmObserver& observe = {}) {
  cfg.validate();
  // Only the bounds matter here, so generic boxes (benchmarks) are accepted.
  if (prior.dims() == 0) throw ConfigError("pso needs at least one dimension");
  for (const auto& p : prior.params)
    if (!(p.lo < p.hi) || !std::isfinite(p.lo) || !std::isfinite(p.hi))
      throw ConfigError("prior parameter " + p.name + " needs finite lo < hi");
  const std::size_t dims = prior.dims();
  Rng rng(mix_seed(cfg.seed, 0x9507));
  std::vector<Particle> swarm;
  swarm.reserve(cfg.swarm_size);
  for (std::size_t p = 0; p < cfg.swarm_size; ++p) swarm.push_back(random_particle(dims, rng));
  GlobalBest gbest;
  std::vector<SampledModel> history;
  history.reserve(cfg.swarm_size * cfg.n_iterations);

  for (std::size_t it = 1; it <= cfg.n_iterations; ++it) {
    bool restarted = false;
    if (it > 1) {
      step(swarm, gbest, cfg, rng);
      if (std::find(cfg.restart_at.begin(), cfg.restart_at.end(), it) != cfg.restart_at.end()) {
        const auto replaced = inject_particles(swarm, cfg.restart_fraction, rng);
        log::info("pso iteration " + std::to_string(it) + ": injected " + std::to_string(replaced.size()) +
                  " fresh particles");
        restarted = true;
      }
    }
    const std::size_t base = (it - 1) * cfg.swarm_size;
    std::vector<double> M(swarm.size());
    parallel_for(swarm.size(), [&](std::size_t p) {
      const std::size_t id = base + p;
      try {
        M[p] = evaluate(prior.denormalize(swarm[p].position), id);
      } catch (const std::exception& first) {
        log::warn("evaluation " + std::to_string(id) + " failed (" + first.what() + "); redrawing the particle");
        Rng redraw(mix_seed(cfg.seed, 0xBAD0000 + id));
        swarm[p] = random_particle(dims, redraw);
        try {
          M[p] = evaluate(prior.denormalize(swarm[p].position), id);
        } catch (const std::exception& second) {
          throw Error("evaluation " + std::to_string(id) + " failed twice: " + second.what());
        }
      }
      if (!(M[p] >= 0.0) || !std::isfinite(M[p]))
        throw DomainError("evaluation " + std::to_string(id) + " returned an invalid misfit");
    });
    for (std::size_t p = 0; p < swarm.size(); ++p) {
      record_evaluation(swarm[p], M[p]);
      history.push_back({base + p, prior.denormalize(swarm[p].position), M[p], -M[p], it});
    }
    update_global_best(swarm, gbest);
    log::info("pso iteration " + std::to_string(it) + ": best misfit " + csv::fmt(gbest.M));
    if (observe) observe(it, swarm, restarted);
  }
  return history;
}

/// Best misfit seen up to and including each evaluation.
inline std::vector<double> best_so_far(std::span<const SampledModel> history) {
  std::vector<double> out(history.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < history.size(); ++n) out[n] = best = std::min(best, history[n].M);
  return out;
}

inline std::string format_history(std::span<const SampledModel> history, const PriorBox& prior) {
  std::string out = "id,iteration";
  for (const auto& p : prior.params) out += ',' + p.name;
  out += ",misfit\n";
  for (const auto& m : history) {
    out += std::to_string(m.id) + ',' + std::to_string(m.iteration);
    for (double x : m.position) out += ',' + csv::fmt(x);
    out += ',' + csv::fmt(m.M) + '\n';
  }
  return out;
}

/// Reads a history CSV; parameter columns are matched to the prior by name.
inline std::vector<SampledModel> read_history(const std::string& path, const PriorBox& prior) {
  const auto table = csv::read_table(path);
  const auto cid = table.column("id"), cit = table.column("iteration"), cm = table.column("misfit");
  std::vector<std::size_t> cols;
  for (const auto& p : prior.params) cols.push_back(table.column(p.name));
  std::vector<SampledModel> out;
  for (const auto& row : table.rows) {
    SampledModel m;
    const auto id = csv::to_int(row[cid]), it = csv::to_int(row[cit]);
    if (id < 0 || it < 1) throw FormatError(path + ": bad id or iteration");
    m.id = static_cast<std::size_t>(id);
    m.iteration = static_cast<std::size_t>(it);
    for (auto c : cols) m.position.push_back(csv::to_double(row[c]));
    m.M = csv::to_double(row[cm]);
    if (!(m.M >= 0.0)) throw FormatError(path + ": misfit must be non-negative");
    m.log_likelihood = -m.M;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace gsuq
