#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gsuq/error.hpp"
#include "gsuq/grid.hpp"
#include "gsuq/kriging.hpp"
#include "gsuq/log.hpp"
#include "gsuq/parallel.hpp"
#include "gsuq/rng.hpp"
#include "gsuq/target.hpp"
#include "gsuq/variogram.hpp"

namespace gsuq {

/// Secondary data for co-simulation: a congruent volume and the local
/// primary/secondary correlation at every cell.
struct SecondaryData {
  Volume volume;
  Volume cc;
};

struct SimulationPlan {
  Grid3 grid;
  std::uint64_t seed = 0;
  std::size_t n_realizations = 1;
  Neighborhood neighborhood;
  VariogramModel model;
  TargetDistribution target;
  WellSet conditioning;
  std::optional<SecondaryData> secondary;

  void validate() const {
    grid.validate();
    if (n_realizations < 1) throw DomainError("n_realizations must be >= 1");
    neighborhood.validate();
    model.validate();
    if (target.support().size() < 2) throw DomainError("simulation plan has no target distribution");
    conditioning.validate(grid);
    if (secondary) {
      if (secondary->volume.grid() != grid || secondary->cc.grid() != grid)
        throw DomainError("secondary volumes are not congruent with the simulation grid");
      if (!secondary->volume.all_finite() || !secondary->cc.all_finite())
        throw DomainError("secondary volumes contain non-finite values");
    }
  }
};

/// Seed of realization r; distinct (seed, r) give independent streams.
inline std::uint64_t realization_seed(std::uint64_t seed, std::size_t r) { return mix_seed(seed, r); }

inline std::vector<std::size_t> random_path(const Grid3& grid, std::uint64_t seed) {
  std::vector<std::size_t> path(grid.size());
  for (std::size_t n = 0; n < path.size(); ++n) path[n] = n;
  Rng rng(seed);
  // Fisher-Yates with an unbiased bounded draw.
  for (std::size_t n = path.size(); n > 1; --n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do x = rng();
    while (x >= limit);
    std::swap(path[n - 1], path[x % bound]);
  }
  return path;
}

namespace detail {

struct Offset {
  int di, dj, dk;
};

// Search template and covariance lookup shared by all realizations of a plan.
class SimulationKernel {
 public:
  SimulationKernel(const Grid3& grid, const VariogramModel& model, const Neighborhood& hood)
      : grid_(grid), model_(model) {
    VariogramModel search = model;
    const Vec3 radii = hood.radii_for(model);
    search.a1 = radii[0];
    search.a2 = radii[1];
    search.a3 = radii[2];
    // Bounding box of the search ellipsoid in cells.
    const double rh = std::max(radii[0], radii[1]);
    ri_ = std::min<int>(static_cast<int>(std::ceil(rh / grid.dx)), static_cast<int>(grid.nx) - 1);
    rj_ = std::min<int>(static_cast<int>(std::ceil(rh / grid.dy)), static_cast<int>(grid.ny) - 1);
    rk_ = std::min<int>(static_cast<int>(std::ceil(radii[2] / grid.dz)), static_cast<int>(grid.nz) - 1);
    std::vector<std::pair<double, Offset>> cand;
    for (int dj = -rj_; dj <= rj_; ++dj)
      for (int di = -ri_; di <= ri_; ++di)
        for (int dk = -rk_; dk <= rk_; ++dk) {
          if (di == 0 && dj == 0 && dk == 0) continue;
          const Vec3 h = lag(di, dj, dk);
          if (search.normalized_distance(h) > 1.0) continue;
          cand.emplace_back(model.normalized_distance(h), Offset{di, dj, dk});
        }
    std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    template_.reserve(cand.size());
    for (const auto& c : cand) template_.push_back(c.second);

    // Differences between two template members span twice the half-widths.
    li_ = std::min(2 * ri_, static_cast<int>(grid.nx) - 1);
    lj_ = std::min(2 * rj_, static_cast<int>(grid.ny) - 1);
    lk_ = std::min(2 * rk_, static_cast<int>(grid.nz) - 1);
    const std::size_t table = static_cast<std::size_t>(2 * li_ + 1) * (2 * lj_ + 1) * (2 * lk_ + 1);
    if (table <= (std::size_t{1} << 23)) {
      cov_.resize(table);
      for (int dj = -lj_; dj <= lj_; ++dj)
        for (int di = -li_; di <= li_; ++di)
          for (int dk = -lk_; dk <= lk_; ++dk) cov_[slot(di, dj, dk)] = covariance(model_, lag(di, dj, dk));
    }
  }

  const std::vector<Offset>& search_template() const { return template_; }

  double cov(int di, int dj, int dk) const {
    if (!cov_.empty()) return cov_[slot(di, dj, dk)];
    return covariance(model_, lag(di, dj, dk));
  }

 private:
  Vec3 lag(int di, int dj, int dk) const {
    return {static_cast<double>(di) * grid_.dx, static_cast<double>(dj) * grid_.dy, static_cast<double>(dk) * grid_.dz};
  }
  std::size_t slot(int di, int dj, int dk) const {
    return static_cast<std::size_t>(dk + lk_) +
           static_cast<std::size_t>(2 * lk_ + 1) *
               (static_cast<std::size_t>(di + li_) + static_cast<std::size_t>(2 * li_ + 1) * (dj + lj_));
  }

  Grid3 grid_;
  VariogramModel model_;
  int ri_ = 0, rj_ = 0, rk_ = 0, li_ = 0, lj_ = 0, lk_ = 0;
  std::vector<Offset> template_;
  std::vector<double> cov_;
};

}  // namespace detail

/// Kriging model used by DSS: the plan's structure rescaled so that its total
/// variance equals the target variance.
inline VariogramModel scaled_to_target(VariogramModel model, const TargetDistribution& target) {
  const double f = target.variance() / model.total();
  model.sill *= f;
  model.nugget *= f;
  return model;
}

struct SimulationStats {
  std::size_t clamped_means = 0;
};

/// One realization of direct sequential (co-)simulation.
inline Volume simulate_realization(const SimulationPlan& plan, const DssSampler& sampler,
                                   const detail::SimulationKernel& kernel, std::size_t r,
                                   SimulationStats* stats = nullptr) {
  const Grid3& g = plan.grid;
  const TargetDistribution& target = sampler.target();
  const double mean = target.mean();
  const double c0 = target.variance();
  std::vector<double> values(g.size(), 0.0);
  std::vector<std::uint8_t> known(g.size(), 0);

  for (const auto& w : plan.conditioning.wells)
    for (const auto& s : w.samples) {
      const auto n = g.index(w.i, w.j, s.k);
      values[n] = static_cast<double>(s.ip);
      known[n] = 1;
    }

  double sec_mean = 0.0, sec_sigma = 0.0;
  if (plan.secondary) {
    const auto st = volume_stats(plan.secondary->volume);
    sec_mean = st.mean;
    sec_sigma = std::sqrt(st.variance);
  }
  const bool use_secondary = plan.secondary && sec_sigma > 0.0;

  const std::uint64_t seed = realization_seed(plan.seed, r);
  const auto path = random_path(g, seed);
  Rng rng(mix_seed(seed, 0xD55));

  const auto& tmpl = kernel.search_template();
  const std::size_t max_data = plan.neighborhood.max_data;
  std::vector<detail::Offset> found;
  found.reserve(max_data);
  std::vector<double> kmat, cvec, resid;
  KrigingWorkspace ws;
  std::size_t clamped = 0;

  for (const std::size_t node : path) {
    if (known[node]) continue;
    const int k = static_cast<int>(node % g.nz);
    const int i = static_cast<int>((node / g.nz) % g.nx);
    const int j = static_cast<int>(node / (std::size_t{g.nz} * g.nx));

    found.clear();
    for (const auto& o : tmpl) {
      const int ti = i + o.di, tj = j + o.dj, tk = k + o.dk;
      if (!g.contains(ti, tj, tk)) continue;
      if (!known[g.index(ti, tj, tk)]) continue;
      found.push_back(o);
      if (found.size() == max_data) break;
    }
    const std::size_t n = found.size();
    kmat.resize(n * n);
    cvec.resize(n);
    resid.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
      const auto& oa = found[a];
      for (std::size_t b = 0; b < n; ++b) {
        const auto& ob = found[b];
        kmat[a * n + b] = kernel.cov(oa.di - ob.di, oa.dj - ob.dj, oa.dk - ob.dk);
      }
      cvec[a] = kernel.cov(oa.di, oa.dj, oa.dk);
      resid[a] = values[g.index(i + oa.di, j + oa.dj, k + oa.dk)] - mean;
    }

    CollocatedSecondary sec;
    const CollocatedSecondary* sec_ptr = nullptr;
    if (use_secondary) {
      sec.cc = plan.secondary->cc[node];
      sec.residual = plan.secondary->volume[node] - sec_mean;
      sec.sigma_secondary = sec_sigma;
      sec_ptr = &sec;
    }
    KrigingResult kr;
    try {
      kr = krige_from_covariances(kmat, cvec, resid, mean, c0, sec_ptr, ws);
    } catch (const DegenerateError& e) {
      throw DegenerateError(std::string(e.what()) + " (realization " + std::to_string(r) + ", node " +
                            std::to_string(node) + ", " + std::to_string(n) + " neighbors)");
    }
    const auto draw = sampler.sample(kr, uniform01(rng));
    if (draw.clamped) ++clamped;
    values[node] = draw.value;
    known[node] = 1;
  }
  if (clamped > 0)
    log::debug("realization " + std::to_string(r) + ": " + std::to_string(clamped) +
               " kriging means clamped to the target support");
  if (stats) stats->clamped_means = clamped;

  std::vector<float> out(values.size());
  for (std::size_t n = 0; n < values.size(); ++n) out[n] = static_cast<float>(values[n]);
  return Volume(g, std::move(out));
}

inline std::vector<Volume> simulate(const SimulationPlan& plan, const DssSampler& sampler) {
  plan.validate();
  const VariogramModel model = scaled_to_target(plan.model, sampler.target());
  const detail::SimulationKernel kernel(plan.grid, model, plan.neighborhood);
  std::vector<Volume> out(plan.n_realizations);
  parallel_for(plan.n_realizations, [&](std::size_t r) { out[r] = simulate_realization(plan, sampler, kernel, r); });
  return out;
}

inline std::vector<Volume> simulate(const SimulationPlan& plan) {
  const DssSampler sampler(plan.target);
  return simulate(plan, sampler);
}

}  // namespace gsuq
