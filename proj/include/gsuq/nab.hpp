#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gsuq/csv.hpp"
#include "gsuq/error.hpp"
#include "gsuq/grid.hpp"
#include "gsuq/log.hpp"
#include "gsuq/metaspace.hpp"
#include "gsuq/parallel.hpp"
#include "gsuq/pso.hpp"
#include "gsuq/rng.hpp"

namespace gsuq {

/// Sampled models as a Voronoi proxy of the likelihood; cells are taken in
/// the unit-box normalization of the prior.
struct ProxySurface {
  PriorBox box;
  std::vector<std::size_t> ids;
  std::vector<std::vector<double>> points;  // normalized
  std::vector<double> M;

  std::size_t size() const { return points.size(); }
  std::size_t dims() const { return box.dims(); }

  static ProxySurface from_history(std::span<const SampledModel> history, const PriorBox& box) {
    if (history.empty()) throw DomainError("proxy surface needs at least one model");
    ProxySurface s;
    s.box = box;
    for (const auto& m : history) {
      if (m.position.size() != box.dims()) throw DomainError("sampled model has wrong dimension");
      if (!(m.M >= 0.0) || !std::isfinite(m.M)) throw DomainError("sampled model has an invalid misfit");
      s.ids.push_back(m.id);
      s.points.push_back(box.normalize(m.position));
      s.M.push_back(m.M);
    }
    return s;
  }

  /// Nearest model; ties go to the lowest index.
  std::size_t cell_of(std::span<const double> x) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < points.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d) {
        const double e = x[d] - points[j][d];
        d2 += e * e;
      }
      if (d2 < best_d) {
        best_d = d2;
        best = j;
      }
    }
    return best;
  }
};

/// One interval of a 1-D slice through the Voronoi diagram.
struct SliceInterval {
  double lo = 0.0, hi = 0.0;
  std::size_t cell = 0;
};

/// Partition of the axis-`dim` line through x, restricted to [0, 1], into
/// Voronoi cell intersections. Along the line, the squared distance to model
/// j is t^2 + f_j(t) with f_j linear, so the partition is the lower envelope
/// of those lines.
inline std::vector<SliceInterval> voronoi_slice(const ProxySurface& s, std::span<const double> x, std::size_t dim) {
  const std::size_t n = s.size();
  std::vector<double> slope(n), icpt(n);
  for (std::size_t j = 0; j < n; ++j) {
    double r2 = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      if (d == dim) continue;
      const double e = x[d] - s.points[j][d];
      r2 += e * e;
    }
    const double p = s.points[j][dim];
    slope[j] = -2.0 * p;
    icpt[j] = p * p + r2;
  }
  auto value = [&](std::size_t j, double t) { return slope[j] * t + icpt[j]; };

  std::size_t cur = 0;
  for (std::size_t j = 1; j < n; ++j)
    if (value(j, 0.0) < value(cur, 0.0) || (value(j, 0.0) == value(cur, 0.0) && slope[j] < slope[cur])) cur = j;

  std::vector<SliceInterval> out;
  double t = 0.0;
  while (t < 1.0) {
    // Next line to undercut the current one: it must have a smaller slope.
    double t_next = 1.0;
    std::size_t next = cur;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(slope[j] < slope[cur])) continue;
      const double tc = (icpt[j] - icpt[cur]) / (slope[cur] - slope[j]);
      if (!(tc > t)) continue;
      if (tc < t_next || (tc == t_next && next != cur && slope[j] < slope[next])) {
        t_next = tc;
        next = j;
      }
    }
    if (next == cur) t_next = 1.0;
    if (t_next > t) out.push_back({t, std::min(1.0, t_next), cur});
    if (next == cur || t_next >= 1.0) break;
    t = t_next;
    cur = next;
  }
  return out;
}

struct PosteriorEnsemble {
  std::vector<std::size_t> ids;           // surface order
  std::vector<std::size_t> multiplicity;  // per model
  std::vector<double> weights;            // per model, multiplicity / total
  std::vector<std::size_t> resamples;     // surface index of every resample
  std::size_t map_index = 0;
  std::size_t map_id = 0;

  double weight_of(std::size_t id) const {
    for (std::size_t q = 0; q < ids.size(); ++q)
      if (ids[q] == id) return weights[q];
    return 0.0;
  }
};

struct GibbsConfig {
  std::size_t n_walkers = 8;
  std::size_t n_steps = 1250;  // sweeps per walker; 8 x 1250 = 10^4 resamples
  std::uint64_t seed = 0;
};

/// Axis-sweep Gibbs sampler over the piecewise-constant posterior
/// exp(-M_cell). Each full sweep contributes the visited cell as a resample.
inline PosteriorEnsemble gibbs_resample(const ProxySurface& s, const GibbsConfig& cfg) {
  if (cfg.n_walkers < 1 || cfg.n_steps < 1) throw DomainError("gibbs_resample needs walkers and steps >= 1");
  if (s.size() == 0) throw DomainError("empty proxy surface");
  const double m_min = *std::min_element(s.M.begin(), s.M.end());
  const std::size_t dims = s.dims();

  std::vector<std::vector<std::size_t>> visits(cfg.n_walkers);
  parallel_for(cfg.n_walkers, [&](std::size_t w) {
    Rng rng(mix_seed(cfg.seed, 0x6EB5 + w));
    // Walkers start at models spread through the surface in index order.
    std::vector<double> x = s.points[(w * s.size()) / cfg.n_walkers];
    std::size_t cell = s.cell_of(x);
    visits[w].reserve(cfg.n_steps);
    std::vector<double> cum;
    for (std::size_t step = 0; step < cfg.n_steps; ++step) {
      for (std::size_t d = 0; d < dims; ++d) {
        const auto parts = voronoi_slice(s, x, d);
        cum.resize(parts.size());
        double total = 0.0;
        for (std::size_t q = 0; q < parts.size(); ++q) {
          total += std::exp(-(s.M[parts[q].cell] - m_min)) * (parts[q].hi - parts[q].lo);
          cum[q] = total;
        }
        if (!(total > 0.0)) continue;
        const double u = uniform01(rng) * total;
        const auto q = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        const auto& iv = parts[std::min(q, parts.size() - 1)];
        x[d] = iv.lo + uniform01(rng) * (iv.hi - iv.lo);
        cell = iv.cell;
      }
      visits[w].push_back(cell);
    }
  });

  PosteriorEnsemble e;
  e.ids = s.ids;
  e.multiplicity.assign(s.size(), 0);
  for (const auto& v : visits)
    for (auto c : v) {
      e.resamples.push_back(c);
      ++e.multiplicity[c];
    }
  const auto total = static_cast<double>(e.resamples.size());
  e.weights.resize(s.size());
  for (std::size_t q = 0; q < s.size(); ++q) e.weights[q] = static_cast<double>(e.multiplicity[q]) / total;
  e.map_index = static_cast<std::size_t>(std::max_element(e.multiplicity.begin(), e.multiplicity.end()) -
                                         e.multiplicity.begin());
  e.map_id = e.ids[e.map_index];
  return e;
}

struct Histogram {
  std::vector<double> edges;    // n_bins + 1, original units
  std::vector<double> density;  // integrates to 1
};

/// Weighted histogram of resampled model coordinates along one parameter,
/// over that parameter's prior range.
inline Histogram marginal_ppd(const PosteriorEnsemble& e, const ProxySurface& s, std::size_t dim, std::size_t n_bins) {
  if (dim >= s.dims()) throw DomainError("marginal_ppd: parameter index out of range");
  if (n_bins < 1) throw DomainError("marginal_ppd needs at least one bin");
  const auto& p = s.box.params[dim];
  const double width = (p.hi - p.lo) / static_cast<double>(n_bins);
  Histogram h;
  h.edges.resize(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b) h.edges[b] = p.lo + width * static_cast<double>(b);
  h.density.assign(n_bins, 0.0);
  for (std::size_t q = 0; q < s.size(); ++q) {
    if (e.weights[q] == 0.0) continue;
    const auto b = std::min<std::size_t>(n_bins - 1, static_cast<std::size_t>(s.points[q][dim] * n_bins));
    h.density[b] += e.weights[q];
  }
  for (auto& d : h.density) d /= width;
  return h;
}

struct QuantileMaps {
  Volume p10, p50, p90;
};

/// Lower weighted empirical quantile: the smallest value whose cumulative
/// weight reaches p of the total.
inline double weighted_quantile(std::vector<std::pair<double, double>>& value_weight, double p) {
  std::sort(value_weight.begin(), value_weight.end());
  double total = 0.0;
  for (const auto& vw : value_weight) total += vw.second;
  const double target = p * total * (1.0 - 1e-12);
  double cum = 0.0;
  for (const auto& vw : value_weight) {
    cum += vw.second;
    if (vw.second > 0.0 && cum >= target) return vw.first;
  }
  return value_weight.back().first;
}

/// Cell-wise weighted quantiles of a set of congruent volumes.
inline QuantileMaps weighted_quantile_maps(std::span<const Volume* const> volumes, std::span<const double> weights) {
  if (volumes.empty() || volumes.size() != weights.size()) throw DomainError("quantile maps need weighted volumes");
  const Grid3& g = volumes.front()->grid();
  double total = 0.0;
  for (std::size_t q = 0; q < volumes.size(); ++q) {
    if (volumes[q]->grid() != g) throw ConsistencyError("quantile map volumes are not congruent");
    if (!(weights[q] >= 0.0)) throw DomainError("negative quantile weight");
    total += weights[q];
  }
  if (!(total > 0.0)) throw DomainError("quantile weights sum to zero");
  QuantileMaps out{Volume(g), Volume(g), Volume(g)};
  parallel_for(g.ny, [&](std::size_t j) {
    std::vector<std::pair<double, double>> vw(volumes.size());
    for (std::size_t i = 0; i < g.nx; ++i)
      for (std::size_t k = 0; k < g.nz; ++k) {
        const auto n = g.index(i, j, k);
        for (std::size_t q = 0; q < volumes.size(); ++q) vw[q] = {(*volumes[q])[n], weights[q]};
        out.p10[n] = static_cast<float>(weighted_quantile(vw, 0.1));
        out.p50[n] = static_cast<float>(weighted_quantile(vw, 0.5));
        out.p90[n] = static_cast<float>(weighted_quantile(vw, 0.9));
      }
  });
  return out;
}

/// Posterior quantile maps from one volume per model id.
inline QuantileMaps quantile_maps(const PosteriorEnsemble& e, const std::map<std::size_t, Volume>& model_volumes) {
  std::vector<const Volume*> vols;
  std::vector<double> w;
  for (std::size_t q = 0; q < e.ids.size(); ++q) {
    if (e.multiplicity[q] == 0) continue;
    const auto it = model_volumes.find(e.ids[q]);
    if (it == model_volumes.end())
      throw ConsistencyError("no volume for resampled model " + std::to_string(e.ids[q]));
    vols.push_back(&it->second);
    w.push_back(static_cast<double>(e.multiplicity[q]));
  }
  return weighted_quantile_maps(vols, w);
}

/// Fraction of blind-well samples inside [p10, p90] at their cells.
inline double coverage(const QuantileMaps& maps, const WellSet& blind) {
  blind.validate(maps.p10.grid());
  std::size_t n = 0, inside = 0;
  for (const auto& w : blind.wells)
    for (const auto& s : w.samples) {
      ++n;
      if (maps.p10.at(w.i, w.j, s.k) <= s.ip && s.ip <= maps.p90.at(w.i, w.j, s.k)) ++inside;
    }
  if (n == 0) {
    log::warn("coverage: no blind-well samples; reporting 0");
    return 0.0;
  }
  return static_cast<double>(inside) / static_cast<double>(n);
}

inline std::string format_weights(const PosteriorEnsemble& e) {
  std::string out = "id,weight\n";
  for (std::size_t q = 0; q < e.ids.size(); ++q) out += std::to_string(e.ids[q]) + ',' + csv::fmt(e.weights[q]) + '\n';
  return out;
}

inline std::string format_histogram(const Histogram& h) {
  std::string out = "bin_lo,bin_hi,density\n";
  for (std::size_t b = 0; b < h.density.size(); ++b)
    out += csv::fmt(h.edges[b]) + ',' + csv::fmt(h.edges[b + 1]) + ',' + csv::fmt(h.density[b]) + '\n';
  return out;
}

}  // namespace gsuq
