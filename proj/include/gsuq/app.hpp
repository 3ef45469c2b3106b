#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gsuq/config.hpp"
#include "gsuq/csv.hpp"
#include "gsuq/dss.hpp"
#include "gsuq/error.hpp"
#include "gsuq/forward.hpp"
#include "gsuq/grid.hpp"
#include "gsuq/gsi.hpp"
#include "gsuq/log.hpp"
#include "gsuq/metaspace.hpp"
#include "gsuq/nab.hpp"
#include "gsuq/pso.hpp"
#include "gsuq/stats.hpp"
#include "gsuq/synthetic.hpp"
#include "gsuq/variogram.hpp"

namespace gsuq {

namespace fs = std::filesystem;

struct Dataset {
  Volume observed;
  WellSet wells;
  Wavelet wavelet;
  std::optional<Volume> true_ip;
};

inline Dataset load_dataset(const RunConfig& cfg) {
  Dataset d;
  if (cfg.use_synthetic) {
    auto s = generate_synthetic(cfg.synthetic);
    d.observed = std::move(s.observed);
    d.wells = std::move(s.wells);
    d.wavelet = std::move(s.wavelet);
    d.true_ip = std::move(s.true_ip);
  } else {
    d.observed = read_volume(cfg.observed_path);
    d.wells = read_wells(cfg.wells_path);
    d.wavelet = read_wavelet(cfg.wavelet_path);
  }
  d.wells.validate(d.observed.grid());
  check_wavelet_grid(d.wavelet, d.observed.grid());
  return d;
}

inline std::vector<double> well_values(const WellSet& w) {
  std::vector<double> v;
  for (const auto& well : w.wells)
    for (const auto& s : well.samples) v.push_back(s.ip);
  return v;
}

namespace detail {

inline void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw IoError("cannot create output directory " + p.string());
}

inline void require_disjoint(const WellSet& conditioning, const WellSet& blind) {
  for (const auto& b : blind.wells)
    if (conditioning.find(b.name)) throw ConsistencyError("blind well " + b.name + " reached a conditioning set");
}

inline std::string volume_stats_line(const std::string& name, const Volume& v) {
  const auto s = volume_stats(v);
  return name + ": mean " + csv::fmt(s.mean) + ", variance " + csv::fmt(s.variance) + ", min " + csv::fmt(s.min) +
         ", max " + csv::fmt(s.max) + '\n';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// synth

inline void write_synthetic(const SyntheticDataset& s, const fs::path& out) {
  detail::ensure_dir(out);
  write_volume((out / "true_ip.gsuq").string(), s.true_ip);
  write_volume((out / "observed.gsuq").string(), s.observed);
  write_volume((out / "facies.gsuq").string(), s.facies);
  write_wells((out / "wells.csv").string(), s.wells);
  write_wavelet((out / "wavelet.csv").string(), s.wavelet);
  const Grid3& g = s.true_ip.grid();
  std::string noisy = "i,j,noisy\n";
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i)
      noisy += std::to_string(i) + ',' + std::to_string(j) + ',' + std::to_string(int(s.noisy_trace[g.trace_index(i, j)])) + '\n';
  csv::write_text((out / "noisy_traces.csv").string(), noisy);
  csv::write_text((out / "variogram_i.csv").string(),
                  format_variogram_csv(grid_variogram(s.true_ip, 1, 0, 0, std::max<std::size_t>(1, g.nx / 2))));
  csv::write_text((out / "variogram_k.csv").string(),
                  format_variogram_csv(grid_variogram(s.true_ip, 0, 0, 1, std::max<std::size_t>(1, g.nz / 2))));
  std::string summary = detail::volume_stats_line("true_ip", s.true_ip);
  std::vector<float> logs;
  for (double x : well_values(s.wells)) logs.push_back(static_cast<float>(x));
  if (!logs.empty()) {
    const auto st = stats_of(logs);
    summary += "well logs: mean " + csv::fmt(st.mean) + ", variance " + csv::fmt(st.variance) + ", min " +
               csv::fmt(st.min) + ", max " + csv::fmt(st.max) + '\n';
  }
  summary += "wells: " + std::to_string(s.wells.wells.size()) + '\n';
  csv::write_text((out / "summary.txt").string(), summary);
}

// ---------------------------------------------------------------------------
// Conventional GSI

struct ConventionalOutcome {
  GsiReport report;
  WellSet conditioning, blind;
  double envelope_coverage = 0.0;  // blind samples inside the final min-max envelope
  std::vector<double> pooled;      // all cells of all final realizations
};

inline SimulationPlan base_plan(const RunConfig& cfg, const Dataset& d, const WellSet& conditioning) {
  SimulationPlan p;
  p.grid = d.observed.grid();
  p.neighborhood = cfg.neighborhood;
  p.conditioning = conditioning;
  return p;
}

/// Per-sample table of blind-well logs against every realization (the well
/// section plot data) and the fraction of samples inside the min-max envelope.
inline double blind_well_table(const std::vector<Volume>& ensemble, const WellSet& blind, std::string* csv_out) {
  std::string out = "well,i,j,k,true_ip";
  for (std::size_t r = 0; r < ensemble.size(); ++r) out += ",real_" + std::to_string(r);
  out += ",min,max\n";
  std::size_t n = 0, inside = 0;
  for (const auto& w : blind.wells)
    for (const auto& s : w.samples) {
      float lo = INFINITY, hi = -INFINITY;
      out += w.name + ',' + std::to_string(w.i) + ',' + std::to_string(w.j) + ',' + std::to_string(s.k) + ',' +
             csv::fmt(s.ip);
      for (const auto& v : ensemble) {
        const float x = v.at(w.i, w.j, s.k);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        out += ',' + csv::fmt(x);
      }
      out += ',' + csv::fmt(lo) + ',' + csv::fmt(hi) + '\n';
      ++n;
      if (lo <= s.ip && s.ip <= hi) ++inside;
    }
  if (csv_out) *csv_out = std::move(out);
  if (n == 0) {
    log::warn("no blind-well samples; envelope coverage reported as 0");
    return 0.0;
  }
  return static_cast<double>(inside) / static_cast<double>(n);
}

inline ConventionalOutcome run_conventional(const RunConfig& cfg, const Dataset& d, const fs::path& out) {
  detail::ensure_dir(out);
  ConventionalOutcome o;
  std::tie(o.conditioning, o.blind) = cfg.split_wells(d.wells);
  detail::require_disjoint(o.conditioning, o.blind);

  SimulationPlan plan = base_plan(cfg, d, o.conditioning);
  plan.seed = mix_seed(cfg.seed, 0xC0117);
  plan.model = cfg.conventional.variogram;
  if (cfg.conventional.target == TargetSource::gmm) {
    plan.target = build_target(cfg.conventional.gmm, cfg.target_points);
  } else {
    const auto v = well_values(o.conditioning);
    if (v.size() < 2) throw ConfigError("conventional target 'wells' needs at least two conditioning samples");
    plan.target = TargetDistribution::from_samples(v);
  }
  GsiConfig gcfg = cfg.gsi;
  gcfg.persist_dir = (out / "realizations").string();
  o.report = run_gsi(plan, d.observed, d.wavelet, gcfg);

  csv::write_text((out / "gsi_diagnostics.csv").string(), format_gsi_diagnostics(o.report));
  write_volume((out / "best_realization.gsuq").string(), o.report.best_realization);
  write_volume((out / "best_synthetic.gsuq").string(), o.report.best_synthetic);
  write_volume((out / "ensemble_mean.gsuq").string(), ensemble_mean(o.report.final_ensemble));
  std::string table;
  o.envelope_coverage = blind_well_table(o.report.final_ensemble, o.blind, &table);
  csv::write_text((out / "blind_wells.csv").string(), table);
  for (const auto& v : o.report.final_ensemble)
    for (float x : v.values()) o.pooled.push_back(x);

  std::string summary;
  summary += "final global cc: " + csv::fmt(o.report.iterations.back().global_cc_best) + '\n';
  summary += "iterations: " + std::to_string(o.report.iterations.size()) + '\n';
  summary += "conditioning wells: " + std::to_string(o.conditioning.wells.size()) + '\n';
  summary += "blind wells: " + std::to_string(o.blind.wells.size()) + '\n';
  summary += "blind envelope coverage: " + csv::fmt(o.envelope_coverage) + '\n';
  csv::write_text((out / "summary.txt").string(), summary);
  return o;
}

// ---------------------------------------------------------------------------
// Multi-scale run: PSO over the metaparameters, one GSI per evaluation.

struct EvaluationRecord {
  std::size_t id = 0;
  double global_cc_best = 0.0;
  double mean_trace_cc = 0.0;
};

struct NabOutcome {
  PosteriorEnsemble ensemble;
  QuantileMaps maps;
  double coverage = 0.0;
  std::vector<double> pooled;  // all cells of p10, p50 and p90
};

struct MultiscaleOutcome {
  std::vector<SampledModel> history;
  std::vector<EvaluationRecord> evaluations;
  WellSet conditioning, blind;
  NabOutcome nab;
};

/// Loads the volumes NAB needs for one model id: its ensemble mean, or its
/// final members.
using ModelVolumes = std::function<std::vector<Volume>(std::size_t id)>;

inline std::string model_file(std::size_t id) { return "model_" + std::to_string(id) + ".gsuq"; }
inline std::string member_file(std::size_t id, std::size_t r) {
  return "model_" + std::to_string(id) + "_r" + std::to_string(r) + ".gsuq";
}

inline ModelVolumes disk_volumes(const fs::path& dir, QuantileSource source) {
  return [dir, source](std::size_t id) {
    std::vector<Volume> out;
    if (source == QuantileSource::mean) {
      const auto p = dir / model_file(id);
      if (!fs::exists(p)) throw ConsistencyError("no volume for resampled model " + std::to_string(id));
      out.push_back(read_volume(p.string()));
      return out;
    }
    for (std::size_t r = 0;; ++r) {
      const auto p = dir / member_file(id, r);
      if (!fs::exists(p)) break;
      out.push_back(read_volume(p.string()));
    }
    if (out.empty()) throw ConsistencyError("no member volumes for resampled model " + std::to_string(id));
    return out;
  };
}

/// Plot-ready report files for a sampled history and, when available, its
/// posterior.
inline void emit_report(const fs::path& out, const PriorBox& prior, std::span<const SampledModel> history,
                        const PosteriorEnsemble* ens) {
  detail::ensure_dir(out / "parameters");
  std::string mis = "id,iteration,misfit,best_so_far\n";
  const auto best = best_so_far(history);
  for (std::size_t n = 0; n < history.size(); ++n)
    mis += std::to_string(history[n].id) + ',' + std::to_string(history[n].iteration) + ',' + csv::fmt(history[n].M) +
           ',' + csv::fmt(best[n]) + '\n';
  csv::write_text((out / "misfit_vs_iteration.csv").string(), mis);

  std::map<std::size_t, double> weight;
  if (ens)
    for (std::size_t q = 0; q < ens->ids.size(); ++q) weight[ens->ids[q]] = ens->weights[q];
  for (std::size_t d = 0; d < prior.dims(); ++d) {
    std::string p = "id,iteration,value,misfit,weight\n";
    for (const auto& m : history)
      p += std::to_string(m.id) + ',' + std::to_string(m.iteration) + ',' + csv::fmt(m.position[d]) + ',' +
           csv::fmt(m.M) + ',' + csv::fmt(weight.count(m.id) ? weight[m.id] : 0.0) + '\n';
    csv::write_text((out / "parameters" / (prior.params[d].name + ".csv")).string(), p);
  }
  std::string join = "id,iteration";
  for (const auto& p : prior.params) join += ',' + p.name;
  join += ",misfit,weight\n";
  for (const auto& m : history) {
    join += std::to_string(m.id) + ',' + std::to_string(m.iteration);
    for (double x : m.position) join += ',' + csv::fmt(x);
    join += ',' + csv::fmt(m.M) + ',' + csv::fmt(weight.count(m.id) ? weight[m.id] : 0.0) + '\n';
  }
  csv::write_text((out / "parameter_vs_misfit.csv").string(), join);
}

inline std::string blind_envelope_csv(const QuantileMaps& maps, const WellSet& blind) {
  std::string out = "well,i,j,k,true_ip,p10,p50,p90,inside\n";
  for (const auto& w : blind.wells)
    for (const auto& s : w.samples) {
      const float lo = maps.p10.at(w.i, w.j, s.k), hi = maps.p90.at(w.i, w.j, s.k);
      out += w.name + ',' + std::to_string(w.i) + ',' + std::to_string(w.j) + ',' + std::to_string(s.k) + ',' +
             csv::fmt(s.ip) + ',' + csv::fmt(lo) + ',' + csv::fmt(maps.p50.at(w.i, w.j, s.k)) + ',' + csv::fmt(hi) +
             ',' + std::to_string(int(lo <= s.ip && s.ip <= hi)) + '\n';
    }
  return out;
}

/// NAB post-processing of a sampled history.
inline NabOutcome run_nab(const RunConfig& cfg, const PriorBox& prior, std::span<const SampledModel> history,
                          const ModelVolumes& volumes, const Dataset& d, const WellSet& blind, const fs::path& out) {
  detail::ensure_dir(out / "marginals");
  NabOutcome o;
  const auto surface = ProxySurface::from_history(history, prior);
  o.ensemble = gibbs_resample(surface, cfg.nab.gibbs);
  csv::write_text((out / "weights.csv").string(), format_weights(o.ensemble));
  for (std::size_t dim = 0; dim < prior.dims(); ++dim)
    csv::write_text((out / "marginals" / (prior.params[dim].name + ".csv")).string(),
                    format_histogram(marginal_ppd(o.ensemble, surface, dim, cfg.nab.n_bins)));

  std::vector<Volume> store;
  std::vector<double> w;
  for (std::size_t q = 0; q < o.ensemble.ids.size(); ++q) {
    if (o.ensemble.multiplicity[q] == 0) continue;
    auto vols = volumes(o.ensemble.ids[q]);
    for (auto& v : vols) {
      if (v.grid() != d.observed.grid()) throw ConsistencyError("model volume is not congruent with the seismic grid");
      store.push_back(std::move(v));
      w.push_back(o.ensemble.weights[q] / static_cast<double>(vols.size()));
    }
  }
  std::vector<const Volume*> ptrs;
  for (const auto& v : store) ptrs.push_back(&v);
  o.maps = weighted_quantile_maps(ptrs, w);
  write_volume((out / "p10.gsuq").string(), o.maps.p10);
  write_volume((out / "p50.gsuq").string(), o.maps.p50);
  write_volume((out / "p90.gsuq").string(), o.maps.p90);
  o.coverage = coverage(o.maps, blind);
  csv::write_text((out / "blind_envelope.csv").string(), blind_envelope_csv(o.maps, blind));
  for (const Volume* v : {&o.maps.p10, &o.maps.p50, &o.maps.p90})
    for (float x : v->values()) o.pooled.push_back(x);
  csv::write_text((out / "histogram_comparison.csv").string(),
                  format_histograms({"wells", "posterior_p10_p50_p90"}, {well_values(d.wells), o.pooled}, 30));

  emit_report(out, prior, history, &o.ensemble);

  const auto& map_model = history[o.ensemble.map_index];
  std::string summary = "map id: " + std::to_string(o.ensemble.map_id) + '\n';
  summary += "map weight: " + csv::fmt(o.ensemble.weights[o.ensemble.map_index]) + '\n';
  for (std::size_t dim = 0; dim < prior.dims(); ++dim)
    summary += "map " + prior.params[dim].name + ": " + csv::fmt(map_model.position[dim]) + '\n';
  summary += "map misfit: " + csv::fmt(map_model.M) + '\n';
  summary += "resamples: " + std::to_string(o.ensemble.resamples.size()) + '\n';
  summary += "blind p10-p90 coverage: " + csv::fmt(o.coverage) + '\n';
  summary += "ks(posterior pooled, wells): " + csv::fmt(ks_distance(o.pooled, well_values(d.wells))) + '\n';
  csv::write_text((out / "nab_summary.txt").string(), summary);
  return o;
}

inline MultiscaleOutcome run_multiscale(const RunConfig& cfg, const Dataset& d, const fs::path& out) {
  if (!cfg.prior) throw ConfigError("invert-multiscale needs a [prior] section");
  const PriorBox& prior = *cfg.prior;
  detail::ensure_dir(out / "models");
  MultiscaleOutcome o;
  std::tie(o.conditioning, o.blind) = cfg.split_wells(d.wells);
  detail::require_disjoint(o.conditioning, o.blind);

  MaterializeOptions mopt;
  mopt.kind = cfg.kind;
  mopt.azimuth_deg = cfg.azimuth_deg;
  mopt.target_points = cfg.target_points;
  const fs::path models = out / "models";

  std::mutex mutex;
  std::map<std::size_t, EvaluationRecord> records;
  const Evaluator evaluate = [&](const std::vector<double>& position, std::size_t id) {
    const auto model = materialize(prior, MetaVector{position}, mopt);
    SimulationPlan plan = base_plan(cfg, d, o.conditioning);
    detail::require_disjoint(plan.conditioning, o.blind);
    plan.seed = mix_seed(cfg.seed, 0xE7A10000ULL + id);
    plan.model = model.variogram;
    plan.target = model.target;
    GsiConfig g = cfg.inner_gsi;
    g.persist = false;
    const auto rep = run_gsi(plan, d.observed, d.wavelet, g);
    const double M = misfit(d.observed, rep.best_synthetic, cfg.sigma2).M;
    write_volume((models / model_file(id)).string(), ensemble_mean(rep.final_ensemble));
    if (cfg.nab.source == QuantileSource::members)
      for (std::size_t r = 0; r < rep.final_ensemble.size(); ++r)
        write_volume((models / member_file(id, r)).string(), rep.final_ensemble[r]);
    std::lock_guard lock(mutex);
    records[id] = {id, rep.iterations.back().global_cc_best, rep.iterations.back().mean_trace_cc};
    return M;
  };
  o.history = run_sampling(prior, evaluate, cfg.pso);
  csv::write_text((out / "history.csv").string(), format_history(o.history, prior));
  std::string ev = "id,global_cc_best,mean_trace_cc\n";
  for (const auto& [id, r] : records) {
    o.evaluations.push_back(r);
    ev += std::to_string(id) + ',' + csv::fmt(r.global_cc_best) + ',' + csv::fmt(r.mean_trace_cc) + '\n';
  }
  csv::write_text((out / "evaluations.csv").string(), ev);

  o.nab = run_nab(cfg, prior, o.history, disk_volumes(models, cfg.nab.source), d, o.blind, out);
  return o;
}

/// `nab` subcommand: post-process an existing history and its model volumes.
inline NabOutcome run_nab_only(const RunConfig& cfg, const Dataset& d, const fs::path& out) {
  if (!cfg.prior) throw ConfigError("nab needs a [prior] section");
  const std::string hist = cfg.nab.history.empty() ? (out / "history.csv").string() : cfg.nab.history;
  const fs::path models = cfg.nab.models_dir.empty() ? out / "models" : fs::path(cfg.nab.models_dir);
  if (!fs::exists(hist)) throw ConfigError("nab: history file not found: " + hist);
  const auto history = read_history(hist, *cfg.prior);
  if (history.empty()) throw ConfigError("nab: history is empty");
  const auto [conditioning, blind] = cfg.split_wells(d.wells);
  return run_nab(cfg, *cfg.prior, history, disk_volumes(models, cfg.nab.source), d, blind, out);
}

// ---------------------------------------------------------------------------
// compare: conventional and multi-scale runs on the same data.

struct CompareOutcome {
  ConventionalOutcome conventional;
  MultiscaleOutcome multiscale;
  double ks_conventional = 0.0;  // pooled final ensemble vs all well logs
  double ks_multiscale = 0.0;    // pooled P10/P50/P90 vs all well logs
};

inline CompareOutcome run_compare(const RunConfig& cfg, const Dataset& d, const fs::path& out) {
  detail::ensure_dir(out);
  CompareOutcome c;
  c.conventional = run_conventional(cfg, d, out / "conventional");
  c.multiscale = run_multiscale(cfg, d, out / "multiscale");
  const auto logs = well_values(d.wells);
  c.ks_conventional = ks_distance(c.conventional.pooled, logs);
  c.ks_multiscale = ks_distance(c.multiscale.nab.pooled, logs);
  std::string t = "metric,conventional,multiscale\n";
  t += "blind_coverage," + csv::fmt(c.conventional.envelope_coverage) + ',' + csv::fmt(c.multiscale.nab.coverage) + '\n';
  t += "ks_to_well_logs," + csv::fmt(c.ks_conventional) + ',' + csv::fmt(c.ks_multiscale) + '\n';
  csv::write_text((out / "comparison.csv").string(), t);
  csv::write_text((out / "histogram_comparison.csv").string(),
                  format_histograms({"wells", "conventional", "multiscale_p10_p50_p90"},
                                    {logs, c.conventional.pooled, c.multiscale.nab.pooled}, 30));
  std::string s;
  s += "conventional blind coverage (min-max envelope): " + csv::fmt(c.conventional.envelope_coverage) + '\n';
  s += "multiscale blind coverage (p10-p90): " + csv::fmt(c.multiscale.nab.coverage) + '\n';
  s += "ks conventional vs wells: " + csv::fmt(c.ks_conventional) + '\n';
  s += "ks multiscale vs wells: " + csv::fmt(c.ks_multiscale) + '\n';
  csv::write_text((out / "summary.txt").string(), s);
  return c;
}

}  // namespace gsuq
