#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gsuq/dss.hpp"
#include "gsuq/error.hpp"
#include "gsuq/forward.hpp"
#include "gsuq/grid.hpp"
#include "gsuq/log.hpp"

namespace gsuq {

/// Best trace of the ensemble at every column, with its correlation to the
/// observed seismic broadcast down the column.
struct AuxiliaryVolumes {
  Volume best_ip;
  Volume best_cc;
  std::vector<double> trace_cc;         // per trace, Grid3::trace_index order
  std::vector<std::size_t> winner;      // realization index that won each trace
};

struct GsiConfig {
  std::size_t n_iterations = 6;
  std::size_t ensemble_size = 32;
  double cc_stop = 1.0;
  bool persist = false;
  std::string persist_dir;

  void validate() const {
    if (n_iterations < 1) throw ConfigError("gsi n_iterations must be >= 1");
    if (ensemble_size < 1) throw ConfigError("gsi ensemble_size must be >= 1");
    if (!(cc_stop >= 0.0 && cc_stop <= 1.0)) throw ConfigError("gsi cc_stop must lie in [0, 1]");
  }
};

struct GsiIteration {
  double global_cc_best = 0.0;  // best global correlation of any member
  double mean_trace_cc = 0.0;   // mean over traces of the best per-trace cc
  double median_trace_cc = 0.0;
  std::size_t members = 0;
};

struct GsiReport {
  std::vector<GsiIteration> iterations;
  std::vector<Volume> final_ensemble;
  Volume best_synthetic;
  Volume best_realization;
  AuxiliaryVolumes final_aux;
};

inline AuxiliaryVolumes select_best_from_synthetics(std::span<const Volume> ensemble, std::span<const Volume> synthetics,
                                                    const Volume& observed) {
  if (ensemble.empty() || ensemble.size() != synthetics.size()) throw DomainError("select_best needs an ensemble");
  const Grid3& g = observed.grid();
  for (std::size_t r = 0; r < ensemble.size(); ++r)
    if (ensemble[r].grid() != g || synthetics[r].grid() != g) throw DomainError("ensemble is not congruent");
  AuxiliaryVolumes aux{Volume(g), Volume(g), std::vector<double>(g.traces(), -2.0),
                       std::vector<std::size_t>(g.traces(), 0)};
  for (std::size_t r = 0; r < ensemble.size(); ++r) {
    const auto cc = trace_ccs(synthetics[r], observed);
    for (std::size_t t = 0; t < cc.size(); ++t)
      if (cc[t] > aux.trace_cc[t]) {  // strict: ties keep the lowest index
        aux.trace_cc[t] = cc[t];
        aux.winner[t] = r;
      }
  }
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t t = g.trace_index(i, j);
      const auto src = ensemble[aux.winner[t]].trace(i, j);
      std::copy(src.begin(), src.end(), aux.best_ip.trace(i, j).begin());
      auto cc = aux.best_cc.trace(i, j);
      std::fill(cc.begin(), cc.end(), static_cast<float>(aux.trace_cc[t]));
    }
  return aux;
}

inline AuxiliaryVolumes select_best(std::span<const Volume> ensemble, const Volume& observed, const Wavelet& w) {
  std::vector<Volume> synthetics;
  synthetics.reserve(ensemble.size());
  for (const auto& v : ensemble) synthetics.push_back(synthesize(v, w));
  return select_best_from_synthetics(ensemble, synthetics, observed);
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  return 0.5 * (hi + *std::max_element(v.begin(), mid));
}

/// Global stochastic inversion: simulate, score trace-by-trace, keep the best
/// traces and co-simulate the next ensemble from them.
inline GsiReport run_gsi(const SimulationPlan& plan, const Volume& observed, const Wavelet& w, const GsiConfig& cfg) {
  cfg.validate();
  plan.validate();
  if (plan.secondary) throw DomainError("the first GSI iteration must not carry secondary data");
  if (observed.grid() != plan.grid) throw DomainError("observed seismic is not congruent with the plan grid");
  check_wavelet_grid(w, plan.grid);

  const DssSampler sampler(plan.target);
  const VariogramModel model = scaled_to_target(plan.model, plan.target);
  const detail::SimulationKernel kernel(plan.grid, model, plan.neighborhood);

  GsiReport report;
  SimulationPlan iter_plan = plan;
  iter_plan.n_realizations = cfg.ensemble_size;

  for (std::size_t it = 0; it < cfg.n_iterations; ++it) {
    iter_plan.seed = mix_seed(plan.seed, 0x6510000 + it);
    std::vector<std::optional<Volume>> slots(cfg.ensemble_size);
    std::vector<std::string> failures(cfg.ensemble_size);
    parallel_for(cfg.ensemble_size, [&](std::size_t r) {
      try {
        slots[r] = simulate_realization(iter_plan, sampler, kernel, r);
      } catch (const DegenerateError& e) {
        failures[r] = e.what();
      }
    });
    std::vector<Volume> ensemble;
    for (std::size_t r = 0; r < slots.size(); ++r) {
      if (slots[r])
        ensemble.push_back(std::move(*slots[r]));
      else
        log::warn("gsi iteration " + std::to_string(it + 1) + ": dropped realization: " + failures[r]);
    }
    if (ensemble.empty()) throw DegenerateError("every realization of GSI iteration " + std::to_string(it + 1) + " failed");

    std::vector<Volume> synthetics(ensemble.size());
    std::vector<double> gcc(ensemble.size());
    parallel_for(ensemble.size(), [&](std::size_t r) {
      synthetics[r] = synthesize(ensemble[r], w);
      gcc[r] = global_cc(synthetics[r], observed);
    });
    auto aux = select_best_from_synthetics(ensemble, synthetics, observed);
    const auto best = static_cast<std::size_t>(std::max_element(gcc.begin(), gcc.end()) - gcc.begin());

    GsiIteration diag;
    diag.global_cc_best = gcc[best];
    diag.members = ensemble.size();
    double sum = 0.0;
    for (double c : aux.trace_cc) sum += c;
    diag.mean_trace_cc = sum / static_cast<double>(aux.trace_cc.size());
    diag.median_trace_cc = median_of(aux.trace_cc);
    report.iterations.push_back(diag);
    log::info("gsi iteration " + std::to_string(it + 1) + ": global cc " + std::to_string(diag.global_cc_best) +
              ", mean trace cc " + std::to_string(diag.mean_trace_cc));

    if (cfg.persist) {
      std::filesystem::create_directories(cfg.persist_dir);
      for (std::size_t r = 0; r < ensemble.size(); ++r)
        write_volume((std::filesystem::path(cfg.persist_dir) /
                      ("real_" + std::to_string(it + 1) + "_" + std::to_string(r) + ".gsuq"))
                         .string(),
                     ensemble[r]);
    }

    const bool last = it + 1 == cfg.n_iterations || diag.global_cc_best >= cfg.cc_stop;
    if (last) {
      report.best_synthetic = std::move(synthetics[best]);
      report.best_realization = ensemble[best];
      report.final_ensemble = std::move(ensemble);
      report.final_aux = std::move(aux);
      break;
    }
    iter_plan.secondary = SecondaryData{aux.best_ip, aux.best_cc};
  }
  return report;
}

inline std::string format_gsi_diagnostics(const GsiReport& report) {
  std::string out = "iter,global_cc_best,mean_trace_cc\n";
  for (std::size_t it = 0; it < report.iterations.size(); ++it)
    out += std::to_string(it + 1) + ',' + csv::fmt(report.iterations[it].global_cc_best) + ',' +
           csv::fmt(report.iterations[it].mean_trace_cc) + '\n';
  return out;
}

/// Cell-wise mean of an ensemble.
inline Volume ensemble_mean(std::span<const Volume> ensemble) {
  if (ensemble.empty()) throw DomainError("mean of an empty ensemble");
  const Grid3& g = ensemble.front().grid();
  std::vector<double> acc(g.size(), 0.0);
  for (const auto& v : ensemble)
    for (std::size_t n = 0; n < acc.size(); ++n) acc[n] += v[n];
  Volume out(g);
  for (std::size_t n = 0; n < acc.size(); ++n) out[n] = static_cast<float>(acc[n] / static_cast<double>(ensemble.size()));
  return out;
}

/// Cell-wise population variance of an ensemble.
inline std::vector<double> ensemble_variance(std::span<const Volume> ensemble) {
  if (ensemble.empty()) throw DomainError("variance of an empty ensemble");
  const std::size_t n = ensemble.front().size();
  std::vector<double> m(n, 0.0), v(n, 0.0);
  for (const auto& e : ensemble)
    for (std::size_t c = 0; c < n; ++c) m[c] += e[c];
  for (auto& x : m) x /= static_cast<double>(ensemble.size());
  for (const auto& e : ensemble)
    for (std::size_t c = 0; c < n; ++c) v[c] += (e[c] - m[c]) * (e[c] - m[c]);
  for (auto& x : v) x /= static_cast<double>(ensemble.size());
  return v;
}

}  // namespace gsuq
