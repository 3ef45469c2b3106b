#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsuq/error.hpp"
#include "gsuq/forward.hpp"
#include "gsuq/grid.hpp"
#include "gsuq/rng.hpp"
#include "gsuq/target.hpp"
#include "gsuq/variogram.hpp"

namespace gsuq {

struct GmmMode {
  double mu = 0.0;     // kPa.s/m
  double sigma = 1.0;  // kPa.s/m
  double weight = 1.0;
};

struct GmmSpec {
  std::vector<GmmMode> modes;

  void validate() const {
    if (modes.empty()) throw DomainError("GMM needs at least one mode");
    double sum = 0.0;
    for (const auto& m : modes) {
      if (!(m.sigma > 0) || !std::isfinite(m.mu)) throw DomainError("GMM mode needs finite mean and sigma > 0");
      if (!(m.weight >= 0 && m.weight <= 1)) throw DomainError("GMM weights must lie in [0, 1]");
      sum += m.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DomainError("GMM weights must sum to 1");
  }

  double cdf(double x) const {
    double p = 0.0;
    for (const auto& m : modes) p += m.weight * normal_cdf((x - m.mu) / m.sigma);
    return p;
  }

  double mean() const {
    double s = 0.0;
    for (const auto& m : modes) s += m.weight * m.mu;
    return s;
  }

  double variance() const {
    const double mu = mean();
    double s = 0.0;
    for (const auto& m : modes) s += m.weight * (m.sigma * m.sigma + (m.mu - mu) * (m.mu - mu));
    return s;
  }
};

inline constexpr std::size_t kTargetPoints = 4096;

/// Tabulated GMM cdf on [min(mu - 4 sigma), max(mu + 4 sigma)], renormalized
/// so the truncated tails carry no mass.
inline TargetDistribution build_target(const GmmSpec& g, std::size_t n_points = kTargetPoints) {
  g.validate();
  if (n_points < 64) throw DomainError("target needs at least 64 points");
  double lo = g.modes.front().mu - 4 * g.modes.front().sigma, hi = g.modes.front().mu + 4 * g.modes.front().sigma;
  for (const auto& m : g.modes) {
    lo = std::min(lo, m.mu - 4 * m.sigma);
    hi = std::max(hi, m.mu + 4 * m.sigma);
  }
  const double f_lo = g.cdf(lo), f_hi = g.cdf(hi);
  std::vector<double> xs(n_points), ps(n_points);
  for (std::size_t n = 0; n < n_points; ++n) {
    xs[n] = lo + (hi - lo) * static_cast<double>(n) / static_cast<double>(n_points - 1);
    ps[n] = (g.cdf(xs[n]) - f_lo) / (f_hi - f_lo);
  }
  ps.front() = 0.0;
  ps.back() = 1.0;
  for (std::size_t n = 1; n < n_points; ++n) ps[n] = std::max(ps[n], ps[n - 1]);
  return TargetDistribution::from_cdf(xs, ps);
}

// ---------------------------------------------------------------------------

struct MisfitScore {
  double M = 0.0;
  std::vector<double> trace_cc;
};

/// Sum over traces of (1 - CC) / (2 sigma2).
inline MisfitScore misfit_from_ccs(std::vector<double> ccs, double sigma2) {
  if (!(sigma2 > 0)) throw DomainError("sigma2 must be positive");
  MisfitScore s;
  for (double cc : ccs) s.M += (1.0 - cc) / (2.0 * sigma2);
  s.M = std::max(0.0, s.M);
  s.trace_cc = std::move(ccs);
  return s;
}

inline MisfitScore misfit(const Volume& observed, const Volume& synthetic, double sigma2) {
  return misfit_from_ccs(trace_ccs(synthetic, observed), sigma2);
}

inline double log_likelihood(double M) {
  if (!(M >= 0)) throw DomainError("misfit must be non-negative");
  return -M;
}

inline double likelihood(double M) { return std::exp(log_likelihood(M)); }

// ---------------------------------------------------------------------------
// Metaparameter space. Parameter names:
//   range_h, range_h2 (m), range_v (ms), azimuth (deg),
//   mu_<i>, sigma_<i> (kPa.s/m), prop_<i> (fraction), i = 1..k.
// Exactly k - 1 proportions are free; the missing one is 1 - sum(others).

struct PriorParam {
  std::string name;
  double lo = 0.0, hi = 1.0;
};

struct PriorBox {
  std::vector<PriorParam> params;

  std::size_t dims() const { return params.size(); }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t d = 0; d < params.size(); ++d)
      if (params[d].name == name) return d;
    return std::nullopt;
  }

  std::size_t modes() const {
    std::size_t k = 0;
    for (const auto& p : params)
      if (p.name.rfind("mu_", 0) == 0) k = std::max<std::size_t>(k, std::stoul(p.name.substr(3)));
    return k;
  }

  void validate() const {
    std::map<std::string, int> seen;
    for (const auto& p : params) {
      if (!(p.lo < p.hi) || !std::isfinite(p.lo) || !std::isfinite(p.hi))
        throw ConfigError("prior parameter " + p.name + " needs lo < hi");
      if (seen[p.name]++) throw ConfigError("duplicate prior parameter " + p.name);
      const bool known = p.name == "range_h" || p.name == "range_h2" || p.name == "range_v" || p.name == "azimuth" ||
                         p.name.rfind("mu_", 0) == 0 || p.name.rfind("sigma_", 0) == 0 ||
                         p.name.rfind("prop_", 0) == 0;
      if (!known) throw ConfigError("unknown prior parameter " + p.name);
    }
    if (!find("range_h") || !find("range_v")) throw ConfigError("prior needs range_h and range_v");
    const std::size_t k = modes();
    if (k == 0) throw ConfigError("prior needs at least one GMM mode");
    std::size_t props = 0;
    for (std::size_t i = 1; i <= k; ++i) {
      if (!find("mu_" + std::to_string(i)) || !find("sigma_" + std::to_string(i)))
        throw ConfigError("prior mode " + std::to_string(i) + " needs mu and sigma");
      if (find("prop_" + std::to_string(i))) ++props;
    }
    for (const auto& p : params)
      for (const char* pre : {"mu_", "sigma_", "prop_"})
        if (p.name.rfind(pre, 0) == 0) {
          const auto idx = std::stoul(p.name.substr(std::string(pre).size()));
          if (idx < 1 || idx > k) throw ConfigError("prior parameter " + p.name + " names a missing mode");
        }
    if (props != k - 1) throw ConfigError("prior needs exactly k-1 free proportions");
  }

  std::vector<double> normalize(std::span<const double> x) const {
    std::vector<double> u(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) u[d] = (x[d] - params[d].lo) / (params[d].hi - params[d].lo);
    return u;
  }

  std::vector<double> denormalize(std::span<const double> u) const {
    std::vector<double> x(u.size());
    for (std::size_t d = 0; d < u.size(); ++d) x[d] = params[d].lo + u[d] * (params[d].hi - params[d].lo);
    return x;
  }

  bool contains(std::span<const double> x) const {
    if (x.size() != params.size()) return false;
    for (std::size_t d = 0; d < x.size(); ++d)
      if (!(x[d] >= params[d].lo && x[d] <= params[d].hi)) return false;
    return true;
  }
};

/// A point of the metaparameter space, aligned with PriorBox::params.
struct MetaVector {
  std::vector<double> values;
};

struct MaterializeOptions {
  VariogramKind kind = VariogramKind::spherical;
  double azimuth_deg = 0.0;  // used when the box does not sample it
  std::size_t target_points = kTargetPoints;
};

struct MaterializedModel {
  VariogramModel variogram;
  GmmSpec gmm;
  TargetDistribution target;
};

inline GmmSpec gmm_of(const PriorBox& box, const MetaVector& v) {
  const std::size_t k = box.modes();
  GmmSpec g;
  g.modes.resize(k);
  double free = 0.0;
  std::optional<std::size_t> derived;
  for (std::size_t i = 1; i <= k; ++i) {
    auto& m = g.modes[i - 1];
    m.mu = v.values[*box.find("mu_" + std::to_string(i))];
    m.sigma = v.values[*box.find("sigma_" + std::to_string(i))];
    if (const auto p = box.find("prop_" + std::to_string(i))) {
      m.weight = v.values[*p];
      free += m.weight;
    } else {
      derived = i - 1;
    }
  }
  if (derived) g.modes[*derived].weight = 1.0 - free;
  if (g.modes[derived.value_or(0)].weight < -1e-12 || g.modes[derived.value_or(0)].weight > 1.0 + 1e-12)
    throw DomainError("derived GMM proportion leaves [0, 1]");
  for (auto& m : g.modes) m.weight = std::clamp(m.weight, 0.0, 1.0);
  return g;
}

inline MaterializedModel materialize(const PriorBox& box, const MetaVector& v, const MaterializeOptions& opt = {}) {
  if (v.values.size() != box.dims()) throw DomainError("metavector has wrong dimension");
  if (!box.contains(v.values)) throw DomainError("metavector lies outside the prior box");
  MaterializedModel out;
  out.gmm = gmm_of(box, v);
  auto& vm = out.variogram;
  vm.kind = opt.kind;
  vm.a1 = v.values[*box.find("range_h")];
  vm.a2 = box.find("range_h2") ? v.values[*box.find("range_h2")] : vm.a1;
  vm.a3 = v.values[*box.find("range_v")];
  vm.azimuth_deg = box.find("azimuth") ? v.values[*box.find("azimuth")] : opt.azimuth_deg;
  vm.nugget = 0.0;
  vm.sill = out.gmm.variance();
  if (!(vm.a1 > 0 && vm.a2 > 0 && vm.a3 > 0)) throw DomainError("variogram ranges must be positive");
  vm.validate();
  out.target = build_target(out.gmm, opt.target_points);
  return out;
}

}  // namespace gsuq
