#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gsuq/csv.hpp"
#include "gsuq/error.hpp"
#include "gsuq/gsi.hpp"
#include "gsuq/kriging.hpp"
#include "gsuq/metaspace.hpp"
#include "gsuq/nab.hpp"
#include "gsuq/pso.hpp"
#include "gsuq/synthetic.hpp"
#include "gsuq/variogram.hpp"

namespace gsuq {

// ---------------------------------------------------------------------------
// Minimal INI/TOML-like reader: `[section]` headers, `key = value` lines and
// `#` comments. Values are raw strings; typed getters convert on demand and
// every key must be consumed, so typos surface as configuration errors.

class ConfigDocument {
 public:
  static ConfigDocument parse(const std::string& text, const std::string& origin = "<config>") {
    ConfigDocument doc;
    doc.origin_ = origin;
    std::string section;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = text.find('\n', start);
      std::string_view line(text.data() + start, (end == std::string::npos ? text.size() : end) - start);
      start = end == std::string::npos ? text.size() + 1 : end + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = csv::trim(line);
      if (line.empty()) continue;
      const std::string where = origin + ":" + std::to_string(line_no);
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(where + ": malformed section header");
        section = std::string(csv::trim(line.substr(1, line.size() - 2)));
        if (section.empty()) throw ConfigError(where + ": empty section name");
        doc.sections_[section];
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
      if (section.empty()) throw ConfigError(where + ": key outside any section");
      const std::string key(csv::trim(line.substr(0, eq)));
      std::string value(csv::trim(line.substr(eq + 1)));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
      if (key.empty()) throw ConfigError(where + ": empty key");
      auto& sec = doc.sections_[section];
      if (sec.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
      sec[key] = {value, line_no};
      doc.order_[section].push_back(key);
    }
    return doc;
  }

  static ConfigDocument load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text, path);
  }

  bool has_section(const std::string& s) const { return sections_.count(s) != 0; }

  bool has(const std::string& s, const std::string& k) const {
    const auto it = sections_.find(s);
    return it != sections_.end() && it->second.count(k);
  }

  /// Keys of a section in file order.
  std::vector<std::string> keys(const std::string& s) const {
    const auto it = order_.find(s);
    return it == order_.end() ? std::vector<std::string>{} : it->second;
  }

  std::optional<std::string> text(const std::string& s, const std::string& k) const {
    const auto it = sections_.find(s);
    if (it == sections_.end()) return std::nullopt;
    const auto kt = it->second.find(k);
    if (kt == it->second.end()) return std::nullopt;
    used_.insert(s + "." + k);
    return kt->second.value;
  }

  std::string str(const std::string& s, const std::string& k, const std::string& def) const {
    return text(s, k).value_or(def);
  }

  double num(const std::string& s, const std::string& k, double def) const {
    const auto t = text(s, k);
    return t ? to_number(s, k, *t) : def;
  }

  std::optional<double> opt_num(const std::string& s, const std::string& k) const {
    const auto t = text(s, k);
    if (!t) return std::nullopt;
    return to_number(s, k, *t);
  }

  std::uint64_t uint(const std::string& s, const std::string& k, std::uint64_t def) const {
    const auto t = text(s, k);
    if (!t) return def;
    std::uint64_t v = 0;
    const auto res = std::from_chars(t->data(), t->data() + t->size(), v);
    if (res.ec != std::errc{} || res.ptr != t->data() + t->size())
      throw ConfigError(where(s, k) + ": expected a non-negative integer, got '" + *t + "'");
    return v;
  }

  bool flag(const std::string& s, const std::string& k, bool def) const {
    const auto t = text(s, k);
    if (!t) return def;
    if (*t == "true") return true;
    if (*t == "false") return false;
    throw ConfigError(where(s, k) + ": expected true or false");
  }

  std::vector<std::string> list(const std::string& s, const std::string& k) const {
    const auto t = text(s, k);
    std::vector<std::string> out;
    if (!t || csv::trim(*t).empty()) return out;
    for (auto& item : csv::split(*t)) {
      if (item.empty()) throw ConfigError(where(s, k) + ": empty list item");
      out.push_back(item);
    }
    return out;
  }

  std::vector<double> numbers(const std::string& s, const std::string& k) const {
    std::vector<double> out;
    for (const auto& item : list(s, k)) out.push_back(to_number(s, k, item));
    return out;
  }

  /// Throws for any key that no getter asked for.
  void check_all_used() const {
    for (const auto& [s, kv] : sections_)
      for (const auto& [k, v] : kv)
        if (!used_.count(s + "." + k))
          throw ConfigError(origin_ + ":" + std::to_string(v.line) + ": unknown key '" + k + "' in [" + s + "]");
  }

  const std::string& origin() const { return origin_; }

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  std::string where(const std::string& s, const std::string& k) const {
    const auto& e = sections_.at(s).at(k);
    return origin_ + ":" + std::to_string(e.line) + " [" + s + "] " + k;
  }

  double to_number(const std::string& s, const std::string& k, const std::string& t) const {
    if (t == "inf") return std::numeric_limits<double>::infinity();
    try {
      return csv::to_double(t);
    } catch (const FormatError&) {
      throw ConfigError(where(s, k) + ": expected a number, got '" + t + "'");
    }
  }

  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, std::vector<std::string>> order_;  // keys in file order
  mutable std::set<std::string> used_;
};

// ---------------------------------------------------------------------------

enum class TargetSource { wells, gmm };
enum class QuantileSource { mean, members };

/// Fixed model of a conventional run.
struct ConventionalModel {
  VariogramModel variogram;
  TargetSource target = TargetSource::wells;
  GmmSpec gmm;
};

struct NabConfig {
  GibbsConfig gibbs;
  std::size_t n_bins = 20;
  QuantileSource source = QuantileSource::mean;
  std::string history;     // nab subcommand input; empty: <out>/history.csv
  std::string models_dir;  // nab subcommand input; empty: <out>/models
};

struct RunConfig {
  std::string origin;
  std::uint64_t seed = 1;
  double sigma2 = 0.25;
  unsigned workers = 0;

  bool use_synthetic = true;
  SyntheticSpec synthetic;
  std::string observed_path, wells_path, wavelet_path;

  std::vector<std::string> blind_wells;
  std::optional<std::vector<std::string>> conditioning_wells;  // default: all but blind

  Neighborhood neighborhood;
  VariogramKind kind = VariogramKind::spherical;
  double azimuth_deg = 0.0;
  std::size_t target_points = kTargetPoints;

  GsiConfig gsi;        // conventional run
  GsiConfig inner_gsi;  // one evaluation of the multi-scale run
  ConventionalModel conventional;

  PsoConfig pso;
  std::optional<PriorBox> prior;
  NabConfig nab;

  /// Splits the wells into (conditioning, blind) and checks the roles.
  std::pair<WellSet, WellSet> split_wells(const WellSet& all) const {
    std::set<std::string> blind(blind_wells.begin(), blind_wells.end());
    for (const auto& b : blind)
      if (!all.find(b)) throw ConfigError("blind well '" + b + "' is not in the well file");
    auto [blind_set, rest] = all.partition(blind);
    if (!conditioning_wells) return {rest, blind_set};
    std::set<std::string> cond(conditioning_wells->begin(), conditioning_wells->end());
    for (const auto& c : cond) {
      if (blind.count(c)) throw ConfigError("well '" + c + "' is both blind and conditioning");
      if (!all.find(c)) throw ConfigError("conditioning well '" + c + "' is not in the well file");
    }
    return {all.partition(cond).first, blind_set};
  }
};

namespace detail {

// Prior keys carry units; the stored parameter is the bare name. Variances
// become standard deviations and percentages become fractions.
inline PriorParam prior_param(const std::string& key, double lo, double hi) {
  auto strip = [&](const std::string& suffix, std::string& name) {
    if (key.size() > suffix.size() && key.compare(key.size() - suffix.size(), suffix.size(), suffix) == 0) {
      name = key.substr(0, key.size() - suffix.size());
      return true;
    }
    return false;
  };
  std::string name;
  if (strip("_m", name) && (name == "range_h" || name == "range_h2")) return {name, lo, hi};
  if (strip("_ms", name) && name == "range_v") return {name, lo, hi};
  if (strip("_deg", name) && name == "azimuth") return {name, lo, hi};
  if (strip("_kpa_s_m", name) && (name.rfind("mu_", 0) == 0 || name.rfind("sigma_", 0) == 0)) return {name, lo, hi};
  if (strip("_kpa2_s2_m2", name) && name.rfind("var_", 0) == 0) {
    if (!(lo > 0)) throw ConfigError("prior " + key + " needs positive variances");
    return {"sigma_" + name.substr(4), std::sqrt(lo), std::sqrt(hi)};
  }
  if (strip("_pct", name) && name.rfind("prop_", 0) == 0) return {name, lo / 100.0, hi / 100.0};
  if (strip("_frac", name) && name.rfind("prop_", 0) == 0) return {name, lo, hi};
  throw ConfigError("unknown prior key '" + key + "'");
}

inline GmmSpec gmm_from(const ConfigDocument& doc, const std::string& s) {
  GmmSpec g;
  for (std::size_t i = 1;; ++i) {
    const auto n = std::to_string(i);
    const auto mu = doc.opt_num(s, "mu_" + n + "_kpa_s_m");
    if (!mu) break;
    GmmMode m;
    m.mu = *mu;
    if (const auto sd = doc.opt_num(s, "sigma_" + n + "_kpa_s_m"))
      m.sigma = *sd;
    else if (const auto var = doc.opt_num(s, "var_" + n + "_kpa2_s2_m2"))
      m.sigma = std::sqrt(*var);
    else
      throw ConfigError("[" + s + "] mode " + n + " needs sigma or var");
    if (const auto p = doc.opt_num(s, "prop_" + n + "_pct"))
      m.weight = *p / 100.0;
    else
      m.weight = -1.0;  // derived below
    g.modes.push_back(m);
  }
  if (g.modes.empty()) throw ConfigError("[" + s + "] needs at least mu_1_kpa_s_m");
  double given = 0.0;
  int missing = 0;
  for (const auto& m : g.modes) {
    if (m.weight < 0)
      ++missing;
    else
      given += m.weight;
  }
  if (missing > 1) throw ConfigError("[" + s + "] may leave at most one proportion implicit");
  for (auto& m : g.modes)
    if (m.weight < 0) m.weight = 1.0 - given;
  try {
    g.validate();
  } catch (const DomainError& e) {
    throw ConfigError("[" + s + "] " + e.what());
  }
  return g;
}

inline GsiConfig gsi_from(const ConfigDocument& doc, const std::string& s, GsiConfig def) {
  def.n_iterations = doc.uint(s, "n_iterations", def.n_iterations);
  def.ensemble_size = doc.uint(s, "ensemble_size", def.ensemble_size);
  def.cc_stop = doc.num(s, "cc_stop", def.cc_stop);
  def.persist = doc.flag(s, "persist", def.persist);
  return def;
}

}  // namespace detail

/// Builds and validates a RunConfig. Relative paths resolve against the
/// config file's directory.
inline RunConfig parse_run_config(const ConfigDocument& doc, const std::filesystem::path& base_dir,
                                  std::optional<std::uint64_t> seed_override = std::nullopt) {
  RunConfig c;
  c.origin = doc.origin();
  c.seed = seed_override.value_or(doc.uint("run", "seed", 1));
  c.sigma2 = doc.num("run", "sigma2", 0.25);
  c.workers = static_cast<unsigned>(doc.uint("run", "workers", 0));
  if (!(c.sigma2 > 0)) throw ConfigError("[run] sigma2 must be positive");

  const std::string source = doc.str("data", "source", "synthetic");
  if (source == "synthetic") {
    c.use_synthetic = true;
  } else if (source == "files") {
    c.use_synthetic = false;
    auto path = [&](const char* key) {
      const auto t = doc.text("data", key);
      if (!t) throw ConfigError(std::string("[data] ") + key + " is required when source = files");
      const auto p = (base_dir / *t).lexically_normal().string();
      if (!std::filesystem::exists(p)) throw ConfigError("[data] " + std::string(key) + ": no such file " + p);
      return p;
    };
    c.observed_path = path("observed");
    c.wells_path = path("wells");
    c.wavelet_path = path("wavelet");
  } else {
    throw ConfigError("[data] source must be 'synthetic' or 'files'");
  }
  c.blind_wells = doc.list("data", "blind_wells");
  if (doc.has("data", "conditioning_wells")) c.conditioning_wells = doc.list("data", "conditioning_wells");
  {
    std::set<std::string> blind(c.blind_wells.begin(), c.blind_wells.end());
    if (blind.size() != c.blind_wells.size()) throw ConfigError("[data] blind_wells lists a well twice");
    if (c.conditioning_wells)
      for (const auto& w : *c.conditioning_wells)
        if (blind.count(w)) throw ConfigError("well '" + w + "' is both blind and conditioning");
  }

  auto& s = c.synthetic;
  const std::string sy = "synthetic";
  s.grid.nx = static_cast<std::uint32_t>(doc.uint(sy, "nx", s.grid.nx));
  s.grid.ny = static_cast<std::uint32_t>(doc.uint(sy, "ny", s.grid.ny));
  s.grid.nz = static_cast<std::uint32_t>(doc.uint(sy, "nz", s.grid.nz));
  s.grid.dx = static_cast<float>(doc.num(sy, "dx_m", s.grid.dx));
  s.grid.dy = static_cast<float>(doc.num(sy, "dy_m", s.grid.dy));
  s.grid.dz = static_cast<float>(doc.num(sy, "dz_ms", s.grid.dz));
  s.n_channels = doc.uint(sy, "n_channels", s.n_channels);
  s.sinuosity_cells = doc.num(sy, "sinuosity_cells", s.sinuosity_cells);
  s.wavelength_cells = doc.num(sy, "wavelength_cells", s.wavelength_cells);
  s.width_cells = doc.num(sy, "width_cells", s.width_cells);
  s.thickness_layers = doc.uint(sy, "thickness_layers", s.thickness_layers);
  s.background.mu = doc.num(sy, "background_mu_kpa_s_m", s.background.mu);
  s.background.sigma = doc.num(sy, "background_sigma_kpa_s_m", s.background.sigma);
  s.channel.mu = doc.num(sy, "channel_mu_kpa_s_m", s.channel.mu);
  s.channel.sigma = doc.num(sy, "channel_sigma_kpa_s_m", s.channel.sigma);
  s.smoothing_cells = doc.num(sy, "smoothing_cells", s.smoothing_cells);
  s.peak_hz = doc.num(sy, "peak_hz", s.peak_hz);
  s.snr_db = doc.num(sy, "snr_db", s.snr_db);
  s.noisy_fraction = doc.num(sy, "noisy_fraction", s.noisy_fraction);
  s.n_wells = doc.uint(sy, "n_wells", s.n_wells);
  s.seed = doc.uint(sy, "seed", c.seed);
  if (c.use_synthetic) {
    try {
      s.validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("[synthetic] ") + e.what());
    }
  }

  const std::string sim = "simulation";
  c.neighborhood.max_data = doc.uint(sim, "max_data", c.neighborhood.max_data);
  {
    const auto rh = doc.opt_num(sim, "search_radius_h_m");
    const auto rv = doc.opt_num(sim, "search_radius_v_ms");
    if (rh.has_value() != rv.has_value())
      throw ConfigError("[simulation] search radii need both search_radius_h_m and search_radius_v_ms");
    if (rh) c.neighborhood.search_radii = Vec3{*rh, *rh, *rv};
  }
  c.kind = parse_variogram_kind(doc.str(sim, "variogram", "spherical"));
  c.azimuth_deg = doc.num(sim, "azimuth_deg", 0.0);
  c.target_points = doc.uint(sim, "target_points", kTargetPoints);
  try {
    c.neighborhood.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("[simulation] ") + e.what());
  }
  if (c.target_points < 64) throw ConfigError("[simulation] target_points must be >= 64");

  c.gsi = detail::gsi_from(doc, "gsi", GsiConfig{});
  c.inner_gsi = detail::gsi_from(doc, "inner_gsi", GsiConfig{3, 5, 1.0, false, {}});
  c.gsi.validate();
  c.inner_gsi.validate();

  const std::string cv = "conventional";
  auto& vm = c.conventional.variogram;
  vm.kind = c.kind;
  vm.azimuth_deg = c.azimuth_deg;
  vm.a1 = doc.num(cv, "range_h_m", 750.0);
  vm.a2 = doc.num(cv, "range_h2_m", vm.a1);
  vm.a3 = doc.num(cv, "range_v_ms", 100.0);
  vm.sill = 1.0;
  vm.nugget = doc.num(cv, "nugget_fraction", 0.0);
  vm.sill = 1.0 - vm.nugget;
  try {
    vm.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("[conventional] ") + e.what());
  }
  const std::string target = doc.str(cv, "target", "wells");
  if (target == "wells") {
    c.conventional.target = TargetSource::wells;
  } else if (target == "gmm") {
    c.conventional.target = TargetSource::gmm;
    c.conventional.gmm = detail::gmm_from(doc, cv);
  } else {
    throw ConfigError("[conventional] target must be 'wells' or 'gmm'");
  }

  const std::string ps = "pso";
  c.pso.swarm_size = doc.uint(ps, "swarm_size", c.pso.swarm_size);
  c.pso.n_iterations = doc.uint(ps, "n_iterations", c.pso.n_iterations);
  c.pso.inertia = doc.num(ps, "inertia", c.pso.inertia);
  c.pso.c1 = doc.num(ps, "c1", c.pso.c1);
  c.pso.c2 = doc.num(ps, "c2", c.pso.c2);
  for (double r : doc.numbers(ps, "restart_at")) {
    if (!(r >= 0) || r != std::floor(r)) throw ConfigError("[pso] restart_at must list whole iteration numbers");
    c.pso.restart_at.push_back(static_cast<std::size_t>(r));
  }
  c.pso.restart_fraction = doc.num(ps, "restart_fraction", c.pso.restart_fraction);
  c.pso.seed = mix_seed(c.seed, 0x950);
  c.pso.validate();

  if (doc.has_section("prior")) {
    PriorBox box;
    for (const auto& key : doc.keys("prior")) {
      const auto v = doc.numbers("prior", key);
      if (v.size() != 2) throw ConfigError("[prior] " + key + " needs 'lo, hi'");
      box.params.push_back(detail::prior_param(key, v[0], v[1]));
    }
    box.validate();
    c.prior = std::move(box);
  }

  const std::string nb = "nab";
  c.nab.gibbs.n_walkers = doc.uint(nb, "n_walkers", c.nab.gibbs.n_walkers);
  c.nab.gibbs.n_steps = doc.uint(nb, "n_steps", c.nab.gibbs.n_steps);
  c.nab.gibbs.seed = mix_seed(c.seed, 0x4AB);
  c.nab.n_bins = doc.uint(nb, "n_bins", c.nab.n_bins);
  if (c.nab.gibbs.n_walkers < 1 || c.nab.gibbs.n_steps < 1 || c.nab.n_bins < 1)
    throw ConfigError("[nab] n_walkers, n_steps and n_bins must be >= 1");
  const std::string qs = doc.str(nb, "quantile_source", "mean");
  if (qs == "mean")
    c.nab.source = QuantileSource::mean;
  else if (qs == "members")
    c.nab.source = QuantileSource::members;
  else
    throw ConfigError("[nab] quantile_source must be 'mean' or 'members'");
  if (const auto h = doc.text(nb, "history")) c.nab.history = (base_dir / *h).lexically_normal().string();
  if (const auto m = doc.text(nb, "models_dir")) c.nab.models_dir = (base_dir / *m).lexically_normal().string();

  doc.check_all_used();
  return c;
}

inline RunConfig load_run_config(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt) {
  const auto doc = ConfigDocument::load(path);
  return parse_run_config(doc, std::filesystem::path(path).parent_path(), seed_override);
}

}  // namespace gsuq
