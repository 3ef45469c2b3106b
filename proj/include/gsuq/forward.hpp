#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gsuq/csv.hpp"
#include "gsuq/error.hpp"
#include "gsuq/grid.hpp"
#include "gsuq/parallel.hpp"

namespace gsuq {

struct Wavelet {
  std::vector<double> samples;
  std::size_t center_index = 0;
  double dt_ms = 1.0;

  void validate() const {
    if (samples.empty()) throw DomainError("wavelet is empty");
    if (center_index >= samples.size()) throw DomainError("wavelet center outside samples");
    if (!(dt_ms > 0)) throw DomainError("wavelet dt must be positive");
    for (double s : samples)
      if (!std::isfinite(s)) throw DomainError("wavelet has non-finite samples");
  }
};

/// Zero-phase Ricker wavelet, peak frequency in Hz, sampled every dt_ms and
/// truncated at +-1.5 periods.
inline Wavelet ricker(double peak_hz, double dt_ms) {
  if (!(peak_hz > 0 && dt_ms > 0)) throw DomainError("ricker needs positive frequency and dt");
  const double dt = dt_ms * 1e-3;
  const auto half = static_cast<std::size_t>(std::ceil(1.5 / (peak_hz * dt)));
  Wavelet w;
  w.dt_ms = dt_ms;
  w.center_index = half;
  w.samples.resize(2 * half + 1);
  for (std::size_t n = 0; n < w.samples.size(); ++n) {
    const double t = (static_cast<double>(n) - static_cast<double>(half)) * dt;
    const double a = std::numbers::pi * std::numbers::pi * peak_hz * peak_hz * t * t;
    w.samples[n] = (1.0 - 2.0 * a) * std::exp(-a);
  }
  return w;
}

inline Wavelet read_wavelet(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Wavelet w;
  std::string line;
  auto header_value = [&](const char* key) {
    if (!std::getline(in, line)) throw FormatError(path + ": missing wavelet header");
    const auto f = csv::split(line);
    if (f.size() != 2 || f[0] != key) throw FormatError(path + ": expected '" + key + ",<value>'");
    return f[1];
  };
  w.center_index = static_cast<std::size_t>(csv::to_int(header_value("center_index")));
  w.dt_ms = csv::to_double(header_value("dt_ms"));
  in.close();
  const auto table = csv::read_table(path, 2);
  const auto ci = table.column("index"), ca = table.column("amplitude");
  w.samples.assign(table.rows.size(), 0.0);
  for (const auto& row : table.rows) {
    const auto idx = csv::to_int(row[ci]);
    if (idx < 0 || static_cast<std::size_t>(idx) >= w.samples.size()) throw FormatError(path + ": bad index");
    w.samples[static_cast<std::size_t>(idx)] = csv::to_double(row[ca]);
  }
  w.validate();
  return w;
}

inline void write_wavelet(const std::string& path, const Wavelet& w) {
  std::string out = "center_index," + std::to_string(w.center_index) + "\ndt_ms," + csv::fmt(w.dt_ms) +
                    "\nindex,amplitude\n";
  for (std::size_t n = 0; n < w.samples.size(); ++n) out += std::to_string(n) + ',' + csv::fmt(w.samples[n]) + '\n';
  csv::write_text(path, out);
}

/// Normal-incidence reflection coefficients between consecutive samples.
inline std::vector<double> reflectivity(std::span<const float> ip) {
  if (ip.size() < 2) throw DomainError("reflectivity needs at least two samples");
  std::vector<double> r(ip.size() - 1);
  for (std::size_t k = 0; k + 1 < ip.size(); ++k) {
    const double a = ip[k], b = ip[k + 1];
    if (!(a > 0 && b > 0)) throw DomainError("impedance must be positive");
    r[k] = (b - a) / (b + a);
  }
  return r;
}

/// Convolves a reflectivity series (coefficient k sits at sample k) with the
/// wavelet aligned at its center; output has `length` samples.
inline void convolve_trace(std::span<const double> refl, const Wavelet& w, std::span<float> out) {
  const long long nw = static_cast<long long>(w.samples.size());
  const long long c = static_cast<long long>(w.center_index);
  const long long n = static_cast<long long>(out.size());
  for (long long t = 0; t < n; ++t) {
    double s = 0.0;
    // Wavelet index m contributes from reflector t - (m - c).
    for (long long m = 0; m < nw; ++m) {
      const long long k = t - (m - c);
      if (k < 0 || k >= static_cast<long long>(refl.size())) continue;
      s += refl[static_cast<std::size_t>(k)] * w.samples[static_cast<std::size_t>(m)];
    }
    out[static_cast<std::size_t>(t)] = static_cast<float>(s);
  }
}

inline void check_wavelet_grid(const Wavelet& w, const Grid3& g) {
  w.validate();
  if (std::abs(w.dt_ms - g.dz) > 1e-6 * std::max(1.0, w.dt_ms))
    throw DomainError("wavelet sample interval does not match grid dz");
}

inline Volume synthesize(const Volume& ip, const Wavelet& w) {
  const Grid3& g = ip.grid();
  check_wavelet_grid(w, g);
  Volume seis(g);
  if (g.nz < 2) return seis;
  parallel_for(g.ny, [&](std::size_t j) {
    for (std::size_t i = 0; i < g.nx; ++i) convolve_trace(reflectivity(ip.trace(i, j)), w, seis.trace(i, j));
  });
  return seis;
}

namespace detail {

template <class A, class B>
double pearson(const A& a, const B& b, std::size_t n) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace detail

/// Pearson correlation; 0 when either trace is constant.
inline double trace_cc(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.size() < 2) throw DomainError("trace_cc needs equal lengths >= 2");
  return detail::pearson(a, b, a.size());
}

inline double trace_cc(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw DomainError("trace_cc needs equal lengths >= 2");
  return detail::pearson(a, b, a.size());
}

inline double global_cc(const Volume& a, const Volume& b) {
  if (!a.congruent(b)) throw DomainError("global_cc needs congruent volumes");
  return detail::pearson(a.values(), b.values(), a.size());
}

/// Per-trace correlation, indexed by Grid3::trace_index.
inline std::vector<double> trace_ccs(const Volume& a, const Volume& b) {
  if (!a.congruent(b)) throw DomainError("trace correlation needs congruent volumes");
  const Grid3& g = a.grid();
  std::vector<double> cc(g.traces());
  if (g.nz < 2) return cc;
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) cc[g.trace_index(i, j)] = trace_cc(a.trace(i, j), b.trace(i, j));
  return cc;
}

}  // namespace gsuq
