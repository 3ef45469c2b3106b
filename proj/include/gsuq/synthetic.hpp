#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "gsuq/error.hpp"
#include "gsuq/forward.hpp"
#include "gsuq/grid.hpp"
#include "gsuq/rng.hpp"

namespace gsuq {

struct FaciesStats {
  double mu = 0.0;     // kPa.s/m
  double sigma = 0.0;  // kPa.s/m
};

/// Procedural channelized reference model: sinusoidal sand channels running
/// along the grid i axis, embedded in a shale background.
struct SyntheticSpec {
  Grid3 grid{60, 70, 20, 25.f, 25.f, 4.f};
  std::size_t n_channels = 9;
  double sinuosity_cells = 6.0;     // centerline amplitude
  double wavelength_cells = 40.0;   // centerline period along i
  double width_cells = 6.0;
  std::size_t thickness_layers = 7;
  FaciesStats background{7300.0, 500.0};
  FaciesStats channel{4900.0, 350.0};
  double smoothing_cells = 2.0;     // radius of the within-facies box filter
  double peak_hz = 25.0;
  double snr_db = std::numeric_limits<double>::infinity();  // infinity: noise-free
  double noisy_fraction = 1.0;      // share of traces that receive noise
  std::size_t n_wells = 23;
  std::uint64_t seed = 1;

  void validate() const {
    grid.validate();
    for (const auto& f : {background, channel})
      if (!(f.sigma > 0) || !(f.mu - 4.0 * f.sigma > 0))
        throw DomainError("facies statistics must keep impedance positive with a 4-sigma margin");
    if (!(width_cells > 0) || !(wavelength_cells > 0) || thickness_layers == 0)
      throw DomainError("channel geometry must be positive");
    if (!(peak_hz > 0)) throw DomainError("peak frequency must be positive");
    if (n_wells > grid.traces()) throw DomainError("more wells than grid columns");
    if (!(noisy_fraction >= 0 && noisy_fraction <= 1)) throw DomainError("noisy_fraction must lie in [0, 1]");
  }
};

struct SyntheticDataset {
  Volume true_ip;
  Volume observed;
  Volume facies;  // 1 inside channels
  WellSet wells;
  Wavelet wavelet;
  std::vector<std::uint8_t> noisy_trace;  // per trace, Grid3::trace_index order
};

namespace detail {

// Unit-variance, zero-mean correlated field by repeated box smoothing of
// white noise.
inline std::vector<double> smooth_field(const Grid3& g, double radius, Rng& rng) {
  std::vector<double> f(g.size());
  for (auto& x : f) x = standard_normal(rng);
  const int r = static_cast<int>(std::round(radius));
  if (r > 0) {
    std::vector<double> tmp(f.size());
    const int dims[3] = {static_cast<int>(g.nx), static_cast<int>(g.ny), static_cast<int>(g.nz)};
    for (int pass = 0; pass < 2; ++pass)
      for (int axis = 0; axis < 3; ++axis) {
        const int ra = axis == 2 ? std::max(1, r / 2) : r;
        for (int j = 0; j < dims[1]; ++j)
          for (int i = 0; i < dims[0]; ++i)
            for (int k = 0; k < dims[2]; ++k) {
              double s = 0.0;
              int n = 0;
              for (int d = -ra; d <= ra; ++d) {
                int ii = i, jj = j, kk = k;
                (axis == 0 ? ii : axis == 1 ? jj : kk) += d;
                if (!g.contains(ii, jj, kk)) continue;
                s += f[g.index(ii, jj, kk)];
                ++n;
              }
              tmp[g.index(i, j, k)] = s / n;
            }
        f.swap(tmp);
      }
  }
  double m = 0.0, v = 0.0;
  for (double x : f) m += x;
  m /= static_cast<double>(f.size());
  for (double x : f) v += (x - m) * (x - m);
  v = std::sqrt(v / static_cast<double>(f.size()));
  for (auto& x : f) x = v > 0 ? (x - m) / v : 0.0;
  return f;
}

}  // namespace detail

inline SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Grid3& g = spec.grid;
  Rng rng(mix_seed(spec.seed, 0x5E1));

  SyntheticDataset out{Volume(g), Volume(g), Volume(g), {}, ricker(spec.peak_hz, g.dz), {}};
  for (std::size_t c = 0; c < spec.n_channels; ++c) {
    const double j0 = uniform01(rng) * g.ny;
    const double amp = spec.sinuosity_cells * (0.5 + 0.5 * uniform01(rng));
    const double phase = 2.0 * std::numbers::pi * uniform01(rng);
    const auto span = g.nz > spec.thickness_layers ? g.nz - spec.thickness_layers : 0;
    const auto k0 = static_cast<std::size_t>(uniform01(rng) * (span + 1));
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double center = j0 + amp * std::sin(2.0 * std::numbers::pi * i / spec.wavelength_cells + phase);
      for (std::size_t j = 0; j < g.ny; ++j) {
        if (std::abs(static_cast<double>(j) - center) > 0.5 * spec.width_cells) continue;
        for (std::size_t k = k0; k < std::min<std::size_t>(g.nz, k0 + spec.thickness_layers); ++k)
          out.facies.at(i, j, k) = 1.f;
      }
    }
  }
  const auto shale = detail::smooth_field(g, spec.smoothing_cells, rng);
  const auto sand = detail::smooth_field(g, spec.smoothing_cells, rng);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto& f = out.facies[n] > 0.5f ? spec.channel : spec.background;
    const double z = out.facies[n] > 0.5f ? sand[n] : shale[n];
    out.true_ip[n] = static_cast<float>(f.mu + f.sigma * std::clamp(z, -4.0, 4.0));
  }

  out.observed = synthesize(out.true_ip, out.wavelet);
  out.noisy_trace.assign(g.traces(), 0);
  if (std::isfinite(spec.snr_db)) {
    double power = 0.0;
    for (float v : out.observed.values()) power += static_cast<double>(v) * v;
    const double rms = std::sqrt(power / static_cast<double>(g.size()));
    const double noise_sigma = rms / std::pow(10.0, spec.snr_db / 20.0);
    std::vector<std::size_t> order(g.traces());
    for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
    for (std::size_t t = order.size(); t > 1; --t) std::swap(order[t - 1], order[rng() % t]);
    const auto n_noisy = static_cast<std::size_t>(std::llround(spec.noisy_fraction * static_cast<double>(g.traces())));
    for (std::size_t q = 0; q < n_noisy; ++q) out.noisy_trace[order[q]] = 1;
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) {
        if (!out.noisy_trace[g.trace_index(i, j)]) continue;
        for (auto& v : out.observed.trace(i, j)) v = static_cast<float>(v + noise_sigma * standard_normal(rng));
      }
  }

  // Stratified well placement: one well per block of a near-square partition.
  if (spec.n_wells > 0) {
    const auto gx = static_cast<std::size_t>(std::ceil(std::sqrt(spec.n_wells * double(g.nx) / g.ny)));
    const auto gy = (spec.n_wells + gx - 1) / gx;
    std::vector<std::size_t> blocks(gx * gy);
    for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b] = b;
    for (std::size_t t = blocks.size(); t > 1; --t) std::swap(blocks[t - 1], blocks[rng() % t]);
    blocks.resize(spec.n_wells);
    std::sort(blocks.begin(), blocks.end());
    std::size_t id = 1;
    for (const auto b : blocks) {
      const std::size_t bi = b % gx, bj = b / gx;
      const std::size_t i0 = bi * g.nx / gx, i1 = std::max(i0 + 1, (bi + 1) * g.nx / gx);
      const std::size_t j0 = bj * g.ny / gy, j1 = std::max(j0 + 1, (bj + 1) * g.ny / gy);
      const std::size_t i = std::min<std::size_t>(g.nx - 1, i0 + rng() % (i1 - i0));
      const std::size_t j = std::min<std::size_t>(g.ny - 1, j0 + rng() % (j1 - j0));
      char name[16];
      std::snprintf(name, sizeof name, "W%02zu", id++);
      Well w{name, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), {}};
      for (std::uint32_t k = 0; k < g.nz; ++k) w.samples.push_back({k, out.true_ip.at(i, j, k)});
      out.wells.wells.push_back(std::move(w));
    }
  }
  return out;
}

}  // namespace gsuq
