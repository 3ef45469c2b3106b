#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsuq/csv.hpp"
#include "gsuq/error.hpp"
#include "gsuq/grid.hpp"

namespace gsuq {

using Vec3 = std::array<double, 3>;

enum class VariogramKind { spherical, exponential, gaussian };

inline VariogramKind parse_variogram_kind(const std::string& s) {
  if (s == "spherical") return VariogramKind::spherical;
  if (s == "exponential") return VariogramKind::exponential;
  if (s == "gaussian") return VariogramKind::gaussian;
  throw ConfigError("unknown variogram kind '" + s + "'");
}

/// Single-structure anisotropic variogram. a1/a2 are horizontal ranges (m),
/// a3 the vertical range (ms); azimuth rotates the a1 axis away from grid i.
/// Total variance is nugget + sill.
struct VariogramModel {
  VariogramKind kind = VariogramKind::spherical;
  double a1 = 1.0, a2 = 1.0, a3 = 1.0;
  double azimuth_deg = 0.0;
  double sill = 1.0;
  double nugget = 0.0;

  double total() const { return nugget + sill; }

  void validate() const {
    if (!(a1 > 0 && a2 > 0 && a3 > 0)) throw DomainError("variogram ranges must be positive");
    if (!(azimuth_deg >= 0 && azimuth_deg < 180)) throw DomainError("azimuth must lie in [0, 180)");
    if (!(sill > 0)) throw DomainError("variogram sill must be positive");
    if (!(nugget >= 0)) throw DomainError("variogram nugget must be non-negative");
  }

  /// Anisotropic normalized distance: 1 at the range along every axis.
  double normalized_distance(const Vec3& h) const {
    const double th = azimuth_deg * std::numbers::pi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    const double u = (h[0] * c + h[1] * s) / a1;
    const double v = (-h[0] * s + h[1] * c) / a2;
    const double w = h[2] / a3;
    return std::sqrt(u * u + v * v + w * w);
  }

  /// Structure function in normalized distance, rising from 0 to 1.
  double structure(double d) const {
    switch (kind) {
      case VariogramKind::spherical:
        return d >= 1.0 ? 1.0 : 1.5 * d - 0.5 * d * d * d;
      case VariogramKind::exponential:
        return 1.0 - std::exp(-3.0 * d);
      case VariogramKind::gaussian:
        return 1.0 - std::exp(-3.0 * d * d);
    }
    return 1.0;
  }

  /// Correlogram of the structured part; the nugget is excluded.
  double correlation(double d) const { return 1.0 - structure(d); }
};

inline double gamma(const VariogramModel& m, const Vec3& h) {
  if (h[0] == 0.0 && h[1] == 0.0 && h[2] == 0.0) return 0.0;
  return m.nugget + m.sill * m.structure(m.normalized_distance(h));
}

inline double covariance(const VariogramModel& m, const Vec3& h) { return m.total() - gamma(m, h); }

struct SpatialDatum {
  Vec3 position{};
  double value = 0.0;
};

struct VariogramLag {
  double lag = 0.0;
  std::optional<double> gamma_hat;
  std::size_t pair_count = 0;
};

/// Directional experimental semivariogram. Pairs are binned by the absolute
/// projection of their separation on `direction`; `bandwidth` optionally caps
/// the perpendicular distance of a pair from the direction line.
inline std::vector<VariogramLag> experimental_variogram(std::span<const SpatialDatum> data, const Vec3& direction,
                                                       double lag, std::size_t n_lags, double tol,
                                                       double bandwidth = std::numeric_limits<double>::infinity()) {
  if (!(lag > 0)) throw DomainError("lag must be positive");
  if (!(tol > 0 && tol <= lag / 2)) throw DomainError("lag tolerance must lie in (0, lag/2]");
  if (data.size() < 2) return {};
  const double norm = std::sqrt(direction[0] * direction[0] + direction[1] * direction[1] + direction[2] * direction[2]);
  if (!(norm > 0)) throw DomainError("direction must be non-zero");
  const Vec3 u{direction[0] / norm, direction[1] / norm, direction[2] / norm};

  std::vector<double> sums(n_lags, 0.0);
  std::vector<std::size_t> counts(n_lags, 0);
  for (std::size_t a = 0; a < data.size(); ++a) {
    for (std::size_t b = a + 1; b < data.size(); ++b) {
      const Vec3 h{data[b].position[0] - data[a].position[0], data[b].position[1] - data[a].position[1],
                   data[b].position[2] - data[a].position[2]};
      const double proj = h[0] * u[0] + h[1] * u[1] + h[2] * u[2];
      const double along = std::abs(proj);
      if (bandwidth < std::numeric_limits<double>::infinity()) {
        const double h2 = h[0] * h[0] + h[1] * h[1] + h[2] * h[2];
        if (h2 - proj * proj > bandwidth * bandwidth) continue;
      }
      const double m = std::round(along / lag);
      if (m < 1 || m > static_cast<double>(n_lags)) continue;
      if (std::abs(along - m * lag) > tol) continue;
      const auto bin = static_cast<std::size_t>(m) - 1;
      const double dz = data[b].value - data[a].value;
      sums[bin] += dz * dz;
      ++counts[bin];
    }
  }
  std::vector<VariogramLag> out(n_lags);
  for (std::size_t m = 0; m < n_lags; ++m) {
    out[m].lag = static_cast<double>(m + 1) * lag;
    out[m].pair_count = counts[m];
    if (counts[m] > 0) out[m].gamma_hat = sums[m] / (2.0 * static_cast<double>(counts[m]));
  }
  return out;
}

/// Experimental semivariogram of a gridded volume at integer cell offsets
/// m·(di, dj, dk), m = 1..n_lags. Lag is reported in physical units.
inline std::vector<VariogramLag> grid_variogram(const Volume& v, int di, int dj, int dk, std::size_t n_lags) {
  const Grid3& g = v.grid();
  std::vector<VariogramLag> out(n_lags);
  const double step = std::sqrt(std::pow(di * g.dx, 2) + std::pow(dj * g.dy, 2) + std::pow(dk * g.dz, 2));
  for (std::size_t m = 1; m <= n_lags; ++m) {
    const long long oi = di * static_cast<long long>(m), oj = dj * static_cast<long long>(m),
                    ok = dk * static_cast<long long>(m);
    double sum = 0.0;
    std::size_t count = 0;
    for (long long j = 0; j < g.ny; ++j)
      for (long long i = 0; i < g.nx; ++i)
        for (long long k = 0; k < g.nz; ++k) {
          if (!g.contains(i + oi, j + oj, k + ok)) continue;
          const double d = static_cast<double>(v.at(i + oi, j + oj, k + ok)) - v.at(i, j, k);
          sum += d * d;
          ++count;
        }
    auto& lag = out[m - 1];
    lag.lag = step * static_cast<double>(m);
    lag.pair_count = count;
    if (count) lag.gamma_hat = sum / (2.0 * static_cast<double>(count));
  }
  return out;
}

inline std::string format_variogram_csv(std::span<const VariogramLag> lags) {
  std::string out = "lag,gamma,pairs\n";
  for (const auto& l : lags)
    out += csv::fmt(l.lag) + ',' + (l.gamma_hat ? csv::fmt(*l.gamma_hat) : std::string()) + ',' +
           std::to_string(l.pair_count) + '\n';
  return out;
}

}  // namespace gsuq
