#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsuq/error.hpp"
#include "gsuq/variogram.hpp"

namespace gsuq {

/// Conditioning-data search. Radii are physical, measured along the model's
/// rotated (a1, a2, a3) axes; unset radii default to the variogram ranges.
struct Neighborhood {
  std::size_t max_data = 32;
  std::optional<Vec3> search_radii;

  Vec3 radii_for(const VariogramModel& m) const { return search_radii.value_or(Vec3{m.a1, m.a2, m.a3}); }

  void validate() const {
    if (max_data < 1) throw DomainError("neighborhood max_data must be >= 1");
    if (search_radii && !((*search_radii)[0] > 0 && (*search_radii)[1] > 0 && (*search_radii)[2] > 0))
      throw DomainError("search radii must be positive");
  }
};

struct KrigingResult {
  double mean = 0.0;
  double variance = 0.0;
};

namespace detail {

// In-place LU with partial pivoting on a row-major n x n matrix, then solves
// for one right-hand side. Returns false if a pivot vanishes relative to the
// largest matrix entry.
inline bool lu_solve(std::span<double> a, std::span<double> b, std::size_t n) {
  double scale = 0.0;
  for (std::size_t i = 0; i < n * n; ++i) scale = std::max(scale, std::abs(a[i]));
  if (scale == 0.0) return n == 0;
  const double tiny = 1e-12 * scale;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) <= tiny) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    const double d = a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / d;
      if (f == 0.0) continue;
      a[r * n + col] = 0.0;
      for (std::size_t c = col + 1; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r * n + c] * b[c];
    b[r] = s / a[r * n + r];
  }
  return true;
}

inline double clamp_variance(double v, double total) {
  if (v >= 0.0) return v;
  // Round-off tolerance is relative to the total variance of the field.
  if (v >= -1e-9 * std::max(1.0, total)) return 0.0;
  throw DegenerateError("negative kriging variance " + std::to_string(v) + "; covariance setup is invalid");
}

}  // namespace detail

/// Collocated secondary datum for Markov-model-1 co-kriging.
struct CollocatedSecondary {
  double cc = 0.0;           // local primary/secondary correlation
  double residual = 0.0;     // secondary value minus secondary mean
  double sigma_secondary = 1.0;
};

/// Reusable buffers for the kriging kernel; one per simulation worker.
struct KrigingWorkspace {
  std::vector<double> lhs, rhs, rhs0;
};

/// Kriging from precomputed covariances.
///   data_cov:   n x n row-major primary covariances between data
///   target_cov: n primary covariances data-to-target
///   residuals:  data value minus global mean
///   c0:         primary variance at zero lag (nugget + sill)
/// With `secondary`, solves the collocated co-kriging system where the cross
/// covariance is cc * sigma1 * sigma2 * rho1(h).
inline KrigingResult krige_from_covariances(std::span<const double> data_cov, std::span<const double> target_cov,
                                            std::span<const double> residuals, double global_mean, double c0,
                                            const CollocatedSecondary* secondary, KrigingWorkspace& ws) {
  const std::size_t n = target_cov.size();
  const bool colloc = secondary != nullptr && secondary->cc != 0.0;
  const std::size_t m = n + (colloc ? 1 : 0);
  if (m == 0) return {global_mean, c0};

  ws.lhs.assign(m * m, 0.0);
  ws.rhs.assign(m, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) ws.lhs[r * m + c] = data_cov[r * n + c];
    ws.rhs[r] = target_cov[r];
  }
  double c12_0 = 0.0, cross_scale = 0.0;
  if (colloc) {
    const double s1 = std::sqrt(c0), s2 = secondary->sigma_secondary;
    c12_0 = secondary->cc * s1 * s2;
    cross_scale = secondary->cc * s2 / s1;  // C12(h) = cross_scale * C11(h)
    for (std::size_t r = 0; r < n; ++r) {
      ws.lhs[r * m + n] = cross_scale * target_cov[r];
      ws.lhs[n * m + r] = cross_scale * target_cov[r];
    }
    ws.lhs[n * m + n] = s2 * s2;
    ws.rhs[n] = c12_0;
  }
  ws.rhs0 = ws.rhs;
  if (!detail::lu_solve(ws.lhs, ws.rhs, m))
    throw DegenerateError("singular kriging system of size " + std::to_string(m));

  KrigingResult out{global_mean, c0};
  for (std::size_t r = 0; r < n; ++r) {
    out.mean += ws.rhs[r] * residuals[r];
    out.variance -= ws.rhs[r] * ws.rhs0[r];
  }
  if (colloc) {
    out.mean += ws.rhs[n] * secondary->residual;
    out.variance -= ws.rhs[n] * c12_0;
  }
  out.variance = detail::clamp_variance(out.variance, c0);
  return out;
}

namespace detail {

inline Vec3 delta(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

inline void build_covariances(const Vec3& target, std::span<const SpatialDatum> data, const VariogramModel& model,
                              std::vector<double>& k, std::vector<double>& c, std::vector<double>& resid,
                              double global_mean) {
  const std::size_t n = data.size();
  k.resize(n * n);
  c.resize(n);
  resid.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t q = 0; q < n; ++q) k[r * n + q] = covariance(model, delta(data[r].position, data[q].position));
    c[r] = covariance(model, delta(data[r].position, target));
    resid[r] = data[r].value - global_mean;
  }
}

}  // namespace detail

inline KrigingResult simple_krige(const Vec3& target, std::span<const SpatialDatum> data, double global_mean,
                                  const VariogramModel& model) {
  std::vector<double> k, c, resid;
  detail::build_covariances(target, data, model, k, c, resid, global_mean);
  KrigingWorkspace ws;
  return krige_from_covariances(k, c, resid, global_mean, model.total(), nullptr, ws);
}

/// Markov-model-1 collocated co-kriging. The secondary variable enters through
/// its value at the target, its mean and its standard deviation.
inline KrigingResult collocated_cokrige(const Vec3& target, std::span<const SpatialDatum> data,
                                        double secondary_value, double cc_local, double global_mean,
                                        double secondary_mean, double secondary_sigma, const VariogramModel& model) {
  if (!std::isfinite(cc_local)) throw DomainError("local correlation must be finite");
  if (!(secondary_sigma > 0)) throw DomainError("secondary standard deviation must be positive");
  std::vector<double> k, c, resid;
  detail::build_covariances(target, data, model, k, c, resid, global_mean);
  KrigingWorkspace ws;
  const CollocatedSecondary sec{cc_local, secondary_value - secondary_mean, secondary_sigma};
  return krige_from_covariances(k, c, resid, global_mean, model.total(), &sec, ws);
}

/// The nearest `max_data` data inside the search ellipsoid, ordered by
/// anisotropic distance (ties by input order).
inline std::vector<SpatialDatum> select_neighborhood(const Vec3& target, std::span<const SpatialDatum> data,
                                                     const Neighborhood& hood, const VariogramModel& model) {
  VariogramModel search = model;
  const Vec3 radii = hood.radii_for(model);
  search.a1 = radii[0];
  search.a2 = radii[1];
  search.a3 = radii[2];
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const double d = search.normalized_distance(detail::delta(data[n].position, target));
    if (d <= 1.0) cand.emplace_back(d, n);
  }
  std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (cand.size() > hood.max_data) cand.resize(hood.max_data);
  std::vector<SpatialDatum> out;
  out.reserve(cand.size());
  for (const auto& [d, n] : cand) out.push_back(data[n]);
  return out;
}

}  // namespace gsuq
