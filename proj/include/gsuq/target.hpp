#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "gsuq/error.hpp"
#include "gsuq/kriging.hpp"
#include "gsuq/rng.hpp"

namespace gsuq {

/// Global target distribution as a tabulated cdf. Between support points the
/// cdf is linear, i.e. the density is piecewise uniform; any mass at the
/// first support point (cdf[0] > 0) is an atom there.
class TargetDistribution {
 public:
  TargetDistribution() = default;

  /// Drops points whose cdf does not strictly increase (except the first), so
  /// the inverse transform is a proper function.
  static TargetDistribution from_cdf(std::span<const double> support, std::span<const double> cdf) {
    if (support.size() != cdf.size() || support.size() < 2) throw DomainError("target needs >= 2 matching points");
    TargetDistribution t;
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (!std::isfinite(support[i]) || !std::isfinite(cdf[i])) throw DomainError("non-finite target table");
      if (i > 0 && !(support[i] > support[i - 1])) throw DomainError("target support must be strictly increasing");
      if (i > 0 && cdf[i] < cdf[i - 1]) throw DomainError("target cdf must be non-decreasing");
      if (!t.cdf_.empty() && cdf[i] <= t.cdf_.back()) continue;
      t.support_.push_back(support[i]);
      t.cdf_.push_back(cdf[i]);
    }
    if (t.cdf_.front() < 0.0 || std::abs(t.cdf_.back() - 1.0) > 1e-12) throw DomainError("target cdf must end at 1");
    if (t.support_.size() < 2) throw DomainError("degenerate target distribution");
    t.cdf_.back() = 1.0;
    t.compute_moments();
    return t;
  }

  /// Interpolated empirical distribution of a sample (e.g. a well-log
  /// histogram); plotting positions are mid-ranks rescaled onto [0, 1].
  static TargetDistribution from_samples(std::span<const double> values) {
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    std::vector<double> xs, pos;
    const double n = static_cast<double>(v.size());
    for (std::size_t a = 0; a < v.size();) {
      std::size_t b = a;
      while (b < v.size() && v[b] == v[a]) ++b;
      xs.push_back(v[a]);
      pos.push_back((static_cast<double>(a) + 0.5 * static_cast<double>(b - a)) / n);
      a = b;
    }
    if (xs.size() < 2) throw DomainError("target from samples needs >= 2 distinct values");
    const double lo = pos.front(), hi = pos.back();
    for (auto& p : pos) p = (p - lo) / (hi - lo);
    return from_cdf(xs, pos);
  }

  std::span<const double> support() const { return support_; }
  std::span<const double> cdf() const { return cdf_; }
  double min() const { return support_.front(); }
  double max() const { return support_.back(); }
  double mean() const { return mean_; }
  double variance() const { return variance_; }

  double cdf_at(double z) const {
    if (z <= support_.front()) return z < support_.front() ? 0.0 : cdf_.front();
    if (z >= support_.back()) return 1.0;
    const auto it = std::upper_bound(support_.begin(), support_.end(), z);
    const std::size_t i = static_cast<std::size_t>(it - support_.begin());
    const double t = (z - support_[i - 1]) / (support_[i] - support_[i - 1]);
    return cdf_[i - 1] + t * (cdf_[i] - cdf_[i - 1]);
  }

  double quantile(double p) const {
    if (p <= cdf_.front()) return support_.front();
    if (p >= 1.0) return support_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), p);
    const std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    if (i >= cdf_.size()) return support_.back();
    const double t = (p - cdf_[i - 1]) / (cdf_[i] - cdf_[i - 1]);
    return support_[i - 1] + t * (support_[i] - support_[i - 1]);
  }

  /// Normal score of a value: inverse standard normal of its target rank.
  double normal_score(double z) const {
    const double p = std::clamp(cdf_at(z), 1e-12, 1.0 - 1e-12);
    return normal_quantile(p);
  }

 private:
  void compute_moments() {
    double m1 = cdf_.front() * support_.front();
    double m2 = cdf_.front() * support_.front() * support_.front();
    for (std::size_t i = 1; i < support_.size(); ++i) {
      const double w = cdf_[i] - cdf_[i - 1], a = support_[i - 1], b = support_[i];
      m1 += w * 0.5 * (a + b);
      m2 += w * (a * a + a * b + b * b) / 3.0;
    }
    mean_ = m1;
    variance_ = std::max(0.0, m2 - m1 * m1);
  }

  std::vector<double> support_, cdf_;
  double mean_ = 0.0, variance_ = 0.0;
};

/// Draws local values for direct sequential simulation.
///
/// The local distribution is the image of a Gaussian N(y0, s^2) through the
/// target's inverse normal-score transform. (y0, s) are picked from tabulated
/// moments so the back-transformed distribution has the kriging mean and
/// (approximately) the kriging variance. When the kriging mean and variance
/// equal the global ones, y0 = 0 and s = 1 and draws follow the target exactly.
class DssSampler {
 public:
  static constexpr double kYMax = 6.0;
  static constexpr std::size_t kYSteps = 4800;
  static constexpr double kY0Max = 4.5;
  static constexpr std::size_t kY0Count = 181;
  static constexpr double kSMax = 1.5;
  static constexpr std::size_t kSCount = 61;
  static constexpr std::size_t kQuadrature = 256;

  DssSampler() = default;

  explicit DssSampler(const TargetDistribution& target) : target_(target) {
    back_.resize(kYSteps + 1);
    for (std::size_t i = 0; i <= kYSteps; ++i) {
      const double y = -kYMax + 2.0 * kYMax * static_cast<double>(i) / kYSteps;
      back_[i] = target.quantile(normal_cdf(y));
    }
    std::vector<double> nodes(kQuadrature);
    for (std::size_t q = 0; q < kQuadrature; ++q)
      nodes[q] = normal_quantile((static_cast<double>(q) + 0.5) / kQuadrature);
    mean_.assign(kSCount * kY0Count, 0.0);
    var_.assign(kSCount * kY0Count, 0.0);
    for (std::size_t j = 0; j < kSCount; ++j) {
      const double s = s_at(j);
      for (std::size_t i = 0; i < kY0Count; ++i) {
        const double y0 = y0_at(i);
        double m1 = 0.0, m2 = 0.0;
        for (double x : nodes) {
          const double z = back_transform(y0 + s * x);
          m1 += z;
          m2 += z * z;
        }
        m1 /= kQuadrature;
        m2 /= kQuadrature;
        mean_[j * kY0Count + i] = m1;
        var_[j * kY0Count + i] = std::max(0.0, m2 - m1 * m1);
      }
    }
  }

  const TargetDistribution& target() const { return target_; }

  /// Inverse normal-score transform by table interpolation.
  double back_transform(double y) const {
    const double x = (std::clamp(y, -kYMax, kYMax) + kYMax) / (2.0 * kYMax) * kYSteps;
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(x), kYSteps - 1);
    const double t = x - static_cast<double>(i);
    return back_[i] + t * (back_[i + 1] - back_[i]);
  }

  struct Draw {
    double value = 0.0;
    bool clamped = false;
  };

  Draw sample(const KrigingResult& kr, double u) const {
    const TargetDistribution& t = target_;
    Draw out;
    double mean = kr.mean;
    if (mean < t.min() || mean > t.max()) {
      mean = std::clamp(mean, t.min(), t.max());
      out.clamped = true;
    }
    if (kr.variance <= 0.0) {
      out.value = mean;
      return out;
    }
    const auto [y0, s] = solve(mean, kr.variance);
    out.value = back_transform(y0 + s * normal_quantile(u));
    return out;
  }

  /// Gaussian parameters whose back-transform matches (mean, variance).
  std::pair<double, double> solve(double mean, double variance) const {
    // For each s, the mean is non-decreasing in y0: invert it, then pick s by
    // bisection on the resulting variance.
    auto y0_for = [&](std::size_t j) -> std::pair<double, double> {
      const double* m = &mean_[j * kY0Count];
      const double* v = &var_[j * kY0Count];
      if (mean <= m[0]) return {y0_at(0), v[0]};
      if (mean >= m[kY0Count - 1]) return {y0_at(kY0Count - 1), v[kY0Count - 1]};
      const auto it = std::upper_bound(m, m + kY0Count, mean);
      const std::size_t i = static_cast<std::size_t>(it - m);
      const double dm = m[i] - m[i - 1];
      const double f = dm > 0 ? (mean - m[i - 1]) / dm : 0.0;
      return {y0_at(i - 1) + f * (y0_at(i) - y0_at(i - 1)), v[i - 1] + f * (v[i] - v[i - 1])};
    };
    std::size_t lo = 0, hi = kSCount - 1;
    auto top = y0_for(hi);
    if (variance >= top.second) return {top.first, s_at(hi)};
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (y0_for(mid).second >= variance)
        hi = mid;
      else
        lo = mid;
    }
    const auto a = y0_for(lo), b = y0_for(hi);
    const double dv = b.second - a.second;
    const double f = dv > 0 ? std::clamp((variance - a.second) / dv, 0.0, 1.0) : 1.0;
    return {a.first + f * (b.first - a.first), s_at(lo) + f * (s_at(hi) - s_at(lo))};
  }

 private:
  static double y0_at(std::size_t i) { return -kY0Max + 2.0 * kY0Max * static_cast<double>(i) / (kY0Count - 1); }
  static double s_at(std::size_t j) { return kSMax * static_cast<double>(j) / (kSCount - 1); }

  TargetDistribution target_;
  std::vector<double> back_;
  std::vector<double> mean_, var_;
};

/// One DSS draw: kriging result, target and a uniform deviate in (0, 1).
inline double local_sample(const KrigingResult& kr, const DssSampler& sampler, double u) {
  return sampler.sample(kr, u).value;
}

}  // namespace gsuq
