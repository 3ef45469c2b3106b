#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gsuq/csv.hpp"
#include "gsuq/error.hpp"

namespace gsuq {

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_distance needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Density histograms of several samples over shared equal-width bins.
inline std::string format_histograms(const std::vector<std::string>& names, const std::vector<std::vector<double>>& samples,
                                     std::size_t n_bins) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : samples)
    for (double x : s) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  std::string out = "bin_lo,bin_hi";
  for (const auto& n : names) out += ',' + n;
  out += '\n';
  if (!(lo <= hi) || n_bins == 0) return out;
  if (lo == hi) hi = lo + 1.0;
  const double w = (hi - lo) / static_cast<double>(n_bins);
  std::vector<std::vector<double>> dens(samples.size(), std::vector<double>(n_bins, 0.0));
  for (std::size_t q = 0; q < samples.size(); ++q) {
    for (double x : samples[q]) {
      const auto b = std::min<std::size_t>(n_bins - 1, static_cast<std::size_t>((x - lo) / w));
      dens[q][b] += 1.0;
    }
    if (!samples[q].empty())
      for (auto& d : dens[q]) d /= static_cast<double>(samples[q].size()) * w;
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    out += csv::fmt(lo + w * static_cast<double>(b)) + ',' + csv::fmt(lo + w * static_cast<double>(b + 1));
    for (const auto& d : dens) out += ',' + csv::fmt(d[b]);
    out += '\n';
  }
  return out;
}

}  // namespace gsuq
