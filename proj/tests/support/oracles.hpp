#pragma once

// Independent reference computations used by the test suites. Nothing here
// calls into the library's numerical code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

namespace oracle {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("gsuq_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
    sab += a[i] * b[i];
  }
  const double cov = sab - sa * sb / n, va = saa - sa * sa / n, vb = sbb - sb * sb / n;
  if (va <= 0 || vb <= 0) return 0.0;
  return cov / std::sqrt(va * vb);
}

// Kolmogorov-Smirnov distance between a sample and a continuous cdf.
inline double ks_vs_cdf(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

// Two-sample KS distance by evaluating both empirical cdfs at every point.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> pts = a;
  pts.insert(pts.end(), b.begin(), b.end());
  double d = 0.0;
  for (double x : pts) {
    const double fa = static_cast<double>(std::upper_bound(a.begin(), a.end(), x) - a.begin()) / static_cast<double>(a.size());
    const double fb = static_cast<double>(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

inline double gaussian_cdf(double x, double mu, double sigma) { return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0))); }

// Gaussian elimination with full pivoting on a dense copy.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  std::vector<std::size_t> col(n);
  for (std::size_t i = 0; i < n; ++i) col[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pr = k, pc = k;
    for (std::size_t r = k; r < n; ++r)
      for (std::size_t c = k; c < n; ++c)
        if (std::abs(a[r][c]) > std::abs(a[pr][pc])) {
          pr = r;
          pc = c;
        }
    std::swap(a[k], a[pr]);
    std::swap(b[k], b[pr]);
    for (auto& row : a) std::swap(row[k], row[pc]);
    std::swap(col[k], col[pc]);
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a[r][k] / a[k][k];
      for (std::size_t c = k; c < n; ++c) a[r][c] -= f * a[k][c];
      b[r] -= f * b[k];
    }
  }
  std::vector<double> y(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * y[c];
    y[r] = s / a[r][r];
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[col[i]] = y[i];
  return x;
}

// Nearest point by brute force, ties to the lowest index.
inline std::size_t nearest(const std::vector<std::vector<double>>& pts, const std::vector<double>& x) {
  std::size_t best = 0;
  double bd = INFINITY;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    double d = 0;
    for (std::size_t k = 0; k < x.size(); ++k) d += (x[k] - pts[j][k]) * (x[k] - pts[j][k]);
    if (d < bd) {
      bd = d;
      best = j;
    }
  }
  return best;
}

// Posterior mass of each Voronoi cell of `pts` in the unit box under the
// piecewise-constant density exp(-M), by midpoint integration on a regular
// grid with `per_axis` points per axis.
inline std::vector<double> voronoi_posterior(const std::vector<std::vector<double>>& pts, const std::vector<double>& M,
                                             std::size_t per_axis) {
  const std::size_t d = pts.front().size();
  std::vector<double> mass(pts.size(), 0.0);
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  const double m0 = *std::min_element(M.begin(), M.end());
  while (true) {
    for (std::size_t k = 0; k < d; ++k) x[k] = (static_cast<double>(idx[k]) + 0.5) / static_cast<double>(per_axis);
    const auto c = nearest(pts, x);
    mass[c] += std::exp(-(M[c] - m0));
    std::size_t k = 0;
    while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == d) break;
  }
  double total = 0;
  for (double m : mass) total += m;
  for (double& m : mass) m /= total;
  return mass;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

// Lower weighted quantile by sorting and accumulating.
inline double lower_weighted_quantile(std::vector<std::pair<double, double>> vw, double p) {
  std::sort(vw.begin(), vw.end());
  double total = 0;
  for (auto& e : vw) total += e.second;
  double cum = 0;
  for (auto& e : vw) {
    cum += e.second;
    if (e.second > 0 && cum >= p * total - 1e-12 * total) return e.first;
  }
  return vw.back().first;
}

}  // namespace oracle
