#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gsuq/forward.hpp"
#include "oracles.hpp"

using namespace gsuq;

TEST(Reflectivity, HandValues) {
  const std::vector<float> flat{5000.f, 5000.f, 5000.f};
  for (double r : reflectivity(flat)) EXPECT_EQ(r, 0.0);
  EXPECT_DOUBLE_EQ(reflectivity(std::vector<float>{4000.f, 6000.f})[0], 0.2);
  const std::vector<float> table{4218.36f, 8632.04f};
  EXPECT_NEAR(reflectivity(table)[0], (8632.04 - 4218.36) / (8632.04 + 4218.36), 1e-6);
  EXPECT_NEAR(reflectivity(table)[0], 0.34346, 1e-5);
  EXPECT_THROW(reflectivity(std::vector<float>{4000.f, 0.f}), DomainError);
  EXPECT_THROW(reflectivity(std::vector<float>{4000.f}), DomainError);
}

TEST(Reflectivity, BoundedOnRandomTraces) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(1.f, 20000.f);
  std::vector<float> t(500);
  for (auto& x : t) x = u(rng);
  for (double r : reflectivity(t)) {
    EXPECT_GT(r, -1.0);
    EXPECT_LT(r, 1.0);
  }
}

TEST(Synthesize, ConstantVolumeIsSilent) {
  const Grid3 g{3, 2, 10, 1.f, 1.f, 4.f};
  const auto s = synthesize(Volume(g, 6000.f), ricker(25, 4));
  for (float x : s.values()) EXPECT_EQ(x, 0.f);
}

TEST(Synthesize, DeltaWaveletReturnsReflectivity) {
  const Grid3 g{1, 1, 4, 1.f, 1.f, 2.f};
  const Volume ip(g, std::vector<float>{4000.f, 6000.f, 6000.f, 4000.f});
  Wavelet delta{{1.0}, 0, 2.0};
  const auto s = synthesize(ip, delta);
  EXPECT_FLOAT_EQ(s[0], 0.2f);
  EXPECT_FLOAT_EQ(s[1], 0.f);
  EXPECT_FLOAT_EQ(s[2], -0.2f);
  EXPECT_FLOAT_EQ(s[3], 0.f);
}

TEST(Synthesize, SingleInterfaceGivesScaledCenteredWavelet) {
  const auto w = ricker(30, 2);
  const std::size_t nz = 60, iface = 25;
  const Grid3 g{1, 1, static_cast<std::uint32_t>(nz), 1.f, 1.f, 2.f};
  Volume ip(g, 5000.f);
  for (std::size_t k = iface + 1; k < nz; ++k) ip[k] = 7000.f;
  const double r = 2000.0 / 12000.0;
  const auto s = synthesize(ip, w);
  // Direct convolution oracle: output sample t carries w[t - iface + center].
  for (std::size_t t = 0; t < nz; ++t) {
    const long long m = static_cast<long long>(t) - static_cast<long long>(iface) + static_cast<long long>(w.center_index);
    const double expect = (m >= 0 && m < static_cast<long long>(w.samples.size())) ? r * w.samples[static_cast<std::size_t>(m)] : 0.0;
    EXPECT_NEAR(s[t], expect, 1e-6);
  }
  EXPECT_NEAR(s[iface], r, 1e-6);  // Ricker peak is 1 at its center
}

TEST(Synthesize, ShiftEquivariantAndLinear) {
  const auto w = ricker(25, 4);
  const Grid3 g{1, 1, 50, 1.f, 1.f, 4.f};
  Volume a(g, 5000.f), b(g, 5000.f);
  for (std::size_t k = 20; k < 50; ++k) a[k] = 6000.f;
  for (std::size_t k = 23; k < 50; ++k) b[k] = 6000.f;
  const auto sa = synthesize(a, w), sb = synthesize(b, w);
  for (std::size_t t = 10; t + 3 < 40; ++t) EXPECT_NEAR(sb[t + 3], sa[t], 1e-7);

  std::vector<double> refl(49, 0.0);
  refl[10] = 0.1;
  refl[30] = -0.05;
  std::vector<float> o1(50), o2(50);
  convolve_trace(refl, w, o1);
  for (auto& r : refl) r *= 3.0;
  convolve_trace(refl, w, o2);
  for (std::size_t t = 0; t < 50; ++t) EXPECT_NEAR(o2[t], 3.0f * o1[t], 1e-6);
}

TEST(Synthesize, WaveletMustMatchGrid) {
  const Grid3 g{1, 1, 5, 1.f, 1.f, 4.f};
  EXPECT_THROW(synthesize(Volume(g, 5000.f), ricker(25, 2)), DomainError);
  Wavelet bad{{1.0, 2.0}, 2, 4.0};
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(WaveletIo, RoundTrip) {
  const auto w = ricker(25, 4);
  const auto dir = oracle::temp_dir("wavelet");
  write_wavelet((dir / "w.csv").string(), w);
  const auto back = read_wavelet((dir / "w.csv").string());
  EXPECT_EQ(back.samples, w.samples);
  EXPECT_EQ(back.center_index, w.center_index);
  EXPECT_EQ(back.dt_ms, w.dt_ms);
}

TEST(TraceCc, HandValues) {
  const std::vector<double> a{1, 2, 3}, b{1, 2, 4}, neg{-1, -2, -3}, flat{2, 2, 2};
  EXPECT_NEAR(trace_cc(a, a), 1.0, 1e-15);
  EXPECT_NEAR(trace_cc(a, neg), -1.0, 1e-15);
  EXPECT_NEAR(trace_cc(a, b), 3.0 / std::sqrt(2.0 * (14.0 / 3.0)), 1e-12);
  EXPECT_NEAR(trace_cc(a, b), 0.98198, 1e-5);
  EXPECT_EQ(trace_cc(a, flat), 0.0);
  EXPECT_THROW(trace_cc(a, std::vector<double>{1, 2}), DomainError);
}

TEST(TraceCc, AffineInvariance) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> a(40), b(40), c(40);
  for (std::size_t i = 0; i < 40; ++i) {
    a[i] = n(rng);
    b[i] = a[i] + n(rng);
    c[i] = 3.5 * b[i] - 7.0;
  }
  EXPECT_NEAR(trace_cc(a, b), trace_cc(a, c), 1e-12);
  EXPECT_NEAR(trace_cc(a, b), oracle::pearson(a, b), 1e-12);
}

TEST(GlobalCc, MatchesFlattenedOracle) {
  const Grid3 g{4, 5, 6, 1.f, 1.f, 1.f};
  std::mt19937_64 rng(9);
  std::normal_distribution<float> n(0.f, 1.f);
  Volume a(g), b(g), neg(g);
  for (std::size_t c = 0; c < a.size(); ++c) {
    a[c] = n(rng);
    b[c] = a[c] + n(rng);
    neg[c] = -a[c];
  }
  EXPECT_NEAR(global_cc(a, a), 1.0, 1e-12);
  EXPECT_NEAR(global_cc(a, neg), -1.0, 1e-12);
  const std::vector<double> fa(a.values().begin(), a.values().end()), fb(b.values().begin(), b.values().end());
  EXPECT_NEAR(global_cc(a, b), oracle::pearson(fa, fb), 1e-12);
  EXPECT_THROW(global_cc(a, Volume(Grid3{4, 5, 5, 1.f, 1.f, 1.f})), DomainError);
  const auto per = trace_ccs(a, b);
  ASSERT_EQ(per.size(), 20u);
  const auto ta = extract_trace(a, {2, 3}), tb = extract_trace(b, {2, 3});
  EXPECT_NEAR(per[g.trace_index(2, 3)],
              oracle::pearson(std::vector<double>(ta.begin(), ta.end()), std::vector<double>(tb.begin(), tb.end())), 1e-12);
}
