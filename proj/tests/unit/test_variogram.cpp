#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gsuq/variogram.hpp"

using namespace gsuq;

namespace {

VariogramModel unit_spherical(double range = 10.0) {
  VariogramModel m;
  m.a1 = m.a2 = m.a3 = range;
  return m;
}

}  // namespace

TEST(Gamma, ZeroLagIsZero) {
  for (auto kind : {VariogramKind::spherical, VariogramKind::exponential, VariogramKind::gaussian}) {
    auto m = unit_spherical();
    m.kind = kind;
    m.nugget = 0.3;
    EXPECT_EQ(gamma(m, {0, 0, 0}), 0.0);
    EXPECT_DOUBLE_EQ(covariance(m, {0, 0, 0}), 1.3);
  }
}

TEST(Gamma, SphericalHandValues) {
  const auto m = unit_spherical(10.0);
  EXPECT_DOUBLE_EQ(gamma(m, {10, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(gamma(m, {5, 0, 0}), 0.6875);
  EXPECT_DOUBLE_EQ(covariance(m, {5, 0, 0}), 0.3125);
  EXPECT_EQ(covariance(m, {12, 0, 0}), 0.0);
}

TEST(Gamma, AnisotropyAndAzimuth) {
  VariogramModel m;
  m.a1 = 100;
  m.a2 = 20;
  m.a3 = 4;
  m.azimuth_deg = 30;
  const double th = 30.0 * std::numbers::pi / 180.0;
  // Along the rotated a1 axis at half range.
  EXPECT_NEAR(gamma(m, {50 * std::cos(th), 50 * std::sin(th), 0}), 0.6875, 1e-12);
  // Along the rotated a2 axis at full range.
  EXPECT_NEAR(gamma(m, {-20 * std::sin(th), 20 * std::cos(th), 0}), 1.0, 1e-12);
  EXPECT_NEAR(gamma(m, {0, 0, 2}), 0.6875, 1e-12);
}

TEST(Gamma, Properties) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-50, 50), az(0, 179.9);
  for (auto kind : {VariogramKind::spherical, VariogramKind::exponential, VariogramKind::gaussian}) {
    VariogramModel m;
    m.kind = kind;
    m.a1 = 40;
    m.a2 = 15;
    m.a3 = 5;
    m.sill = 2.0;
    m.nugget = 0.5;
    double prev = 0.0;
    for (double d = 0.0; d <= 3.0; d += 0.01) {
      const double s = m.structure(d);
      EXPECT_GE(s, prev - 1e-15);
      prev = s;
    }
    for (int t = 0; t < 200; ++t) {
      const Vec3 h{u(rng), u(rng), u(rng) / 5};
      const Vec3 neg{-h[0], -h[1], -h[2]};
      EXPECT_DOUBLE_EQ(gamma(m, h), gamma(m, neg));
      EXPECT_NEAR(gamma(m, h) + covariance(m, h), m.total(), 1e-12);
      EXPECT_GE(covariance(m, h), 0.0);
      // Rotating lag and model together leaves gamma unchanged.
      VariogramModel r = m;
      const double extra = std::fmod(az(rng), 180.0 - m.azimuth_deg);
      r.azimuth_deg = m.azimuth_deg + extra;
      const double th = extra * std::numbers::pi / 180.0;
      const Vec3 hr{h[0] * std::cos(th) - h[1] * std::sin(th), h[0] * std::sin(th) + h[1] * std::cos(th), h[2]};
      EXPECT_NEAR(gamma(r, hr), gamma(m, h), 1e-9);
    }
  }
}

TEST(Gamma, Validation) {
  auto m = unit_spherical();
  m.a2 = 0;
  EXPECT_THROW(m.validate(), DomainError);
  m = unit_spherical();
  m.azimuth_deg = 180;
  EXPECT_THROW(m.validate(), DomainError);
  EXPECT_THROW(parse_variogram_kind("cubic"), ConfigError);
  EXPECT_EQ(parse_variogram_kind("gaussian"), VariogramKind::gaussian);
}

TEST(Experimental, TwoPoints) {
  const std::vector<SpatialDatum> d{{{0, 0, 0}, 1.0}, {{5, 0, 0}, 3.0}};
  const auto lags = experimental_variogram(d, {1, 0, 0}, 5.0, 3, 2.5);
  ASSERT_EQ(lags.size(), 3u);
  ASSERT_TRUE(lags[0].gamma_hat);
  EXPECT_DOUBLE_EQ(*lags[0].gamma_hat, 2.0);
  EXPECT_EQ(lags[0].pair_count, 1u);
  EXPECT_FALSE(lags[1].gamma_hat);
  EXPECT_EQ(lags[1].pair_count, 0u);
}

TEST(Experimental, ConstantFieldAndEdgeCases) {
  std::vector<SpatialDatum> d;
  for (int i = 0; i < 20; ++i) d.push_back({{double(i), 0, 0}, 7.0});
  for (const auto& l : experimental_variogram(d, {1, 0, 0}, 1.0, 5, 0.5)) {
    ASSERT_TRUE(l.gamma_hat);
    EXPECT_EQ(*l.gamma_hat, 0.0);
  }
  EXPECT_TRUE(experimental_variogram(std::span(d).first(1), {1, 0, 0}, 1.0, 5, 0.5).empty());
  EXPECT_THROW(experimental_variogram(d, {1, 0, 0}, 1.0, 5, 0.6), DomainError);
  EXPECT_THROW(experimental_variogram(d, {1, 0, 0}, 0.0, 5, 0.1), DomainError);
}

TEST(Experimental, MatchesPairEnumeration) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 30), z(0, 1);
  std::vector<SpatialDatum> d;
  for (int i = 0; i < 60; ++i) d.push_back({{u(rng), u(rng) / 10, 0}, z(rng)});
  const double lag = 3.0, tol = 1.0;
  const auto lags = experimental_variogram(d, {1, 0, 0}, lag, 6, tol);
  for (std::size_t m = 0; m < 6; ++m) {
    const double l = lag * double(m + 1);
    double s = 0;
    std::size_t n = 0;
    for (std::size_t a = 0; a < d.size(); ++a)
      for (std::size_t b = a + 1; b < d.size(); ++b) {
        const double along = std::abs(d[b].position[0] - d[a].position[0]);
        if (std::abs(along - l) <= tol) {
          s += std::pow(d[b].value - d[a].value, 2);
          ++n;
        }
      }
    EXPECT_EQ(lags[m].pair_count, n);
    if (n) {
      EXPECT_NEAR(*lags[m].gamma_hat, s / (2.0 * double(n)), 1e-12);
    }
  }
}

TEST(Experimental, GridVariogramAndCsv) {
  const Grid3 g{3, 1, 1, 2.f, 1.f, 1.f};
  const Volume v(g, std::vector<float>{0.f, 1.f, 3.f});
  const auto lags = grid_variogram(v, 1, 0, 0, 2);
  EXPECT_DOUBLE_EQ(lags[0].lag, 2.0);
  EXPECT_DOUBLE_EQ(*lags[0].gamma_hat, (1.0 + 4.0) / 4.0);
  EXPECT_DOUBLE_EQ(*lags[1].gamma_hat, 9.0 / 2.0);
  EXPECT_EQ(format_variogram_csv(lags), "lag,gamma,pairs\n2,1.25,2\n4,4.5,1\n");
}
