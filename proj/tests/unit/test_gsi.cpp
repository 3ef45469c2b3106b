#include <gtest/gtest.h>

#include <random>

#include "gsuq/gsi.hpp"
#include "gsuq/metaspace.hpp"
#include "gsuq/synthetic.hpp"
#include "oracles.hpp"

using namespace gsuq;

namespace {

SyntheticSpec small_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.grid = Grid3{12, 12, 16, 25.f, 25.f, 4.f};
  s.n_channels = 2;
  s.width_cells = 3;
  s.thickness_layers = 5;
  s.wavelength_cells = 12;
  s.sinuosity_cells = 2;
  s.n_wells = 3;
  s.seed = seed;
  return s;
}

SimulationPlan plan_for(const SyntheticDataset& d, std::uint64_t seed) {
  SimulationPlan p;
  p.grid = d.true_ip.grid();
  p.seed = seed;
  p.model.a1 = p.model.a2 = 150;
  p.model.a3 = 16;
  GmmSpec g;
  g.modes = {{4900, 350, 0.3}, {7300, 500, 0.7}};
  p.target = build_target(g);
  p.conditioning = d.wells;
  p.neighborhood.max_data = 16;
  return p;
}

Volume noise_volume(const Grid3& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.f, 1.f);
  Volume v(g);
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = n(rng);
  return v;
}

}  // namespace

TEST(SelectBest, SingleMember) {
  const Grid3 g{3, 2, 6, 1.f, 1.f, 1.f};
  const auto ip = noise_volume(g, 1), syn = noise_volume(g, 2), obs = noise_volume(g, 3);
  const std::vector<Volume> e{ip}, s{syn};
  const auto aux = select_best_from_synthetics(e, s, obs);
  EXPECT_EQ(aux.best_ip, ip);
  const auto cc = trace_ccs(syn, obs);
  for (std::uint32_t j = 0; j < g.ny; ++j)
    for (std::uint32_t i = 0; i < g.nx; ++i)
      for (std::uint32_t k = 0; k < g.nz; ++k)
        EXPECT_EQ(aux.best_cc.at(i, j, k), static_cast<float>(cc[g.trace_index(i, j)]));
}

TEST(SelectBest, MatchesExhaustiveEnumeration) {
  const Grid3 g{2, 2, 8, 1.f, 1.f, 1.f};
  const auto obs = noise_volume(g, 10);
  std::vector<Volume> ens, syn;
  for (int r = 0; r < 3; ++r) {
    ens.push_back(noise_volume(g, 20 + r));
    Volume s = noise_volume(g, 30 + r);
    // Mix in the observation with a trace-dependent weight so the winner varies.
    for (std::uint32_t j = 0; j < 2; ++j)
      for (std::uint32_t i = 0; i < 2; ++i)
        for (std::uint32_t k = 0; k < 8; ++k) s.at(i, j, k) += float((r + i + 2 * j) % 3) * obs.at(i, j, k);
    syn.push_back(s);
  }
  // Member 2 duplicates member 0's synthetic on trace (1, 1) to exercise ties.
  insert_trace(syn[2], {1, 1}, extract_trace(syn[0], {1, 1}));
  const auto aux = select_best_from_synthetics(ens, syn, obs);
  for (std::uint32_t j = 0; j < 2; ++j)
    for (std::uint32_t i = 0; i < 2; ++i) {
      const auto o = extract_trace(obs, {i, j});
      std::size_t arg = 0;
      double best = -2;
      for (std::size_t r = 0; r < 3; ++r) {
        const auto t = extract_trace(syn[r], {i, j});
        const double c = oracle::pearson({t.begin(), t.end()}, {o.begin(), o.end()});
        if (c > best + 1e-12) {
          best = c;
          arg = r;
        }
      }
      const std::size_t t = g.trace_index(i, j);
      EXPECT_EQ(aux.winner[t], arg);
      EXPECT_NEAR(aux.trace_cc[t], best, 1e-12);
      EXPECT_EQ(extract_trace(aux.best_ip, {i, j}), extract_trace(ens[arg], {i, j}));
    }
}

TEST(SelectBest, PerfectMemberWins) {
  const auto d = generate_synthetic(small_spec(4));
  const auto p = plan_for(d, 8);
  auto ens = simulate([&] {
    auto q = p;
    q.n_realizations = 3;
    return q;
  }());
  ens.insert(ens.begin() + 1, d.true_ip);
  const auto aux = select_best(ens, d.observed, d.wavelet);
  for (std::size_t t = 0; t < aux.winner.size(); ++t)
    if (aux.winner[t] == 1) {
      EXPECT_NEAR(aux.trace_cc[t], 1.0, 1e-6);
    }
  std::size_t wins = 0;
  for (auto w : aux.winner) wins += w == 1;
  EXPECT_GT(wins, aux.winner.size() * 9 / 10);
}

TEST(RunGsi, ZeroThresholdStopsAfterFirstIteration) {
  const auto d = generate_synthetic(small_spec(2));
  GsiConfig cfg;
  cfg.n_iterations = 4;
  cfg.ensemble_size = 3;
  cfg.cc_stop = 0.0;
  const auto r = run_gsi(plan_for(d, 5), d.observed, d.wavelet, cfg);
  EXPECT_EQ(r.iterations.size(), 1u);
  EXPECT_EQ(r.final_ensemble.size(), 3u);
}

TEST(RunGsi, DeterministicConditionedAndImproving) {
  const auto d = generate_synthetic(small_spec(3));
  GsiConfig cfg;
  cfg.n_iterations = 4;
  cfg.ensemble_size = 6;
  const auto p = plan_for(d, 11);
  const auto a = run_gsi(p, d.observed, d.wavelet, cfg), b = run_gsi(p, d.observed, d.wavelet, cfg);
  ASSERT_EQ(a.iterations.size(), 4u);
  ASSERT_EQ(a.final_ensemble.size(), b.final_ensemble.size());
  for (std::size_t r = 0; r < a.final_ensemble.size(); ++r) EXPECT_EQ(a.final_ensemble[r], b.final_ensemble[r]);
  EXPECT_EQ(a.best_synthetic, b.best_synthetic);
  EXPECT_EQ(format_gsi_diagnostics(a), format_gsi_diagnostics(b));
  for (const auto& v : a.final_ensemble)
    for (const auto& w : d.wells.wells)
      for (const auto& s : w.samples) EXPECT_EQ(v.at(w.i, w.j, s.k), s.ip);
  EXPECT_GT(a.iterations.back().mean_trace_cc, a.iterations.front().mean_trace_cc);
  EXPECT_GE(a.iterations.back().global_cc_best, a.iterations.front().global_cc_best);
  const auto best = std::max_element(a.final_ensemble.begin(), a.final_ensemble.end(), [&](const Volume& x, const Volume& y) {
    return global_cc(synthesize(x, d.wavelet), d.observed) < global_cc(synthesize(y, d.wavelet), d.observed);
  });
  EXPECT_EQ(*best, a.best_realization);
  EXPECT_NEAR(global_cc(a.best_synthetic, d.observed), a.iterations.back().global_cc_best, 1e-12);
}

TEST(RunGsi, PersistsRealizations) {
  const auto d = generate_synthetic(small_spec(3));
  GsiConfig cfg;
  cfg.n_iterations = 2;
  cfg.ensemble_size = 2;
  cfg.persist = true;
  cfg.persist_dir = oracle::temp_dir("gsi_persist").string();
  const auto r = run_gsi(plan_for(d, 1), d.observed, d.wavelet, cfg);
  EXPECT_EQ(read_volume(cfg.persist_dir + "/real_2_1.gsuq"), r.final_ensemble[1]);
  EXPECT_TRUE(std::filesystem::exists(cfg.persist_dir + "/real_1_0.gsuq"));
}

TEST(RunGsi, Preconditions) {
  const auto d = generate_synthetic(small_spec(3));
  GsiConfig cfg;
  cfg.n_iterations = 1;
  cfg.ensemble_size = 1;
  auto p = plan_for(d, 1);
  p.secondary = SecondaryData{d.true_ip, Volume(p.grid, 0.5f)};
  EXPECT_THROW(run_gsi(p, d.observed, d.wavelet, cfg), DomainError);
  p.secondary.reset();
  EXPECT_THROW(run_gsi(p, d.observed, ricker(25, 2), cfg), DomainError);
  cfg.ensemble_size = 0;
  EXPECT_THROW(run_gsi(p, d.observed, d.wavelet, cfg), ConfigError);
}

TEST(EnsembleMoments, HandValues) {
  const Grid3 g{1, 1, 2, 1.f, 1.f, 1.f};
  const std::vector<Volume> e{Volume(g, std::vector<float>{4000.f, 1.f}), Volume(g, std::vector<float>{8000.f, 1.f})};
  const auto m = ensemble_mean(e);
  EXPECT_EQ(m[0], 6000.f);
  EXPECT_EQ(m[1], 1.f);
  const auto v = ensemble_variance(e);
  EXPECT_DOUBLE_EQ(v[0], 4e6);
  EXPECT_DOUBLE_EQ(v[1], 0.0);
  EXPECT_THROW(ensemble_mean(std::vector<Volume>{}), DomainError);
}

TEST(Diagnostics, CsvLayout) {
  GsiReport r;
  r.iterations = {{0.5, 0.25, 0.3, 2}, {0.75, 0.5, 0.5, 2}};
  EXPECT_EQ(format_gsi_diagnostics(r), "iter,global_cc_best,mean_trace_cc\n1,0.5,0.25\n2,0.75,0.5\n");
}
