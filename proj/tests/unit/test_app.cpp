#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "gsuq/app.hpp"
#include "oracles.hpp"

using namespace gsuq;
namespace fs = std::filesystem;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.grid = Grid3{12, 12, 16, 25.f, 25.f, 4.f};
  s.n_channels = 2;
  s.sinuosity_cells = 2;
  s.wavelength_cells = 12;
  s.width_cells = 3;
  s.thickness_layers = 5;
  s.smoothing_cells = 1;
  s.n_wells = 4;
  s.seed = 4;
  return s;
}

const std::string kRun =
    "[run]\nseed = 4\n"
    "[data]\nconditioning_wells = W01, W02\nblind_wells = W03, W04\n"
    "[synthetic]\nnx = 10\nny = 10\nnz = 12\nn_channels = 1\nsinuosity_cells = 2\nwavelength_cells = 10\n"
    "width_cells = 3\nthickness_layers = 4\nsmoothing_cells = 1\nn_wells = 4\n"
    "[simulation]\nmax_data = 12\ntarget_points = 128\n"
    "[gsi]\nn_iterations = 2\nensemble_size = 3\n"
    "[conventional]\nrange_h_m = 100\nrange_v_ms = 12\n"
    "[inner_gsi]\nn_iterations = 2\nensemble_size = 2\n"
    "[pso]\nswarm_size = 2\nn_iterations = 1\n"
    "[prior]\nrange_h_m = 50, 200\nrange_v_ms = 8, 30\nmu_1_kpa_s_m = 4500, 5500\nmu_2_kpa_s_m = 6800, 7800\n"
    "sigma_1_kpa_s_m = 200, 500\nsigma_2_kpa_s_m = 300, 600\nprop_1_pct = 10, 50\n"
    "[nab]\nn_walkers = 2\nn_steps = 100\nn_bins = 5\n";

RunConfig run_config(const std::string& extra = "") {
  return parse_run_config(ConfigDocument::parse(kRun + extra), fs::temp_directory_path());
}

std::string read_text(const fs::path& p) {
  const auto b = oracle::slurp(p);
  return {b.begin(), b.end()};
}

std::size_t data_rows(const fs::path& p) {
  const auto t = read_text(p);
  return static_cast<std::size_t>(std::count(t.begin(), t.end(), '\n')) - 1;
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb) return false;
  for (const auto& f : fa)
    if (oracle::slurp(a / f) != oracle::slurp(b / f)) return false;
  return true;
}

std::vector<float> vec(const Volume& v) { return {v.values().begin(), v.values().end()}; }

PriorBox two_param_prior() {
  PriorBox p;
  p.params = {{"range_h", 50, 200}, {"range_v", 8, 30}};
  return p;
}

}  // namespace

TEST(Synthetic, ZeroChannelsIsSingleFacies) {
  auto s = small_spec();
  s.n_channels = 0;
  const auto d = generate_synthetic(s);
  for (float f : d.facies.values()) ASSERT_EQ(f, 0.f);
  const auto st = volume_stats(d.true_ip);
  EXPECT_NEAR(st.mean, s.background.mu, 4 * s.background.sigma);
}

TEST(Synthetic, NoiseFreeIsSelfConsistentAndDeterministic) {
  const auto s = small_spec();
  const auto a = generate_synthetic(s), b = generate_synthetic(s);
  EXPECT_DOUBLE_EQ(global_cc(a.observed, synthesize(a.true_ip, a.wavelet)), 1.0);
  EXPECT_EQ(vec(a.true_ip), vec(b.true_ip));
  EXPECT_EQ(vec(a.observed), vec(b.observed));
  ASSERT_EQ(a.wells.wells.size(), s.n_wells);
  for (const auto& w : a.wells.wells) {
    ASSERT_EQ(w.samples.size(), s.grid.nz);
    for (const auto& smp : w.samples) EXPECT_EQ(smp.ip, a.true_ip.at(w.i, w.j, smp.k));
  }
  bool has_channel = false;
  for (float f : a.facies.values()) has_channel |= f == 1.f;
  EXPECT_TRUE(has_channel);
  for (float x : a.true_ip.values()) EXPECT_GT(x, 0.f);
}

TEST(Synthetic, NoiseOnlyTouchesFlaggedTraces) {
  auto s = small_spec();
  s.snr_db = 20;
  s.noisy_fraction = 0.25;
  const auto d = generate_synthetic(s);
  const auto clean = synthesize(d.true_ip, d.wavelet);
  const Grid3& g = d.true_ip.grid();
  std::size_t flagged = 0;
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      const bool noisy = d.noisy_trace[g.trace_index(i, j)];
      flagged += noisy;
      const auto o = extract_trace(d.observed, {i, j}), c = extract_trace(clean, {i, j});
      if (!noisy) {
        EXPECT_EQ(o, c);
      }
    }
  EXPECT_EQ(flagged, static_cast<std::size_t>(std::round(0.25 * g.traces())));
}

TEST(Synthetic, RejectsInvalidSpecs) {
  auto s = small_spec();
  s.channel = {1000, 300};
  EXPECT_THROW(generate_synthetic(s), DomainError);
  s = small_spec();
  s.n_wells = 1000;
  EXPECT_THROW(generate_synthetic(s), DomainError);
}

TEST(EmitReport, EmptyHistoryGivesHeaderOnlyFiles) {
  const auto dir = oracle::temp_dir("report_empty");
  emit_report(dir, two_param_prior(), {}, nullptr);
  EXPECT_EQ(read_text(dir / "misfit_vs_iteration.csv"), "id,iteration,misfit,best_so_far\n");
  EXPECT_EQ(read_text(dir / "parameters" / "range_h.csv"), "id,iteration,value,misfit,weight\n");
  EXPECT_EQ(read_text(dir / "parameter_vs_misfit.csv"), "id,iteration,range_h,range_v,misfit,weight\n");
}

TEST(EmitReport, JoinsHistoryWithWeights) {
  const auto dir = oracle::temp_dir("report_join");
  const auto prior = two_param_prior();
  const std::vector<SampledModel> history{{0, {60, 10}, 3.0, -3.0, 1}, {1, {150, 25}, 1.0, -1.0, 1}};
  PosteriorEnsemble e;
  e.ids = {0, 1};
  e.weights = {0.125, 0.875};
  emit_report(dir, prior, history, &e);
  EXPECT_EQ(data_rows(dir / "parameters" / "range_h.csv"), 2u);
  EXPECT_EQ(data_rows(dir / "parameters" / "range_v.csv"), 2u);
  EXPECT_EQ(read_text(dir / "misfit_vs_iteration.csv"), "id,iteration,misfit,best_so_far\n0,1,3,3\n1,1,1,1\n");

  // Oracle: history CSV rows with the weight looked up by id appended.
  csv::write_text((dir / "history.csv").string(), format_history(history, prior));
  const auto hist = csv::read_table((dir / "history.csv").string());
  const auto join = csv::read_table((dir / "parameter_vs_misfit.csv").string());
  ASSERT_EQ(join.rows.size(), hist.rows.size());
  for (std::size_t r = 0; r < hist.rows.size(); ++r) {
    for (const auto& col : hist.header) EXPECT_EQ(join.rows[r][join.column(col)], hist.rows[r][hist.column(col)]);
    EXPECT_EQ(csv::to_double(join.rows[r][join.column("weight")]),
              e.weight_of(static_cast<std::size_t>(csv::to_int(hist.rows[r][hist.column("id")]))));
  }
}

TEST(EmitReport, UnwritableDirectory) {
  const auto dir = oracle::temp_dir("report_blocked");
  csv::write_text((dir / "file").string(), "x");
  EXPECT_THROW(emit_report(dir / "file" / "sub", two_param_prior(), {}, nullptr), IoError);
}

TEST(Conventional, ConditionsBlindSafeAndDeterministic) {
  auto cfg = run_config();
  cfg.gsi.persist = true;
  const auto d = load_dataset(cfg);
  const auto a = oracle::temp_dir("conv_a"), b = oracle::temp_dir("conv_b");
  const auto o = run_conventional(cfg, d, a);
  run_conventional(cfg, d, b);
  EXPECT_TRUE(same_tree(a, b));
  ASSERT_EQ(o.conditioning.wells.size(), 2u);
  ASSERT_EQ(o.blind.wells.size(), 2u);
  for (const auto& v : o.report.final_ensemble)
    for (const auto& w : o.conditioning.wells)
      for (const auto& s : w.samples) ASSERT_EQ(v.at(w.i, w.j, s.k), s.ip);
  EXPECT_EQ(data_rows(a / "blind_wells.csv"), 2u * cfg.synthetic.grid.nz);
  EXPECT_GE(o.envelope_coverage, 0.0);
  EXPECT_LE(o.envelope_coverage, 1.0);
  EXPECT_TRUE(fs::exists(a / "realizations" / "real_2_0.gsuq"));
}

TEST(Conventional, WellTargetNeedsSamples) {
  auto cfg = run_config();
  cfg.conditioning_wells = std::vector<std::string>{};
  EXPECT_THROW(run_conventional(cfg, load_dataset(cfg), oracle::temp_dir("conv_empty")), ConfigError);
}

TEST(Multiscale, OneIterationTwoParticlesBookkeeping) {
  const auto cfg = run_config();
  const auto d = load_dataset(cfg);
  const auto dir = oracle::temp_dir("multi");
  const auto o = run_multiscale(cfg, d, dir);
  ASSERT_EQ(o.history.size(), 2u);
  EXPECT_EQ(data_rows(dir / "history.csv"), 2u);
  EXPECT_EQ(o.evaluations.size(), 2u);
  std::size_t volumes = 0;
  for (const auto& e : fs::directory_iterator(dir / "models")) volumes += e.path().extension() == ".gsuq";
  EXPECT_EQ(volumes, 2u);
  for (std::size_t c = 0; c < o.nab.maps.p10.size(); ++c) {
    ASSERT_LE(o.nab.maps.p10[c], o.nab.maps.p50[c]);
    ASSERT_LE(o.nab.maps.p50[c], o.nab.maps.p90[c]);
  }
  for (auto r : o.nab.ensemble.resamples) EXPECT_LT(r, 2u);
  for (const char* f : {"weights.csv", "p10.gsuq", "p50.gsuq", "p90.gsuq", "blind_envelope.csv", "nab_summary.txt",
                        "histogram_comparison.csv", "parameter_vs_misfit.csv", "marginals/range_h.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;

  // Every emitted volume and table is readable by the artifact's own readers.
  EXPECT_EQ(vec(read_volume((dir / "p50.gsuq").string())), vec(o.nab.maps.p50));
  EXPECT_EQ(read_history((dir / "history.csv").string(), *cfg.prior).size(), 2u);

  // The nab subcommand reproduces the posterior from the persisted files.
  const auto again = run_nab_only(cfg, d, dir);
  EXPECT_EQ(again.ensemble.weights, o.nab.ensemble.weights);
  EXPECT_EQ(vec(again.maps.p50), vec(o.nab.maps.p50));
}

TEST(Multiscale, MissingPriorOrHistory) {
  auto cfg = run_config();
  const auto d = load_dataset(cfg);
  EXPECT_THROW(run_nab_only(cfg, d, oracle::temp_dir("nab_nohist")), ConfigError);
  cfg.prior.reset();
  EXPECT_THROW(run_multiscale(cfg, d, oracle::temp_dir("multi_noprior")), ConfigError);
}
