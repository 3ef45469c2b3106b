#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gsuq/app.hpp"

namespace {

enum class Command { synth, invert_gsi, invert_multiscale, nab, compare };

int run(Command cmd, const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
  const auto cfg = gsuq::load_run_config(config, seed);
  if (cfg.workers) gsuq::set_worker_count(cfg.workers);
  const std::filesystem::path dir(out);
  switch (cmd) {
    case Command::synth: {
      if (!cfg.use_synthetic) throw gsuq::ConfigError("synth needs [data] source = synthetic");
      gsuq::write_synthetic(gsuq::generate_synthetic(cfg.synthetic), dir);
      break;
    }
    case Command::invert_gsi:
      gsuq::run_conventional(cfg, gsuq::load_dataset(cfg), dir);
      break;
    case Command::invert_multiscale:
      gsuq::run_multiscale(cfg, gsuq::load_dataset(cfg), dir);
      break;
    case Command::nab:
      gsuq::run_nab_only(cfg, gsuq::load_dataset(cfg), dir);
      break;
    case Command::compare:
      gsuq::run_compare(cfg, gsuq::load_dataset(cfg), dir);
      break;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geostatistical seismic inversion with multi-scale uncertainty assessment"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config, out;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  const std::pair<const char*, const char*> names[] = {
      {"synth", "Generate a synthetic channelized dataset"},
      {"invert-gsi", "Conventional global stochastic inversion"},
      {"invert-multiscale", "PSO-driven multi-scale inversion followed by NAB"},
      {"nab", "NAB post-processing of an existing sampling history"},
      {"compare", "Conventional and multi-scale runs on the same data"}};
  std::optional<Command> chosen;
  for (std::size_t c = 0; c < std::size(names); ++c) {
    auto* sub = app.add_subcommand(names[c].first, names[c].second);
    sub->add_option("--config", config, "Run configuration file")->required();
    sub->add_option("--out", out, "Output directory")->required();
    sub->add_option("--seed", seed, "Seed overriding the configuration");
    sub->callback([&chosen, c] { chosen = static_cast<Command>(c); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (verbose) gsuq::log::set_level(gsuq::log::Level::info);

  try {
    return run(*chosen, config, out, seed);
  } catch (const gsuq::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
