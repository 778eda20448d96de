// exph command-line driver.
//
//   exph run <config-path> [--out DIR] [--seed N] [--threads K]
//
// Exit codes: 0 success, 2 config error, 3 numerical guard, 1 otherwise.

#include <CLI11.hpp>

#include <exph/exph.hpp>

#include <cstdio>
#include <optional>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"horizontal exponential-energy toolkit"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "execute a config file");
  std::string config_path;
  run->add_option("config", config_path, "path to a JSON run config")
      ->required();
  std::string out_dir;
  CLI::Option* out_opt =
      run->add_option("--out", out_dir, "output directory (overrides config)");
  std::uint64_t seed = 0;
  CLI::Option* seed_opt =
      run->add_option("--seed", seed, "seed override for randomized probes");
  int threads = 1;
  run->add_option("--threads", threads, "worker threads for node loops");

  CLI11_PARSE(app, argc, argv);

  try {
    const exph::RunConfig cfg = exph::parse_config(config_path);
    std::optional<std::string> out_override;
    if (out_opt->count() > 0) out_override = out_dir;
    std::optional<std::uint64_t> seed_override;
    if (seed_opt->count() > 0) seed_override = seed;
    exph::run_config(cfg, out_override, seed_override, threads);
    return 0;
  } catch (const exph::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const exph::NumericError& e) {
    std::fprintf(stderr, "numerical guard: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
