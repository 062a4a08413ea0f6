// crackscat: forward simulation and crack reconstruction from one incident wave.
//
//   crackscat <command> --config cfg.json [--seed N] [--out-dir DIR] [--threads T]
//
// Exit codes: 0 success, 2 invalid configuration, 3 solver failure.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "crackscat/cli_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace crackscat;

  CLI::App app{"Scattering by sound-soft cracks: forward solver and one-wave reconstruction"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  int threads = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"forward", "solve the forward problem and write the far field and density"},
      {"make-data", "write (noisy) far-field data for the configured crack"},
      {"contrast", "contrast-sampling indicator over shifts, points or disks"},
      {"factorize", "one-wave factorization indicator over disk radii"},
      {"scan-hull", "radius scans around several centers and their support count"},
      {"newton", "regularized Newton reconstruction of the crack corners"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override noise.seed");
    sub->add_option("--out-dir", out_dir, "artifact directory")->capture_default_str();
    sub->add_option("--threads", threads, "OpenMP threads, 0 = runtime default")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const auto command = parse_command(app.get_subcommands().front()->get_name());
  try {
    auto cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    set_thread_count(threads);
    const auto result = run_experiment(cfg, *command, out_dir);
    for (const auto& p : result.artifacts) std::cout << p.string() << '\n';
    if (result.partial) {
      std::cerr << "solver failure: " << result.message << " (partial results written)\n";
      return kExitSolver;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitOk;
}
